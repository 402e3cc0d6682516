#include "fedelim/kernels.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <omp.h>

#include "fedelim/rng.hpp"

namespace fedelim::kernels {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double sanitize(double v) { return std::isnan(v) ? kNegInf : v; }

bool better(double v, std::uint64_t i, double best_v, std::uint64_t best_i) {
  return v > best_v || (v == best_v && i < best_i);
}

std::uint64_t checked_pow(std::uint64_t base, std::size_t exp) {
  std::uint64_t n = 1;
  for (std::size_t j = 0; j < exp; ++j) {
    if (base != 0 && n > std::numeric_limits<std::uint64_t>::max() / base) {
      throw std::overflow_error("grid too large");
    }
    n *= base;
  }
  return n;
}

struct Best {
  double value = kNegInf;
  std::uint64_t index = std::numeric_limits<std::uint64_t>::max();
};

template <class PointFn>
Best scan_parallel(const ScalarField& f, std::size_t dim, std::uint64_t n, PointFn&& point_of) {
  Best global;
#pragma omp parallel
  {
    Best local;
    std::vector<double> x(dim);
#pragma omp for schedule(static) nowait
    for (std::int64_t s = 0; s < static_cast<std::int64_t>(n); ++s) {
      const auto i = static_cast<std::uint64_t>(s);
      point_of(i, std::span<double>(x));
      const double v = sanitize(f(x));
      if (better(v, i, local.value, local.index)) local = {v, i};
    }
#pragma omp critical(fedelim_argmax)
    if (better(local.value, local.index, global.value, global.index)) global = local;
  }
  return global;
}

template <class PointFn>
Best scan_serial(const ScalarField& f, std::size_t dim, std::uint64_t n, PointFn&& point_of) {
  Best best;
  std::vector<double> x(dim);
  for (std::uint64_t i = 0; i < n; ++i) {
    point_of(i, std::span<double>(x));
    const double v = sanitize(f(x));
    if (better(v, i, best.value, best.index)) best = {v, i};
  }
  return best;
}

template <class PointFn>
ArgMax finish(const Best& best, std::size_t dim, PointFn&& point_of) {
  ArgMax out;
  out.index = best.index;
  out.value = best.value;
  out.x.assign(dim, 0.0);
  point_of(best.index, std::span<double>(out.x));
  return out;
}

}  // namespace

std::uint64_t Lattice::size() const { return checked_pow(points_per_dim, box.dim()); }

void Lattice::point(std::uint64_t linear, std::span<double> out) const {
  for (std::size_t j = 0; j < box.dim(); ++j) {
    const std::uint64_t c = linear % points_per_dim;
    linear /= points_per_dim;
    if (points_per_dim == 1) {
      out[j] = 0.5 * (box.lower[j] + box.upper[j]);
    } else if (c + 1 == points_per_dim) {
      out[j] = box.upper[j];
    } else {
      out[j] = box.lower[j] + box.width(j) * static_cast<double>(c) /
                                  static_cast<double>(points_per_dim - 1);
    }
  }
}

ArgMax lattice_argmax_serial(const ScalarField& f, const Lattice& lattice) {
  auto point_of = [&](std::uint64_t i, std::span<double> x) { lattice.point(i, x); };
  return finish(scan_serial(f, lattice.box.dim(), lattice.size(), point_of),
                lattice.box.dim(), point_of);
}

ArgMax lattice_argmax(const ScalarField& f, const Lattice& lattice) {
  auto point_of = [&](std::uint64_t i, std::span<double> x) { lattice.point(i, x); };
  return finish(scan_parallel(f, lattice.box.dim(), lattice.size(), point_of),
                lattice.box.dim(), point_of);
}

void random_point(const BoxDomain& box, std::uint64_t seed, std::uint64_t i,
                  std::span<double> out) {
  const std::size_t d = box.dim();
  for (std::size_t j = 0; j < d; ++j) {
    out[j] = box.lower[j] + box.width(j) * counter_uniform(seed, i * d + j);
  }
}

ArgMax random_argmax_serial(const ScalarField& f, const BoxDomain& box,
                            std::uint64_t samples, std::uint64_t seed) {
  auto point_of = [&](std::uint64_t i, std::span<double> x) { random_point(box, seed, i, x); };
  return finish(scan_serial(f, box.dim(), samples, point_of), box.dim(), point_of);
}

ArgMax random_argmax(const ScalarField& f, const BoxDomain& box, std::uint64_t samples,
                     std::uint64_t seed) {
  auto point_of = [&](std::uint64_t i, std::span<double> x) { random_point(box, seed, i, x); };
  return finish(scan_parallel(f, box.dim(), samples, point_of), box.dim(), point_of);
}

std::uint64_t cell_count(std::size_t dim, std::uint64_t cells_per_dim) {
  return checked_pow(cells_per_dim, dim);
}

void cell_center(const BoxDomain& box, std::uint64_t cells_per_dim, std::uint64_t linear,
                 std::span<double> out) {
  for (std::size_t j = 0; j < box.dim(); ++j) {
    const std::uint64_t c = linear % cells_per_dim;
    linear /= cells_per_dim;
    out[j] = box.lower[j] + box.width(j) * (static_cast<double>(c) + 0.5) /
                                static_cast<double>(cells_per_dim);
  }
}

std::uint64_t count_cells_at_least_serial(const ScalarField& f, const BoxDomain& box,
                                          std::uint64_t cells_per_dim, double threshold) {
  const std::uint64_t n = cell_count(box.dim(), cells_per_dim);
  std::vector<double> x(box.dim());
  std::uint64_t count = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    cell_center(box, cells_per_dim, i, x);
    if (f(x) >= threshold) ++count;
  }
  return count;
}

std::uint64_t count_cells_at_least(const ScalarField& f, const BoxDomain& box,
                                   std::uint64_t cells_per_dim, double threshold) {
  const std::uint64_t n = cell_count(box.dim(), cells_per_dim);
  std::uint64_t count = 0;
#pragma omp parallel reduction(+ : count)
  {
    std::vector<double> x(box.dim());
#pragma omp for schedule(static)
    for (std::int64_t s = 0; s < static_cast<std::int64_t>(n); ++s) {
      cell_center(box, cells_per_dim, static_cast<std::uint64_t>(s), x);
      if (f(x) >= threshold) ++count;
    }
  }
  return count;
}

}  // namespace fedelim::kernels
