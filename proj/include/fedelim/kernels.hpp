#pragma once

// Data-parallel scans used by the optimum oracle and the near-optimality
// profiler. Each kernel has an OpenMP version and a serial reference; both
// return identical results (ties go to the smallest linear index).

#include <cstdint>
#include <functional>
#include <span>

#include "fedelim/partition.hpp"

namespace fedelim::kernels {

using ScalarField = std::function<double(std::span<const double>)>;

// Lattice of points_per_dim points per dimension spanning the closed box
// (endpoints included); a single point sits at the box center.
struct Lattice {
  BoxDomain box;
  std::uint64_t points_per_dim = 2;

  std::uint64_t size() const;
  void point(std::uint64_t linear, std::span<double> out) const;
};

struct ArgMax {
  std::uint64_t index = 0;
  double value = 0.0;
  Point x;
};

ArgMax lattice_argmax_serial(const ScalarField& f, const Lattice& lattice);
ArgMax lattice_argmax(const ScalarField& f, const Lattice& lattice);

// Uniform samples in the box drawn with counter_uniform(seed, i*d + j).
void random_point(const BoxDomain& box, std::uint64_t seed, std::uint64_t i,
                  std::span<double> out);
ArgMax random_argmax_serial(const ScalarField& f, const BoxDomain& box,
                            std::uint64_t samples, std::uint64_t seed);
ArgMax random_argmax(const ScalarField& f, const BoxDomain& box, std::uint64_t samples,
                     std::uint64_t seed);

// Number of cells of the cells_per_dim^d uniform grid whose center value is
// >= threshold.
std::uint64_t count_cells_at_least_serial(const ScalarField& f, const BoxDomain& box,
                                          std::uint64_t cells_per_dim, double threshold);
std::uint64_t count_cells_at_least(const ScalarField& f, const BoxDomain& box,
                                   std::uint64_t cells_per_dim, double threshold);

std::uint64_t cell_count(std::size_t dim, std::uint64_t cells_per_dim);
void cell_center(const BoxDomain& box, std::uint64_t cells_per_dim, std::uint64_t linear,
                 std::span<double> out);

}  // namespace fedelim::kernels
