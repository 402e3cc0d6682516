#include "fedelim/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "fedelim/errors.hpp"

namespace fedelim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double rastrigin_term(double t) { return t * t - 10.0 * std::cos(kTwoPi * t); }

bool is_peak_form(ObjectiveKind kind) {
  return kind == ObjectiveKind::garland || kind == ObjectiveKind::doublesine;
}

}  // namespace

std::string_view objective_name(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::garland: return "garland";
    case ObjectiveKind::doublesine: return "doublesine";
    case ObjectiveKind::himmelblau: return "himmelblau";
    case ObjectiveKind::rastrigin: return "rastrigin";
    case ObjectiveKind::ackley: return "ackley";
  }
  return "unknown";
}

ObjectiveKind parse_objective_kind(std::string_view name) {
  for (auto k : {ObjectiveKind::garland, ObjectiveKind::doublesine, ObjectiveKind::himmelblau,
                 ObjectiveKind::rastrigin, ObjectiveKind::ackley}) {
    if (objective_name(k) == name) return k;
  }
  throw ConfigError("unknown objective '" + std::string(name) + "'");
}

BoxDomain default_domain(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::garland:
    case ObjectiveKind::doublesine: return BoxDomain::cube(1, 0.0, 1.0);
    case ObjectiveKind::himmelblau: return BoxDomain::cube(2, -5.0, 5.0);
    case ObjectiveKind::rastrigin: return BoxDomain::cube(10, -1.0, 1.0);
    case ObjectiveKind::ackley: return BoxDomain::cube(2, -1.0, 1.0);
  }
  throw ConfigError("unknown objective");
}

double raw_value(ObjectiveKind kind, std::span<const double> x) {
  switch (kind) {
    case ObjectiveKind::garland: {
      const double t = x[0];
      return 4.0 * t * (1.0 - t) *
             (0.75 + 0.25 * (1.0 - std::sqrt(std::abs(std::sin(60.0 * t)))));
    }
    case ObjectiveKind::doublesine: {
      const double t = x[0];
      return 0.5 * (std::sin(13.0 * t) * std::sin(27.0 * t) + 1.0);
    }
    case ObjectiveKind::himmelblau: {
      const double a = x[0] * x[0] + x[1] - 11.0;
      const double b = x[0] + x[1] * x[1] - 7.0;
      return a * a + b * b;
    }
    case ObjectiveKind::rastrigin: {
      double s = 10.0 * static_cast<double>(x.size());
      for (double t : x) s += rastrigin_term(t);
      return s;
    }
    case ObjectiveKind::ackley: {
      const double n = static_cast<double>(x.size());
      double sq = 0.0;
      double cs = 0.0;
      for (double t : x) {
        sq += t * t;
        cs += std::cos(kTwoPi * t);
      }
      return -20.0 * std::exp(-0.2 * std::sqrt(sq / n)) - std::exp(cs / n) + 20.0 +
             std::numbers::e;
    }
  }
  return 0.0;
}

Certificate oracle_optimum(const kernels::ScalarField& f, const BoxDomain& domain,
                           const OracleBudget& budget, std::span<const Point> hints) {
  domain.validate();
  const std::size_t d = domain.dim();
  Certificate cert;
  std::vector<double> half(d);

  kernels::ArgMax best;
  if (d <= 2) {
    const kernels::Lattice lattice{domain, budget.grid_points};
    best = budget.parallel ? kernels::lattice_argmax(f, lattice)
                           : kernels::lattice_argmax_serial(f, lattice);
    cert.probes = lattice.size();
    cert.method = "lattice";
    for (std::size_t j = 0; j < d; ++j) {
      half[j] = domain.width(j) / static_cast<double>(std::max<std::uint64_t>(
                                      budget.grid_points - 1, 1));
    }
  } else {
    best = budget.parallel
               ? kernels::random_argmax(f, domain, budget.random_samples, budget.seed)
               : kernels::random_argmax_serial(f, domain, budget.random_samples, budget.seed);
    cert.probes = budget.random_samples;
    cert.method = "random";
    const double spread =
        std::pow(static_cast<double>(budget.random_samples), -1.0 / static_cast<double>(d));
    for (std::size_t j = 0; j < d; ++j) half[j] = domain.width(j) * spread;
  }
  for (const Point& h : hints) {
    if (!domain.contains(h)) continue;
    const double v = f(h);
    ++cert.probes;
    if (v > best.value) {
      best.value = v;
      best.x = h;
    }
  }

  for (int round = 1; round <= budget.max_zoom_rounds; ++round) {
    const double previous = best.value;
    if (d <= 2) {
      BoxDomain window = domain;
      for (std::size_t j = 0; j < d; ++j) {
        window.lower[j] = std::max(domain.lower[j], best.x[j] - half[j]);
        window.upper[j] = std::min(domain.upper[j], best.x[j] + half[j]);
      }
      const kernels::Lattice lattice{window,
                                     d == 1 ? budget.zoom_points_1d : budget.zoom_points_2d};
      const auto zoom = budget.parallel ? kernels::lattice_argmax(f, lattice)
                                        : kernels::lattice_argmax_serial(f, lattice);
      cert.probes += lattice.size();
      if (zoom.value > best.value) best = zoom;
    } else {
      const std::uint64_t n = budget.zoom_points_1d;
      for (std::size_t j = 0; j < d; ++j) {
        const double lo = std::max(domain.lower[j], best.x[j] - half[j]);
        const double hi = std::min(domain.upper[j], best.x[j] + half[j]);
        Point x = best.x;
        for (std::uint64_t c = 0; c < n; ++c) {
          x[j] = c + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(c) /
                                            static_cast<double>(n - 1);
          const double v = f(x);
          if (v > best.value) {
            best.value = v;
            best.x = x;
          }
        }
        cert.probes += n;
      }
    }
    for (double& h : half) h /= budget.shrink;
    cert.zoom_rounds = round;
    if (round >= budget.min_zoom_rounds && best.value - previous <= budget.tolerance) {
      cert.x = best.x;
      cert.value = best.value;
      return cert;
    }
  }
  throw OracleError("optimum oracle did not converge within " +
                    std::to_string(budget.max_zoom_rounds) + " zoom rounds");
}

double BaseObjective::operator()(std::span<const double> x) const {
  if (!domain_.contains(x)) throw std::out_of_range("point outside the objective domain");
  return eval_unchecked(x);
}

double BaseObjective::eval_unchecked(std::span<const double> x) const {
  const double r = raw_value(kind_, x);
  return peak_form_ ? r / normalization_max_ : 1.0 - r / normalization_max_;
}

namespace {

std::string cache_key(ObjectiveKind kind, const BoxDomain& domain, const OracleBudget& b) {
  std::ostringstream os;
  os.precision(17);
  os << static_cast<int>(kind) << '|' << b.grid_points << '|' << b.random_samples;
  for (std::size_t j = 0; j < domain.dim(); ++j) {
    os << '|' << domain.lower[j] << ',' << domain.upper[j];
  }
  return os.str();
}

// Rastrigin is a sum of identical 1-D terms, so its extremes are certified one
// coordinate at a time.
void certify_rastrigin(const BoxDomain& domain, const OracleBudget& budget, double& raw_max,
                       Point& argmin, std::uint64_t& probes) {
  raw_max = 10.0 * static_cast<double>(domain.dim());
  argmin.assign(domain.dim(), 0.0);
  probes = 0;
  for (std::size_t j = 0; j < domain.dim(); ++j) {
    const BoxDomain line{{domain.lower[j]}, {domain.upper[j]}};
    const auto hi = oracle_optimum(
        [](std::span<const double> t) { return rastrigin_term(t[0]); }, line, budget);
    const auto lo = oracle_optimum(
        [](std::span<const double> t) { return -rastrigin_term(t[0]); }, line, budget);
    raw_max += hi.value;
    argmin[j] = lo.x[0];
    probes += hi.probes + lo.probes;
  }
}

}  // namespace

BaseObjective make_base(ObjectiveKind kind, const std::optional<BoxDomain>& domain,
                        const OracleBudget& budget) {
  static std::mutex mutex;
  static std::map<std::string, BaseObjective> cache;

  BaseObjective obj;
  obj.kind_ = kind;
  obj.domain_ = domain.value_or(default_domain(kind));
  obj.domain_.validate();
  if (obj.domain_.dim() != default_domain(kind).dim()) {
    throw ConfigError("domain override for " + std::string(objective_name(kind)) +
                      " must keep dimension " + std::to_string(default_domain(kind).dim()));
  }
  obj.peak_form_ = is_peak_form(kind);

  const std::string key = cache_key(kind, obj.domain_, budget);
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }

  auto raw = [kind](std::span<const double> x) { return raw_value(kind, x); };
  if (obj.peak_form_) {
    const auto top = oracle_optimum(raw, obj.domain_, budget);
    obj.normalization_max_ = top.value;
    obj.optimum_ = top;
  } else if (kind == ObjectiveKind::rastrigin) {
    Point argmin;
    std::uint64_t probes = 0;
    certify_rastrigin(obj.domain_, budget, obj.normalization_max_, argmin, probes);
    obj.optimum_.x = argmin;
    obj.optimum_.probes = probes;
    obj.optimum_.method = "separable";
  } else {
    const auto top = oracle_optimum(raw, obj.domain_, budget);
    const auto bottom = oracle_optimum(
        [kind](std::span<const double> x) { return -raw_value(kind, x); }, obj.domain_, budget);
    obj.normalization_max_ = top.value;
    obj.optimum_ = bottom;
  }
  if (!(obj.normalization_max_ > 0.0)) {
    throw OracleError("non-positive normalization maximum for " +
                      std::string(objective_name(kind)));
  }
  obj.optimum_.value = obj.eval_unchecked(obj.optimum_.x);

  std::lock_guard lock(mutex);
  cache.emplace(key, obj);
  return obj;
}

const Point& ObjectiveSuite::shift(int m) const {
  check_client(m);
  return shifts_[static_cast<std::size_t>(m)];
}

void ObjectiveSuite::check_client(int m) const {
  if (m < 0 || m >= clients()) {
    throw std::out_of_range("client index " + std::to_string(m) + " outside [0, " +
                            std::to_string(clients()) + ")");
  }
}

void ObjectiveSuite::check_point(std::span<const double> x) const {
  if (!domain().contains(x)) throw std::out_of_range("point outside the objective domain");
}

Point ObjectiveSuite::shifted_argument(int m, std::span<const double> x) const {
  check_client(m);
  const BoxDomain& dom = domain();
  const Point& s = shifts_[static_cast<std::size_t>(m)];
  Point y(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    y[j] = std::clamp(x[j] - s[j], dom.lower[j], dom.upper[j]);
  }
  return y;
}

double ObjectiveSuite::eval_local(int m, std::span<const double> x) const {
  check_point(x);
  return base_.eval_unchecked(shifted_argument(m, x));
}

double ObjectiveSuite::eval_global(std::span<const double> x) const {
  check_point(x);
  double sum = 0.0;
  for (int m = 0; m < clients(); ++m) sum += base_.eval_unchecked(shifted_argument(m, x));
  return sum / static_cast<double>(clients());
}

double ObjectiveSuite::sample(int m, std::span<const double> x, Rng& rng) const {
  const double value = eval_local(m, x);
  if (noise_ == 0.0) return value;
  std::uniform_real_distribution<double> eps(-noise_, noise_);
  return value + eps(rng);
}

const Certificate& ObjectiveSuite::local_optimum(int m) const {
  check_client(m);
  return local_[static_cast<std::size_t>(m)];
}

const Certificate& ObjectiveSuite::global_optimum() const {
  if (!global_) throw std::logic_error("suite was built without a global certificate");
  return *global_;
}

double default_shift_std(const BoxDomain& domain) { return 0.05 * domain.width(0); }

ObjectiveSuite make_suite(const BaseObjective& base, int clients, double shift_std,
                          double noise, std::uint64_t seed, const SuiteOptions& options) {
  if (clients < 1) throw ConfigError("suite needs at least one client");
  if (!(shift_std >= 0.0)) throw ConfigError("shift_std must be non-negative");
  if (!(noise >= 0.0)) throw ConfigError("noise half-width must be non-negative");

  ObjectiveSuite suite;
  suite.base_ = base;
  suite.shift_std_ = shift_std;
  suite.noise_ = noise;
  const std::size_t d = base.dim();
  const BoxDomain& dom = base.domain();

  Rng rng = make_stream(seed, StreamPurpose::shift, 0);
  suite.shifts_.assign(static_cast<std::size_t>(clients), Point(d, 0.0));
  if (shift_std > 0.0) {
    std::normal_distribution<double> normal(0.0, shift_std);
    for (auto& s : suite.shifts_) {
      for (double& v : s) v = normal(rng);
    }
  }

  const Point& xb = base.optimum().x;
  for (int m = 0; m < clients; ++m) {
    const Point& s = suite.shifts_[static_cast<std::size_t>(m)];
    // clip(x - s) ranges over [max(lo, lo - s), min(hi, hi - s)] per dimension
    bool reachable = true;
    for (std::size_t j = 0; j < d; ++j) {
      const double lo = std::max(dom.lower[j], dom.lower[j] - s[j]);
      const double hi = std::min(dom.upper[j], dom.upper[j] - s[j]);
      reachable = reachable && xb[j] >= lo && xb[j] <= hi;
    }
    if (reachable) {
      Certificate c;
      c.x.resize(d);
      for (std::size_t j = 0; j < d; ++j) c.x[j] = std::clamp(xb[j] + s[j], dom.lower[j], dom.upper[j]);
      c.value = base.optimum().value;
      c.method = "translated";
      suite.local_.push_back(std::move(c));
    } else {
      OracleBudget b = options.budget;
      b.seed = substream_seed(seed, StreamPurpose::search, static_cast<std::uint64_t>(m));
      const ObjectiveSuite& ref = suite;
      suite.local_.push_back(oracle_optimum(
          [&ref, m](std::span<const double> x) { return ref.eval_local(m, x); }, dom, b));
    }
  }

  if (options.certify_global) {
    std::vector<Point> hints;
    Point mean_shift(d, 0.0);
    for (int m = 0; m < clients; ++m) {
      hints.push_back(suite.local_[static_cast<std::size_t>(m)].x);
      for (std::size_t j = 0; j < d; ++j) {
        mean_shift[j] += suite.shifts_[static_cast<std::size_t>(m)][j] / clients;
      }
    }
    Point centered(d);
    for (std::size_t j = 0; j < d; ++j) {
      centered[j] = std::clamp(xb[j] + mean_shift[j], dom.lower[j], dom.upper[j]);
    }
    hints.push_back(centered);
    OracleBudget b = options.budget;
    b.seed = substream_seed(seed, StreamPurpose::search, static_cast<std::uint64_t>(clients));
    const ObjectiveSuite& ref = suite;
    suite.global_ = oracle_optimum(
        [&ref](std::span<const double> x) { return ref.eval_global(x); }, dom, b, hints);
  }
  return suite;
}

std::uint64_t near_optimality_profile(const kernels::ScalarField& f, const BoxDomain& domain,
                                      double f_star, double eps, double grid_step,
                                      bool parallel) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  if (!(grid_step > 0.0) || grid_step > 1.0) {
    throw std::invalid_argument("grid_step must lie in (0, 1]");
  }
  const double inverse = 1.0 / grid_step;
  auto cells = static_cast<std::uint64_t>(std::llround(inverse));
  if (std::abs(static_cast<double>(cells) - inverse) > 1e-9 * inverse) {
    cells = static_cast<std::uint64_t>(std::ceil(inverse));
  }
  constexpr std::uint64_t kMaxCells = std::uint64_t{1} << 27;
  std::uint64_t total = 1;
  for (std::size_t j = 0; j < domain.dim(); ++j) {
    if (total > kMaxCells / cells) throw std::invalid_argument("profile grid too large");
    total *= cells;
  }
  const double threshold = f_star - eps;
  return parallel ? kernels::count_cells_at_least(f, domain, cells, threshold)
                  : kernels::count_cells_at_least_serial(f, domain, cells, threshold);
}

std::uint64_t difference_profile(const ObjectiveSuite& suite, int m, int h, double nu1,
                                 double rho, double grid_step) {
  const double local_star = suite.local_optimum(m).value;
  const double global_star = suite.global_optimum().value;
  const double scale = nu1 * std::pow(rho, h);
  auto locally_near = [&](std::span<const double> x) {
    return suite.eval_local(m, x) >= local_star - 12.0 * scale;
  };
  auto local_count = near_optimality_profile(
      [&](std::span<const double> x) { return locally_near(x) ? 1.0 : 0.0; }, suite.domain(),
      1.0, 0.5, grid_step);
  auto both_count = near_optimality_profile(
      [&](std::span<const double> x) {
        return locally_near(x) && suite.eval_global(x) >= global_star - 6.0 * scale ? 1.0 : 0.0;
      },
      suite.domain(), 1.0, 0.5, grid_step);
  return local_count - both_count;
}

}  // namespace fedelim
