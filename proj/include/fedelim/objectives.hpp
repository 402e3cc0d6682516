#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedelim/kernels.hpp"
#include "fedelim/partition.hpp"
#include "fedelim/rng.hpp"

namespace fedelim {

enum class ObjectiveKind { garland, doublesine, himmelblau, rastrigin, ackley };

std::string_view objective_name(ObjectiveKind kind);
// Throws ConfigError on unknown names.
ObjectiveKind parse_objective_kind(std::string_view name);
BoxDomain default_domain(ObjectiveKind kind);

// Unnormalized closed forms.
double raw_value(ObjectiveKind kind, std::span<const double> x);

// A certified maximum: value >= every value the oracle probed.
struct Certificate {
  Point x;
  double value = 0.0;
  std::uint64_t probes = 0;
  int zoom_rounds = 0;
  std::string method;
};

struct OracleBudget {
  std::uint64_t grid_points = 4096;  // per dimension, dimension <= 2
  std::uint64_t zoom_points_1d = 4097;
  std::uint64_t zoom_points_2d = 257;
  int min_zoom_rounds = 3;
  int max_zoom_rounds = 60;
  double shrink = 10.0;
  double tolerance = 1e-9;
  std::uint64_t random_samples = 1'000'000;  // dimension > 2
  std::uint64_t seed = 0x5eed;
  bool parallel = true;
};

// Maximizes f over the box. Dimension <= 2: exhaustive lattice then zoom
// lattices around the incumbent. Otherwise random search (plus the optional
// hint points) then coordinate-wise zoom lines. Zooming stops once a round
// improves by at most budget.tolerance (after min_zoom_rounds); throws
// OracleError if that does not happen within max_zoom_rounds.
Certificate oracle_optimum(const kernels::ScalarField& f, const BoxDomain& domain,
                           const OracleBudget& budget = {},
                           std::span<const Point> hints = {});

// One of the synthetic test functions mapped into [0, 1] with peak value 1.
class BaseObjective {
 public:
  ObjectiveKind kind() const { return kind_; }
  std::string_view name() const { return objective_name(kind_); }
  const BoxDomain& domain() const { return domain_; }
  std::size_t dim() const { return domain_.dim(); }
  // Certified maximum of the raw form over the domain.
  double normalization_max() const { return normalization_max_; }
  const Certificate& optimum() const { return optimum_; }

  // Throws std::out_of_range outside the domain.
  double operator()(std::span<const double> x) const;
  double eval_unchecked(std::span<const double> x) const;

 private:
  friend BaseObjective make_base(ObjectiveKind, const std::optional<BoxDomain>&,
                                 const OracleBudget&);
  ObjectiveKind kind_ = ObjectiveKind::garland;
  BoxDomain domain_;
  double normalization_max_ = 1.0;
  bool peak_form_ = true;  // raw/max, otherwise 1 - raw/max
  Certificate optimum_;
};

// Certification results are cached per (kind, domain).
BaseObjective make_base(ObjectiveKind kind, const std::optional<BoxDomain>& domain = {},
                        const OracleBudget& budget = {});

struct SuiteOptions {
  bool certify_global = true;
  OracleBudget budget;
};

// M shifted copies f_m(x) = base(clip(x - s_m)) of one base objective, their
// average, uniform reward noise on [-noise, noise], and optimum certificates.
// Client indices are 0-based.
class ObjectiveSuite {
 public:
  const BaseObjective& base() const { return base_; }
  const BoxDomain& domain() const { return base_.domain(); }
  int clients() const { return static_cast<int>(shifts_.size()); }
  const Point& shift(int m) const;
  double shift_std() const { return shift_std_; }
  double noise_halfwidth() const { return noise_; }

  Point shifted_argument(int m, std::span<const double> x) const;
  double eval_local(int m, std::span<const double> x) const;
  double eval_global(std::span<const double> x) const;
  // eval_local + Uniform[-noise, noise]; never clipped.
  double sample(int m, std::span<const double> x, Rng& rng) const;

  const Certificate& local_optimum(int m) const;
  bool has_global_optimum() const { return global_.has_value(); }
  const Certificate& global_optimum() const;

 private:
  friend ObjectiveSuite make_suite(const BaseObjective&, int, double, double,
                                   std::uint64_t, const SuiteOptions&);
  void check_client(int m) const;
  void check_point(std::span<const double> x) const;

  BaseObjective base_;
  std::vector<Point> shifts_;
  double shift_std_ = 0.0;
  double noise_ = 0.0;
  std::vector<Certificate> local_;
  std::optional<Certificate> global_;
};

// Draws s_{m,j} ~ Normal(0, shift_std^2) from the (seed, shift) substream.
ObjectiveSuite make_suite(const BaseObjective& base, int clients, double shift_std,
                          double noise, std::uint64_t seed, const SuiteOptions& options = {});

// Shift standard deviation used when none is configured: 5% of the domain width.
double default_shift_std(const BoxDomain& domain);

// Cells of the uniform grid (per-dimension step grid_step, measured as a
// fraction of the domain width) whose center value is >= f_star - eps.
std::uint64_t near_optimality_profile(const kernels::ScalarField& f, const BoxDomain& domain,
                                      double f_star, double eps, double grid_step,
                                      bool parallel = true);

// Cells near-optimal for f_m at 12*nu1*rho^h that are not also near-optimal
// for the global average at 6*nu1*rho^h.
std::uint64_t difference_profile(const ObjectiveSuite& suite, int m, int h, double nu1,
                                 double rho, double grid_step);

}  // namespace fedelim
