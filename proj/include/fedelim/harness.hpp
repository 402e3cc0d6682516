#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedelim/fedcore.hpp"
#include "fedelim/objectives.hpp"
#include "fedelim/pfpne.hpp"

namespace fedelim {

enum class Variant { pfpne, global_only, local_only };

std::string_view variant_name(Variant v);
// Throws ConfigError on unknown names.
Variant parse_variant(std::string_view name);

struct ExperimentConfig {
  ObjectiveKind objective = ObjectiveKind::garland;
  std::optional<BoxDomain> domain;  // override; dimension must match
  int clients = 10;
  std::uint64_t horizon = 5000;
  std::optional<double> shift_std;  // default: 5% of the domain width
  double noise = 0.1;
  double nu1 = 1.0;
  double rho = 0.5;
  double c = 0.1;
  double c1 = 1.0;
  std::optional<double> delta_conf;  // default: 1 / clients
  double delta_gap = 0.01;
  int arity = 2;
  int depth_cap = 40;
  std::vector<Variant> variants{Variant::pfpne};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::uint64_t checkpoint_stride = 10;

  BoxDomain effective_domain() const;
  double effective_shift_std() const;
  ConfParams conf() const;
  SmoothParams smooth() const;
  // Throws ConfigError.
  void validate() const;

  bool operator==(const ExperimentConfig&) const = default;
};

// How a variant wires the protocol.
struct Schedule {
  int transition_depth = 0;
  bool collaborate = true;  // run stage 1 (depths 0..H0) through the server
  bool personalize = true;  // hand over to PE after stage 1
};

// pfpne: H0 = transition_depth (no stage 1 when H0 = 0); global-only: stage 1
// down to the depth cap; local-only: PE from the root, no communication.
Schedule variant_schedule(Variant v, const SmoothParams& smooth, int depth_cap);

struct RunOptions {
  bool record_pulls = false;
  bool record_transcript = false;
  bool certify_global = false;
};

struct RunMetrics {
  Variant variant = Variant::pfpne;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> checkpoints;
  std::vector<double> avg_cum_regret;  // client average at each checkpoint
  std::vector<double> final_regret;    // per client
  std::vector<CommRound> comm;
  std::optional<std::uint64_t> transition_t;
  int transition_depth = 0;
  int pe_steps = 0;  // summed over clients

  // detail
  ObjectiveSuite suite;
  std::vector<std::vector<PullRecord>> pulls;  // per client, when recorded
  std::vector<std::string> transcript;         // serialized messages, when recorded
  std::map<int, std::vector<NodeId>> server_eliminated;
  std::vector<std::map<int, std::vector<NodeId>>> client_eliminated;
  std::vector<std::vector<std::vector<NodeId>>> protected_sets;  // per client
};

RunMetrics run(const ExperimentConfig& config, Variant variant, std::uint64_t seed,
               const RunOptions& options = {});

// Checkpoints stride, 2*stride, ..., and the horizon.
std::vector<std::uint64_t> checkpoint_times(std::uint64_t horizon, std::uint64_t stride);

// (1/M) sum_m sum_{t' <= t} r_{m,t'}, accumulated per client in pull order.
std::vector<double> average_cumulative_regret(
    const std::vector<std::vector<double>>& instant_regret,
    const std::vector<std::uint64_t>& checkpoints);

struct VariantAggregate {
  Variant variant = Variant::pfpne;
  std::vector<std::uint64_t> checkpoints;
  std::vector<double> mean;
  std::vector<double> stddev;  // sample std, 0 for a single run
  double final_mean = 0.0;
  double final_std = 0.0;
  double comm_rounds_mean = 0.0;
  std::optional<double> transition_t_mean;
  int runs = 0;
};

VariantAggregate aggregate(const std::vector<RunMetrics>& runs);

struct ExperimentResult {
  std::vector<RunMetrics> runs;  // ordered by (variant, seed)
  std::vector<VariantAggregate> aggregates;
};

// Runs every (variant, seed) pair in parallel. threads = 0 uses the OpenMP
// default. Failures are rethrown with the seed attached.
ExperimentResult run_many(const ExperimentConfig& config, const RunOptions& options = {},
                          int threads = 0);

}  // namespace fedelim
