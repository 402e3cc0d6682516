#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fedelim/partition.hpp"

namespace fedelim {

// Confidence-bound constants: b(n) = c * sqrt(log(c1 * T / delta) / n).
struct ConfParams {
  double c = 0.1;
  double c1 = 1.0;
  double delta = 0.1;
  std::uint64_t horizon = 5000;

  double log_term() const;
  // Requires c, c1 > 0, delta in (0,1], T >= 1 and c1*T/delta >= e.
  void validate() const;
};

// Smoothness nu1 * rho^h of the partition and the optimality gap bound Delta.
struct SmoothParams {
  double nu1 = 1.0;
  double rho = 0.5;
  double delta_gap = 0.01;

  double slack(int h) const;
  void validate() const;
};

enum class Provenance { local, global };

struct NodeStats {
  std::uint64_t pulls = 0;
  double reward_sum = 0.0;
  double mean = 0.0;
  double bound = 0.0;
  Provenance provenance = Provenance::local;
};

using StatsMap = std::map<NodeId, NodeStats>;

struct ReportEntry {
  double mean = 0.0;
  std::uint64_t pulls = 0;
  bool operator==(const ReportEntry&) const = default;
};

// Client -> server: local means of the depth-h nodes it sampled.
struct ClientReport {
  int client = 0;
  int depth = 0;
  std::map<NodeId, ReportEntry> entries;
  bool operator==(const ClientReport&) const = default;
};

struct GlobalStat {
  double mean = 0.0;
  double bound = 0.0;
  bool operator==(const GlobalStat&) const = default;
};

// Server -> clients: post-elimination survivors at depth h and their
// global statistics (keyed exactly by the survivors).
struct ServerBroadcast {
  int depth = 0;
  std::map<NodeId, GlobalStat> stats;

  std::vector<NodeId> survivors() const;
  bool operator==(const ServerBroadcast&) const = default;
};

struct MergedStat {
  double mean = 0.0;
  std::uint64_t pulls = 0;
  double bound = 0.0;
};

// Throws std::invalid_argument for pulls == 0.
double confidence_bound(std::uint64_t pulls, const ConfParams& conf);

// ceil(c^2 log(c1 T / delta) / nu1^2 * rho^(-2h)), saturating at kTauCap.
inline constexpr std::uint64_t kTauCap = std::uint64_t{1} << 62;
std::uint64_t tau(int h, const ConfParams& conf, const SmoothParams& smooth);

// ceil(tau_h / M)
std::uint64_t quota(std::uint64_t tau_h, int clients);

// Smallest h >= 0 with nu1 * rho^h <= Delta.
int transition_depth(const SmoothParams& smooth);

// Unweighted average of the client means per node, total pulls, and the
// bound of the total. Throws ProtocolError on empty input or mismatched keys.
std::map<NodeId, MergedStat> merge_global(std::span<const ClientReport> reports,
                                          const ConfParams& conf);

// Argmax of the mean; ties go to the lowest index. Throws on an empty map.
NodeId select_best(const StatsMap& stats);
NodeId select_best(const std::map<NodeId, MergedStat>& stats);

// {n in candidates : mean_n + b_n + nu1 rho^h < mean_best - b_best}
std::vector<NodeId> eliminate(const StatsMap& stats, std::span<const NodeId> candidates,
                              NodeId best, int h, const SmoothParams& smooth);

// Canonical text form: a header line then one "depth index mean ..." line per
// node in ascending order; reals printed with 17 significant digits.
std::string serialize(const ClientReport& report);
std::string serialize(const ServerBroadcast& broadcast);
ClientReport parse_report(const std::string& text);
ServerBroadcast parse_broadcast(const std::string& text);

std::string format_real(double v);

}  // namespace fedelim
