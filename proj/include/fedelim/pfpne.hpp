#pragma once

// Server, client stage-1, and personalized-elimination state machines of the
// two-stage federated elimination protocol. Stage 1 (depths 0..H0) shares
// node means through the server; afterwards each client restarts from the
// root and eliminates locally, never discarding nodes the server kept.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "fedelim/fedcore.hpp"
#include "fedelim/objectives.hpp"
#include "fedelim/partition.hpp"
#include "fedelim/rng.hpp"

namespace fedelim {

enum class Stage { stage1, personalized, exhausted };

// Run-wide constants shared by the server and every client.
struct ProtocolContext {
  BoxDomain domain;
  PartitionSpec partition{2};
  ConfParams conf;
  SmoothParams smooth;
  int clients = 1;
  int transition_depth = 0;  // H0: last depth handled collaboratively
  int depth_cap = 40;
  bool personalize = true;  // false: stage 1 never hands over to PE
};

struct PullRecord {
  int client = 0;
  std::uint64_t t = 0;  // 1-based client clock
  NodeId node;
  Point point;
  double reward = 0.0;
  double instant_regret = 0.0;
};

struct CommRound {
  int round_index = 0;
  int depth = 0;
  std::uint64_t scalars_up = 0;
  std::uint64_t scalars_down = 0;
  std::uint64_t cumulative_scalars = 0;
};

struct ServerState {
  int depth = 0;
  std::vector<NodeId> active{kRoot};  // K^h before elimination
  std::map<int, ServerBroadcast> history;
  std::map<int, std::vector<NodeId>> eliminated;  // E^h
  std::vector<CommRound> rounds;
  std::uint64_t cumulative_scalars = 0;
};

struct ClientState {
  int client = 0;
  std::uint64_t horizon = 0;
  std::uint64_t clock = 0;
  Stage stage = Stage::stage1;
  StatsMap stats;
  int depth = 0;                       // stage-1 depth, or PE depth
  std::vector<NodeId> active{kRoot};   // K^h in stage 1, K_m^h in PE
  std::vector<std::vector<NodeId>> protected_sets;  // index h <= H0
  std::vector<NodeId> last_survivors;  // deepest node set carrying statistics
  std::map<int, std::vector<NodeId>> eliminated;  // E_m^h
  std::vector<double> instant_regret;  // one entry per pull
  bool keep_records = false;
  std::vector<PullRecord> records;
  std::optional<std::uint64_t> transition_clock;
  int pe_steps = 0;

  std::uint64_t budget_remaining() const { return horizon - clock; }
  std::span<const NodeId> protected_at(int h) const;
};

ClientState make_client(int m, const ProtocolContext& ctx, bool keep_records = false);

// Pulls every node of depth_set (ascending) `quota` times, stopping when the
// budget runs out, and reports the means of the nodes it touched.
ClientReport client_stage1_sample(ClientState& state, std::span<const NodeId> depth_set,
                                  std::uint64_t quota, const ObjectiveSuite& suite, Rng& rng,
                                  const ProtocolContext& ctx);

// Merges reports, eliminates against the best global node, broadcasts the
// survivors and expands K^{h+1}.
ServerBroadcast server_step(ServerState& state, std::span<const ClientReport> reports,
                            const ProtocolContext& ctx);

// Freezes the survivors as protected[h], substitutes their global statistics,
// moves to depth h+1 and enters PE once past H0.
void client_absorb_broadcast(ClientState& state, const ServerBroadcast& broadcast,
                             const ProtocolContext& ctx);

void client_enter_pe(ClientState& state, const ProtocolContext& ctx);

// One PE depth: sample unprotected nodes up to tau_h, eliminate locally
// (protected nodes take part in the argmax but are never candidates), expand.
void pe_depth_step(ClientState& state, const ObjectiveSuite& suite, Rng& rng,
                   const ProtocolContext& ctx);

// Spends the remaining budget on the best node of the deepest set with
// statistics.
void max_depth_fallback(ClientState& state, const ObjectiveSuite& suite, Rng& rng,
                        const ProtocolContext& ctx);

// Drives PE (and the depth-cap fallback) until the budget is spent.
void run_personalized(ClientState& state, const ObjectiveSuite& suite, Rng& rng,
                      const ProtocolContext& ctx);

}  // namespace fedelim
