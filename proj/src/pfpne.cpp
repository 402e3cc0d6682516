#include "fedelim/pfpne.hpp"

#include <algorithm>
#include <string>

#include "fedelim/errors.hpp"

namespace fedelim {

namespace {

void pull(ClientState& state, NodeId node, const Point& point, const ObjectiveSuite& suite,
          Rng& rng, const ProtocolContext& ctx) {
  const double reward = suite.sample(state.client, point, rng);
  const double value = suite.eval_local(state.client, point);
  const double regret = suite.local_optimum(state.client).value - value;
  ++state.clock;
  state.instant_regret.push_back(regret);
  if (state.keep_records) {
    state.records.push_back({state.client, state.clock, node, point, reward, regret});
  }
  NodeStats& s = state.stats[node];
  ++s.pulls;
  s.reward_sum += reward;
  if (s.provenance == Provenance::local) {
    s.mean = s.reward_sum / static_cast<double>(s.pulls);
    s.bound = confidence_bound(s.pulls, ctx.conf);
  }
  if (state.clock == state.horizon) state.stage = Stage::exhausted;
}

bool contains(std::span<const NodeId> sorted, NodeId n) {
  return std::binary_search(sorted.begin(), sorted.end(), n);
}

std::vector<NodeId> expand(std::span<const NodeId> nodes, const PartitionSpec& spec) {
  std::vector<NodeId> out;
  for (const NodeId& n : nodes) {
    for (const NodeId& c : children(n, spec)) out.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::span<const NodeId> ClientState::protected_at(int h) const {
  if (h < 0 || static_cast<std::size_t>(h) >= protected_sets.size()) return {};
  return protected_sets[static_cast<std::size_t>(h)];
}

ClientState make_client(int m, const ProtocolContext& ctx, bool keep_records) {
  ClientState s;
  s.client = m;
  s.horizon = ctx.conf.horizon;
  s.keep_records = keep_records;
  s.instant_regret.reserve(ctx.conf.horizon);
  return s;
}

ClientReport client_stage1_sample(ClientState& state, std::span<const NodeId> depth_set,
                                  std::uint64_t quota, const ObjectiveSuite& suite, Rng& rng,
                                  const ProtocolContext& ctx) {
  if (state.stage != Stage::stage1) throw ProtocolError("stage-1 sampling outside stage 1");
  ClientReport report;
  report.client = state.client;
  report.depth = state.depth;
  std::vector<NodeId> order(depth_set.begin(), depth_set.end());
  std::sort(order.begin(), order.end());
  for (const NodeId& node : order) {
    if (node.depth != state.depth) throw ProtocolError("node " + to_string(node) + " off depth");
    if (state.stage == Stage::exhausted) break;
    const Point point = representative(ctx.domain, node, ctx.partition);
    for (std::uint64_t q = 0; q < quota && state.stage != Stage::exhausted; ++q) {
      pull(state, node, point, suite, rng, ctx);
    }
    const NodeStats& s = state.stats.at(node);
    report.entries[node] = {s.mean, s.pulls};
  }
  return report;
}

ServerBroadcast server_step(ServerState& state, std::span<const ClientReport> reports,
                            const ProtocolContext& ctx) {
  const int h = state.depth;
  for (const auto& r : reports) {
    if (r.depth != h) {
      throw ProtocolError("report from client " + std::to_string(r.client) + " for depth " +
                          std::to_string(r.depth) + ", server at depth " + std::to_string(h));
    }
    if (r.entries.size() != state.active.size()) {
      throw ProtocolError("report from client " + std::to_string(r.client) +
                          " does not cover the active set");
    }
    for (const NodeId& n : state.active) {
      if (!r.entries.contains(n)) {
        throw ProtocolError("report from client " + std::to_string(r.client) + " misses " +
                            to_string(n));
      }
    }
  }
  const auto merged = merge_global(reports, ctx.conf);
  StatsMap stats;
  for (const auto& [n, m] : merged) {
    stats[n] = NodeStats{m.pulls, 0.0, m.mean, m.bound, Provenance::global};
  }
  const NodeId best = select_best(merged);
  const auto gone = eliminate(stats, state.active, best, h, ctx.smooth);

  ServerBroadcast out;
  out.depth = h;
  for (const NodeId& n : state.active) {
    if (!std::binary_search(gone.begin(), gone.end(), n)) {
      out.stats[n] = {stats[n].mean, stats[n].bound};
    }
  }

  CommRound round;
  round.round_index = static_cast<int>(state.rounds.size());
  round.depth = h;
  for (const auto& r : reports) round.scalars_up += 2 * r.entries.size();
  round.scalars_down = 3 * out.stats.size();
  state.cumulative_scalars += round.scalars_up + round.scalars_down;
  round.cumulative_scalars = state.cumulative_scalars;
  state.rounds.push_back(round);

  state.eliminated[h] = gone;
  state.history[h] = out;
  state.active = expand(out.survivors(), ctx.partition);
  state.depth = h + 1;
  return out;
}

void client_absorb_broadcast(ClientState& state, const ServerBroadcast& broadcast,
                             const ProtocolContext& ctx) {
  if (state.stage != Stage::stage1) throw ProtocolError("broadcast absorbed outside stage 1");
  if (broadcast.depth != state.depth) throw ProtocolError("broadcast depth mismatch");
  if (state.protected_sets.size() != static_cast<std::size_t>(state.depth)) {
    throw ProtocolError("protected sets out of step with depth");
  }
  std::vector<NodeId> survivors = broadcast.survivors();
  for (const auto& [n, g] : broadcast.stats) {
    auto it = state.stats.find(n);
    if (it == state.stats.end()) {
      throw ProtocolError("broadcast names unknown node " + to_string(n));
    }
    it->second.mean = g.mean;
    it->second.bound = g.bound;
    it->second.provenance = Provenance::global;
  }
  state.protected_sets.push_back(survivors);
  state.last_survivors = survivors;
  state.active = expand(survivors, ctx.partition);
  ++state.depth;
  if (state.depth > ctx.transition_depth && ctx.personalize) client_enter_pe(state, ctx);
}

void client_enter_pe(ClientState& state, const ProtocolContext&) {
  if (state.stage == Stage::exhausted) return;
  state.stage = Stage::personalized;
  state.depth = 0;
  state.active = {kRoot};
  state.transition_clock = state.clock;
}

void pe_depth_step(ClientState& state, const ObjectiveSuite& suite, Rng& rng,
                   const ProtocolContext& ctx) {
  if (state.stage != Stage::personalized) throw ProtocolError("PE step outside PE");
  const int h = state.depth;
  const std::uint64_t threshold = tau(h, ctx.conf, ctx.smooth);
  const auto shielded = state.protected_at(h);
  ++state.pe_steps;

  std::vector<NodeId> candidates;
  for (const NodeId& n : state.active) {
    if (!contains(shielded, n)) candidates.push_back(n);
  }
  for (const NodeId& n : candidates) {
    auto it = state.stats.find(n);
    std::uint64_t have = it == state.stats.end() ? 0 : it->second.pulls;
    if (have >= threshold) continue;
    const Point point = representative(ctx.domain, n, ctx.partition);
    for (; have < threshold; ++have) {
      pull(state, n, point, suite, rng, ctx);
      if (state.stage == Stage::exhausted) return;
    }
  }

  StatsMap level;
  for (const NodeId& n : state.active) level.emplace(n, state.stats.at(n));
  const NodeId best = select_best(level);
  const auto gone = eliminate(level, candidates, best, h, ctx.smooth);
  for (const NodeId& n : gone) {
    if (contains(shielded, n)) throw ProtocolError("protected node " + to_string(n) + " eliminated");
  }
  state.eliminated[h] = gone;

  std::vector<NodeId> kept;
  for (const NodeId& n : state.active) {
    if (!std::binary_search(gone.begin(), gone.end(), n)) kept.push_back(n);
  }
  state.last_survivors = kept;
  state.active = expand(kept, ctx.partition);
  state.depth = h + 1;
}

void max_depth_fallback(ClientState& state, const ObjectiveSuite& suite, Rng& rng,
                        const ProtocolContext& ctx) {
  if (state.stage == Stage::exhausted) return;
  NodeId target = kRoot;
  if (!state.last_survivors.empty()) {
    StatsMap level;
    for (const NodeId& n : state.last_survivors) level.emplace(n, state.stats.at(n));
    target = select_best(level);
  }
  const Point point = representative(ctx.domain, target, ctx.partition);
  while (state.stage != Stage::exhausted) pull(state, target, point, suite, rng, ctx);
}

void run_personalized(ClientState& state, const ObjectiveSuite& suite, Rng& rng,
                      const ProtocolContext& ctx) {
  while (state.stage == Stage::personalized) {
    if (state.depth >= ctx.depth_cap) {
      max_depth_fallback(state, suite, rng, ctx);
    } else {
      pe_depth_step(state, suite, rng, ctx);
    }
  }
}

}  // namespace fedelim
