#include "fedelim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include <omp.h>

#include "fedelim/errors.hpp"

namespace fedelim {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::pfpne: return "pfpne";
    case Variant::global_only: return "global-only";
    case Variant::local_only: return "local-only";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (auto v : {Variant::pfpne, Variant::global_only, Variant::local_only}) {
    if (variant_name(v) == name) return v;
  }
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

BoxDomain ExperimentConfig::effective_domain() const {
  return domain.value_or(default_domain(objective));
}

double ExperimentConfig::effective_shift_std() const {
  return shift_std.value_or(default_shift_std(effective_domain()));
}

ConfParams ExperimentConfig::conf() const {
  return ConfParams{c, c1, delta_conf.value_or(1.0 / static_cast<double>(clients)), horizon};
}

SmoothParams ExperimentConfig::smooth() const { return SmoothParams{nu1, rho, delta_gap}; }

void ExperimentConfig::validate() const {
  if (clients < 1) throw ConfigError("clients must be at least 1");
  if (horizon < 1) throw ConfigError("horizon must be at least 1");
  if (!(noise >= 0.0)) throw ConfigError("noise must be non-negative");
  if (shift_std && !(*shift_std >= 0.0)) throw ConfigError("shift_std must be non-negative");
  if (checkpoint_stride < 1) throw ConfigError("checkpoint_stride must be at least 1");
  if (variants.empty()) throw ConfigError("at least one variant is required");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  const BoxDomain dom = effective_domain();
  dom.validate();
  if (dom.dim() != default_domain(objective).dim()) {
    throw ConfigError("domain dimension does not match the objective");
  }
  conf().validate();
  smooth().validate();
  const PartitionSpec spec(arity);
  if (depth_cap < 1 || depth_cap >= spec.max_depth()) {
    throw ConfigError("depth_cap must lie in [1, " + std::to_string(spec.max_depth() - 1) +
                      "] for arity " + std::to_string(arity));
  }
}

Schedule variant_schedule(Variant v, const SmoothParams& smooth, int depth_cap) {
  switch (v) {
    case Variant::pfpne: {
      const int h0 = transition_depth(smooth);
      return {h0, h0 > 0, true};
    }
    case Variant::global_only: return {depth_cap, true, false};
    case Variant::local_only: return {0, false, true};
  }
  throw ConfigError("unknown variant");
}

std::vector<std::uint64_t> checkpoint_times(std::uint64_t horizon, std::uint64_t stride) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t t = stride; t <= horizon; t += stride) out.push_back(t);
  if (out.empty() || out.back() != horizon) out.push_back(horizon);
  return out;
}

std::vector<double> average_cumulative_regret(
    const std::vector<std::vector<double>>& instant_regret,
    const std::vector<std::uint64_t>& checkpoints) {
  const std::size_t clients = instant_regret.size();
  std::vector<double> total(checkpoints.size(), 0.0);
  for (std::size_t m = 0; m < clients; ++m) {
    const auto& r = instant_regret[m];
    double cum = 0.0;
    std::size_t t = 0;
    for (std::size_t k = 0; k < checkpoints.size(); ++k) {
      for (; t < checkpoints[k] && t < r.size(); ++t) cum += r[t];
      total[k] += cum;
    }
  }
  for (double& v : total) v /= static_cast<double>(clients);
  return total;
}

RunMetrics run(const ExperimentConfig& config, Variant variant, std::uint64_t seed,
               const RunOptions& options) {
  config.validate();
  const BaseObjective base = make_base(config.objective, config.effective_domain());
  SuiteOptions suite_options;
  suite_options.certify_global = options.certify_global;

  RunMetrics out;
  out.variant = variant;
  out.seed = seed;
  out.suite = make_suite(base, config.clients, config.effective_shift_std(), config.noise, seed,
                         suite_options);
  const ObjectiveSuite& suite = out.suite;

  const Schedule schedule = variant_schedule(variant, config.smooth(), config.depth_cap);
  ProtocolContext ctx;
  ctx.domain = base.domain();
  ctx.partition = PartitionSpec(config.arity);
  ctx.conf = config.conf();
  ctx.smooth = config.smooth();
  ctx.clients = config.clients;
  ctx.transition_depth = schedule.transition_depth;
  ctx.depth_cap = config.depth_cap;
  ctx.personalize = schedule.personalize;
  out.transition_depth = schedule.transition_depth;

  const auto m_count = static_cast<std::size_t>(config.clients);
  std::vector<ClientState> clients;
  std::vector<Rng> rngs;
  for (int m = 0; m < config.clients; ++m) {
    clients.push_back(make_client(m, ctx, options.record_pulls));
    rngs.push_back(make_stream(seed, StreamPurpose::noise, static_cast<std::uint64_t>(m)));
  }

  ServerState server;
  if (schedule.collaborate) {
    while (clients.front().stage == Stage::stage1) {
      const int h = server.depth;
      if (h > config.depth_cap) {
        // collaboration ran down to the cap without handing over
        for (std::size_t m = 0; m < m_count; ++m) {
          max_depth_fallback(clients[m], suite, rngs[m], ctx);
        }
        break;
      }
      const std::uint64_t q = quota(tau(h, ctx.conf, ctx.smooth), config.clients);
      std::vector<ClientReport> reports;
      for (std::size_t m = 0; m < m_count; ++m) {
        reports.push_back(
            client_stage1_sample(clients[m], server.active, q, suite, rngs[m], ctx));
      }
      const auto exhausted = std::count_if(clients.begin(), clients.end(), [](const auto& c) {
        return c.stage == Stage::exhausted;
      });
      if (exhausted > 0) {
        if (static_cast<std::size_t>(exhausted) != m_count) {
          throw ProtocolError("clients exhausted their budgets out of step");
        }
        break;
      }
      const ServerBroadcast bcast = server_step(server, reports, ctx);
      if (options.record_transcript) {
        for (const auto& r : reports) out.transcript.push_back(serialize(r));
        out.transcript.push_back(serialize(bcast));
      }
      for (auto& c : clients) client_absorb_broadcast(c, bcast, ctx);
    }
  } else {
    for (auto& c : clients) client_enter_pe(c, ctx);
  }
  for (std::size_t m = 0; m < m_count; ++m) run_personalized(clients[m], suite, rngs[m], ctx);

  std::vector<std::vector<double>> regrets;
  out.checkpoints = checkpoint_times(config.horizon, config.checkpoint_stride);
  for (auto& c : clients) {
    regrets.push_back(c.instant_regret);
    double total = 0.0;
    for (double r : c.instant_regret) total += r;
    out.final_regret.push_back(total);
    out.pe_steps += c.pe_steps;
    if (options.record_pulls) out.pulls.push_back(std::move(c.records));
    out.client_eliminated.push_back(c.eliminated);
    out.protected_sets.push_back(c.protected_sets);
  }
  out.avg_cum_regret = average_cumulative_regret(regrets, out.checkpoints);
  out.comm = server.rounds;
  out.server_eliminated = server.eliminated;
  out.transition_t = clients.front().transition_clock;
  return out;
}

VariantAggregate aggregate(const std::vector<RunMetrics>& runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate needs at least one run");
  VariantAggregate agg;
  agg.variant = runs.front().variant;
  agg.checkpoints = runs.front().checkpoints;
  agg.runs = static_cast<int>(runs.size());
  const std::size_t k = agg.checkpoints.size();
  const double n = static_cast<double>(runs.size());
  agg.mean.assign(k, 0.0);
  agg.stddev.assign(k, 0.0);
  for (const auto& r : runs) {
    if (r.avg_cum_regret.size() != k) throw std::invalid_argument("checkpoint grids differ");
    for (std::size_t i = 0; i < k; ++i) agg.mean[i] += r.avg_cum_regret[i] / n;
  }
  if (runs.size() > 1) {
    for (std::size_t i = 0; i < k; ++i) {
      double ss = 0.0;
      for (const auto& r : runs) ss += (r.avg_cum_regret[i] - agg.mean[i]) * (r.avg_cum_regret[i] - agg.mean[i]);
      agg.stddev[i] = std::sqrt(ss / (n - 1.0));
    }
  }
  agg.final_mean = agg.mean.back();
  agg.final_std = agg.stddev.back();
  double rounds = 0.0;
  double trans = 0.0;
  int trans_count = 0;
  for (const auto& r : runs) {
    rounds += static_cast<double>(r.comm.size()) / n;
    if (r.transition_t) {
      trans += static_cast<double>(*r.transition_t);
      ++trans_count;
    }
  }
  agg.comm_rounds_mean = rounds;
  if (trans_count > 0) agg.transition_t_mean = trans / trans_count;
  return agg;
}

namespace {

enum class FaultKind { none, config, oracle, protocol, other };

}  // namespace

ExperimentResult run_many(const ExperimentConfig& config, const RunOptions& options,
                          int threads) {
  config.validate();
  // certify the base objective once, outside the parallel region
  (void)make_base(config.objective, config.effective_domain());

  std::vector<Variant> variants = config.variants;
  std::sort(variants.begin(), variants.end(),
            [](Variant a, Variant b) { return variant_name(a) < variant_name(b); });
  variants.erase(std::unique(variants.begin(), variants.end()), variants.end());
  std::vector<std::uint64_t> seeds = config.seeds;
  std::stable_sort(seeds.begin(), seeds.end());

  struct Task {
    Variant variant;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (Variant v : variants) {
    for (std::uint64_t s : seeds) tasks.push_back({v, s});
  }

  std::vector<RunMetrics> results(tasks.size());
  std::vector<FaultKind> faults(tasks.size(), FaultKind::none);
  std::vector<std::string> messages(tasks.size());
  const int team = threads > 0 ? threads : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic) num_threads(team)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(tasks.size()); ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      results[k] = run(config, tasks[k].variant, tasks[k].seed, options);
    } catch (const ConfigError& e) {
      faults[k] = FaultKind::config;
      messages[k] = e.what();
    } catch (const OracleError& e) {
      faults[k] = FaultKind::oracle;
      messages[k] = e.what();
    } catch (const ProtocolError& e) {
      faults[k] = FaultKind::protocol;
      messages[k] = e.what();
    } catch (const std::exception& e) {
      faults[k] = FaultKind::other;
      messages[k] = e.what();
    }
  }

  for (std::size_t k = 0; k < tasks.size(); ++k) {
    if (faults[k] == FaultKind::none) continue;
    const std::string msg = "seed " + std::to_string(tasks[k].seed) + " (" +
                            std::string(variant_name(tasks[k].variant)) + "): " + messages[k];
    switch (faults[k]) {
      case FaultKind::config: throw ConfigError(msg);
      case FaultKind::oracle: throw OracleError(msg);
      case FaultKind::protocol: throw ProtocolError(msg);
      default: throw std::runtime_error(msg);
    }
  }

  ExperimentResult out;
  for (Variant v : variants) {
    std::vector<RunMetrics> group;
    for (std::size_t k = 0; k < tasks.size(); ++k) {
      if (tasks[k].variant == v) group.push_back(results[k]);
    }
    out.aggregates.push_back(aggregate(group));
  }
  out.runs = std::move(results);
  return out;
}

}  // namespace fedelim
