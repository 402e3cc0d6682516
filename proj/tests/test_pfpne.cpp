#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fedelim/errors.hpp"
#include "fedelim/pfpne.hpp"

using namespace fedelim;

namespace {

struct Fixture {
  ObjectiveSuite suite;
  ProtocolContext ctx;
  Rng rng = make_stream(1, StreamPurpose::noise, 0);

  explicit Fixture(int clients = 1, double noise = 0.0, std::uint64_t horizon = 5000,
                   double shift = 0.0) {
    auto base = make_base(ObjectiveKind::garland);
    suite = make_suite(base, clients, shift, noise, 1);
    ctx.domain = base.domain();
    ctx.conf.horizon = horizon;
    ctx.conf.delta = 1.0 / clients;
    ctx.clients = clients;
    ctx.transition_depth = transition_depth(ctx.smooth);
  }
};

ClientState client_at(int depth, std::vector<NodeId> active, const ProtocolContext& ctx) {
  ClientState c = make_client(0, ctx, true);
  c.depth = depth;
  c.active = std::move(active);
  c.protected_sets.resize(static_cast<std::size_t>(depth));
  return c;
}

}  // namespace

TEST_CASE("stage-1 sampling pulls each node quota times in index order") {
  Fixture fx;
  auto c = client_at(2, {}, fx.ctx);
  std::vector<NodeId> set{{2, 4}, {2, 1}, {2, 3}, {2, 2}};
  auto report = client_stage1_sample(c, set, 1, fx.suite, fx.rng, fx.ctx);
  CHECK(c.clock == 4);
  CHECK(c.budget_remaining() + c.clock == c.horizon);
  REQUIRE(c.records.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(c.records[i].node == NodeId{2, i + 1});
    CHECK(c.records[i].t == i + 1);
  }
  CHECK(report.entries.size() == 4);
  CHECK(report.depth == 2);
  for (const auto& [n, e] : report.entries) {
    auto x = representative(fx.ctx.domain, n, fx.ctx.partition);
    CHECK(e.mean == fx.suite.eval_local(0, x));
    CHECK(e.pulls == 1);
    CHECK(c.stats.at(n).bound == confidence_bound(1, fx.ctx.conf));
  }
}

TEST_CASE("stage-1 sampling stops when the budget runs out") {
  Fixture fx(1, 0.1, 2);
  auto c = client_at(2, {}, fx.ctx);
  std::vector<NodeId> set{{2, 1}, {2, 2}, {2, 3}, {2, 4}};
  auto report = client_stage1_sample(c, set, 1, fx.suite, fx.rng, fx.ctx);
  CHECK(c.clock == 2);
  CHECK(c.stage == Stage::exhausted);
  CHECK(report.entries.size() == 2);
  CHECK(c.budget_remaining() == 0);
  CHECK_THROWS_AS(client_stage1_sample(c, set, 1, fx.suite, fx.rng, fx.ctx), ProtocolError);
}

TEST_CASE("stage-1 sampling rejects nodes off the current depth") {
  Fixture fx;
  auto c = client_at(1, {}, fx.ctx);
  std::vector<NodeId> set{{2, 1}};
  CHECK_THROWS_AS(client_stage1_sample(c, set, 1, fx.suite, fx.rng, fx.ctx), ProtocolError);
}

TEST_CASE("server eliminates a clearly worse sibling") {
  Fixture fx;
  ServerState server;
  server.depth = 3;
  server.active = {{3, 1}, {3, 2}};
  const auto t3 = tau(3, fx.ctx.conf, fx.ctx.smooth);
  ClientReport r;
  r.depth = 3;
  r.entries[{3, 1}] = {0.9, t3};
  r.entries[{3, 2}] = {0.2, t3};
  REQUIRE(confidence_bound(t3, fx.ctx.conf) <= 0.125);
  std::vector<ClientReport> reports{r};
  auto b = server_step(server, reports, fx.ctx);
  CHECK(b.survivors() == std::vector<NodeId>{{3, 1}});
  CHECK(server.eliminated.at(3) == std::vector<NodeId>{{3, 2}});
  CHECK(server.active == std::vector<NodeId>{{4, 1}, {4, 2}});
  CHECK(server.depth == 4);
  REQUIRE(server.rounds.size() == 1);
  CHECK(server.rounds[0].scalars_up == 4);
  CHECK(server.rounds[0].scalars_down == 3);
  CHECK(server.rounds[0].cumulative_scalars == 7);
  CHECK(b.stats.at({3, 1}).mean == 0.9);
  CHECK(b.stats.at({3, 1}).bound == confidence_bound(t3, fx.ctx.conf));
}

TEST_CASE("server keeps everything when all means tie") {
  Fixture fx(3);
  ServerState server;
  server.depth = 2;
  server.active = {{2, 1}, {2, 2}, {2, 3}, {2, 4}};
  std::vector<ClientReport> reports;
  for (int m = 0; m < 3; ++m) {
    ClientReport r;
    r.client = m;
    r.depth = 2;
    for (const auto& n : server.active) r.entries[n] = {0.5, 100};
    reports.push_back(r);
  }
  auto b = server_step(server, reports, fx.ctx);
  CHECK(b.survivors().size() == 4);
  CHECK(server.active.size() == 8);
  CHECK(server.rounds[0].scalars_up == 3 * 4 * 2);
  CHECK(server.rounds[0].scalars_down == 12);
}

TEST_CASE("a single active node expands to its children") {
  Fixture fx;
  ServerState server;
  ClientReport r;
  r.depth = 0;
  r.entries[kRoot] = {0.4, 1};
  std::vector<ClientReport> reports{r};
  auto b = server_step(server, reports, fx.ctx);
  CHECK(b.survivors() == std::vector<NodeId>{kRoot});
  CHECK(server.active == children(kRoot, fx.ctx.partition));
}

TEST_CASE("server rejects malformed reports") {
  Fixture fx;
  ServerState server;
  server.depth = 1;
  server.active = {{1, 1}, {1, 2}};
  ClientReport wrong_depth;
  wrong_depth.depth = 2;
  wrong_depth.entries[{1, 1}] = {0.1, 1};
  wrong_depth.entries[{1, 2}] = {0.1, 1};
  std::vector<ClientReport> a{wrong_depth};
  CHECK_THROWS_AS(server_step(server, a, fx.ctx), ProtocolError);
  ClientReport partial;
  partial.depth = 1;
  partial.entries[{1, 1}] = {0.1, 1};
  std::vector<ClientReport> b{partial};
  CHECK_THROWS_AS(server_step(server, b, fx.ctx), ProtocolError);
  ClientReport stray;
  stray.depth = 1;
  stray.entries[{1, 1}] = {0.1, 1};
  stray.entries[{1, 3}] = {0.1, 1};
  std::vector<ClientReport> c{stray};
  CHECK_THROWS_AS(server_step(server, c, fx.ctx), ProtocolError);
  CHECK(server.rounds.empty());
}

TEST_CASE("absorbing a broadcast substitutes global statistics") {
  Fixture fx;
  auto c = client_at(2, {{2, 1}, {2, 2}}, fx.ctx);
  c.stats[{2, 1}] = NodeStats{4, 1.6, 0.40, 0.12, Provenance::local};
  c.stats[{2, 2}] = NodeStats{4, 0.4, 0.10, 0.12, Provenance::local};
  ServerBroadcast b;
  b.depth = 2;
  b.stats[{2, 1}] = {0.42, 0.05};
  client_absorb_broadcast(c, b, fx.ctx);
  const auto& s = c.stats.at({2, 1});
  CHECK(s.mean == 0.42);
  CHECK(s.bound == 0.05);
  CHECK(s.provenance == Provenance::global);
  CHECK(s.pulls == 4);
  CHECK(c.stats.at({2, 2}).provenance == Provenance::local);
  CHECK(c.protected_sets.size() == 3);
  CHECK(c.protected_at(2).size() == 1);
  CHECK(c.depth == 3);
  CHECK(c.active == std::vector<NodeId>{{3, 1}, {3, 2}});
  CHECK(c.stage == Stage::stage1);
}

TEST_CASE("a broadcast without eliminations protects the whole level") {
  Fixture fx;
  auto c = client_at(1, {{1, 1}, {1, 2}}, fx.ctx);
  c.stats[{1, 1}] = NodeStats{1, 0.3, 0.3, 0.3, Provenance::local};
  c.stats[{1, 2}] = NodeStats{1, 0.6, 0.6, 0.3, Provenance::local};
  ServerBroadcast b;
  b.depth = 1;
  b.stats[{1, 1}] = {0.3, 0.2};
  b.stats[{1, 2}] = {0.6, 0.2};
  client_absorb_broadcast(c, b, fx.ctx);
  auto p = c.protected_at(1);
  CHECK(std::vector<NodeId>(p.begin(), p.end()) == std::vector<NodeId>{{1, 1}, {1, 2}});
}

TEST_CASE("absorb errors") {
  Fixture fx;
  auto c = client_at(1, {{1, 1}}, fx.ctx);
  ServerBroadcast unknown;
  unknown.depth = 1;
  unknown.stats[{1, 1}] = {0.3, 0.2};
  CHECK_THROWS_AS(client_absorb_broadcast(c, unknown, fx.ctx), ProtocolError);
  ServerBroadcast off;
  off.depth = 4;
  CHECK_THROWS_AS(client_absorb_broadcast(c, off, fx.ctx), ProtocolError);
}

TEST_CASE("absorbing the last collaborative depth starts PE at the root") {
  Fixture fx;
  const int h0 = fx.ctx.transition_depth;
  REQUIRE(h0 == 7);
  auto c = client_at(h0, {{h0, 1}}, fx.ctx);
  c.stats[{h0, 1}] = NodeStats{3, 1.5, 0.5, 0.1, Provenance::local};
  c.clock = 123;
  ServerBroadcast b;
  b.depth = h0;
  b.stats[{h0, 1}] = {0.5, 0.1};
  client_absorb_broadcast(c, b, fx.ctx);
  CHECK(c.stage == Stage::personalized);
  CHECK(c.depth == 0);
  CHECK(c.active == std::vector<NodeId>{kRoot});
  CHECK(c.transition_clock == 123u);
  CHECK(c.protected_at(h0 + 1).empty());
  CHECK(c.stats.at({h0, 1}).pulls == 3);
}

TEST_CASE("entering PE with no collaboration") {
  Fixture fx;
  fx.ctx.transition_depth = 0;
  auto c = make_client(0, fx.ctx);
  client_enter_pe(c, fx.ctx);
  CHECK(c.stage == Stage::personalized);
  CHECK(c.protected_sets.empty());
  CHECK(c.transition_clock == 0u);
}

TEST_CASE("protected root needs no local sampling") {
  Fixture fx(1, 0.1);
  auto c = make_client(0, fx.ctx, true);
  c.stats[kRoot] = NodeStats{1, 0.5, 0.55, 0.3, Provenance::global};
  c.protected_sets = {{kRoot}};
  client_enter_pe(c, fx.ctx);
  pe_depth_step(c, fx.suite, fx.rng, fx.ctx);
  CHECK(c.clock == 0);
  CHECK(c.depth == 1);
  CHECK(c.active == children(kRoot, fx.ctx.partition));
  CHECK(c.eliminated.at(0).empty());
}

TEST_CASE("stage-1 pulls count toward PE thresholds") {
  Fixture fx(1, 0.1);
  auto c = make_client(0, fx.ctx, true);
  const int h = 3;
  const auto t3 = tau(h, fx.ctx.conf, fx.ctx.smooth);
  c.stage = Stage::personalized;
  c.depth = h;
  c.active = {{h, 1}, {h, 2}};
  c.stats[{h, 1}] = NodeStats{t3 + 2, 0.0, 0.0, confidence_bound(t3 + 2, fx.ctx.conf), Provenance::local};
  c.stats[{h, 2}] = NodeStats{t3 - 1, 0.0, 0.0, confidence_bound(t3 - 1, fx.ctx.conf), Provenance::local};
  pe_depth_step(c, fx.suite, fx.rng, fx.ctx);
  CHECK(c.clock == 1);
  CHECK(c.records.front().node == NodeId{h, 2});
  CHECK(c.stats.at({h, 1}).pulls == t3 + 2);
  CHECK(c.stats.at({h, 2}).pulls == t3);
}

TEST_CASE("biased evaluation lets a protected node eliminate a sibling") {
  Fixture fx;
  auto c = make_client(0, fx.ctx, true);
  c.stage = Stage::personalized;
  c.depth = 3;
  c.active = {{3, 1}, {3, 2}};
  c.protected_sets.resize(4);
  c.protected_sets[3] = {{3, 1}};
  c.stats[{3, 1}] = NodeStats{0, 0.0, 0.9, 0.02, Provenance::global};
  c.stats[{3, 2}] = NodeStats{100000, 30000.0, 0.3, 0.05, Provenance::local};
  pe_depth_step(c, fx.suite, fx.rng, fx.ctx);
  CHECK(c.clock == 0);
  CHECK(c.eliminated.at(3) == std::vector<NodeId>{{3, 2}});
  CHECK(c.active == std::vector<NodeId>{{4, 1}, {4, 2}});
  CHECK(c.last_survivors == std::vector<NodeId>{{3, 1}});
}

TEST_CASE("protected nodes never become elimination candidates") {
  Fixture fx;
  auto c = make_client(0, fx.ctx, true);
  c.stage = Stage::personalized;
  c.depth = 3;
  c.active = {{3, 1}, {3, 2}};
  c.protected_sets.resize(4);
  c.protected_sets[3] = {{3, 1}};
  c.stats[{3, 1}] = NodeStats{0, 0.0, 0.1, 0.0, Provenance::global};
  c.stats[{3, 2}] = NodeStats{100000, 99000.0, 0.99, 0.0, Provenance::local};
  pe_depth_step(c, fx.suite, fx.rng, fx.ctx);
  CHECK(c.eliminated.at(3).empty());
  CHECK(c.active.size() == 4);
}

TEST_CASE("PE step outside PE is rejected") {
  Fixture fx;
  auto c = make_client(0, fx.ctx);
  CHECK_THROWS_AS(pe_depth_step(c, fx.suite, fx.rng, fx.ctx), ProtocolError);
}

TEST_CASE("PE exhausts the budget mid-depth") {
  Fixture fx(1, 0.1, 10);
  auto c = make_client(0, fx.ctx, true);
  client_enter_pe(c, fx.ctx);
  run_personalized(c, fx.suite, fx.rng, fx.ctx);
  CHECK(c.stage == Stage::exhausted);
  CHECK(c.clock == 10);
  CHECK(c.records.size() == 10);
  CHECK(c.instant_regret.size() == 10);
}

TEST_CASE("depth-cap fallback spends the rest of the budget on one node") {
  Fixture fx(1, 0.0, 137);
  auto c = make_client(0, fx.ctx, true);
  c.stage = Stage::personalized;
  c.clock = 100;
  c.depth = 5;
  c.last_survivors = {{4, 3}, {4, 7}};
  c.stats[{4, 3}] = NodeStats{5, 2.0, 0.4, 0.1, Provenance::local};
  c.stats[{4, 7}] = NodeStats{5, 4.0, 0.8, 0.1, Provenance::local};
  max_depth_fallback(c, fx.suite, fx.rng, fx.ctx);
  CHECK(c.records.size() == 37);
  CHECK(c.stage == Stage::exhausted);
  std::set<double> regrets;
  for (const auto& r : c.records) {
    CHECK(r.node == NodeId{4, 7});
    regrets.insert(r.instant_regret);
  }
  CHECK(regrets.size() == 1);
}

TEST_CASE("cap reached inside run_personalized triggers the fallback") {
  Fixture fx(1, 0.0, 3000);
  fx.ctx.depth_cap = 3;
  auto c = make_client(0, fx.ctx, true);
  client_enter_pe(c, fx.ctx);
  run_personalized(c, fx.suite, fx.rng, fx.ctx);
  CHECK(c.clock == 3000);
  CHECK(c.pe_steps == 3);
  std::set<NodeId> tail;
  for (std::size_t i = c.records.size() - 100; i < c.records.size(); ++i) tail.insert(c.records[i].node);
  CHECK(tail.size() == 1);
  CHECK(tail.begin()->depth == 2);
}

TEST_CASE("a cap that is never reached leaves the fallback unused") {
  Fixture fx(1, 0.1, 500);
  auto c = make_client(0, fx.ctx, true);
  client_enter_pe(c, fx.ctx);
  run_personalized(c, fx.suite, fx.rng, fx.ctx);
  CHECK(c.depth < fx.ctx.depth_cap);
  CHECK(c.clock == 500);
}

TEST_CASE("noiseless PE never eliminates the node holding the optimizer") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto base = make_base(ObjectiveKind::doublesine);
    auto suite = make_suite(base, 1, 0.05, 0.0, seed);
    ProtocolContext ctx;
    ctx.domain = base.domain();
    ctx.conf.horizon = 20000;
    ctx.conf.delta = 1.0;
    ctx.depth_cap = 20;
    auto rng = make_stream(seed, StreamPurpose::noise, 0);
    auto c = make_client(0, ctx);
    client_enter_pe(c, ctx);
    run_personalized(c, suite, rng, ctx);
    const auto& xs = suite.local_optimum(0).x;
    for (const auto& [h, gone] : c.eliminated) {
      NodeId home = locate(ctx.domain, xs, h, ctx.partition);
      CHECK(std::find(gone.begin(), gone.end(), home) == gone.end());
    }
  }
}
