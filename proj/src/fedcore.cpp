#include "fedelim/fedcore.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "fedelim/errors.hpp"

namespace fedelim {

double ConfParams::log_term() const {
  return std::log(c1 * static_cast<double>(horizon) / delta);
}

void ConfParams::validate() const {
  if (!(c > 0.0)) throw ConfigError("confidence constant c must be positive");
  if (!(c1 > 0.0)) throw ConfigError("confidence constant c1 must be positive");
  if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("delta_conf must lie in (0, 1]");
  if (horizon < 1) throw ConfigError("horizon must be positive");
  if (!(c1 * static_cast<double>(horizon) / delta >= std::numbers::e)) {
    throw ConfigError("c1 * horizon / delta_conf must be at least e");
  }
}

double SmoothParams::slack(int h) const { return nu1 * std::pow(rho, h); }

void SmoothParams::validate() const {
  if (!(nu1 > 0.0)) throw ConfigError("nu1 must be positive");
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("rho must lie strictly inside (0, 1)");
  if (!(delta_gap > 0.0 && delta_gap <= 1.0)) throw ConfigError("delta_gap must lie in (0, 1]");
}

std::vector<NodeId> ServerBroadcast::survivors() const {
  std::vector<NodeId> out;
  out.reserve(stats.size());
  for (const auto& [n, s] : stats) out.push_back(n);
  return out;
}

double confidence_bound(std::uint64_t pulls, const ConfParams& conf) {
  if (pulls == 0) throw std::invalid_argument("confidence bound needs at least one pull");
  return conf.c * std::sqrt(conf.log_term() / static_cast<double>(pulls));
}

std::uint64_t tau(int h, const ConfParams& conf, const SmoothParams& smooth) {
  if (h < 0) throw std::invalid_argument("negative depth");
  const double v = conf.c * conf.c * conf.log_term() / (smooth.nu1 * smooth.nu1) *
                   std::pow(smooth.rho, -2.0 * h);
  const double up = std::ceil(v);
  if (!(up < static_cast<double>(kTauCap))) return kTauCap;
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(up));
}

std::uint64_t quota(std::uint64_t tau_h, int clients) {
  if (tau_h < 1 || clients < 1) throw std::invalid_argument("quota needs tau >= 1, M >= 1");
  const auto m = static_cast<std::uint64_t>(clients);
  return (tau_h + m - 1) / m;
}

int transition_depth(const SmoothParams& smooth) {
  // the closed form ceil(log(nu1/Delta)/log(1/rho)) is off by one when the
  // ratio is an exact power of rho in floating point, so walk instead
  int h = 0;
  double scale = smooth.nu1;
  while (scale > smooth.delta_gap) {
    scale *= smooth.rho;
    ++h;
  }
  return h;
}

std::map<NodeId, MergedStat> merge_global(std::span<const ClientReport> reports,
                                          const ConfParams& conf) {
  if (reports.empty()) throw ProtocolError("merge needs at least one report");
  const auto& first = reports.front();
  for (const auto& r : reports) {
    if (r.depth != first.depth) throw ProtocolError("reports disagree on depth");
    if (r.entries.size() != first.entries.size()) {
      throw ProtocolError("client " + std::to_string(r.client) + " reported a different node set");
    }
    auto a = r.entries.begin();
    for (auto b = first.entries.begin(); b != first.entries.end(); ++a, ++b) {
      if (a->first != b->first) {
        throw ProtocolError("client " + std::to_string(r.client) +
                            " reported a different node set");
      }
    }
  }
  // summation in client order makes the result independent of arrival order
  std::vector<const ClientReport*> ordered;
  for (const auto& r : reports) ordered.push_back(&r);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const ClientReport* a, const ClientReport* b) { return a->client < b->client; });
  std::map<NodeId, MergedStat> out;
  const double count = static_cast<double>(reports.size());
  for (const auto& [node, entry] : first.entries) {
    double sum = 0.0;
    std::uint64_t pulls = 0;
    for (const ClientReport* r : ordered) {
      const auto& e = r->entries.at(node);
      sum += e.mean;
      pulls += e.pulls;
    }
    MergedStat s;
    s.mean = sum / count;
    s.pulls = pulls;
    s.bound = confidence_bound(pulls, conf);
    out.emplace(node, s);
  }
  return out;
}

namespace {

template <class Map>
NodeId argmax_mean(const Map& stats) {
  if (stats.empty()) throw std::invalid_argument("select_best on an empty set");
  auto best = stats.begin();
  // map order is ascending (depth, index), so strict > keeps the lowest index
  for (auto it = std::next(stats.begin()); it != stats.end(); ++it) {
    if (it->second.mean > best->second.mean) best = it;
  }
  return best->first;
}

}  // namespace

NodeId select_best(const StatsMap& stats) { return argmax_mean(stats); }
NodeId select_best(const std::map<NodeId, MergedStat>& stats) { return argmax_mean(stats); }

std::vector<NodeId> eliminate(const StatsMap& stats, std::span<const NodeId> candidates,
                              NodeId best, int h, const SmoothParams& smooth) {
  const NodeStats& b = stats.at(best);
  const double bar = b.mean - b.bound;
  const double slack = smooth.slack(h);
  std::vector<NodeId> out;
  for (const NodeId& n : candidates) {
    const NodeStats& s = stats.at(n);
    if (s.mean + s.bound + slack < bar) out.push_back(n);
  }
  return out;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string serialize(const ClientReport& report) {
  std::ostringstream os;
  os << "report client=" << report.client << " depth=" << report.depth
     << " entries=" << report.entries.size() << '\n';
  for (const auto& [n, e] : report.entries) {
    os << n.depth << ' ' << n.index << ' ' << format_real(e.mean) << ' ' << e.pulls << '\n';
  }
  return os.str();
}

std::string serialize(const ServerBroadcast& broadcast) {
  std::ostringstream os;
  os << "broadcast depth=" << broadcast.depth << " survivors=" << broadcast.stats.size()
     << '\n';
  for (const auto& [n, s] : broadcast.stats) {
    os << n.depth << ' ' << n.index << ' ' << format_real(s.mean) << ' '
       << format_real(s.bound) << '\n';
  }
  return os.str();
}

namespace {

std::size_t read_field(std::istringstream& is, const std::string& key) {
  std::string tok;
  is >> tok;
  if (tok.rfind(key + "=", 0) != 0) throw ProtocolError("expected field '" + key + "'");
  const std::string value = tok.substr(key.size() + 1);
  if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos) {
    throw ProtocolError("field '" + key + "' is not a count");
  }
  return std::stoull(value);
}

void expect_tag(std::istringstream& is, const std::string& tag) {
  std::string tok;
  is >> tok;
  if (tok != tag) throw ProtocolError("expected message tag '" + tag + "'");
}

}  // namespace

ClientReport parse_report(const std::string& text) {
  std::istringstream is(text);
  ClientReport r;
  expect_tag(is, "report");
  r.client = static_cast<int>(read_field(is, "client"));
  r.depth = static_cast<int>(read_field(is, "depth"));
  const std::size_t n = read_field(is, "entries");
  for (std::size_t k = 0; k < n; ++k) {
    NodeId id;
    ReportEntry e;
    if (!(is >> id.depth >> id.index >> e.mean >> e.pulls)) {
      throw ProtocolError("truncated report");
    }
    r.entries.emplace(id, e);
  }
  return r;
}

ServerBroadcast parse_broadcast(const std::string& text) {
  std::istringstream is(text);
  ServerBroadcast b;
  expect_tag(is, "broadcast");
  b.depth = static_cast<int>(read_field(is, "depth"));
  const std::size_t n = read_field(is, "survivors");
  for (std::size_t k = 0; k < n; ++k) {
    NodeId id;
    GlobalStat s;
    if (!(is >> id.depth >> id.index >> s.mean >> s.bound)) {
      throw ProtocolError("truncated broadcast");
    }
    b.stats.emplace(id, s);
  }
  return b;
}

}  // namespace fedelim
