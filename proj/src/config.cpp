#include "fedelim/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "fedelim/errors.hpp"

namespace fedelim {

namespace {

namespace pt = boost::property_tree;

const std::set<std::string> kSections{"objective", "protocol", "experiment"};
const std::set<std::string> kKeys{"objective", "domain",     "shift_std",  "noise",
                                  "clients",   "horizon",    "nu1",        "rho",
                                  "c",         "c1",         "delta_conf", "delta_gap",
                                  "arity",     "depth_cap",  "variants",   "seeds",
                                  "checkpoint_stride"};

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': '" + v + "' is not a number");
  }
}

std::uint64_t to_unsigned(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("key '" + key + "': '" + v + "' is not a non-negative integer");
  }
  return x;
}

int to_int(const std::string& key, const std::string& v) {
  const std::uint64_t x = to_unsigned(key, v);
  if (x > 1'000'000'000) throw ConfigError("key '" + key + "': value too large");
  return static_cast<int>(x);
}

std::vector<std::uint64_t> to_seeds(const std::string& v) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split(v, ',')) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      out.push_back(to_unsigned("seeds", item));
      continue;
    }
    const auto lo = to_unsigned("seeds", trim(item.substr(0, dash)));
    const auto hi = to_unsigned("seeds", trim(item.substr(dash + 1)));
    if (hi < lo || hi - lo > 1'000'000) throw ConfigError("bad seed range '" + item + "'");
    for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
  }
  if (out.empty()) throw ConfigError("seeds list is empty");
  return out;
}

void apply(ExperimentConfig& cfg, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "objective") {
    cfg.objective = parse_objective_kind(v);
  } else if (key == "domain") {
    const auto parts = split(v, ',');
    if (parts.size() != 2) throw ConfigError("domain must be 'lo,hi'");
    cfg.domain = BoxDomain::cube(1, to_real(key, parts[0]), to_real(key, parts[1]));
  } else if (key == "shift_std") {
    cfg.shift_std = to_real(key, v);
  } else if (key == "noise") {
    cfg.noise = to_real(key, v);
  } else if (key == "clients") {
    cfg.clients = to_int(key, v);
  } else if (key == "horizon") {
    cfg.horizon = to_unsigned(key, v);
  } else if (key == "nu1") {
    cfg.nu1 = to_real(key, v);
  } else if (key == "rho") {
    cfg.rho = to_real(key, v);
  } else if (key == "c") {
    cfg.c = to_real(key, v);
  } else if (key == "c1") {
    cfg.c1 = to_real(key, v);
  } else if (key == "delta_conf") {
    cfg.delta_conf = to_real(key, v);
  } else if (key == "delta_gap") {
    cfg.delta_gap = to_real(key, v);
  } else if (key == "arity") {
    cfg.arity = to_int(key, v);
  } else if (key == "depth_cap") {
    cfg.depth_cap = to_int(key, v);
  } else if (key == "variants") {
    cfg.variants.clear();
    for (const auto& name : split(v, ',')) cfg.variants.push_back(parse_variant(name));
  } else if (key == "seeds") {
    cfg.seeds = to_seeds(v);
  } else if (key == "checkpoint_stride") {
    cfg.checkpoint_stride = to_unsigned(key, v);
  } else {
    throw ConfigError("unknown key '" + key + "'");
  }
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  ExperimentConfig cfg;
  std::set<std::string> seen;
  auto take = [&](const std::string& key, const std::string& value) {
    if (!kKeys.contains(key)) throw ConfigError("unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("duplicate key '" + key + "'");
    apply(cfg, key, value);
  };
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      take(name, node.data());
      continue;
    }
    if (!kSections.contains(name)) throw ConfigError("unknown section '" + name + "'");
    for (const auto& [key, leaf] : node) {
      if (!leaf.empty()) throw ConfigError("nested key under '" + key + "'");
      take(key, leaf.data());
    }
  }
  // domain overrides are written per dimension count of the objective
  if (cfg.domain) {
    const std::size_t d = default_domain(cfg.objective).dim();
    cfg.domain = BoxDomain::cube(d, cfg.domain->lower[0], cfg.domain->upper[0]);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  try {
    return parse_config(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string to_canonical(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "[objective]\n";
  os << "objective = " << objective_name(c.objective) << '\n';
  if (c.domain) {
    os << "domain = " << format_real(c.domain->lower[0]) << ','
       << format_real(c.domain->upper[0]) << '\n';
  }
  if (c.shift_std) os << "shift_std = " << format_real(*c.shift_std) << '\n';
  os << "noise = " << format_real(c.noise) << "\n\n";
  os << "[protocol]\n";
  os << "clients = " << c.clients << '\n';
  os << "horizon = " << c.horizon << '\n';
  os << "nu1 = " << format_real(c.nu1) << '\n';
  os << "rho = " << format_real(c.rho) << '\n';
  os << "c = " << format_real(c.c) << '\n';
  os << "c1 = " << format_real(c.c1) << '\n';
  if (c.delta_conf) os << "delta_conf = " << format_real(*c.delta_conf) << '\n';
  os << "delta_gap = " << format_real(c.delta_gap) << '\n';
  os << "arity = " << c.arity << '\n';
  os << "depth_cap = " << c.depth_cap << "\n\n";
  os << "[experiment]\n";
  os << "variants = ";
  for (std::size_t i = 0; i < c.variants.size(); ++i) {
    os << (i ? "," : "") << variant_name(c.variants[i]);
  }
  os << "\nseeds = ";
  for (std::size_t i = 0; i < c.seeds.size(); ++i) os << (i ? "," : "") << c.seeds[i];
  os << "\ncheckpoint_stride = " << c.checkpoint_stride << '\n';
  return os.str();
}

}  // namespace fedelim
