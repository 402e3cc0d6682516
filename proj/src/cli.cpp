#include "fedelim/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedelim/config.hpp"
#include "fedelim/errors.hpp"

namespace fedelim {

void write_regret_csv(std::ostream& os, const std::vector<RunMetrics>& runs) {
  os << "variant,seed,t,avg_cum_regret\n";
  for (const auto& r : runs) {
    for (std::size_t k = 0; k < r.checkpoints.size(); ++k) {
      os << variant_name(r.variant) << ',' << r.seed << ',' << r.checkpoints[k] << ','
         << format_real(r.avg_cum_regret[k]) << '\n';
    }
  }
}

void write_comm_csv(std::ostream& os, const std::vector<RunMetrics>& runs) {
  os << "variant,seed,round_index,depth,scalars_up,scalars_down,cumulative_scalars\n";
  for (const auto& r : runs) {
    for (const auto& c : r.comm) {
      os << variant_name(r.variant) << ',' << r.seed << ',' << c.round_index << ',' << c.depth
         << ',' << c.scalars_up << ',' << c.scalars_down << ',' << c.cumulative_scalars << '\n';
    }
  }
}

std::string summary_json(const ExperimentConfig& config, const ExperimentResult& result) {
  nlohmann::ordered_json doc;
  doc["objective"] = std::string(objective_name(config.objective));
  doc["clients"] = config.clients;
  doc["horizon"] = config.horizon;
  doc["seeds"] = config.seeds;
  nlohmann::ordered_json variants = nlohmann::ordered_json::object();
  for (const auto& a : result.aggregates) {
    nlohmann::ordered_json v;
    v["runs"] = a.runs;
    v["final_mean"] = a.final_mean;
    v["final_std"] = a.final_std;
    v["comm_rounds_mean"] = a.comm_rounds_mean;
    if (a.transition_t_mean) {
      v["transition_t_mean"] = *a.transition_t_mean;
    } else {
      v["transition_t_mean"] = nullptr;
    }
    variants[std::string(variant_name(a.variant))] = v;
  }
  doc["variants"] = variants;
  return doc.dump(2) + "\n";
}

void write_outputs(const std::filesystem::path& dir, const ExperimentConfig& config,
                   const ExperimentResult& result) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("regret.csv");
    write_regret_csv(f, result.runs);
  }
  {
    auto f = open("comm.csv");
    write_comm_csv(f, result.runs);
  }
  {
    auto f = open("summary.json");
    f << summary_json(config, result);
  }
}

namespace {

int env_threads() {
  if (const char* v = std::getenv("FEDELIM_THREADS")) {
    const int n = std::atoi(v);
    if (n > 0) return n;
  }
  return 0;
}

void print_certificate(std::ostream& out, const std::string& label, const Certificate& c) {
  out << label << " f*=" << format_real(c.value) << " x*=(";
  for (std::size_t j = 0; j < c.x.size(); ++j) out << (j ? "," : "") << format_real(c.x[j]);
  out << ") method=" << c.method << " probes=" << c.probes << " zoom_rounds=" << c.zoom_rounds
      << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Personalized federated X-armed bandit simulator"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "run experiments and write regret/comm CSVs");
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::vector<std::string> variant_names;
  std::optional<std::string> objective_flag;
  std::optional<int> clients_flag;
  std::optional<std::uint64_t> horizon_flag;
  run_cmd->add_option("--config", config_path, "experiment config file");
  run_cmd->add_option("--out", out_dir, "output directory");
  run_cmd->add_option("--seed", seed, "first seed");
  run_cmd->add_option("--runs", runs, "number of seeds starting at --seed")->check(CLI::PositiveNumber);
  run_cmd->add_option("--variant", variant_names, "variant (repeatable)");
  run_cmd->add_option("--objective", objective_flag, "objective name");
  run_cmd->add_option("--clients", clients_flag, "number of clients");
  run_cmd->add_option("--horizon", horizon_flag, "per-client budget T");

  // oracle
  auto* oracle_cmd = app.add_subcommand("oracle", "print optimum certificates of a suite");
  std::string oracle_objective = "garland";
  int oracle_clients = 10;
  std::optional<double> oracle_shift;
  std::uint64_t oracle_seed = 0;
  oracle_cmd->add_option("--objective", oracle_objective, "objective name");
  oracle_cmd->add_option("--clients", oracle_clients, "number of clients");
  oracle_cmd->add_option("--shift-std", oracle_shift, "shift standard deviation");
  oracle_cmd->add_option("--seed", oracle_seed, "seed");

  // profile
  auto* profile_cmd = app.add_subcommand("profile", "near-optimality cell counts");
  std::string profile_objective = "garland";
  std::optional<double> profile_eps;
  std::optional<double> profile_step;
  double profile_nu1 = 1.0;
  double profile_rho = 0.5;
  profile_cmd->add_option("--objective", profile_objective, "objective name");
  profile_cmd->add_option("--eps", profile_eps, "single rung: eps");
  profile_cmd->add_option("--grid-step", profile_step, "single rung: grid step (fraction of width)");
  profile_cmd->add_option("--nu1", profile_nu1, "ladder nu1");
  profile_cmd->add_option("--rho", profile_rho, "ladder rho");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "usage error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }

  try {
    const int threads = env_threads();
    if (threads > 0) omp_set_num_threads(threads);

    if (*run_cmd) {
      ExperimentConfig cfg;
      if (!config_path.empty()) cfg = load_config(config_path);
      if (objective_flag) cfg.objective = parse_objective_kind(*objective_flag);
      if (clients_flag) cfg.clients = *clients_flag;
      if (horizon_flag) cfg.horizon = *horizon_flag;
      if (!variant_names.empty()) {
        cfg.variants.clear();
        for (const auto& v : variant_names) cfg.variants.push_back(parse_variant(v));
      }
      if (seed || runs) {
        const std::uint64_t first = seed.value_or(cfg.seeds.front());
        const int count = runs.value_or(1);
        cfg.seeds.clear();
        for (int i = 0; i < count; ++i) cfg.seeds.push_back(first + static_cast<std::uint64_t>(i));
      }
      cfg.validate();
      const auto result = run_many(cfg, {}, threads);
      write_outputs(out_dir, cfg, result);
      for (const auto& a : result.aggregates) {
        out << variant_name(a.variant) << ": final avg cumulative regret "
            << format_real(a.final_mean) << " +- " << format_real(a.final_std) << " over "
            << a.runs << " run(s), comm rounds " << a.comm_rounds_mean << '\n';
      }
      return kExitOk;
    }

    if (*oracle_cmd) {
      const auto kind = parse_objective_kind(oracle_objective);
      const BaseObjective base = make_base(kind);
      const double shift = oracle_shift.value_or(default_shift_std(base.domain()));
      const auto suite = make_suite(base, oracle_clients, shift, 0.0, oracle_seed);
      out << "objective=" << base.name() << " clients=" << oracle_clients
          << " shift_std=" << format_real(shift) << " seed=" << oracle_seed
          << " normalization_max=" << format_real(base.normalization_max()) << '\n';
      for (int m = 0; m < suite.clients(); ++m) {
        print_certificate(out, "client " + std::to_string(m), suite.local_optimum(m));
      }
      print_certificate(out, "global", suite.global_optimum());
      return kExitOk;
    }

    if (*profile_cmd) {
      const auto kind = parse_objective_kind(profile_objective);
      const BaseObjective base = make_base(kind);
      const double f_star = base.optimum().value;
      auto f = [&base](std::span<const double> x) { return base.eval_unchecked(x); };
      if (profile_eps || profile_step) {
        if (!profile_eps || !profile_step) throw ConfigError("--eps and --grid-step go together");
        if (!(*profile_eps > 0.0) || !(*profile_step > 0.0) || *profile_step > 1.0) {
          throw ConfigError("--eps must be positive and --grid-step must lie in (0, 1]");
        }
        out << near_optimality_profile(f, base.domain(), f_star, *profile_eps, *profile_step)
            << '\n';
        return kExitOk;
      }
      const SmoothParams smooth{profile_nu1, profile_rho, 1.0};
      smooth.validate();
      out << "h,eps,grid_step,count\n";
      for (int h = 0; h <= 6; ++h) {
        const double eps = 6.0 * smooth.slack(h);
        const double step = std::pow(profile_rho, h);
        out << h << ',' << format_real(eps) << ',' << format_real(step) << ',';
        try {
          out << near_optimality_profile(f, base.domain(), f_star, eps, step) << '\n';
        } catch (const std::invalid_argument&) {
          out << "skipped\n";
        }
      }
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace fedelim
