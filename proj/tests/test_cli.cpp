#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedelim/cli.hpp"
#include "fedelim/objectives.hpp"

using namespace fedelim;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) out.push_back(line);
  return out;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("fedelim_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  auto p = dir / "exp.ini";
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("run writes one trace per requested variant") {
  auto dir = scratch("run");
  auto cfg = write_config(dir, "[protocol]\nclients = 3\nhorizon = 400\n[experiment]\ncheckpoint_stride = 50\n");
  auto r = cli({"run", "--config", cfg.string(), "--out", (dir / "out").string(), "--runs", "1",
                "--seed", "7", "--variant", "pfpne", "--variant", "local-only"});
  REQUIRE(r.code == kExitOk);
  auto regret = lines(slurp(dir / "out" / "regret.csv"));
  REQUIRE_FALSE(regret.empty());
  CHECK(regret.front() == "variant,seed,t,avg_cum_regret");
  CHECK(regret.size() == 1 + 2 * 8);
  CHECK(regret[1].rfind("local-only,7,50,", 0) == 0);
  CHECK(regret.back().rfind("pfpne,7,400,", 0) == 0);

  auto comm = lines(slurp(dir / "out" / "comm.csv"));
  CHECK(comm.front() == "variant,seed,round_index,depth,scalars_up,scalars_down,cumulative_scalars");
  for (std::size_t i = 1; i < comm.size(); ++i) CHECK(comm[i].rfind("pfpne,", 0) == 0);
  CHECK(comm.size() > 1);

  auto summary = nlohmann::json::parse(slurp(dir / "out" / "summary.json"));
  for (const char* v : {"pfpne", "local-only"}) {
    const auto& s = summary["variants"][v];
    CHECK(s["runs"] == 1);
    CHECK(s["final_std"] == 0.0);
    CHECK(s.contains("final_mean"));
    CHECK(s.contains("comm_rounds_mean"));
    CHECK(s.contains("transition_t_mean"));
  }
  CHECK(summary["variants"]["local-only"]["comm_rounds_mean"] == 0.0);
}

TEST_CASE("flags override the config and output is reproducible") {
  auto dir = scratch("repeat");
  auto cfg = write_config(dir, "objective = himmelblau\nclients = 5\nhorizon = 9000\nseeds = 0-1\n");
  std::vector<std::string> args{"run", "--config", cfg.string(), "--objective", "garland",
                                "--clients", "2", "--horizon", "300", "--out",
                                (dir / "a").string()};
  REQUIRE(cli(args).code == kExitOk);
  args.back() = (dir / "b").string();
  REQUIRE(cli(args).code == kExitOk);
  CHECK(slurp(dir / "a" / "regret.csv") == slurp(dir / "b" / "regret.csv"));
  CHECK(slurp(dir / "a" / "comm.csv") == slurp(dir / "b" / "comm.csv"));
  auto summary = nlohmann::json::parse(slurp(dir / "a" / "summary.json"));
  CHECK(summary["objective"] == "garland");
  CHECK(summary["clients"] == 2);
  CHECK(summary["horizon"] == 300);
  CHECK(summary["variants"]["pfpne"]["runs"] == 2);
  auto regret = lines(slurp(dir / "a" / "regret.csv"));
  CHECK(regret.back().rfind("pfpne,1,300,", 0) == 0);
}

TEST_CASE("regret rows are ordered by variant, seed and time") {
  auto dir = scratch("order");
  auto cfg = write_config(dir, "clients = 2\nhorizon = 200\ncheckpoint_stride = 40\nseeds = 3,1\n"
                               "variants = pfpne,global-only\n");
  REQUIRE(cli({"run", "--config", cfg.string(), "--out", dir.string()}).code == kExitOk);
  auto rows = lines(slurp(dir / "regret.csv"));
  std::vector<std::string> keys;
  long last_t = 0;
  std::string last_key;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    auto first = rows[i].find(',');
    auto second = rows[i].find(',', first + 1);
    auto third = rows[i].find(',', second + 1);
    std::string key = rows[i].substr(0, second);
    long t = std::stol(rows[i].substr(second + 1, third - second - 1));
    if (key != last_key) {
      keys.push_back(key);
      last_key = key;
      last_t = 0;
    }
    CHECK(t > last_t);
    last_t = t;
  }
  CHECK(keys == std::vector<std::string>{"global-only,1", "global-only,3", "pfpne,1", "pfpne,3"});
}

TEST_CASE("missing config file names the path") {
  auto r = cli({"run", "--config", "/nonexistent/fedelim.ini"});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("/nonexistent/fedelim.ini") != std::string::npos);
}

TEST_CASE("bad input exit codes") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"dance"}).code == kExitUsage);
  CHECK(cli({"run", "--runs", "zero"}).code == kExitUsage);
  CHECK(cli({"run", "--variant", "fednucb", "--out", scratch("bad").string()}).code == kExitConfig);
  CHECK(cli({"oracle", "--objective", "sphere"}).code == kExitConfig);
  CHECK(cli({"profile", "--eps", "0.1"}).code == kExitConfig);
  CHECK(cli({"profile", "--eps", "-1", "--grid-step", "0.1"}).code == kExitConfig);
  CHECK(cli({"profile", "--eps", "0.1", "--grid-step", "2"}).code == kExitConfig);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("oracle with zero shift certifies every client at 1") {
  auto r = cli({"oracle", "--objective", "garland", "--clients", "3", "--shift-std", "0"});
  REQUIRE(r.code == kExitOk);
  auto out = lines(r.out);
  REQUIRE(out.size() == 5);
  for (std::size_t i = 1; i < out.size(); ++i) {
    CHECK(out[i].find("f*=1 ") != std::string::npos);
  }
}

TEST_CASE("oracle with one client prints matching certificates") {
  auto r = cli({"oracle", "--objective", "doublesine", "--clients", "1", "--seed", "4"});
  REQUIRE(r.code == kExitOk);
  auto out = lines(r.out);
  REQUIRE(out.size() == 3);
  auto value = [](const std::string& line) {
    auto p = line.find("f*=") + 3;
    return std::stod(line.substr(p, line.find(' ', p) - p));
  };
  CHECK(value(out[1]) == doctest::Approx(value(out[2])).epsilon(1e-9));
}

TEST_CASE("oracle on three shifted garland clients") {
  auto r = cli({"oracle", "--objective", "garland", "--clients", "3", "--seed", "1"});
  REQUIRE(r.code == kExitOk);
  auto out = lines(r.out);
  REQUIRE(out.size() == 5);
  for (std::size_t i = 1; i <= 3; ++i) {
    auto p = out[i].find("f*=") + 3;
    double v = std::stod(out[i].substr(p, out[i].find(' ', p) - p));
    CHECK(v > 0.9);
    CHECK(v <= 1.0 + 1e-12);
  }
}

TEST_CASE("profile ladder matches direct enumeration") {
  auto r = cli({"profile", "--objective", "garland"});
  REQUIRE(r.code == kExitOk);
  auto out = lines(r.out);
  REQUIRE(out.size() == 8);
  CHECK(out[0] == "h,eps,grid_step,count");
  auto garland = make_base(ObjectiveKind::garland);
  for (int h = 0; h <= 6; ++h) {
    const double eps = 6.0 * std::pow(0.5, h);
    const int cells = 1 << h;
    int direct = 0;
    for (int i = 0; i < cells; ++i) {
      Point x{(i + 0.5) / cells};
      if (garland(x) >= 1.0 - eps) ++direct;
    }
    auto row = out[static_cast<std::size_t>(h) + 1];
    CHECK(row.substr(row.rfind(',') + 1) == std::to_string(direct));
  }
  CHECK(out[1].substr(out[1].rfind(',') + 1) == "1");
}

TEST_CASE("profile counts shrink with eps at a fixed grid") {
  long prev = -1;
  for (const char* eps : {"1", "0.5", "0.2", "0.1", "0.05", "0.01"}) {
    auto r = cli({"profile", "--objective", "himmelblau", "--eps", eps, "--grid-step", "0.01"});
    REQUIRE(r.code == kExitOk);
    long count = std::stol(r.out);
    if (prev >= 0) CHECK(count <= prev);
    prev = count;
  }
  auto all = cli({"profile", "--objective", "himmelblau", "--eps", "6", "--grid-step", "0.01"});
  CHECK(std::stol(all.out) == 10000);
}

TEST_CASE("profile on a high-dimensional objective skips oversized rungs") {
  auto r = cli({"profile", "--objective", "rastrigin"});
  REQUIRE(r.code == kExitOk);
  auto out = lines(r.out);
  REQUIRE(out.size() == 8);
  CHECK(out[1] == "0,6,1,1");
  CHECK(out[4].find("skipped") != std::string::npos);
  CHECK(out[7].find("skipped") != std::string::npos);
}
