#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fedelim/harness.hpp"

namespace fedelim {

// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitConfig = 2, kExitRuntime = 3 };

// Entry point behind the `fedelim` binary; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Writers for the run outputs.
void write_regret_csv(std::ostream& os, const std::vector<RunMetrics>& runs);
void write_comm_csv(std::ostream& os, const std::vector<RunMetrics>& runs);
std::string summary_json(const ExperimentConfig& config, const ExperimentResult& result);

// Writes regret.csv, comm.csv and summary.json into dir (created if missing).
void write_outputs(const std::filesystem::path& dir, const ExperimentConfig& config,
                   const ExperimentResult& result);

}  // namespace fedelim
