#pragma once

// Experiment configuration files: INI-style "key = value" lines, optionally
// grouped under [objective], [protocol] and [experiment] sections. Keys are
// the canonical names below; anything else is rejected.
//
//   objective, domain, shift_std, noise                       (objective)
//   clients, horizon, nu1, rho, c, c1, delta_conf, delta_gap,
//   arity, depth_cap                                          (protocol)
//   variants, seeds, checkpoint_stride                        (experiment)
//
// `domain` is "lo,hi" applied to every dimension; `variants` and `seeds` are
// comma lists, seeds may use ranges such as "0-9".

#include <filesystem>
#include <istream>
#include <string>

#include "fedelim/harness.hpp"

namespace fedelim {

// Throws ConfigError on syntax errors, unknown keys or bad values.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_string(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical document; parse_config(to_canonical(c)) == c.
std::string to_canonical(const ExperimentConfig& config);

}  // namespace fedelim
