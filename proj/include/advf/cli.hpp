// SPDX-License-Identifier: Apache-2.0
//
// The advfusion command-line workflow.
#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "advf/model.hpp"
#include "advf/trainer.hpp"

namespace advf {

/// Everything a flat key=value config file can override.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::size_t vocab_size = 1024;
  std::size_t max_new = 32;
  std::vector<double> split_ratios{0.8, 0.1, 0.1};
  std::optional<std::uint64_t> split_seed;  // defaults to --seed
};

/// Applies one setting. Throws ConfigError for unknown keys or bad values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Reads `key = value` lines; blank lines and lines starting with '#' are
/// skipped. Throws ConfigError with the line number.
void apply_config_file(RunConfig& cfg, const std::string& path);

/// Exit codes: 0 success, 1 data/config/usage error, 2 internal error.
int run_subcommand(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_subcommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace advf
