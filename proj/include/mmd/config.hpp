// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: every tunable of the pipeline, the generator and the
// experiment harness, readable from a key=value file and overridable per key.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mmd/dataset.hpp"
#include "mmd/detect.hpp"
#include "mmd/experiments.hpp"

namespace mmd {

struct RunConfig {
  PipelineConfig pipeline;
  SynthConfig synth;
  ComparisonConfig comparison;
  EnhancementConfig enhancement;
  /// Seeds for multi-seed commands; each seed drives both the generator and
  /// the pipeline of its run.
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<double> alpha_grid = default_alpha_grid();
  std::vector<double> theta_grid = default_theta_grid();
  std::filesystem::path data;
  std::filesystem::path out = "runs/default";

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// One settable key.
struct ConfigField {
  std::string key;
  std::string help;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

/// All keys in display order.
const std::vector<ConfigField>& config_fields();

/// Sets one key. Throws ConfigError for an unknown key or a malformed value.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

/// Parses `key = value` lines; `#` starts a comment. Errors carry the line.
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
void apply_config_text(RunConfig& config, const std::string& text);

/// Every key as `key = value`, one per line, in display order.
std::string to_text(const RunConfig& config);

}  // namespace mmd
