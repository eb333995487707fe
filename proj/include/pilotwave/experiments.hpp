// Copyright 2026 The pilotwave Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file
 * Declarative experiment runs: flat key = value configs, per-experiment
 * drivers writing CSV/JSON artifacts and plot scripts, run manifests, and
 * run-to-run comparison.
 */

#pragma once

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace pw {

inline constexpr int kManifestSchemaVersion = 1;

[[nodiscard]] const std::vector<std::string> &experiment_names();

/// Resolved configuration: every known key of the experiment has a value.
class ExperimentConfig {
  public:
    /// Defaults for `experiment`; raises config-invalid for unknown names.
    explicit ExperimentConfig(const std::string &experiment);

    [[nodiscard]] const std::string &experiment() const { return experiment_; }
    [[nodiscard]] const std::map<std::string, std::string> &values() const { return values_; }

    /// Rejects keys the experiment does not know. Dashes in keys are read as
    /// underscores.
    void set(const std::string &key, const std::string &value);
    /// Applies `key = value` lines; '#' starts a comment.
    void merge_text(const std::string &text, const std::string &origin = "config");

    [[nodiscard]] double number(const std::string &key) const;
    [[nodiscard]] long integer(const std::string &key) const;
    [[nodiscard]] std::uint64_t unsigned_integer(const std::string &key) const;
    [[nodiscard]] const std::string &text(const std::string &key) const;
    [[nodiscard]] std::vector<double> numbers(const std::string &key) const;
    [[nodiscard]] std::vector<std::string> words(const std::string &key) const;

    /// Type and range checks of every key; raises config-invalid naming the key.
    void validate() const;

  private:
    std::string experiment_;
    std::map<std::string, std::string> values_;
};

/// Config stored in a run manifest.
[[nodiscard]] ExperimentConfig load_manifest(const std::filesystem::path &manifest);

/// Output directory used when none is given: $PILOTWAVE_OUTPUT_ROOT (or
/// ./pilotwave-runs) / <experiment>.
[[nodiscard]] std::filesystem::path default_output_dir(const std::string &experiment);

struct RunArtifacts {
    std::vector<std::string> files;
    nlohmann::json summary;
};

/// Runs the experiment, writing only inside `out_dir`.
RunArtifacts run_experiment(const ExperimentConfig &config, const std::filesystem::path &out_dir);

/// KS or delta comparison of two run directories. Raises incompatible-runs
/// for mismatched or non-comparable experiments.
[[nodiscard]] nlohmann::json compare_runs(const std::filesystem::path &a,
                                          const std::filesystem::path &b,
                                          const std::string &metric = "auto");

} // namespace pw
