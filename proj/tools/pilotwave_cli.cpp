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

// pilotwave command line: run experiments from flat configs and compare runs.
//
//   pilotwave run double-slit --law modified --n 10000 --seed 7
//   pilotwave run cor-test --config cor.cfg --output runs/cor
//   pilotwave run --from-manifest runs/cor/manifest.json --output runs/cor-again
//   pilotwave compare runs/a runs/b
//   pilotwave defaults surreal

#include "pilotwave/error.hpp"
#include "pilotwave/experiments.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitFailed = 3;

std::string slurp(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        pw::raise(pw::ErrorKind::ConfigInvalid, "cannot read config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Leftover "--key value" and "--key=value" tokens become config overrides.
void apply_overrides(pw::ExperimentConfig &config, const std::vector<std::string> &extras) {
    for (std::size_t i = 0; i < extras.size(); ++i) {
        const std::string &tok = extras[i];
        if (!tok.starts_with("--") || tok.size() < 3)
            pw::raise(pw::ErrorKind::ConfigInvalid, "unexpected argument '" + tok + "'");
        const std::string body = tok.substr(2);
        const auto eq = body.find('=');
        if (eq != std::string::npos) {
            config.set(body.substr(0, eq), body.substr(eq + 1));
            continue;
        }
        if (i + 1 >= extras.size())
            pw::raise(pw::ErrorKind::ConfigInvalid, "key '" + body + "': missing value");
        config.set(body, extras[++i]);
    }
}

int run_command(const std::string &experiment, const std::string &config_path, const std::string &manifest,
                const std::string &output, const std::vector<std::string> &extras) {
    std::optional<pw::ExperimentConfig> config;
    if (!manifest.empty()) {
        config.emplace(pw::load_manifest(manifest));
        if (!experiment.empty() && experiment != config->experiment())
            pw::raise(pw::ErrorKind::ConfigInvalid, "manifest is for '" + config->experiment() + "', not '" +
                                                        experiment + "'");
    } else {
        if (experiment.empty())
            pw::raise(pw::ErrorKind::ConfigInvalid, "no experiment given");
        config.emplace(experiment);
    }
    if (!config_path.empty())
        config->merge_text(slurp(config_path), config_path);
    apply_overrides(*config, extras);
    config->validate();

    const std::filesystem::path dir = output.empty() ? pw::default_output_dir(config->experiment()) : std::filesystem::path(output);
    const pw::RunArtifacts art = pw::run_experiment(*config, dir);
    std::printf("%s -> %s\n", config->experiment().c_str(), dir.string().c_str());
    for (const auto &f : art.files)
        std::printf("  %s\n", f.c_str());
    std::printf("%s\n", art.summary.dump(2).c_str());
    return 0;
}

int compare_command(const std::string &a, const std::string &b, const std::string &metric,
                    const std::string &json_out) {
    const nlohmann::json report = pw::compare_runs(a, b, metric);
    if (!json_out.empty()) {
        std::ofstream out(json_out);
        out << report.dump(2) << '\n';
    }
    if (report["metric"] == "ks")
        std::printf("%s: KS D = %.6g, p = %.6g -> %s\n", report["experiment"].get<std::string>().c_str(),
                    report["statistic"].get<double>(), report["p_value"].get<double>(),
                    report["verdict"].get<std::string>().c_str());
    else
        std::printf("%s: %zu of %zu values agree within 3 SE, max |diff| = %.6g -> %s\n",
                    report["experiment"].get<std::string>().c_str(), report["within_3se"].get<std::size_t>(),
                    report["compared"].get<std::size_t>(), report["max_abs_difference"].get<double>(),
                    report["verdict"].get<std::string>().c_str());
    std::printf("%s\n", report.dump(2).c_str());
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"pilotwave: pilot-wave trajectory and weak-measurement experiments"};
    app.set_version_flag("--version", PILOTWAVE_VERSION);
    app.require_subcommand(1);

    std::string experiment, config_path, manifest, output;
    auto *run = app.add_subcommand("run", "run an experiment; extra --key value pairs override config keys");
    run->add_option("experiment", experiment, "double-slit, weak-velocity, cor-test, three-box, surreal, equivariance");
    run->add_option("--config", config_path, "flat key = value config file");
    run->add_option("--from-manifest", manifest, "re-run the config stored in a manifest.json");
    run->add_option("--output", output, "output directory");
    run->allow_extras();

    std::string dir_a, dir_b, metric = "auto", json_out;
    auto *cmp = app.add_subcommand("compare", "compare two run directories");
    cmp->add_option("a", dir_a)->required();
    cmp->add_option("b", dir_b)->required();
    cmp->add_option("--metric", metric, "auto, ks or delta");
    cmp->add_option("--json", json_out, "also write the report here");

    std::string defaults_of;
    auto *defs = app.add_subcommand("defaults", "print the default config of an experiment");
    defs->add_option("experiment", defaults_of)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run)
            return run_command(experiment, config_path, manifest, output, run->remaining());
        if (*cmp)
            return compare_command(dir_a, dir_b, metric, json_out);
        const pw::ExperimentConfig config(defaults_of);
        for (const auto &[k, v] : config.values())
            std::printf("%s = %s\n", k.c_str(), v.c_str());
        return 0;
    } catch (const pw::Error &e) {
        std::fprintf(stderr, "pilotwave: %s\n", e.what());
        return e.kind() == pw::ErrorKind::ConfigInvalid ? kExitConfig : kExitFailed;
    } catch (const std::exception &e) {
        std::fprintf(stderr, "pilotwave: %s\n", e.what());
        return kExitFailed;
    }
}
