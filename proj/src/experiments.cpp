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

#include "pilotwave/experiments.hpp"

#include "pilotwave/discrete.hpp"
#include "pilotwave/dynamics.hpp"
#include "pilotwave/error.hpp"
#include "pilotwave/stats.hpp"
#include "pilotwave/surreal.hpp"
#include "pilotwave/weakmeas.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#ifndef PILOTWAVE_VERSION
#define PILOTWAVE_VERSION "0.0.0"
#endif

namespace pw {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class Kind { Real, Positive, Count, AtLeastOne, GridCount, Seed, Choice, RealList, WordList, RealOrAuto };

struct KeySpec {
    const char *name;
    const char *value;
    Kind kind;
    std::vector<std::string> choices = {};
};

using Schema = std::vector<KeySpec>;

const std::vector<std::string> kLaws = {"standard", "modified", "born-resampling", "nelson"};

Schema double_slit_schema() {
    return {
        {"law", "standard", Kind::Choice, kLaws},
        {"n", "10000", Kind::Count},
        {"seed", "1", Kind::Seed},
        {"x_lo", "-25.6", Kind::Real},
        {"x_hi", "25.6", Kind::Real},
        {"nx", "512", Kind::GridCount},
        {"y_lo", "-12.8", Kind::Real},
        {"y_hi", "25.6", Kind::Real},
        {"ny", "256", Kind::GridCount},
        {"slit_separation", "3", Kind::Positive},
        {"packet_width_x", "0.5", Kind::Positive},
        {"packet_width_y", "1", Kind::Positive},
        {"start_y", "0", Kind::Real},
        {"k", "4", Kind::Positive},
        {"screen_y", "6", Kind::Real},
        {"t_final", "2", Kind::Positive},
        {"snapshot_dt", "0.05", Kind::Positive},
        {"dt", "0.01", Kind::Positive},
        {"tolerance", "1e-7", Kind::Positive},
        {"j_amplitude", "0.002", Kind::Real},
        {"j_center_x", "0", Kind::Real},
        {"j_center_y", "-6", Kind::Real},
        {"j_exclusion_spacings", "2", Kind::Positive},
        {"resample_dt", "0.1", Kind::Positive},
        {"diffusivity", "auto", Kind::RealOrAuto},
        {"mass", "1", Kind::Positive},
        {"hbar", "1", Kind::Positive},
        {"export_trajectories", "200", Kind::Count},
        {"export_stride", "5", Kind::AtLeastOne},
    };
}

Schema equivariance_schema() {
    Schema s = double_slit_schema();
    s.erase(std::remove_if(s.begin(), s.end(),
                           [](const KeySpec &k) {
                               return std::string(k.name) == "law" ||
                                      std::string(k.name).starts_with("export_");
                           }),
            s.end());
    s.push_back({"laws", "standard,modified,born-resampling", Kind::WordList, kLaws});
    s.push_back({"check_times", "0.5,1.0,1.5", Kind::RealList});
    s.push_back({"alpha", "0.01", Kind::Positive});
    return s;
}

Schema weak_common_schema() {
    return {
        {"pointer_sigma", "2", Kind::Positive},
        {"taus", "0.025,0.05,0.1,0.2", Kind::RealList},
        {"sampling", "conditional", Kind::Choice, {"conditional", "forward"}},
        {"n", "100000", Kind::Count},
        {"seed", "1", Kind::Seed},
        {"bin_spacings", "4", Kind::AtLeastOne},
        {"min_population", "200", Kind::Count},
        {"bootstrap", "200", Kind::AtLeastOne},
        {"shear_amplitude", "0.08", Kind::Real},
        {"shear_width", "0.7", Kind::Positive},
        {"shear_offset", "0", Kind::Real},
        {"steps_per_delay", "20", Kind::AtLeastOne},
        {"snapshots_per_delay", "10", Kind::AtLeastOne},
        {"tolerance", "1e-7", Kind::Positive},
        {"mass", "1", Kind::Positive},
        {"hbar", "1", Kind::Positive},
    };
}

Schema weak_velocity_schema() {
    Schema s = weak_common_schema();
    const Schema extra = {
        {"x_lo", "-20", Kind::Real},
        {"x_hi", "20", Kind::Real},
        {"nx", "256", Kind::GridCount},
        {"y_lo", "-40", Kind::Real},
        {"y_hi", "40", Kind::Real},
        {"ny", "256", Kind::GridCount},
        {"packet_offset", "2.5", Kind::Positive},
        {"packet_width", "1", Kind::Positive},
        {"t_mid", "2", Kind::Real},
        {"probe_lo", "-10", Kind::Real},
        {"probe_hi", "10", Kind::Real},
        {"density_floor", "1e-4", Kind::Positive},
        {"mode", "analytic", Kind::Choice, {"analytic", "monte-carlo", "both"}},
        {"law", "standard", Kind::Choice, kLaws},
        {"nonlinearity_threshold", "0.05", Kind::Positive},
    };
    s.insert(s.end(), extra.begin(), extra.end());
    return s;
}

Schema cor_schema() {
    Schema s = weak_common_schema();
    for (auto &k : s)
        if (std::string(k.name) == "pointer_sigma")
            k.value = "1";
    const Schema extra = {
        {"x_lo", "-16", Kind::Real},
        {"x_hi", "16", Kind::Real},
        {"nx", "256", Kind::GridCount},
        {"y_lo", "-24", Kind::Real},
        {"y_hi", "24", Kind::Real},
        {"ny", "256", Kind::GridCount},
        {"packet_center", "0", Kind::Real},
        {"packet_width", "1", Kind::Positive},
        {"packet_k", "1", Kind::Real},
        {"probe_lo", "-6", Kind::Real},
        {"probe_hi", "6", Kind::Real},
        {"laws", "standard,modified", Kind::WordList, {"standard", "modified", "born-resampling"}},
        {"ladder_degree", "2", Kind::AtLeastOne},
    };
    s.insert(s.end(), extra.begin(), extra.end());
    return s;
}

Schema three_box_schema() { return {{"sigmas", "5,10,20,40", Kind::RealList}}; }

Schema surreal_schema() {
    return {
        {"mode", "spin-only", Kind::Choice, {"spin-only", "configurational"}},
        {"n", "10000", Kind::Count},
        {"seed", "1", Kind::Seed},
        {"x_lo", "-48", Kind::Real},
        {"x_hi", "48", Kind::Real},
        {"nx", "2048", Kind::GridCount},
        {"offset", "8", Kind::Positive},
        {"k", "4", Kind::Positive},
        {"width", "1", Kind::Positive},
        {"probability_l", "0.5", Kind::Positive},
        {"sites", "10", Kind::Count},
        {"site_spacing", "0.5", Kind::Positive},
        {"t_final", "6", Kind::Positive},
        {"snapshot_dt", "0.05", Kind::Positive},
        {"dt", "0.01", Kind::Positive},
        {"tolerance", "1e-7", Kind::Positive},
        {"mass", "1", Kind::Positive},
        {"hbar", "1", Kind::Positive},
        {"export_trajectories", "100", Kind::Count},
        {"export_stride", "5", Kind::AtLeastOne},
    };
}

const Schema &schema(const std::string &experiment) {
    static const std::map<std::string, Schema> all = {
        {"double-slit", double_slit_schema()}, {"equivariance", equivariance_schema()},
        {"weak-velocity", weak_velocity_schema()}, {"cor-test", cor_schema()},
        {"three-box", three_box_schema()},       {"surreal", surreal_schema()},
    };
    const auto it = all.find(experiment);
    if (it == all.end())
        raise(ErrorKind::ConfigInvalid, "unknown experiment '" + experiment + "'");
    return it->second;
}

const KeySpec &spec_of(const std::string &experiment, const std::string &key) {
    for (const auto &k : schema(experiment))
        if (key == k.name)
            return k;
    raise(ErrorKind::ConfigInvalid, "unknown key '" + key + "' for experiment '" + experiment + "'");
}

std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string &s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        out.push_back(trim(item));
    return out;
}

[[noreturn]] void bad_value(const std::string &key, const std::string &value, const std::string &why) {
    raise(ErrorKind::ConfigInvalid, "key '" + key + "': " + why + ", got '" + value + "'");
}

double parse_real(const std::string &key, const std::string &value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size() || !std::isfinite(v))
            bad_value(key, value, "expected a finite number");
        return v;
    } catch (const std::logic_error &) {
        bad_value(key, value, "expected a number");
    }
}

std::uint64_t parse_unsigned(const std::string &key, const std::string &value) {
    if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos)
        bad_value(key, value, "expected a non-negative integer");
    try {
        return std::stoull(value);
    } catch (const std::logic_error &) {
        bad_value(key, value, "integer out of range");
    }
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void write_text(const fs::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        raise(ErrorKind::Io, "cannot open " + path.string());
    out << text;
}

void write_json(const fs::path &path, const json &j) { write_text(path, j.dump(2) + "\n"); }

std::vector<std::vector<std::string>> read_csv(const fs::path &path) {
    std::ifstream in(path);
    if (!in)
        raise(ErrorKind::IncompatibleRuns, "missing " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line))
        if (!line.empty())
            rows.push_back(split(line, ','));
    return rows;
}

// Builders from config ------------------------------------------------------

DoubleSlitConfig double_slit_from(const ExperimentConfig &c) {
    DoubleSlitConfig d;
    d.x_axis = {c.number("x_lo"), c.number("x_hi"), static_cast<int>(c.integer("nx"))};
    d.y_axis = {c.number("y_lo"), c.number("y_hi"), static_cast<int>(c.integer("ny"))};
    d.slit_separation = c.number("slit_separation");
    d.packet_width_x = c.number("packet_width_x");
    d.packet_width_y = c.number("packet_width_y");
    d.start_y = c.number("start_y");
    d.longitudinal_k = c.number("k");
    d.screen_y = c.number("screen_y");
    d.t_final = c.number("t_final");
    d.snapshot_dt = c.number("snapshot_dt");
    d.integration.dt = c.number("dt");
    d.integration.tolerance = c.number("tolerance");
    d.seed = c.unsigned_integer("seed");
    d.mass = c.number("mass");
    d.hbar = c.number("hbar");
    if (c.values().count("n"))
        d.n = static_cast<std::size_t>(c.unsigned_integer("n"));
    return d;
}

DynamicsLaw double_slit_law(const ExperimentConfig &c, const std::string &name, const Grid &grid) {
    if (name == "modified") {
        const double spacing = std::min(grid.x().spacing(), grid.y().spacing());
        return make_modified(rotational_field(c.number("j_amplitude"),
                                              Position(c.number("j_center_x"), c.number("j_center_y")),
                                              c.number("j_exclusion_spacings") * spacing),
                             grid);
    }
    if (name == "born-resampling")
        return make_born_resampling(c.number("resample_dt"));
    if (name == "nelson") {
        const std::string &d = c.text("diffusivity");
        return make_nelson(d == "auto" ? c.number("hbar") / (2 * c.number("mass")) : c.number("diffusivity"));
    }
    return StandardLaw{};
}

DynamicsLaw compound_law(const ExperimentConfig &c, const std::string &name, const Grid &compound) {
    if (name == "modified")
        return make_modified(diagonal_shear(c.number("shear_amplitude"), c.number("shear_width"),
                                            c.number("shear_offset")),
                             compound);
    if (name == "born-resampling")
        return make_born_resampling(1.0); // resampling only touches the endpoints here
    if (name == "nelson")
        return make_nelson(c.number("hbar") / (2 * c.number("mass")));
    return StandardLaw{};
}

MonteCarloOptions mc_options(const ExperimentConfig &c) {
    MonteCarloOptions o;
    o.n = static_cast<std::size_t>(c.unsigned_integer("n"));
    o.seed = c.unsigned_integer("seed");
    o.sampling = c.text("sampling") == "forward" ? SamplingMode::Forward : SamplingMode::Conditional;
    o.min_population = static_cast<std::size_t>(c.unsigned_integer("min_population"));
    o.bootstrap_resamples = static_cast<int>(c.integer("bootstrap"));
    o.steps_per_delay = static_cast<int>(c.integer("steps_per_delay"));
    o.snapshots_per_delay = static_cast<int>(c.integer("snapshots_per_delay"));
    o.tolerance = c.number("tolerance");
    return o;
}

std::string tau_tag(double tau) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", tau);
    return buf;
}

void export_trajectories(const Ensemble &ensemble, std::size_t limit, int stride, bool two_d,
                         const fs::path &path) {
    std::FILE *f = std::fopen(path.string().c_str(), "w");
    if (!f)
        raise(ErrorKind::Io, "cannot open " + path.string());
    std::fputs(two_d ? "id,t,x,y\n" : "id,t,x\n", f);
    const std::size_t count = std::min(limit, ensemble.trajectories.size());
    for (std::size_t i = 0; i < count; ++i) {
        const Trajectory &tr = ensemble.trajectories[i];
        const std::size_t id = ensemble.member_index[i];
        for (std::size_t s = 0; s < tr.times.size(); ++s) {
            if (s % static_cast<std::size_t>(stride) != 0 && s + 1 != tr.times.size())
                continue;
            if (two_d)
                std::fprintf(f, "%zu,%.10g,%.12g,%.12g\n", id, tr.times[s], tr.positions[s].x(),
                             tr.positions[s].y());
            else
                std::fprintf(f, "%zu,%.10g,%.12g\n", id, tr.times[s], tr.positions[s].x());
        }
    }
    std::fclose(f);
}

json failure_summary(const std::vector<TrajectoryFailure> &failures) {
    std::map<std::string, std::size_t> kinds;
    for (const auto &f : failures)
        ++kinds[f.kind];
    json j = json::object();
    for (const auto &[k, v] : kinds)
        j[k] = v;
    return j;
}

// Plot scripts (matplotlib); advisory only -----------------------------------

const char *kPlotTrajectories = R"(# Trajectory fan and screen histogram.
import csv
import collections
import matplotlib.pyplot as plt

paths = collections.defaultdict(list)
with open("trajectories.csv") as f:
    for row in csv.DictReader(f):
        paths[row["id"]].append((float(row["x"]), float(row["y"])))
fig, (ax, hx) = plt.subplots(1, 2, figsize=(11, 5))
for pts in paths.values():
    xs, ys = zip(*pts)
    ax.plot(xs, ys, lw=0.4, color="k")
ax.set_xlabel("x")
ax.set_ylabel("y")
with open("screen.csv") as f:
    xs = [float(r["x_at_screen_time"]) for r in csv.DictReader(f)]
hx.hist(xs, bins=120, density=True)
hx.set_xlabel("x at screen time")
fig.tight_layout()
fig.savefig("trajectories.png", dpi=150)
)";

const char *kPlotVelocity = R"(# Operational (weak) velocity against the guidance velocity.
import csv
import glob
import matplotlib.pyplot as plt

for name in sorted(glob.glob("velocity_*.csv")):
    with open(name) as f:
        rows = [r for r in csv.DictReader(f) if r["v_weak"] not in ("", "nan")]
    x = [float(r["x"]) for r in rows]
    plt.errorbar(x, [float(r["v_weak"]) for r in rows],
                 yerr=[float(r["se"]) if r["se"] not in ("", "nan") else 0 for r in rows],
                 fmt="o", ms=3, label=name)
    plt.plot(x, [float(r["v_standard_guidance"]) for r in rows], "-", lw=0.8)
plt.xlabel("x")
plt.ylabel("velocity")
plt.legend()
plt.savefig("velocity.png", dpi=150)
)";

const char *kPlotCor = R"(# Delta = weak value - mean actual x(0) per post-selection bin.
import csv
import glob
import matplotlib.pyplot as plt

for name in sorted(glob.glob("cor_*.csv")):
    with open(name) as f:
        rows = [r for r in csv.DictReader(f) if r["delta"] not in ("", "nan")]
    plt.errorbar([float(r["bin_center"]) for r in rows], [float(r["delta"]) for r in rows],
                 yerr=[3 * float(r["delta_se"]) for r in rows], fmt="o", ms=3, capsize=2,
                 label=name[4:-4])
plt.axhline(0, color="k", lw=0.5)
plt.xlabel("X_tau bin")
plt.ylabel("delta [3 SE bars]")
plt.legend(fontsize=7)
plt.savefig("cor.png", dpi=150)
)";

const char *kPlotSurreal = R"(# Surreal trajectories coloured by recorded arm.
import csv
import collections
import matplotlib.pyplot as plt

arm = {}
with open("outcomes.csv") as f:
    for r in csv.DictReader(f):
        arm[r["id"]] = r["recorded_arm"]
paths = collections.defaultdict(list)
with open("trajectories.csv") as f:
    for r in csv.DictReader(f):
        paths[r["id"]].append((float(r["t"]), float(r["x"])))
for i, pts in paths.items():
    t, x = zip(*pts)
    plt.plot(x, t, lw=0.5, color="tab:blue" if arm.get(i) == "L" else "tab:red")
plt.xlabel("x")
plt.ylabel("t")
plt.title("blue: L-track record, red: R-track record")
plt.savefig("surreal.png", dpi=150)
)";

const char *kPlotThreeBox = R"(# Finite-sigma pointer shifts approaching the weak values.
import csv
import matplotlib.pyplot as plt

with open("weak_values.csv") as f:
    reader = csv.reader(f)
    header = next(reader)
    sigmas = [float(h.split("_")[-1]) for h in header[3:]]
    for row in reader:
        plt.plot(sigmas, [float(v) for v in row[3:]], "o-", label=row[0])
        plt.axhline(float(row[1]), ls=":", color="gray")
plt.xscale("log")
plt.xlabel("pointer sigma")
plt.ylabel("mean pointer shift")
plt.legend()
plt.savefig("three_box.png", dpi=150)
)";

// Experiments ----------------------------------------------------------------

RunArtifacts run_double_slit_experiment(const ExperimentConfig &c, const fs::path &dir) {
    const DoubleSlitConfig cfg = double_slit_from(c);
    const std::string name = c.text("law");
    const auto guidance = double_slit_guidance(cfg, name == "nelson");
    const DynamicsLaw law = double_slit_law(c, name, guidance->grid());
    const DoubleSlitRun run = run_double_slit(law, cfg, guidance);

    RunArtifacts art;
    export_trajectories(run.ensemble, static_cast<std::size_t>(c.unsigned_integer("export_trajectories")),
                        static_cast<int>(c.integer("export_stride")), true, dir / "trajectories.csv");
    std::FILE *f = std::fopen((dir / "screen.csv").string().c_str(), "w");
    if (!f)
        raise(ErrorKind::Io, "cannot write screen.csv");
    std::fputs("id,x_at_screen_time,y_at_screen_time,crossed,crossing_x,crossing_t\n", f);
    std::vector<double> xs;
    std::size_t crossed = 0;
    for (const auto &r : run.screen) {
        std::fprintf(f, "%zu,%.12g,%.12g,%d,%.12g,%.10g\n", r.id, r.at_screen_time.x(),
                     r.at_screen_time.y(), r.crossed ? 1 : 0, r.crossing_x, r.crossing_t);
        xs.push_back(r.at_screen_time.x());
        crossed += r.crossed ? 1 : 0;
    }
    std::fclose(f);
    write_text(dir / "plot_trajectories.py", kPlotTrajectories);
    art.files = {"trajectories.csv", "screen.csv", "summary.json", "plot_trajectories.py"};

    json s;
    s["law"] = name;
    s["seed"] = cfg.seed;
    s["n"] = cfg.n;
    s["completed"] = run.ensemble.trajectories.size();
    s["failures"] = failure_summary(run.ensemble.failures);
    s["screen_y"] = cfg.screen_y;
    s["screen_time"] = run.screen_time;
    s["crossed_by_final_time"] = crossed;
    if (xs.size() >= kMinKsSample) {
        const auto idx = guidance->snapshot_index(run.screen_time);
        if (idx) {
            const KsResult ks = ks_against_density(
                xs, marginal(guidance->grid(), guidance->snapshots()[*idx].density, 0));
            s["screen_ks_vs_density"] = {{"statistic", ks.statistic}, {"p_value", ks.p_value}};
        }
        s["screen_mean_x"] = mean(xs);
    }
    art.summary = s;
    return art;
}

RunArtifacts run_equivariance_experiment(const ExperimentConfig &c, const fs::path &dir) {
    DoubleSlitConfig cfg = double_slit_from(c);
    const auto laws = c.words("laws");
    const auto times = c.numbers("check_times");
    const double alpha = c.number("alpha");
    std::shared_ptr<const GuidanceSequence> plain, osmotic;
    std::FILE *f = std::fopen((dir / "equivariance.csv").string().c_str(), "w");
    if (!f)
        raise(ErrorKind::Io, "cannot write equivariance.csv");
    std::fputs("law,t,axis,n,statistic,p_value,pass\n", f);
    json s;
    s["alpha"] = alpha;
    s["laws"] = json::object();
    for (const auto &name : laws) {
        auto &g = name == "nelson" ? osmotic : plain;
        if (!g)
            g = double_slit_guidance(cfg, name == "nelson");
        const DynamicsLaw law = double_slit_law(c, name, g->grid());
        const DoubleSlitRun run = run_double_slit(law, cfg, g);
        bool all = true;
        for (double t : times) {
            const auto idx = g->snapshot_index(t);
            if (!idx)
                raise(ErrorKind::ConfigInvalid, "key 'check_times': " + fmt(t) + " is not a snapshot time");
            for (int axis = 0; axis < 2; ++axis) {
                std::vector<double> v;
                for (const auto &tr : run.ensemble.trajectories) {
                    const auto p = tr.position_at(t);
                    if (!p)
                        raise(ErrorKind::ConfigInvalid, "key 'check_times': " + fmt(t) + " is not a step time");
                    v.push_back((*p)[axis]);
                }
                const KsResult ks = ks_against_density(v, marginal(g->grid(), g->snapshots()[*idx].density, axis));
                const bool pass = ks.p_value > alpha;
                all = all && pass;
                std::fprintf(f, "%s,%.10g,%s,%zu,%.10g,%.10g,%d\n", name.c_str(), t, axis == 0 ? "x" : "y",
                             v.size(), ks.statistic, ks.p_value, pass ? 1 : 0);
            }
        }
        s["laws"][name] = {{"completed", run.ensemble.trajectories.size()},
                           {"failures", failure_summary(run.ensemble.failures)},
                           {"marginals_pass", all}};
    }
    std::fclose(f);
    RunArtifacts art;
    art.files = {"equivariance.csv", "summary.json"};
    art.summary = s;
    return art;
}

WaveFunction weak_velocity_system(const ExperimentConfig &c) {
    const Grid g = Grid::line({c.number("x_lo"), c.number("x_hi"), static_cast<int>(c.integer("nx"))});
    const double d = c.number("packet_offset"), w = c.number("packet_width");
    const double m = c.number("mass"), h = c.number("hbar");
    const WaveFunction a = make_gaussian_packet(g, -d, w, 0.0, m, h);
    const WaveFunction b = make_gaussian_packet(g, d, w, 0.0, m, h);
    const double r = 1.0 / std::sqrt(2.0);
    return free_evolve_axis(superpose(a, b, r, r), 0, c.number("t_mid"));
}

PointerModel pointer_from(const ExperimentConfig &c) {
    return {c.number("pointer_sigma"), {c.number("y_lo"), c.number("y_hi"), static_cast<int>(c.integer("ny"))}};
}

RunArtifacts run_weak_velocity_experiment(const ExperimentConfig &c, const fs::path &dir) {
    const WaveFunction psi = weak_velocity_system(c);
    const PointerModel pointer = pointer_from(c);
    const Axis &axis = psi.grid().x();
    const auto edges = node_centred_edges(axis, c.number("probe_lo"), c.number("probe_hi"),
                                          static_cast<double>(c.integer("bin_spacings")) * axis.spacing());
    const auto taus = c.numbers("taus");
    const double threshold = c.number("nonlinearity_threshold");
    const VectorField pg = phase_gradient(psi);
    const Eigen::VectorXd rho = psi.density();
    const double floor = c.number("density_floor") * rho.maxCoeff();
    const double scale = psi.hbar() / psi.mass();

    RunArtifacts art;
    json s;
    auto evaluate = [&](const OperationalVelocityField &field, const std::string &tag) {
        std::vector<double> ref;
        double worst = 0.0;
        std::size_t probes = 0, within = 0;
        for (const auto &p : field.probes) {
            const int i = static_cast<int>(std::lround((p.x - axis.lo) / axis.spacing()));
            const double v = scale * pg.values(i, 0);
            ref.push_back(v);
            if (!p.defined || rho[i] <= floor)
                continue;
            ++probes;
            const double err = std::abs(p.velocity - v);
            worst = std::max(worst, err);
            within += err <= 3.0 * p.se ? 1 : 0;
        }
        const std::string file = "velocity_" + tag + ".csv";
        write_velocity_csv(field, ref, (dir / file).string());
        art.files.push_back(file);
        s[tag] = {{"probes_above_floor", probes}, {"max_abs_error", worst}};
        if (tag == "monte_carlo")
            s[tag]["within_3se"] = within;
    };

    const std::string mode = c.text("mode");
    if (mode == "analytic" || mode == "both") {
        std::vector<WeakRun> runs;
        for (double tau : taus) {
            runs.push_back(weak_run_analytic(psi, pointer, tau, edges));
            const std::string file = "weak_analytic_tau" + tau_tag(tau) + ".csv";
            write_weak_run_csv(runs.back(), nullptr, (dir / file).string());
            art.files.push_back(file);
        }
        evaluate(operational_velocity(runs, threshold), "analytic");
    }
    if (mode == "monte-carlo" || mode == "both") {
        const Grid compound = Grid::plane(axis, pointer.y_axis);
        const DynamicsLaw law = compound_law(c, c.text("law"), compound);
        std::vector<WeakRun> runs;
        std::size_t failures = 0;
        for (double tau : taus) {
            const WeakMonteCarlo mc = weak_run_monte_carlo(psi, pointer, law, tau, edges, mc_options(c));
            failures += mc.ensemble.failures.size();
            const std::string file = "weak_mc_tau" + tau_tag(tau) + ".csv";
            write_weak_run_csv(mc.run, nullptr, (dir / file).string());
            art.files.push_back(file);
            runs.push_back(mc.run);
        }
        evaluate(operational_velocity(runs, threshold), "monte_carlo");
        s["monte_carlo"]["law"] = c.text("law");
        s["monte_carlo"]["failures"] = failures;
    }
    write_text(dir / "plot_velocity.py", kPlotVelocity);
    art.files.push_back("plot_velocity.py");
    art.files.push_back("summary.json");
    art.summary = s;
    return art;
}

RunArtifacts run_cor_experiment(const ExperimentConfig &c, const fs::path &dir) {
    const Grid g = Grid::line({c.number("x_lo"), c.number("x_hi"), static_cast<int>(c.integer("nx"))});
    const WaveFunction psi = make_gaussian_packet(g, c.number("packet_center"), c.number("packet_width"),
                                                  c.number("packet_k"), c.number("mass"), c.number("hbar"));
    const PointerModel pointer = pointer_from(c);
    const auto edges = node_centred_edges(g.x(), c.number("probe_lo"), c.number("probe_hi"),
                                          static_cast<double>(c.integer("bin_spacings")) * g.x().spacing());
    const Grid compound = Grid::plane(g.x(), pointer.y_axis);
    const auto taus = c.numbers("taus");
    const int degree = static_cast<int>(c.integer("ladder_degree"));
    if (degree > 2)
        raise(ErrorKind::ConfigInvalid, "key 'ladder_degree': must be 1 or 2");

    RunArtifacts art;
    json s;
    std::FILE *lf = std::fopen((dir / "cor_ladder.csv").string().c_str(), "w");
    if (!lf)
        raise(ErrorKind::Io, "cannot write cor_ladder.csv");
    std::fputs("law,bin_center,intercept,intercept_se,consistent_with_zero\n", lf);
    for (const auto &name : c.words("laws")) {
        const DynamicsLaw law = compound_law(c, name, compound);
        std::vector<CorReport> reports;
        json per_tau = json::array();
        for (double tau : taus) {
            const WeakMonteCarlo mc = weak_run_monte_carlo(psi, pointer, law, tau, edges, mc_options(c));
            const CorReport rep = cor_test(mc.run, mc.ensemble, static_cast<int>(c.integer("bootstrap")));
            const std::string file = "cor_" + name + "_tau" + tau_tag(tau) + ".csv";
            write_weak_run_csv(mc.run, &rep, (dir / file).string());
            art.files.push_back(file);
            per_tau.push_back({{"tau", tau},
                               {"populated_bins", rep.bins.size()},
                               {"significant_fraction", rep.significant_fraction()},
                               {"failures", failure_summary(mc.ensemble.failures)}});
            reports.push_back(rep);
        }
        std::size_t fitted = 0, zero = 0;
        for (const auto &bin : reports.front().bins) {
            std::vector<double> t, d, e;
            for (std::size_t k = 0; k < reports.size(); ++k)
                for (const auto &b : reports[k].bins)
                    if (b.center == bin.center) {
                        t.push_back(reports[k].tau);
                        d.push_back(b.delta);
                        e.push_back(b.delta_se);
                    }
            if (t.size() != reports.size() || static_cast<int>(t.size()) <= degree)
                continue;
            const LadderFit fit = fit_ladder(t, d, e, degree);
            const bool ok = std::abs(fit.intercept) <= 3.0 * fit.intercept_se;
            ++fitted;
            zero += ok ? 1 : 0;
            std::fprintf(lf, "%s,%.10g,%.10g,%.6g,%d\n", name.c_str(), bin.center, fit.intercept,
                         fit.intercept_se, ok ? 1 : 0);
        }
        s[name] = {{"per_tau", per_tau}, {"ladder_bins", fitted}, {"ladder_intercept_zero", zero}};
    }
    std::fclose(lf);
    write_text(dir / "plot_cor.py", kPlotCor);
    art.files.insert(art.files.end(), {"cor_ladder.csv", "plot_cor.py", "summary.json"});
    art.summary = s;
    return art;
}

RunArtifacts run_three_box_experiment(const ExperimentConfig &c, const fs::path &dir) {
    const ThreeBox tb = three_box();
    const auto rows = weak_value_table(tb.projectors, tb.pre, tb.post, c.numbers("sigmas"));
    write_weak_value_csv(rows, (dir / "weak_values.csv").string());
    write_text(dir / "plot_three_box.py", kPlotThreeBox);
    json s = json::array();
    for (const auto &r : rows) {
        json shifts = json::array();
        for (const auto &p : r.shifts)
            shifts.push_back({{"sigma", p.sigma}, {"shift", p.shift}, {"weak_regime", p.weak_regime}});
        s.push_back({{"operator", r.label}, {"re", r.value.real()}, {"im", r.value.imag()}, {"shifts", shifts}});
    }
    RunArtifacts art;
    art.files = {"weak_values.csv", "plot_three_box.py", "summary.json"};
    art.summary = {{"weak_values", s}};
    return art;
}

RunArtifacts run_surreal_experiment(const ExperimentConfig &c, const fs::path &dir) {
    SurrealConfig cfg;
    cfg.axis = {c.number("x_lo"), c.number("x_hi"), static_cast<int>(c.integer("nx"))};
    cfg.offset = c.number("offset");
    cfg.wavenumber = c.number("k");
    cfg.width = c.number("width");
    const double p = c.number("probability_l");
    if (!(p < 1.0))
        raise(ErrorKind::ConfigInvalid, "key 'probability_l': must lie in (0, 1)");
    cfg.weight_l = std::sqrt(p);
    cfg.weight_r = std::sqrt(1.0 - p);
    const auto sites = c.unsigned_integer("sites");
    for (std::uint64_t i = 0; i < sites; ++i) {
        const double y = -(cfg.offset / 2 + static_cast<double>(i) * c.number("site_spacing"));
        cfg.sites_l.push_back(y);
        cfg.sites_r.push_back(-y);
    }
    cfg.mode = c.text("mode") == "configurational" ? RecordMode::Configurational : RecordMode::SpinOnly;
    cfg.t_final = c.number("t_final");
    cfg.snapshot_dt = c.number("snapshot_dt");
    cfg.integration.dt = c.number("dt");
    cfg.integration.tolerance = c.number("tolerance");
    cfg.n = static_cast<std::size_t>(c.unsigned_integer("n"));
    cfg.seed = c.unsigned_integer("seed");
    cfg.mass = c.number("mass");
    cfg.hbar = c.number("hbar");

    const SurrealRun run = run_surreal(cfg);
    write_surreal_csv(run, (dir / "outcomes.csv").string());
    Ensemble e;
    for (const auto &o : run.outcomes) {
        e.trajectories.push_back(o.trajectory);
        e.member_index.push_back(o.id);
    }
    export_trajectories(e, static_cast<std::size_t>(c.unsigned_integer("export_trajectories")),
                        static_cast<int>(c.integer("export_stride")), false, dir / "trajectories.csv");
    write_text(dir / "plot_surreal.py", kPlotSurreal);
    json s;
    s["mode"] = c.text("mode");
    s["checkpoint_time"] = run.checkpoint;
    s["max_axis_velocity"] = run.max_axis_velocity;
    s["failures"] = failure_summary(run.failures);
    if (!run.outcomes.empty()) {
        const FlipStatistics st = flip_statistics(run.outcomes);
        std::size_t crossed = 0;
        for (const auto &o : run.outcomes)
            crossed += o.crossed_axis ? 1 : 0;
        s["n"] = st.n;
        s["l_track_fraction"] = st.fraction_l;
        s["l_track_interval_3sd"] = {st.lower, st.upper};
        s["degenerate"] = st.degenerate;
        s["recorded_equals_traversed"] = st.agreement;
        s["crossed_axis_fraction"] = static_cast<double>(crossed) / static_cast<double>(st.n);
    }
    RunArtifacts art;
    art.files = {"outcomes.csv", "trajectories.csv", "plot_surreal.py", "summary.json"};
    art.summary = s;
    return art;
}

} // namespace

const std::vector<std::string> &experiment_names() {
    static const std::vector<std::string> names = {"double-slit", "weak-velocity", "cor-test",
                                                   "three-box",   "surreal",       "equivariance"};
    return names;
}

ExperimentConfig::ExperimentConfig(const std::string &experiment) : experiment_(experiment) {
    for (const auto &k : schema(experiment))
        values_[k.name] = k.value;
}

void ExperimentConfig::set(const std::string &raw_key, const std::string &value) {
    std::string key = trim(raw_key);
    std::replace(key.begin(), key.end(), '-', '_');
    (void)spec_of(experiment_, key);
    values_[key] = trim(value);
}

void ExperimentConfig::merge_text(const std::string &text, const std::string &origin) {
    std::stringstream ss(text);
    std::string line;
    int number = 0;
    while (std::getline(ss, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            raise(ErrorKind::ConfigInvalid,
                  origin + ":" + std::to_string(number) + ": expected 'key = value'");
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        set(line.substr(0, eq), value);
    }
}

double ExperimentConfig::number(const std::string &key) const { return parse_real(key, text(key)); }

long ExperimentConfig::integer(const std::string &key) const {
    return static_cast<long>(parse_unsigned(key, text(key)));
}

std::uint64_t ExperimentConfig::unsigned_integer(const std::string &key) const {
    return parse_unsigned(key, text(key));
}

const std::string &ExperimentConfig::text(const std::string &key) const {
    const auto it = values_.find(key);
    if (it == values_.end())
        raise(ErrorKind::ConfigInvalid, "key '" + key + "' is not defined for '" + experiment_ + "'");
    return it->second;
}

std::vector<double> ExperimentConfig::numbers(const std::string &key) const {
    std::vector<double> out;
    for (const auto &item : split(text(key), ','))
        out.push_back(parse_real(key, item));
    return out;
}

std::vector<std::string> ExperimentConfig::words(const std::string &key) const {
    return split(text(key), ',');
}

void ExperimentConfig::validate() const {
    for (const auto &k : schema(experiment_)) {
        const std::string &v = text(k.name);
        switch (k.kind) {
        case Kind::Real:
            (void)parse_real(k.name, v);
            break;
        case Kind::Positive:
            if (!(parse_real(k.name, v) > 0.0))
                bad_value(k.name, v, "expected a positive number");
            break;
        case Kind::RealOrAuto:
            if (v != "auto" && !(parse_real(k.name, v) > 0.0))
                bad_value(k.name, v, "expected 'auto' or a positive number");
            break;
        case Kind::Count:
        case Kind::Seed:
            (void)parse_unsigned(k.name, v);
            break;
        case Kind::AtLeastOne:
            if (parse_unsigned(k.name, v) < 1)
                bad_value(k.name, v, "expected a positive integer");
            break;
        case Kind::GridCount: {
            const std::uint64_t n = parse_unsigned(k.name, v);
            if (n < static_cast<std::uint64_t>(kMinAxisPoints) || !std::has_single_bit(n))
                bad_value(k.name, v, "expected a power of two >= 64");
            break;
        }
        case Kind::Choice:
            if (std::find(k.choices.begin(), k.choices.end(), v) == k.choices.end())
                bad_value(k.name, v, "unknown choice");
            break;
        case Kind::RealList:
            if (v.empty() || numbers(k.name).empty())
                bad_value(k.name, v, "expected a comma-separated list of numbers");
            break;
        case Kind::WordList:
            if (v.empty())
                bad_value(k.name, v, "expected a comma-separated list");
            for (const auto &w : words(k.name))
                if (std::find(k.choices.begin(), k.choices.end(), w) == k.choices.end())
                    bad_value(k.name, w, "unknown choice");
            break;
        }
    }
    for (const char *a : {"x", "y"}) {
        const std::string lo = std::string(a) + "_lo", hi = std::string(a) + "_hi";
        if (values_.count(lo) && values_.count(hi) && !(number(lo) < number(hi)))
            bad_value(lo, text(lo), "must be below " + hi);
    }
}

ExperimentConfig load_manifest(const fs::path &manifest) {
    std::ifstream in(manifest);
    if (!in)
        raise(ErrorKind::ConfigInvalid, "cannot read manifest " + manifest.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception &e) {
        raise(ErrorKind::ConfigInvalid, "malformed manifest: " + std::string(e.what()));
    }
    if (!j.contains("schema_version") || j["schema_version"] != kManifestSchemaVersion)
        raise(ErrorKind::ConfigInvalid, "unsupported manifest schema version");
    if (!j.contains("experiment") || !j.contains("config"))
        raise(ErrorKind::ConfigInvalid, "manifest lacks experiment or config");
    ExperimentConfig config(j["experiment"].get<std::string>());
    for (const auto &[k, v] : j["config"].items())
        config.set(k, v.get<std::string>());
    return config;
}

fs::path default_output_dir(const std::string &experiment) {
    const char *root = std::getenv("PILOTWAVE_OUTPUT_ROOT");
    return fs::path(root && *root ? root : "pilotwave-runs") / experiment;
}

RunArtifacts run_experiment(const ExperimentConfig &config, const fs::path &out_dir) {
    config.validate();
    fs::create_directories(out_dir);
    const std::string &e = config.experiment();
    RunArtifacts art;
    if (e == "double-slit")
        art = run_double_slit_experiment(config, out_dir);
    else if (e == "equivariance")
        art = run_equivariance_experiment(config, out_dir);
    else if (e == "weak-velocity")
        art = run_weak_velocity_experiment(config, out_dir);
    else if (e == "cor-test")
        art = run_cor_experiment(config, out_dir);
    else if (e == "three-box")
        art = run_three_box_experiment(config, out_dir);
    else
        art = run_surreal_experiment(config, out_dir);
    write_json(out_dir / "summary.json", art.summary);

    json manifest;
    manifest["schema_version"] = kManifestSchemaVersion;
    manifest["tool"] = "pilotwave";
    manifest["version"] = PILOTWAVE_VERSION;
    manifest["experiment"] = e;
    manifest["config"] = config.values();
    json seeds = json::object();
    if (config.values().count("seed"))
        seeds["seed"] = config.text("seed");
    manifest["seeds"] = seeds;
    manifest["outputs"] = art.files;
    write_json(out_dir / "manifest.json", manifest);
    art.files.push_back("manifest.json");
    return art;
}

json compare_runs(const fs::path &a, const fs::path &b, const std::string &metric) {
    auto experiment_of = [](const fs::path &dir) {
        std::ifstream in(dir / "manifest.json");
        if (!in)
            raise(ErrorKind::IncompatibleRuns, "no manifest.json in " + dir.string());
        json j;
        try {
            in >> j;
        } catch (const json::exception &) {
            raise(ErrorKind::IncompatibleRuns, "malformed manifest in " + dir.string());
        }
        return j.value("experiment", std::string{});
    };
    const std::string ea = experiment_of(a), eb = experiment_of(b);
    if (ea != eb)
        raise(ErrorKind::IncompatibleRuns, "cannot compare '" + ea + "' with '" + eb + "'");
    json report;
    report["experiment"] = ea;
    report["a"] = a.string();
    report["b"] = b.string();

    if (ea == "double-slit") {
        if (metric != "auto" && metric != "ks")
            raise(ErrorKind::IncompatibleRuns, "double-slit runs compare with metric 'ks'");
        auto load = [](const fs::path &dir) {
            std::vector<double> xs;
            for (const auto &row : read_csv(dir / "screen.csv"))
                xs.push_back(std::stod(row.at(1)));
            return xs;
        };
        const auto xa = load(a), xb = load(b);
        if (xa.size() < kMinKsSample || xb.size() < kMinKsSample)
            raise(ErrorKind::SampleTooSmall, "screen samples are too small for a KS comparison");
        const KsResult ks = ks_two_sample(xa, xb);
        report["metric"] = "ks";
        report["statistic"] = ks.statistic;
        report["p_value"] = ks.p_value;
        report["verdict"] = ks.p_value > 0.01 ? "indistinguishable" : "distinguishable";
        return report;
    }
    if (ea == "cor-test" || ea == "weak-velocity") {
        if (metric != "auto" && metric != "delta")
            raise(ErrorKind::IncompatibleRuns, ea + " runs compare with metric 'delta'");
        // Pairs files present in both runs; value and SE columns per experiment.
        std::vector<std::string> files;
        for (const auto &entry : fs::directory_iterator(a)) {
            const std::string name = entry.path().filename().string();
            const bool wanted = ea == "cor-test" ? name.starts_with("cor_") && name != "cor_ladder.csv"
                                                 : name.starts_with("velocity_");
            if (wanted && name.ends_with(".csv") && fs::exists(b / name))
                files.push_back(name);
        }
        std::sort(files.begin(), files.end());
        if (files.empty())
            raise(ErrorKind::IncompatibleRuns, "no common result files");
        const std::size_t vcol = ea == "cor-test" ? 8 : 1, scol = ea == "cor-test" ? 9 : 2;
        std::size_t compared = 0, agree = 0;
        double largest = 0.0;
        for (const auto &name : files) {
            const auto ra = read_csv(a / name), rb = read_csv(b / name);
            if (ra.size() != rb.size())
                raise(ErrorKind::IncompatibleRuns, name + " has different binning");
            for (std::size_t i = 0; i < ra.size(); ++i) {
                if (ra[i].size() <= scol || rb[i].size() <= scol || ra[i][vcol].empty() || rb[i][vcol].empty())
                    continue;
                const double va = std::stod(ra[i][vcol]), vb = std::stod(rb[i][vcol]);
                const double sa = std::stod(ra[i][scol]), sb = std::stod(rb[i][scol]);
                if (!std::isfinite(va) || !std::isfinite(vb))
                    continue;
                const double diff = std::abs(va - vb);
                const double se = std::hypot(std::isfinite(sa) ? sa : 0.0, std::isfinite(sb) ? sb : 0.0);
                ++compared;
                agree += diff <= 3.0 * se ? 1 : 0;
                largest = std::max(largest, diff);
            }
        }
        report["metric"] = "delta";
        report["files"] = files;
        report["compared"] = compared;
        report["within_3se"] = agree;
        report["max_abs_difference"] = largest;
        report["verdict"] = compared > 0 && agree == compared ? "indistinguishable" : "distinguishable";
        return report;
    }
    raise(ErrorKind::IncompatibleRuns, "no comparison is defined for '" + ea + "' runs");
}

} // namespace pw
