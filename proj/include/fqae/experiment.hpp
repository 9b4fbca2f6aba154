// Copyright 2026 The fqae Authors.

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
 * @file experiment.hpp
 * JSON-configured experiment drivers behind the `fqae` command line tool:
 * single runs, spectrum climbing, parameter sweeps and assumption checks.
 *
 * Every command returns an exit code: 0 on success, 1 when a run fails
 * after starting (partial output is still written), 2 when the config is
 * rejected before anything runs.
 */
#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "fqae/error.hpp"
#include "fqae/feedback.hpp"
#include "fqae/models.hpp"
#include "fqae/pauli.hpp"
#include "fqae/spectrum.hpp"
#include "fqae/state.hpp"

namespace fqae::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

enum ExitCode : int { kExitOk = 0, kExitRuntime = 1, kExitConfig = 2 };

/// Command-line flags that override config fields.
struct Overrides {
    std::optional<std::uint64_t> shots;
    bool exact = false;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    std::optional<std::string> out;
    std::optional<std::size_t> count;
    std::optional<std::string> axis;
};

struct AlphaStrategy {
    enum class Kind { Bound, Fixed, Iterative };
    Kind kind = Kind::Bound;
    std::vector<double> values;
    double start = 0.0;
};

struct ExperimentConfig {
    json model;
    fs::path base_dir;
    std::string controls = "y_per_qubit";
    json initial_state = "plus";
    FeedbackConfig feedback;
    AlphaStrategy alpha;
    std::size_t target_index = 0;
    /// Reference eigenstates whose fidelity is traced; 0 picks min(dim, 4).
    std::size_t tracked = 0;
    std::size_t count = 1;
    std::vector<json> stages;
    json sweep;
    fs::path out = "out";
};

namespace detail {

template <class T>
T get_or(const json &j, const char *key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return fallback;
    }
    return j.at(key).get<T>();
}

inline Backend parse_backend(const std::string &name) {
    if (name == "exact") {
        return Backend::Exact;
    }
    if (name == "overlap_hadamard") {
        return Backend::OverlapHadamard;
    }
    if (name == "grad_fd") {
        return Backend::GradFd;
    }
    if (name == "grad_psr") {
        return Backend::GradPsr;
    }
    throw ConfigError("unknown backend '" + name + "'");
}

inline std::size_t model_qubits(const json &m) {
    const auto type = m.at("type").get<std::string>();
    if (type == "h2") {
        return 2;
    }
    if (type == "ising_small") {
        return 2;
    }
    if (type == "random_mfi") {
        return get_or<std::size_t>(m, "n", 12);
    }
    return m.at("n").get<std::size_t>();
}

/// Applies the run-level fields of `j` on top of `base`.
inline FeedbackConfig parse_feedback(const json &j, FeedbackConfig base,
                                     std::size_t channels) {
    if (j.contains("dt")) {
        base.dt = j.at("dt").get<double>();
    }
    if (j.contains("depth")) {
        const auto d = j.at("depth").get<long long>();
        if (d < 1 || d > 10'000'000) {
            throw ConfigError("depth must be in [1, 1e7]");
        }
        base.depth = static_cast<int>(d);
    }
    if (j.contains("gains")) {
        const auto &g = j.at("gains");
        base.gains = g.is_array() ? g.get<std::vector<double>>()
                                  : std::vector<double>(channels, g.get<double>());
    }
    if (j.contains("backend")) {
        base.backend = parse_backend(j.at("backend").get<std::string>());
    }
    if (j.contains("fd_epsilon")) {
        base.fd_epsilon = j.at("fd_epsilon").get<double>();
    }
    if (j.contains("psr_rule")) {
        const auto r = j.at("psr_rule").get<std::string>();
        if (r == "dt_aware") {
            base.psr_rule = PsrRule::DtAware;
        } else if (r == "paper_literal") {
            base.psr_rule = PsrRule::PaperLiteral;
        } else {
            throw ConfigError("psr_rule must be dt_aware or paper_literal");
        }
    }
    if (j.contains("initial_controls")) {
        base.initial_controls = j.at("initial_controls").get<std::vector<double>>();
    }
    if (j.contains("trotter_slices")) {
        base.trotter_slices = j.at("trotter_slices").get<int>();
    }
    if (j.contains("time_limit_s")) {
        base.time_limit_s = j.at("time_limit_s").get<double>();
    }
    if (j.contains("exact_drift")) {
        base.exact_drift = j.at("exact_drift").get<bool>();
    }
    if (j.contains("early_stop")) {
        const auto &e = j.at("early_stop");
        if (e.contains("control_threshold")) {
            base.early_stop.control_threshold =
                e.at("control_threshold").get<double>();
        }
        if (e.contains("lyapunov_delta")) {
            base.early_stop.lyapunov_delta = e.at("lyapunov_delta").get<double>();
        }
    }
    if (base.gains.empty()) {
        base.gains.assign(channels, 1.0);
    }
    return base;
}

inline fs::path resolve(const fs::path &base, const std::string &p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

} // namespace detail

/**
 * @brief Builds H0 from a model object.
 *
 * Types: ising (n, couplings n×n, fields), ising_small, random_ising (n,
 * seed, low, high), mfi (n, J, h, g), random_mfi (seed, n), h2 (R with
 * table, or coefficients h0..h5), pauli (n, terms).
 */
inline PauliSum build_model(const json &m, const fs::path &base_dir) {
    const auto type = m.at("type").get<std::string>();
    if (type == "ising") {
        IsingSpec s;
        s.n = m.at("n").get<std::size_t>();
        const auto rows = m.at("couplings").get<std::vector<std::vector<double>>>();
        if (rows.size() != s.n) {
            throw ConfigError("ising: couplings must be an n×n matrix");
        }
        for (const auto &r : rows) {
            if (r.size() != s.n) {
                throw ConfigError("ising: couplings must be an n×n matrix");
            }
            s.couplings.insert(s.couplings.end(), r.begin(), r.end());
        }
        s.fields = m.at("fields").get<std::vector<double>>();
        return build_ising(s);
    }
    if (type == "ising_small") {
        return build_ising(small_ising_spec());
    }
    if (type == "random_ising") {
        return build_ising(random_ising(m.at("n").get<std::size_t>(),
                                        m.at("seed").get<std::uint64_t>(),
                                        detail::get_or(m, "low", -2.0),
                                        detail::get_or(m, "high", 2.0)));
    }
    if (type == "mfi") {
        return build_mfi({m.at("n").get<std::size_t>(), m.at("J").get<double>(),
                          m.at("h").get<double>(), m.at("g").get<double>()});
    }
    if (type == "random_mfi") {
        return build_mfi(random_mfi(m.at("seed").get<std::uint64_t>(),
                                    detail::get_or<std::size_t>(m, "n", 12)));
    }
    if (type == "h2") {
        if (m.contains("coefficients")) {
            const auto c = m.at("coefficients").get<std::vector<double>>();
            if (c.size() != 6) {
                throw ConfigError("h2: coefficients must list h0..h5");
            }
            H2Spec s;
            s.R = detail::get_or(m, "R", 0.0);
            std::copy(c.begin(), c.end(), s.h.begin());
            return build_h2(s);
        }
        const auto table = H2Table::load(
            detail::resolve(base_dir, m.at("table").get<std::string>()).string());
        return build_h2(table.lookup(m.at("R").get<double>()));
    }
    if (type == "pauli") {
        return parse_pauli_sum(m.at("terms").get<std::string>(),
                               m.at("n").get<std::size_t>());
    }
    throw ConfigError("unknown model type '" + type + "'");
}

/// "plus", "minus", "zero", or one label per qubit from {0,1,+,-}.
inline StateVector parse_initial_state(const std::string &label,
                                       std::size_t n) {
    if (label == "plus") {
        return StateVector::plus(n);
    }
    if (label == "minus") {
        return StateVector::product(std::string(n, '-'));
    }
    if (label == "zero") {
        return StateVector::basis(n, 0);
    }
    if (label.size() != n) {
        throw ConfigError("initial state '" + label + "' must have " +
                          std::to_string(n) + " labels");
    }
    return StateVector::product(label);
}

inline StateVector stage_initial_state(const json &spec, std::size_t stage,
                                       std::size_t n) {
    if (spec.is_array()) {
        if (spec.empty()) {
            throw ConfigError("initial_state list is empty");
        }
        const std::size_t i = std::min(stage, spec.size() - 1);
        return parse_initial_state(spec.at(i).get<std::string>(), n);
    }
    return parse_initial_state(spec.get<std::string>(), n);
}

/**
 * @brief Parses and validates a config document; every problem surfaces as
 * ConfigError.
 */
inline ExperimentConfig parse_config(const json &doc, const fs::path &base_dir,
                                     const Overrides &ov = {}) {
    try {
        ExperimentConfig c;
        c.base_dir = base_dir;
        c.model = doc.at("model");
        const std::size_t n = detail::model_qubits(c.model);
        if (c.model.contains("table")) {
            const auto p = detail::resolve(
                base_dir, c.model.at("table").get<std::string>());
            if (!fs::exists(p)) {
                throw ConfigError("coefficient table not found: " + p.string());
            }
        }
        c.controls = detail::get_or<std::string>(doc, "controls", "y_per_qubit");
        const auto ctrls = standard_controls(c.controls, n);
        c.initial_state = doc.contains("initial_state") ? doc.at("initial_state")
                                                        : json("plus");
        c.feedback = detail::parse_feedback(doc, FeedbackConfig{}, ctrls.size());
        c.feedback.depth = detail::get_or(doc, "depth", 100);
        if (c.feedback.depth < 1) {
            throw ConfigError("depth must be >= 1");
        }
        const std::uint64_t shots =
            ov.shots ? *ov.shots : detail::get_or<std::uint64_t>(doc, "shots", 0);
        const std::uint64_t seed =
            ov.seed ? *ov.seed : detail::get_or<std::uint64_t>(doc, "seed", 0);
        if (!ov.exact && shots > 0) {
            c.feedback.budget = ShotBudget::sampled(shots, seed);
        }
        c.feedback.validate(ctrls.size());
        if (doc.contains("alpha")) {
            const auto &a = doc.at("alpha");
            const auto kind = a.at("strategy").get<std::string>();
            if (kind == "bound") {
                c.alpha.kind = AlphaStrategy::Kind::Bound;
            } else if (kind == "fixed") {
                c.alpha.kind = AlphaStrategy::Kind::Fixed;
                c.alpha.values = a.at("values").get<std::vector<double>>();
                if (c.alpha.values.empty()) {
                    throw ConfigError("alpha.values must not be empty");
                }
                for (double v : c.alpha.values) {
                    if (!(v >= 0.0)) {
                        throw ConfigError("alpha values must be >= 0");
                    }
                }
            } else if (kind == "iterative") {
                c.alpha.kind = AlphaStrategy::Kind::Iterative;
                c.alpha.start = a.at("start").get<double>();
                if (!(c.alpha.start > 0.0)) {
                    throw ConfigError("alpha.start must be > 0");
                }
            } else {
                throw ConfigError("alpha.strategy must be bound, fixed or "
                                  "iterative");
            }
        }
        c.target_index = detail::get_or<std::size_t>(doc, "target_index", 0);
        if (c.target_index >= (std::size_t{1} << n)) {
            throw ConfigError("target_index exceeds the Hilbert space");
        }
        c.tracked = detail::get_or<std::size_t>(doc, "tracked", 0);
        c.count = ov.count ? *ov.count : detail::get_or<std::size_t>(doc, "count", 1);
        if (c.count < 1) {
            throw ConfigError("count must be >= 1");
        }
        if (doc.contains("stages")) {
            for (const auto &s : doc.at("stages")) {
                c.stages.push_back(s);
                const FeedbackConfig fc =
                    detail::parse_feedback(s, c.feedback, ctrls.size());
                fc.validate(ctrls.size());
                if (s.contains("initial_state")) {
                    parse_initial_state(s.at("initial_state").get<std::string>(), n);
                }
            }
        }
        for (std::size_t s = 0; s < std::max<std::size_t>(c.count, 1); ++s) {
            stage_initial_state(c.initial_state, s, n);
        }
        c.sweep = doc.contains("sweep") ? doc.at("sweep") : json::object();
        if (ov.axis) {
            c.sweep["axis"] = *ov.axis;
        }
        c.out = ov.out ? fs::path(*ov.out)
                       : fs::path(detail::get_or<std::string>(doc, "out", "out"));
        return c;
    } catch (const ConfigError &) {
        throw;
    } catch (const std::exception &e) {
        throw ConfigError(e.what());
    }
}

inline ExperimentConfig load_config(const fs::path &path,
                                    const Overrides &ov = {}) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const std::exception &e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(doc, path.parent_path(), ov);
}

// ---------------------------------------------------------------------------
// Output

inline std::string fmt12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

/// layer,u_1..u_r,V,energy,fid_0..fid_{s-1}
inline void write_trace_csv(const fs::path &path, const RunTrace &trace,
                            std::size_t channels, std::size_t tracked) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << "layer";
    for (std::size_t q = 1; q <= channels; ++q) {
        out << ",u_" << q;
    }
    out << ",V,energy";
    for (std::size_t s = 0; s < tracked; ++s) {
        out << ",fid_" << s;
    }
    out << '\n';
    for (const auto &rec : trace.layers) {
        out << rec.layer;
        for (double u : rec.controls) {
            out << ',' << fmt12(u);
        }
        out << ',' << fmt12(rec.lyapunov) << ',' << fmt12(rec.energy);
        for (double f : rec.fidelities) {
            out << ',' << fmt12(f);
        }
        out << '\n';
    }
}

inline void write_json(const fs::path &path, const json &j) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

inline json nan_safe(double v) { return std::isfinite(v) ? json(v) : json(); }

// ---------------------------------------------------------------------------
// Single runs

struct RunSetup {
    PauliSum h0;
    std::vector<PauliSum> controls;
    std::vector<EigenPair> references;
};

inline RunSetup make_setup(const ExperimentConfig &c, const json &model,
                           std::size_t reference_count) {
    RunSetup s{build_model(model, c.base_dir), {}, {}};
    s.controls = standard_controls(c.controls, s.h0.num_qubits());
    const std::size_t dim = std::size_t{1} << s.h0.num_qubits();
    s.references = reference_spectrum(s.h0, std::min(reference_count, dim));
    return s;
}

inline std::size_t tracked_count(const ExperimentConfig &c, std::size_t n) {
    const std::size_t dim = std::size_t{1} << n;
    const std::size_t want = c.tracked == 0 ? 4 : c.tracked;
    return std::min({want, dim, std::max(want, c.target_index + 1)});
}

struct RunOutcome {
    RunTrace trace;
    std::vector<double> alphas;
    double target_fidelity = std::numeric_limits<double>::quiet_NaN();
    double final_energy = std::numeric_limits<double>::quiet_NaN();
};

inline double alpha_for(const AlphaStrategy &a, std::size_t j,
                        const PauliSum &h0) {
    if (a.kind == AlphaStrategy::Kind::Fixed) {
        return a.values[std::min(j, a.values.size() - 1)];
    }
    return alpha_from_bound(h0);
}

/**
 * @brief One feedback run targeting reference eigenstate `target`, with the
 * lower reference eigenstates as shifts.
 */
inline RunOutcome execute_run(const RunSetup &s, const StateVector &psi0,
                              const FeedbackConfig &fc, const AlphaStrategy &a,
                              std::size_t target, std::size_t tracked) {
    std::vector<StateVector> refs;
    for (std::size_t i = 0; i < tracked && i < s.references.size(); ++i) {
        refs.push_back(s.references[i].vector);
    }
    auto shifts_with = [&](auto alpha_of) {
        std::vector<ProjectorShift> shifts;
        for (std::size_t j = 0; j < target; ++j) {
            shifts.push_back({alpha_of(j), s.references[j].vector,
                              s.references[j].value});
        }
        return shifts;
    };
    RunOutcome out;
    std::vector<ProjectorShift> shifts;
    if (a.kind == AlphaStrategy::Kind::Iterative && target > 0) {
        std::vector<StateVector> lower;
        for (std::size_t j = 0; j < target; ++j) {
            lower.push_back(s.references[j].vector);
        }
        const double alpha = alpha_iterative(
            [&](double al) {
                return run_fqae(s.h0, s.controls,
                                ShiftedOperator(s.h0, shifts_with([&](std::size_t) {
                                                    return al;
                                                })),
                                psi0, fc, refs);
            },
            [&](const RunTrace &t) { return converged_to_lower_state(t, lower); },
            a.start);
        shifts = shifts_with([&](std::size_t) { return alpha; });
    } else {
        shifts = shifts_with([&](std::size_t j) { return alpha_for(a, j, s.h0); });
    }
    for (const auto &sh : shifts) {
        out.alphas.push_back(sh.alpha);
    }
    out.trace = run_fqae(s.h0, s.controls, ShiftedOperator(s.h0, shifts), psi0,
                         fc, refs);
    out.final_energy = expectation(out.trace.final_state, s.h0);
    out.target_fidelity =
        fidelity(s.references.at(target).vector, out.trace.final_state);
    return out;
}

inline json trace_summary(const RunTrace &t) {
    json j;
    j["layers"] = t.layers.size();
    j["lyapunov_violations"] = t.lyapunov_violations;
    j["max_lyapunov_increase"] = nan_safe(t.max_lyapunov_increase);
    j["stopped_early"] = t.stopped_early;
    if (!t.layers.empty()) {
        j["final_lyapunov"] = t.layers.back().lyapunov;
        j["final_energy"] = t.layers.back().energy;
        j["final_fidelities"] = t.layers.back().fidelities;
        j["final_controls"] = t.final_controls;
    }
    return j;
}

/// Single FQAE (or, with target_index 0, ground-state) run.
inline int cmd_run(const ExperimentConfig &c, std::ostream &log = std::cerr) {
    const auto t0 = std::chrono::steady_clock::now();
    RunSetup setup;
    StateVector psi0;
    std::size_t tracked = 0;
    try {
        const std::size_t n = detail::model_qubits(c.model);
        tracked = tracked_count(c, n);
        setup = make_setup(c, c.model, std::max(tracked, c.target_index + 1));
        psi0 = stage_initial_state(c.initial_state, 0, n);
        if (c.feedback.backend == Backend::GradPsr) {
            for (const auto &h : setup.controls) {
                if (!two_eigenvalue_lambda(h)) {
                    throw ConfigError("grad_psr needs two-eigenvalue controls");
                }
            }
        }
    } catch (const std::exception &e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    fs::create_directories(c.out);
    json summary;
    summary["backend"] = backend_name(c.feedback.backend);
    summary["dt"] = c.feedback.dt;
    summary["depth"] = c.feedback.depth;
    summary["target_index"] = c.target_index;
    summary["shots"] = c.feedback.budget.exact ? json() : json(c.feedback.budget.shots);
    json ref_e = json::array();
    for (std::size_t i = 0; i < tracked; ++i) {
        ref_e.push_back(setup.references[i].value);
    }
    summary["reference_energies"] = ref_e;
    int code = kExitOk;
    try {
        const RunOutcome r =
            execute_run(setup, psi0, c.feedback, c.alpha, c.target_index, tracked);
        write_trace_csv(c.out / "trace.csv", r.trace, setup.controls.size(),
                        tracked);
        summary.update(trace_summary(r.trace));
        summary["alphas"] = r.alphas;
        summary["target_fidelity"] = r.target_fidelity;
        summary["final_energy"] = r.final_energy;
    } catch (const RunError &e) {
        write_trace_csv(c.out / "trace.csv", e.partial(), setup.controls.size(),
                        tracked);
        summary.update(trace_summary(e.partial()));
        summary["error"] = e.what();
        log << "run failed: " << e.what() << '\n';
        code = kExitRuntime;
    } catch (const std::exception &e) {
        summary["error"] = e.what();
        log << "run failed: " << e.what() << '\n';
        code = kExitRuntime;
    }
    summary["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_json(c.out / "summary.json", summary);
    return code;
}

// ---------------------------------------------------------------------------
// Spectrum

struct SpectrumResult {
    std::vector<DeflationStage> stages;
    std::vector<EigenPair> references;
};

inline SpectrumResult compute_spectrum(const ExperimentConfig &c,
                                       const json &model,
                                       std::optional<double> dt_override = {}) {
    if (c.alpha.kind == AlphaStrategy::Kind::Iterative) {
        throw ConfigError("spectrum supports the bound and fixed alpha "
                          "strategies only");
    }
    const std::size_t n = detail::model_qubits(model);
    RunSetup setup = make_setup(c, model, c.count);
    FeedbackConfig base = c.feedback;
    if (dt_override) {
        base.dt = *dt_override;
    }
    DeflationOptions opts;
    if (c.alpha.kind == AlphaStrategy::Kind::Fixed) {
        for (std::size_t j = 0; j + 1 < c.count; ++j) {
            opts.alphas.push_back(alpha_for(c.alpha, j, setup.h0));
        }
    }
    for (const auto &r : setup.references) {
        opts.references.push_back(r.vector);
    }
    std::vector<std::optional<std::string>> stage_states(c.count);
    for (std::size_t s = 0; s < c.stages.size() && s < c.count; ++s) {
        FeedbackConfig fc =
            detail::parse_feedback(c.stages[s], base, setup.controls.size());
        if (dt_override && !c.stages[s].contains("dt")) {
            fc.dt = *dt_override;
        }
        opts.stage_configs[s] = fc;
        if (c.stages[s].contains("initial_state")) {
            stage_states[s] = c.stages[s].at("initial_state").get<std::string>();
        }
    }
    auto psi0 = [&](std::size_t s) {
        if (s < stage_states.size() && stage_states[s]) {
            return parse_initial_state(*stage_states[s], n);
        }
        return stage_initial_state(c.initial_state, s, n);
    };
    SpectrumResult out;
    out.stages =
        deflate_spectrum(setup.h0, setup.controls, psi0, base, c.count, opts);
    out.references = std::move(setup.references);
    return out;
}

/// Climbs `count` levels; writes stage_<i>.csv and spectrum.json.
inline int cmd_spectrum(const ExperimentConfig &c, std::ostream &log = std::cerr) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
        build_model(c.model, c.base_dir);
        if (c.alpha.kind == AlphaStrategy::Kind::Iterative) {
            throw ConfigError("spectrum supports the bound and fixed alpha "
                              "strategies only");
        }
    } catch (const std::exception &e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    fs::create_directories(c.out);
    json summary;
    summary["count"] = c.count;
    int code = kExitOk;
    try {
        const SpectrumResult r = compute_spectrum(c, c.model);
        json stages = json::array();
        for (const auto &st : r.stages) {
            write_trace_csv(c.out / ("stage_" + std::to_string(st.stage) + ".csv"),
                            st.trace, standard_controls(c.controls, st.state.num_qubits()).size(),
                            r.references.size());
            json j = trace_summary(st.trace);
            j["stage"] = st.stage;
            j["energy"] = st.energy;
            j["reference_energy"] = r.references.at(st.stage).value;
            j["reference_fidelity"] =
                st.reference_fidelity ? json(*st.reference_fidelity) : json();
            j["alphas"] = st.alphas;
            if (!st.warning.empty()) {
                j["warning"] = st.warning;
                log << "warning: " << st.warning << '\n';
            }
            stages.push_back(j);
        }
        summary["stages"] = stages;
    } catch (const RunError &e) {
        summary["error"] = e.what();
        log << "run failed: " << e.what() << '\n';
        code = kExitRuntime;
    } catch (const ConfigError &e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception &e) {
        summary["error"] = e.what();
        log << "run failed: " << e.what() << '\n';
        code = kExitRuntime;
    }
    summary["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_json(c.out / "spectrum.json", summary);
    return code;
}

// ---------------------------------------------------------------------------
// Sweeps

/// Runs fn(0..count-1) on up to `jobs` threads; each index runs exactly once.
template <class Fn>
void parallel_for(std::size_t count, int jobs, Fn &&fn) {
    const std::size_t workers =
        std::min<std::size_t>(count, static_cast<std::size_t>(std::max(jobs, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                fn(i);
            }
        });
    }
    for (auto &t : pool) {
        t.join();
    }
}

struct InstanceResult {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    RunOutcome run;
};

struct TunedBatch {
    double dt = std::numeric_limits<double>::quiet_NaN();
    std::vector<InstanceResult> instances;
};

/**
 * @brief Runs every instance at each candidate dt, largest first, and keeps
 * the first dt for which no instance shows V_{k+1} - V_k > tolerance.
 *
 * With a single candidate no tuning happens and violations are reported.
 */
inline TunedBatch run_tuned_batch(const ExperimentConfig &c,
                                  const std::vector<json> &models,
                                  std::vector<double> candidates, int jobs) {
    std::sort(candidates.begin(), candidates.end(), std::greater<>());
    const std::size_t n = detail::model_qubits(models.at(0));
    std::vector<RunSetup> setups(models.size());
    std::vector<std::string> setup_errors(models.size());
    const std::size_t tracked =
        std::max<std::size_t>(c.target_index + 1, tracked_count(c, n));
    parallel_for(models.size(), jobs, [&](std::size_t i) {
        try {
            setups[i] = make_setup(c, models[i], tracked);
        } catch (const std::exception &e) {
            setup_errors[i] = e.what();
        }
    });
    const StateVector psi0 = stage_initial_state(c.initial_state, 0, n);
    TunedBatch batch;
    for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
        const bool tuning = candidates.size() > 1;
        FeedbackConfig fc = c.feedback;
        fc.dt = candidates[ci];
        fc.stop_on_violation = tuning;
        std::vector<InstanceResult> results(models.size());
        std::atomic<bool> violated{false};
        parallel_for(models.size(), jobs, [&](std::size_t i) {
            auto &r = results[i];
            r.seed = detail::get_or<std::uint64_t>(models[i], "seed", i);
            if (!setup_errors[i].empty()) {
                r.error = setup_errors[i];
                return;
            }
            if (tuning && violated.load()) {
                return;
            }
            try {
                FeedbackConfig local = fc;
                if (!local.budget.exact) {
                    local.budget.seed += i;
                }
                r.run = execute_run(setups[i], psi0, local, c.alpha,
                                    c.target_index, tracked);
                r.ok = true;
                if (r.run.trace.lyapunov_violations > 0) {
                    violated = true;
                }
            } catch (const std::exception &e) {
                r.error = e.what();
            }
        });
        if (!tuning || !violated.load()) {
            batch.dt = candidates[ci];
            batch.instances = std::move(results);
            return batch;
        }
    }
    batch.instances.resize(models.size());
    for (std::size_t i = 0; i < models.size(); ++i) {
        batch.instances[i].seed =
            detail::get_or<std::uint64_t>(models[i], "seed", i);
        batch.instances[i].error = "no candidate dt satisfies the Lyapunov "
                                   "condition on every instance";
    }
    return batch;
}

struct PointStats {
    double mean_fidelity = std::numeric_limits<double>::quiet_NaN();
    double sem = std::numeric_limits<double>::quiet_NaN();
    double mean_energy = std::numeric_limits<double>::quiet_NaN();
    std::size_t ok = 0;
};

inline PointStats stats_of(const std::vector<InstanceResult> &rs) {
    PointStats s;
    std::vector<double> f;
    double e = 0.0;
    for (const auto &r : rs) {
        if (r.ok) {
            f.push_back(r.run.target_fidelity);
            e += r.run.final_energy;
        }
    }
    s.ok = f.size();
    if (f.empty()) {
        return s;
    }
    double mean = 0.0;
    for (double x : f) {
        mean += x;
    }
    mean /= static_cast<double>(f.size());
    s.mean_fidelity = mean;
    s.mean_energy = e / static_cast<double>(f.size());
    if (f.size() > 1) {
        double var = 0.0;
        for (double x : f) {
            var += (x - mean) * (x - mean);
        }
        var /= static_cast<double>(f.size() - 1);
        s.sem = std::sqrt(var / static_cast<double>(f.size()));
    } else {
        s.sem = 0.0;
    }
    return s;
}

inline std::vector<double> dt_candidates(const ExperimentConfig &c) {
    if (c.sweep.contains("dt_candidates")) {
        auto v = c.sweep.at("dt_candidates").get<std::vector<double>>();
        if (v.empty()) {
            throw ConfigError("sweep.dt_candidates must not be empty");
        }
        for (double d : v) {
            if (!(d > 0.0)) {
                throw ConfigError("sweep.dt_candidates must be > 0");
            }
        }
        return v;
    }
    return {c.feedback.dt};
}

inline std::vector<std::uint64_t> sweep_seeds(const ExperimentConfig &c) {
    if (c.sweep.contains("seeds")) {
        return c.sweep.at("seeds").get<std::vector<std::uint64_t>>();
    }
    const auto count = detail::get_or<std::size_t>(c.sweep, "instances", 15);
    const auto base = detail::get_or<std::uint64_t>(c.sweep, "seed_base", 0);
    std::vector<std::uint64_t> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = base + i;
    }
    return out;
}

inline int sweep_n(const ExperimentConfig &c, int jobs, std::ostream &log) {
    const auto sizes = c.sweep.at("values").get<std::vector<std::size_t>>();
    const auto seeds = sweep_seeds(c);
    const auto cands = dt_candidates(c);
    std::ofstream csv(c.out / "sweep.csv");
    csv << "n,dt,mean_fidelity,sem,mean_final_energy,instances,failed\n";
    json points = json::array();
    for (std::size_t n : sizes) {
        std::vector<json> models;
        for (auto s : seeds) {
            json m = c.model;
            m["n"] = n;
            m["seed"] = s;
            models.push_back(m);
        }
        TunedBatch b;
        try {
            b = run_tuned_batch(c, models, cands, jobs);
        } catch (const std::exception &e) {
            log << "point n=" << n << " failed: " << e.what() << '\n';
        }
        const PointStats st = stats_of(b.instances);
        csv << n << ',' << fmt12(b.dt) << ',' << fmt12(st.mean_fidelity) << ','
            << fmt12(st.sem) << ',' << fmt12(st.mean_energy) << ','
            << seeds.size() << ',' << (seeds.size() - st.ok) << '\n';
        json p;
        p["n"] = n;
        p["dt"] = nan_safe(b.dt);
        p["mean_fidelity"] = nan_safe(st.mean_fidelity);
        p["sem"] = nan_safe(st.sem);
        std::vector<json> fids;
        int violations = 0;
        for (const auto &r : b.instances) {
            fids.push_back(r.ok ? nan_safe(r.run.target_fidelity) : json());
            if (r.ok) {
                violations += r.run.trace.lyapunov_violations;
            }
        }
        p["fidelities"] = fids;
        p["lyapunov_violations"] = violations;
        points.push_back(p);
        log << "n=" << n << " dt=" << b.dt << " mean fidelity "
            << st.mean_fidelity << '\n';
    }
    write_json(c.out / "sweep.json", {{"axis", "n"}, {"points", points}});
    return kExitOk;
}

inline int sweep_seed(const ExperimentConfig &c, int jobs, std::ostream &log) {
    const auto seeds = sweep_seeds(c);
    std::vector<json> models;
    for (auto s : seeds) {
        json m = c.model;
        m["seed"] = s;
        models.push_back(m);
    }
    const TunedBatch b = run_tuned_batch(c, models, dt_candidates(c), jobs);
    std::ofstream csv(c.out / "sweep.csv");
    csv << "seed,dt,final_fidelity,final_energy,lyapunov_violations,status\n";
    std::size_t above = 0;
    std::size_t ok = 0;
    for (const auto &r : b.instances) {
        if (r.ok) {
            ++ok;
            above += r.run.target_fidelity > 0.4 ? 1 : 0;
            write_trace_csv(c.out / ("instance_" + std::to_string(r.seed) + ".csv"),
                            r.run.trace,
                            r.run.trace.layers.empty()
                                ? 0
                                : r.run.trace.layers.front().controls.size(),
                            r.run.trace.layers.empty()
                                ? 0
                                : r.run.trace.layers.front().fidelities.size());
            csv << r.seed << ',' << fmt12(b.dt) << ','
                << fmt12(r.run.target_fidelity) << ','
                << fmt12(r.run.final_energy) << ','
                << r.run.trace.lyapunov_violations << ",ok\n";
        } else {
            csv << r.seed << ',' << fmt12(b.dt) << ",nan,nan,0,failed\n";
            log << "seed " << r.seed << " failed: " << r.error << '\n';
        }
    }
    const PointStats st = stats_of(b.instances);
    json j{{"axis", "seed"},
           {"dt", nan_safe(b.dt)},
           {"instances", seeds.size()},
           {"completed", ok},
           {"fraction_above_0_4",
            ok ? json(static_cast<double>(above) / static_cast<double>(ok)) : json()},
           {"mean_fidelity", nan_safe(st.mean_fidelity)},
           {"sem", nan_safe(st.sem)}};
    write_json(c.out / "sweep.json", j);
    return kExitOk;
}

inline int sweep_r(const ExperimentConfig &c, std::ostream &log) {
    const auto values = c.sweep.at("values").get<std::vector<double>>();
    std::vector<std::pair<double, double>> rules;
    if (c.sweep.contains("dt_rules")) {
        for (const auto &r : c.sweep.at("dt_rules")) {
            rules.emplace_back(r.at("max_R").get<double>(), r.at("dt").get<double>());
        }
    }
    std::ofstream csv(c.out / "sweep.csv");
    csv << "R,dt";
    for (std::size_t s = 0; s < c.count; ++s) {
        csv << ",E_" << s << ",exact_E_" << s;
    }
    csv << ",status\n";
    json points = json::array();
    for (double R : values) {
        double dt = c.feedback.dt;
        for (const auto &[max_r, rule_dt] : rules) {
            if (R <= max_r + 1e-12) {
                dt = rule_dt;
                break;
            }
        }
        json m = c.model;
        m["R"] = R;
        std::string status = "ok";
        std::vector<double> e(c.count, std::numeric_limits<double>::quiet_NaN());
        std::vector<double> ex = e;
        try {
            const SpectrumResult r = compute_spectrum(c, m, dt);
            for (const auto &st : r.stages) {
                e[st.stage] = st.energy;
                ex[st.stage] = r.references.at(st.stage).value;
            }
        } catch (const std::out_of_range &err) {
            status = "missing";
            log << "R=" << R << ": " << err.what() << '\n';
        } catch (const std::exception &err) {
            status = "failed";
            log << "R=" << R << " failed: " << err.what() << '\n';
        }
        csv << fmt12(R) << ',' << fmt12(dt);
        json p{{"R", R}, {"dt", dt}, {"status", status}};
        json ej = json::array();
        for (std::size_t s = 0; s < c.count; ++s) {
            csv << ',' << fmt12(e[s]) << ',' << fmt12(ex[s]);
            ej.push_back(nan_safe(e[s]));
        }
        csv << ',' << status << '\n';
        p["energies"] = ej;
        points.push_back(p);
    }
    write_json(c.out / "sweep.json", {{"axis", "R"}, {"points", points}});
    return kExitOk;
}

/// Axis n (random Ising sizes), seed (instances at one size) or R (H2).
inline int cmd_sweep(const ExperimentConfig &c, int jobs,
                     std::ostream &log = std::cerr) {
    std::string axis;
    try {
        axis = c.sweep.at("axis").get<std::string>();
        if (axis != "n" && axis != "seed" && axis != "R") {
            throw ConfigError("sweep axis must be n, seed or R");
        }
        if ((axis == "n" || axis == "R") && !c.sweep.contains("values")) {
            throw ConfigError("sweep." + axis + " needs a values list");
        }
        dt_candidates(c);
        if (jobs < 1) {
            throw ConfigError("--jobs must be >= 1");
        }
    } catch (const std::exception &e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    fs::create_directories(c.out);
    try {
        if (axis == "n") {
            return sweep_n(c, jobs, log);
        }
        if (axis == "seed") {
            return sweep_seed(c, jobs, log);
        }
        return sweep_r(c, log);
    } catch (const std::exception &e) {
        log << "sweep failed: " << e.what() << '\n';
        return kExitRuntime;
    }
}

// ---------------------------------------------------------------------------
// Validation

inline constexpr std::size_t kValidateMaxQubits = 8;

struct ValidationReport {
    bool distinct_gaps = false;
    std::vector<bool> channel_connected;
    bool any_channel_connected = false;
    bool p_nondegenerate = false;
    std::vector<double> p_eigenvalues;
    std::vector<double> alphas;
    std::vector<double> alpha_required;
    bool alpha_sufficient = true;
};

/**
 * @brief Checks distinct gaps of H0, full connectivity of each control in
 * the H0 eigenbasis, non-degeneracy of P, and α_k > E_m - E_k.
 */
inline ValidationReport validate_instance(const PauliSum &h0,
                                          const std::vector<PauliSum> &controls,
                                          std::size_t target,
                                          const AlphaStrategy &alpha,
                                          double tol = 1e-9) {
    if (h0.num_qubits() > kValidateMaxQubits) {
        throw DimensionError("validate: limited to " +
                             std::to_string(kValidateMaxQubits) + " qubits");
    }
    const auto spec = reference_spectrum(h0);
    const std::size_t dim = spec.size();
    ValidationReport r;
    std::vector<double> gaps;
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            if (i != j) {
                gaps.push_back(spec[i].value - spec[j].value);
            }
        }
    }
    std::sort(gaps.begin(), gaps.end());
    r.distinct_gaps = true;
    for (std::size_t k = 1; k < gaps.size(); ++k) {
        if (gaps[k] - gaps[k - 1] < tol) {
            r.distinct_gaps = false;
            break;
        }
    }
    for (std::size_t i = 0; i < dim && r.distinct_gaps; ++i) {
        if (i > 0 && spec[i].value - spec[i - 1].value < tol) {
            r.distinct_gaps = false;
        }
    }
    std::vector<std::vector<bool>> any(dim, std::vector<bool>(dim, false));
    for (const auto &h : controls) {
        bool connected = true;
        std::vector<Amplitudes> hv;
        for (const auto &e : spec) {
            hv.push_back(apply_sum(h, e.vector));
        }
        for (std::size_t i = 0; i < dim; ++i) {
            for (std::size_t j = i + 1; j < dim; ++j) {
                Complex m{};
                const auto a = spec[i].vector.amplitudes();
                for (std::size_t b = 0; b < a.size(); ++b) {
                    m += std::conj(a[b]) * hv[j][b];
                }
                if (std::abs(m) > tol) {
                    any[i][j] = true;
                } else {
                    connected = false;
                }
            }
        }
        r.channel_connected.push_back(connected);
    }
    r.any_channel_connected = true;
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = i + 1; j < dim; ++j) {
            r.any_channel_connected = r.any_channel_connected && any[i][j];
        }
    }
    for (std::size_t k = 0; k < dim; ++k) {
        double v = spec[k].value;
        if (k < target) {
            const double a = alpha_for(alpha, k, h0);
            r.alphas.push_back(a);
            r.alpha_required.push_back(spec[target].value - spec[k].value);
            if (!(a > spec[target].value - spec[k].value)) {
                r.alpha_sufficient = false;
            }
            v += a;
        }
        r.p_eigenvalues.push_back(v);
    }
    std::vector<double> sorted = r.p_eigenvalues;
    std::sort(sorted.begin(), sorted.end());
    r.p_nondegenerate = true;
    for (std::size_t k = 1; k < sorted.size(); ++k) {
        if (sorted[k] - sorted[k - 1] < tol) {
            r.p_nondegenerate = false;
        }
    }
    return r;
}

inline int cmd_validate(const ExperimentConfig &c, std::ostream &out = std::cout,
                        std::ostream &log = std::cerr) {
    ValidationReport r;
    try {
        const PauliSum h0 = build_model(c.model, c.base_dir);
        const auto controls = standard_controls(c.controls, h0.num_qubits());
        AlphaStrategy a = c.alpha;
        if (a.kind == AlphaStrategy::Kind::Iterative) {
            a.kind = AlphaStrategy::Kind::Fixed;
            a.values = {a.start};
        }
        r = validate_instance(h0, controls, c.target_index, a);
    } catch (const std::exception &e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    json j;
    j["assumption1_distinct_gaps"] = r.distinct_gaps;
    j["assumption2_connected_per_channel"] = r.channel_connected;
    j["assumption2_connected_jointly"] = r.any_channel_connected;
    j["assumption3_p_nondegenerate"] = r.p_nondegenerate;
    j["p_eigenvalues"] = r.p_eigenvalues;
    j["alphas"] = r.alphas;
    j["alpha_required"] = r.alpha_required;
    j["alpha_sufficient"] = r.alpha_sufficient;
    out << j.dump(2) << '\n';
    try {
        fs::create_directories(c.out);
        write_json(c.out / "validate.json", j);
    } catch (const std::exception &e) {
        log << "could not write report: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

} // namespace fqae::cli
