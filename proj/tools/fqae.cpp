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

// fqae run|spectrum|sweep|validate --config FILE [flags]

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "fqae/experiment.hpp"

int main(int argc, char **argv) {
    using namespace fqae::cli;
    CLI::App app{"Feedback-based excited-state search on a state-vector simulator"};
    app.require_subcommand(1);

    std::string config;
    Overrides ov;
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;
    std::string out;
    std::size_t count = 0;
    std::string axis;

    auto common = [&](CLI::App *sub) {
        sub->add_option("--config", config, "JSON experiment config")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--shots", shots, "shots per estimated scalar")
            ->check(CLI::PositiveNumber);
        sub->add_flag("--exact", ov.exact, "exact expectations, no shot noise");
        sub->add_option("--seed", seed, "master seed for shot noise");
        sub->add_option("--out", out, "output directory");
    };
    auto *run = app.add_subcommand("run", "single feedback run");
    auto *spectrum = app.add_subcommand("spectrum", "climb the lowest levels");
    auto *sweep = app.add_subcommand("sweep", "sweep over n, seed or R");
    auto *validate = app.add_subcommand("validate", "check the convergence assumptions");
    for (auto *s : {run, spectrum, sweep, validate}) {
        common(s);
    }
    spectrum->add_option("--count", count, "number of levels")
        ->check(CLI::PositiveNumber);
    sweep->add_option("--axis", axis, "n, seed or R");
    sweep->add_option("--jobs", ov.jobs, "worker threads across instances")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }
    for (auto *s : {run, spectrum, sweep, validate}) {
        if (s->parsed()) {
            if (s->count("--shots") > 0) {
                ov.shots = shots;
            }
            if (s->count("--seed") > 0) {
                ov.seed = seed;
            }
            if (s->count("--out") > 0) {
                ov.out = out;
            }
        }
    }
    if (spectrum->parsed() && spectrum->count("--count") > 0) {
        ov.count = count;
    }
    if (sweep->parsed() && sweep->count("--axis") > 0) {
        ov.axis = axis;
    }

    ExperimentConfig cfg;
    try {
        cfg = load_config(config, ov);
    } catch (const std::exception &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    try {
        if (run->parsed()) {
            return cmd_run(cfg);
        }
        if (spectrum->parsed()) {
            return cmd_spectrum(cfg);
        }
        if (sweep->parsed()) {
            return cmd_sweep(cfg, ov.jobs);
        }
        return cmd_validate(cfg);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}
