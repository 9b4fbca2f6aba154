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

// End-to-end tests of the fqae command line tool.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "fqae/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class CliTest : public ::testing::Test {
  protected:
    void SetUp() override {
        const auto *info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() /
               (std::string("fqae_cli_") + info->test_suite_name() + "_" + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write_config(const json &j, const std::string &name = "config.json") {
        const auto p = dir_ / name;
        std::ofstream(p) << j.dump(2);
        return p;
    }

    int fqae(const std::string &args) {
        const std::string cmd = std::string(FQAE_CLI_PATH) + " " + args + " > " +
                                (dir_ / "stdout.txt").string() + " 2> " +
                                (dir_ / "stderr.txt").string();
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string slurp(const fs::path &p) const {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    json read_json(const fs::path &p) const { return json::parse(slurp(p)); }

    static json small_ising(int depth = 50) {
        return {{"model", {{"type", "ising_small"}}},
                {"controls", "y_per_qubit"},
                {"initial_state", "++"},
                {"dt", 0.08},
                {"gains", 1.5},
                {"depth", depth},
                {"alpha", {{"strategy", "bound"}}},
                {"target_index", 1},
                {"tracked", 4}};
    }

    fs::path dir_;
};

std::string first_line(const std::string &s) { return s.substr(0, s.find('\n')); }

} // namespace

TEST_F(CliTest, RunWritesTraceAndSummary) {
    const auto cfg = write_config(small_ising());
    ASSERT_EQ(fqae("run --config " + cfg.string() + " --out " + (dir_ / "o").string()), 0);
    const auto csv = slurp(dir_ / "o" / "trace.csv");
    EXPECT_EQ(first_line(csv), "layer,u_1,u_2,V,energy,fid_0,fid_1,fid_2,fid_3");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 51);
    const auto s = read_json(dir_ / "o" / "summary.json");
    EXPECT_EQ(s["alphas"], json::array({7.0}));
    EXPECT_EQ(s["layers"], 50);
    EXPECT_EQ(s["lyapunov_violations"], 0);
    EXPECT_TRUE(s.contains("wall_time_s"));
    EXPECT_EQ(s["final_fidelities"].size(), 4u);
    EXPECT_EQ(s["reference_energies"], json::array({-2.5, -1.5, 0.5, 3.5}));
}

TEST_F(CliTest, ShippedSmallIsingConfigRuns) {
    const auto cfg = fs::path(FQAE_SOURCE_DIR) / "configs" / "ising_small_exact.json";
    ASSERT_EQ(fqae("run --config " + cfg.string() + " --out " + (dir_ / "o").string()), 0);
    const auto s = read_json(dir_ / "o" / "summary.json");
    EXPECT_EQ(s["layers"], 100);
    EXPECT_EQ(s["lyapunov_violations"], 0);
}

TEST_F(CliTest, CsvColumnsDependOnlyOnChannelsAndTrackedStates) {
    auto a = small_ising();
    a["tracked"] = 2;
    auto b = a;
    b["dt"] = 0.05;
    b["backend"] = "grad_psr";
    b["initial_state"] = "01";
    ASSERT_EQ(fqae("run --config " + write_config(a, "a.json").string() + " --out " + (dir_ / "a").string()), 0);
    ASSERT_EQ(fqae("run --config " + write_config(b, "b.json").string() + " --out " + (dir_ / "b").string()), 0);
    EXPECT_EQ(first_line(slurp(dir_ / "a" / "trace.csv")), "layer,u_1,u_2,V,energy,fid_0,fid_1");
    EXPECT_EQ(first_line(slurp(dir_ / "a" / "trace.csv")), first_line(slurp(dir_ / "b" / "trace.csv")));
}

TEST_F(CliTest, SameSeedGivesIdenticalCsv) {
    auto c = small_ising(30);
    c["backend"] = "overlap_hadamard";
    c["shots"] = 100;
    const auto cfg = write_config(c);
    ASSERT_EQ(fqae("run --config " + cfg.string() + " --seed 9 --out " + (dir_ / "x").string()), 0);
    ASSERT_EQ(fqae("run --config " + cfg.string() + " --seed 9 --out " + (dir_ / "y").string()), 0);
    ASSERT_EQ(fqae("run --config " + cfg.string() + " --seed 10 --out " + (dir_ / "z").string()), 0);
    EXPECT_EQ(slurp(dir_ / "x" / "trace.csv"), slurp(dir_ / "y" / "trace.csv"));
    EXPECT_NE(slurp(dir_ / "x" / "trace.csv"), slurp(dir_ / "z" / "trace.csv"));
    ASSERT_EQ(fqae("run --config " + cfg.string() + " --exact --out " + (dir_ / "e").string()), 0);
    EXPECT_TRUE(read_json(dir_ / "e" / "summary.json")["shots"].is_null());
}

TEST_F(CliTest, TracePrecisionIsTwelveDigits) {
    const auto cfg = write_config(small_ising(5));
    ASSERT_EQ(fqae("run --config " + cfg.string() + " --out " + (dir_ / "o").string()), 0);
    std::istringstream csv(slurp(dir_ / "o" / "trace.csv"));
    std::string line;
    std::getline(csv, line);
    std::getline(csv, line);
    std::getline(csv, line);
    std::stringstream cells(line);
    std::string cell;
    std::getline(cells, cell, ',');
    std::getline(cells, cell, ',');
    std::string digits;
    for (char ch : cell) {
        if (std::isdigit(static_cast<unsigned char>(ch))) {
            digits.push_back(ch);
        }
    }
    while (!digits.empty() && digits.front() == '0') {
        digits.erase(digits.begin());
    }
    EXPECT_LE(digits.size(), 12u);
    EXPECT_GE(digits.size(), 10u);
}

TEST_F(CliTest, ConfigErrorsExitTwo) {
    auto zero = small_ising(0);
    EXPECT_EQ(fqae("run --config " + write_config(zero, "z.json").string()), 2);
    auto backend = small_ising();
    backend["backend"] = "quantum_annealer";
    EXPECT_EQ(fqae("run --config " + write_config(backend, "b.json").string()), 2);
    auto gains = small_ising();
    gains["gains"] = json::array({1.0, 2.0, 3.0});
    EXPECT_EQ(fqae("run --config " + write_config(gains, "g.json").string()), 2);
    auto table = small_ising();
    table["model"] = {{"type", "h2"}, {"R", 1.05}, {"table", "missing.csv"}};
    EXPECT_EQ(fqae("run --config " + write_config(table, "t.json").string()), 2);
    auto psr = small_ising();
    psr["controls"] = "x_mixer";
    psr["backend"] = "grad_psr";
    EXPECT_EQ(fqae("run --config " + write_config(psr, "p.json").string() + " --out " + (dir_ / "p").string()), 2);
    std::ofstream(dir_ / "bad.json") << "{ not json";
    EXPECT_EQ(fqae("run --config " + (dir_ / "bad.json").string()), 2);
    EXPECT_EQ(fqae("run --config " + (dir_ / "absent.json").string()), 2);
    EXPECT_EQ(fqae("run"), 2);
    EXPECT_EQ(fqae("frobnicate"), 2);
    EXPECT_EQ(fqae("run --config " + write_config(small_ising()).string() + " --shots 0"), 2);
    EXPECT_NE(slurp(dir_ / "stderr.txt").size(), 0u);
}

TEST_F(CliTest, RuntimeFailureExitsOneWithPartialTrace) {
    auto c = small_ising(100000);
    c["time_limit_s"] = 0.0;
    const auto cfg = write_config(c);
    ASSERT_EQ(fqae("run --config " + cfg.string() + " --out " + (dir_ / "o").string()), 1);
    const auto csv = slurp(dir_ / "o" / "trace.csv");
    EXPECT_EQ(first_line(csv), "layer,u_1,u_2,V,energy,fid_0,fid_1,fid_2,fid_3");
    EXPECT_GE(std::count(csv.begin(), csv.end(), '\n'), 2);
    const auto s = read_json(dir_ / "o" / "summary.json");
    EXPECT_TRUE(s.contains("error"));
}

TEST_F(CliTest, UnwritableOutputExitsOne) {
    std::ofstream(dir_ / "file") << "x";
    EXPECT_EQ(fqae("run --config " + write_config(small_ising(3)).string() + " --out " + (dir_ / "file" / "sub").string()), 1);
}

TEST_F(CliTest, SpectrumSmallIsingCountOne) {
    auto c = small_ising(100);
    c["count"] = 3;
    ASSERT_EQ(fqae("spectrum --count 1 --config " + write_config(c).string() + " --out " + (dir_ / "o").string()), 0);
    EXPECT_TRUE(fs::exists(dir_ / "o" / "stage_0.csv"));
    EXPECT_FALSE(fs::exists(dir_ / "o" / "stage_1.csv"));
    const auto s = read_json(dir_ / "o" / "spectrum.json");
    ASSERT_EQ(s["stages"].size(), 1u);
    EXPECT_TRUE(s["stages"][0]["alphas"].empty());
}

TEST_F(CliTest, SpectrumHydrogenMatchesReference) {
    const auto cfg = fs::path(FQAE_SOURCE_DIR) / "configs" / "h2_spectrum.json";
    ASSERT_EQ(fqae("spectrum --config " + cfg.string() + " --out " + (dir_ / "o").string()), 0);
    const auto s = read_json(dir_ / "o" / "spectrum.json");
    const double want[] = {-1.0904, -0.7711, -0.3711};
    ASSERT_EQ(s["stages"].size(), 3u);
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(s["stages"][i]["energy"].get<double>(), want[i], 1e-2);
        EXPECT_EQ(s["stages"][i]["lyapunov_violations"], 0);
        EXPECT_TRUE(fs::exists(dir_ / "o" / ("stage_" + std::to_string(i) + ".csv")));
    }
}

TEST_F(CliTest, SpectrumRejectsIterativeAlpha) {
    auto c = small_ising();
    c["alpha"] = {{"strategy", "iterative"}, {"start", 0.5}};
    EXPECT_EQ(fqae("spectrum --config " + write_config(c).string() + " --out " + (dir_ / "o").string()), 2);
}

TEST_F(CliTest, IterativeAlphaRun) {
    auto c = small_ising(200);
    c["alpha"] = {{"strategy", "iterative"}, {"start", 0.25}};
    ASSERT_EQ(fqae("run --config " + write_config(c).string() + " --out " + (dir_ / "o").string()), 0);
    EXPECT_GE(read_json(dir_ / "o" / "summary.json")["alphas"][0].get<double>(), 1.0);
}

TEST_F(CliTest, ValidateReportsAssumptions) {
    ASSERT_EQ(fqae("validate --config " + write_config(small_ising()).string() + " --out " + (dir_ / "o").string()), 0);
    const auto r = json::parse(slurp(dir_ / "stdout.txt"));
    EXPECT_EQ(r, read_json(dir_ / "o" / "validate.json"));
    EXPECT_FALSE(r["assumption2_connected_per_channel"][0].get<bool>());
    EXPECT_TRUE(r["assumption3_p_nondegenerate"].get<bool>());
    auto p = r["p_eigenvalues"].get<std::vector<double>>();
    std::sort(p.begin(), p.end());
    EXPECT_EQ(p, (std::vector<double>{-1.5, 0.5, 3.5, 4.5}));
    EXPECT_TRUE(r["alpha_sufficient"].get<bool>());

    auto degenerate = small_ising();
    degenerate["model"] = {{"type", "ising"}, {"n", 2}, {"couplings", {{0, 0}, {0, 0}}}, {"fields", {1, 1}}};
    ASSERT_EQ(fqae("validate --config " + write_config(degenerate, "d.json").string() + " --out " + (dir_ / "d").string()), 0);
    EXPECT_FALSE(read_json(dir_ / "d" / "validate.json")["assumption1_distinct_gaps"].get<bool>());

    auto big = small_ising();
    big["model"] = {{"type", "random_ising"}, {"n", 12}, {"seed", 1}};
    big["controls"] = "x_mixer";
    EXPECT_EQ(fqae("validate --config " + write_config(big, "big.json").string() + " --out " + (dir_ / "b").string()), 2);
}

TEST_F(CliTest, SweepBondLengthRecordsMissingRows) {
    const auto cfg = fs::path(FQAE_SOURCE_DIR) / "configs" / "h2_bond_sweep.json";
    ASSERT_EQ(fqae("sweep --config " + cfg.string() + " --out " + (dir_ / "o").string()), 0);
    const auto s = read_json(dir_ / "o" / "sweep.json");
    int ok = 0;
    for (const auto &p : s["points"]) {
        if (p["status"] == "ok") {
            ++ok;
            EXPECT_NEAR(p["R"].get<double>(), 1.05, 1e-12);
        } else {
            EXPECT_EQ(p["status"], "missing");
            EXPECT_TRUE(p["energies"][0].is_null());
        }
    }
    EXPECT_EQ(ok, 1);
    const auto csv = slurp(dir_ / "o" / "sweep.csv");
    EXPECT_NE(csv.find("0.1,0.15,nan"), std::string::npos);
}

TEST_F(CliTest, SweepSizeTunesStepAndParallelMatchesSerial) {
    json c = {{"model", {{"type", "random_ising"}, {"n", 3}, {"seed", 0}}},
              {"controls", "x_mixer"},
              {"initial_state", "plus"},
              {"gains", 1},
              {"depth", 60},
              {"alpha", {{"strategy", "fixed"}, {"values", {4}}}},
              {"target_index", 1},
              {"tracked", 2},
              {"sweep", {{"axis", "n"}, {"values", {3, 4}}, {"instances", 4}, {"dt_candidates", {0.5, 0.05, 0.01}}}}};
    const auto cfg = write_config(c);
    ASSERT_EQ(fqae("sweep --config " + cfg.string() + " --jobs 1 --out " + (dir_ / "s").string()), 0);
    ASSERT_EQ(fqae("sweep --config " + cfg.string() + " --jobs 3 --out " + (dir_ / "p").string()), 0);
    EXPECT_EQ(slurp(dir_ / "s" / "sweep.csv"), slurp(dir_ / "p" / "sweep.csv"));
    EXPECT_EQ(first_line(slurp(dir_ / "s" / "sweep.csv")),
              "n,dt,mean_fidelity,sem,mean_final_energy,instances,failed");
    const auto s = read_json(dir_ / "s" / "sweep.json");
    for (const auto &p : s["points"]) {
        EXPECT_EQ(p["lyapunov_violations"], 0);
        EXPECT_LT(p["dt"].get<double>(), 0.5);
    }
}

TEST_F(CliTest, SweepSeedWritesInstanceTraces) {
    json c = {{"model", {{"type", "random_ising"}, {"n", 4}, {"seed", 0}}},
              {"controls", "x_mixer"},
              {"initial_state", "plus"},
              {"gains", 1},
              {"depth", 40},
              {"dt", 0.01},
              {"alpha", {{"strategy", "fixed"}, {"values", {4}}}},
              {"target_index", 1},
              {"sweep", {{"axis", "seed"}, {"instances", 3}, {"seed_base", 5}}}};
    ASSERT_EQ(fqae("sweep --config " + write_config(c).string() + " --out " + (dir_ / "o").string()), 0);
    for (int s = 5; s < 8; ++s) {
        EXPECT_TRUE(fs::exists(dir_ / "o" / ("instance_" + std::to_string(s) + ".csv")));
    }
    const auto j = read_json(dir_ / "o" / "sweep.json");
    EXPECT_EQ(j["completed"], 3);
    EXPECT_TRUE(j.contains("fraction_above_0_4"));
    EXPECT_EQ(fqae("sweep --axis q --config " + write_config(c, "c2.json").string() + " --out " + (dir_ / "q").string()), 2);
}

TEST_F(CliTest, ShippedConfigsParse) {
    for (const auto &e : fs::directory_iterator(fs::path(FQAE_SOURCE_DIR) / "configs")) {
        EXPECT_NO_THROW(fqae::cli::load_config(e.path())) << e.path();
    }
}
