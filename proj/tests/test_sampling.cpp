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

#include <gtest/gtest.h>

#include <cmath>

#include "fqae/sampling.hpp"

using fqae::HadamardPart;
using fqae::PauliString;
using fqae::ShotBudget;
using fqae::StateVector;

namespace {
std::uint64_t splitmix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}
} // namespace

TEST(CounterRng, FollowsSplitmixRecurrence) {
    const std::uint64_t seed = 42;
    const std::uint64_t stream = 7;
    std::uint64_t key =
        splitmix(splitmix(seed) ^ (stream * 0xD1B54A32D192ED03ull + 0x9E3779B97F4A7C15ull));
    fqae::CounterRng rng(seed, stream);
    for (int i = 0; i < 5; ++i) {
        key += 0x9E3779B97F4A7C15ull;
        EXPECT_EQ(rng.next(), splitmix(key));
    }
}

TEST(CounterRng, StreamsDiffer) {
    fqae::CounterRng a(1, 0);
    fqae::CounterRng b(1, 1);
    fqae::CounterRng c(2, 0);
    const auto x = a.next();
    EXPECT_NE(x, b.next());
    EXPECT_NE(x, c.next());
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(ShotBudget, Validation) {
    EXPECT_THROW(ShotBudget::sampled(0, 1), std::invalid_argument);
    EXPECT_TRUE(ShotBudget::exact_mode().exact);
    EXPECT_FALSE(ShotBudget::sampled(10, 1).exact);
}

TEST(PauliSampling, DeterministicOutcome) {
    const auto z = PauliString::from_letters("Z");
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        EXPECT_EQ(fqae::sample_pauli_expectation(StateVector::basis(1, 0), z,
                                                 ShotBudget::sampled(17, seed), 3),
                  1.0);
    }
}

TEST(PauliSampling, ZeroMeanConcentrates) {
    const auto z = PauliString::from_letters("Z");
    int inside = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const double v = fqae::sample_pauli_expectation(
            StateVector::plus(1), z, ShotBudget::sampled(10000, seed), 0);
        inside += std::abs(v) < 0.05 ? 1 : 0;
    }
    EXPECT_GE(inside, 198);
}

TEST(PauliSampling, ExactModeIsBitForBit) {
    const auto s = StateVector::product("+0");
    const auto o = PauliString::from_letters("XZ");
    EXPECT_EQ(fqae::sample_pauli_expectation(s, o, ShotBudget::exact_mode(), 9),
              fqae::pauli_expectation(s, o));
    EXPECT_THROW(fqae::sample_pauli_expectation(s, PauliString(2), ShotBudget::exact_mode(), 0),
                 std::invalid_argument);
}

TEST(HadamardTest, EigenstateGivesSign) {
    const auto z = PauliString::from_letters("Z");
    const auto one = StateVector::basis(1, 1);
    EXPECT_EQ(fqae::sample_hadamard_test(one, z, one, HadamardPart::Real,
                                         ShotBudget::sampled(50, 3), 0),
              -1.0);
}

TEST(HadamardTest, ImaginaryPartOfRealPairIsZeroMean) {
    const auto x = PauliString::from_letters("X");
    const auto a = StateVector::plus(1);
    const auto b = StateVector::basis(1, 0);
    double acc = 0.0;
    const int seeds = 400;
    for (int s = 0; s < seeds; ++s) {
        acc += fqae::sample_hadamard_test(a, x, b, HadamardPart::Imag,
                                          ShotBudget::sampled(100, s), 1);
    }
    // σ of each estimate is 0.1, so the mean has σ = 0.005
    EXPECT_LT(std::abs(acc / seeds), 0.02);
    EXPECT_EQ(fqae::sample_hadamard_test(a, x, b, HadamardPart::Imag,
                                         ShotBudget::exact_mode(), 0),
              0.0);
}

TEST(ZeroFraction, Endpoints) {
    EXPECT_EQ(fqae::sample_zero_fraction(1.0, ShotBudget::sampled(33, 1), 0), 1.0);
    EXPECT_EQ(fqae::sample_zero_fraction(0.0, ShotBudget::sampled(33, 1), 0), 0.0);
    EXPECT_THROW(fqae::sample_zero_fraction(1.5, ShotBudget::exact_mode(), 0),
                 std::invalid_argument);
}

TEST(ZeroFraction, HalfConcentrates) {
    int inside = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const double v = fqae::sample_zero_fraction(0.5, ShotBudget::sampled(4000, seed), 0);
        inside += std::abs(v - 0.5) < 0.03 ? 1 : 0;
    }
    EXPECT_GE(inside, 198);
}

TEST(ShotSampler, ReproducibleAndAdvancing) {
    const auto s = StateVector::product("+-");
    const auto o = PauliString::from_letters("XI");
    fqae::ShotSampler a(ShotBudget::sampled(64, 5));
    fqae::ShotSampler b(ShotBudget::sampled(64, 5));
    std::vector<double> xs;
    std::vector<double> ys;
    for (int i = 0; i < 10; ++i) {
        xs.push_back(a.pauli_expectation(s, PauliString::from_letters("ZX")));
        ys.push_back(b.pauli_expectation(s, PauliString::from_letters("ZX")));
    }
    EXPECT_EQ(xs, ys);
    // consecutive calls use different sub-streams
    EXPECT_FALSE(std::all_of(xs.begin(), xs.end(), [&](double v) { return v == xs[0]; }));
    EXPECT_EQ(a.pauli_expectation(s, o), 1.0);
}
