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

#include <set>
#include <sstream>

#include "fqae/feedback.hpp"
#include "fqae/models.hpp"
#include "fqae/spectrum.hpp"

using namespace fqae;

TEST(Ising, SmallInstanceDiagonal) {
    const auto h = build_ising(small_ising_spec());
    EXPECT_TRUE(h.is_hermitian());
    EXPECT_TRUE(h.is_diagonal());
    const double want[] = {3.5, -1.5, 0.5, -2.5};
    for (std::uint64_t b = 0; b < 4; ++b) {
        EXPECT_DOUBLE_EQ(expectation(StateVector::basis(2, b), h), want[b]);
    }
    const auto spec = reference_spectrum(h);
    EXPECT_DOUBLE_EQ(spec[1].value, -1.5);
    EXPECT_DOUBLE_EQ(fidelity(spec[1].vector, StateVector::product("01")), 1.0);
}

TEST(Ising, EdgeCases) {
    EXPECT_TRUE(build_ising({3, std::vector<double>(9, 0.0), {0, 0, 0}}).empty());
    const auto one = build_ising({1, {0.0}, {1.0}});
    EXPECT_EQ(one, PauliSum::from_term(PauliString::from_letters("Z"), 1.0));
    EXPECT_THROW(build_ising({2, {0, 1, 2, 0}, {0, 0}}), std::invalid_argument);
    EXPECT_THROW(build_ising({2, {1, 0, 0, 0}, {0, 0}}), std::invalid_argument);
    EXPECT_THROW(build_ising({2, {0, 0, 0}, {0, 0}}), DimensionError);
}

TEST(Ising, RandomInstancesAreDiagonalWithBasisEigenvectors) {
    const auto h = build_ising(random_ising(5, 3));
    EXPECT_TRUE(h.is_diagonal());
    for (const auto &e : reference_spectrum(h, 4)) {
        double biggest = 0.0;
        for (const auto &a : e.vector.amplitudes()) {
            biggest = std::max(biggest, std::abs(a));
        }
        EXPECT_DOUBLE_EQ(biggest, 1.0);
    }
}

TEST(Ising, RandomGeneratorReproducibleAndDistinct) {
    const auto a = random_ising(9, 4);
    const auto b = random_ising(9, 4);
    EXPECT_EQ(a.couplings, b.couplings);
    EXPECT_EQ(a.fields, b.fields);
    std::set<std::vector<double>> seen;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto spec = random_ising(9, s);
        for (double v : spec.couplings) {
            EXPECT_GE(v, -2.0);
            EXPECT_LE(v, 2.0);
        }
        seen.insert(spec.fields);
    }
    EXPECT_EQ(seen.size(), 20u);
    EXPECT_THROW(random_ising(1, 0), DimensionError);
}

TEST(Mfi, Structure) {
    const auto h = build_mfi({3, 1.0, 0.0, 0.0});
    const auto want = parse_pauli_sum("+1*ZZI +1*IZZ +1*ZIZ");
    EXPECT_EQ(h, want);
    const auto big = build_mfi({12, -1.0, 0.7, 0.35});
    EXPECT_EQ(big.size(), 36u);
    EXPECT_TRUE(big.is_hermitian());
    EXPECT_FALSE(big.is_diagonal());
    EXPECT_TRUE(build_mfi({4, 1.0, 0.0, 0.0}).is_diagonal());
    EXPECT_THROW(build_mfi({2, 1, 1, 1}), DimensionError);
}

TEST(Mfi, RandomInstances) {
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto m = random_mfi(s);
        EXPECT_EQ(m.J, -1.0);
        EXPECT_EQ(m.n, 12u);
        EXPECT_GE(m.h, 0.4);
        EXPECT_LE(m.h, 1.0);
        EXPECT_GE(m.g, 0.1);
        EXPECT_LE(m.g, 0.6);
    }
}

TEST(Hydrogen, CoefficientsMapToTerms) {
    const H2Spec s{1.05, {-0.5626, -0.248783, -0.248783, 0.00850998, 0.0, 0.199984}};
    const auto h = build_h2(s);
    EXPECT_EQ(h, parse_pauli_sum("-0.5626*II +0.199984*XX -0.248783*IZ -0.248783*ZI +0.00850998*ZZ"));
    EXPECT_TRUE(build_h2({}).empty());
    EXPECT_NEAR(reference_spectrum(h, 1)[0].value, -1.0904, 1e-4);
}

TEST(H2Table, ParseLookupAndMissingRows) {
    std::istringstream in("R,h0,h1,h2,h3,h4,h5\n# comment\n1.05, -0.5626,-0.248783,-0.248783,0.00850998,0,0.199984\r\n");
    const auto t = H2Table::parse(in);
    ASSERT_EQ(t.rows().size(), 1u);
    EXPECT_TRUE(t.contains(1.05));
    EXPECT_EQ(t.lookup(1.05).h[5], 0.199984);
    EXPECT_THROW((void)t.lookup(0.5), std::out_of_range);
    std::istringstream bad("R,h0\n1,2,3\n");
    EXPECT_THROW(H2Table::parse(bad), ConfigError);
    std::istringstream noheader("1.05,1,2,3,4,5,6\n");
    EXPECT_THROW(H2Table::parse(noheader), ConfigError);
    EXPECT_THROW(H2Table::load("/nonexistent/table.csv"), ConfigError);
}

TEST(Controls, Families) {
    const auto y = standard_controls("y_per_qubit", 2);
    ASSERT_EQ(y.size(), 2u);
    EXPECT_EQ(y[0], PauliSum::from_term(PauliString::from_letters("YI"), 1.0));
    EXPECT_EQ(y[1], PauliSum::from_term(PauliString::from_letters("IY"), 1.0));
    const auto g = standard_controls("global_xyz", 12);
    ASSERT_EQ(g.size(), 3u);
    for (const auto &c : g) {
        EXPECT_EQ(c.size(), 12u);
    }
    const auto x = standard_controls("x_mixer", 4);
    ASSERT_EQ(x.size(), 1u);
    EXPECT_TRUE(is_standard_mixer(x[0]));
    EXPECT_EQ(standard_controls("yz_per_qubit", 3).size(), 6u);
    EXPECT_EQ(standard_controls("z_per_qubit", 3)[2], PauliSum::from_term(PauliString::from_letters("IIZ"), 1.0));
    EXPECT_THROW(standard_controls("nope", 2), std::invalid_argument);
}
