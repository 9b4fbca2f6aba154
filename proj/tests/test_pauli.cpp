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

#include <random>

#include "fqae/pauli.hpp"
#include "oracle.hpp"

using fqae::Complex;
using fqae::Pauli;
using fqae::PauliString;
using fqae::PauliSum;
using fqae::PauliTerm;

namespace {

PauliSum sum_of(std::size_t n, std::initializer_list<std::pair<const char *, double>> ts) {
    std::vector<PauliTerm> terms;
    for (const auto &[s, c] : ts) {
        terms.push_back({PauliString::from_letters(s), c});
    }
    return PauliSum(n, std::move(terms));
}

PauliSum small_ising() { return sum_of(2, {{"ZI", 1.0}, {"IZ", 2.0}, {"ZZ", 0.5}}); }

} // namespace

TEST(PauliString, LettersRoundTripAndQubitOrder) {
    const auto p = PauliString::from_letters("XYZI");
    EXPECT_EQ(p.to_string(), "XYZI");
    EXPECT_EQ(p.at(0), Pauli::X);
    EXPECT_EQ(p.at(3), Pauli::I);
    // qubit 0 is the most significant bit
    EXPECT_EQ(PauliString::single(3, 0, Pauli::X).x_mask(), 0b100u);
    EXPECT_EQ(p.weight(), 3u);
    EXPECT_EQ(p.y_count(), 1);
}

TEST(PauliString, RejectsBadInput) {
    EXPECT_THROW(PauliString::from_letters("XQ"), std::invalid_argument);
    EXPECT_THROW(PauliString(0), fqae::DimensionError);
    EXPECT_THROW(PauliString(64), fqae::DimensionError);
}

TEST(MulTerms, SingleQubitTable) {
    const auto xy = fqae::mul_terms({PauliString::from_letters("X"), 1.0},
                                    {PauliString::from_letters("Y"), 1.0});
    EXPECT_EQ(xy.ops.to_string(), "Z");
    EXPECT_EQ(xy.coeff, Complex(0, 1));
    const auto zz = fqae::mul_terms({PauliString::from_letters("Z"), 1.0},
                                    {PauliString::from_letters("Z"), 1.0});
    EXPECT_TRUE(zz.ops.is_identity());
    EXPECT_EQ(zz.coeff, Complex(1, 0));
}

TEST(MulTerms, FactorwiseSign) {
    const auto r = fqae::mul_terms({PauliString::from_letters("XI"), 1.0},
                                   {PauliString::from_letters("ZZ"), 1.0});
    EXPECT_EQ(r.ops.to_string(), "YZ");
    EXPECT_EQ(r.coeff, Complex(0, -1));
}

TEST(MulTerms, AllPairsMatchDenseProduct) {
    const char *ls = "IXYZ";
    for (int a = 0; a < 16; ++a) {
        for (int b = 0; b < 16; ++b) {
            const std::string sa{ls[a / 4], ls[a % 4]};
            const std::string sb{ls[b / 4], ls[b % 4]};
            const auto r = fqae::mul_terms({PauliString::from_letters(sa), 1.0},
                                           {PauliString::from_letters(sb), 1.0});
            const auto want = oracle::letters(sa) * oracle::letters(sb);
            const auto got = r.coeff * oracle::letters(r.ops.to_string());
            EXPECT_LT(oracle::max_abs_diff(want, got), 1e-15) << sa << "*" << sb;
        }
    }
}

TEST(PauliSum, CanonicalOrderMergeAndPrune) {
    const auto s = sum_of(2, {{"ZI", 1.0}, {"XX", 2.0}, {"ZI", -1.0}, {"IY", 1e-15}, {"II", 3.0}});
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s.terms()[0].ops.to_string(), "II");
    EXPECT_EQ(s.terms()[1].ops.to_string(), "XX");
}

TEST(PauliSum, OrderingIsLexicographicFromQubitZero) {
    const auto s = sum_of(2, {{"ZI", 1.0}, {"IZ", 1.0}, {"XY", 1.0}, {"YX", 1.0}, {"IX", 1.0}});
    std::vector<std::string> got;
    for (const auto &t : s.terms()) {
        got.push_back(t.ops.to_string());
    }
    EXPECT_EQ(got, (std::vector<std::string>{"IX", "IZ", "XY", "YX", "ZI"}));
}

TEST(PauliSum, RejectsMismatchedQubitCounts) {
    EXPECT_THROW(small_ising() + PauliSum::identity(3), fqae::DimensionError);
    EXPECT_THROW(PauliSum(2, {{PauliString::from_letters("X"), 1.0}}),
                 fqae::DimensionError);
}

TEST(Commutator, SmallIsingWithY0) {
    const auto a = sum_of(2, {{"YI", 1.0}});
    const auto got = fqae::commutator_i(a, small_ising());
    EXPECT_EQ(got, sum_of(2, {{"XI", -2.0}, {"XZ", -1.0}}));
}

TEST(Commutator, TrivialCases) {
    const auto h = small_ising();
    EXPECT_TRUE(fqae::commutator_i(h, h).empty());
    EXPECT_TRUE(fqae::commutator_i(sum_of(2, {{"ZI", 1.0}}), sum_of(2, {{"IZ", 1.0}})).empty());
}

TEST(OneNorm, ExcludesIdentity) {
    EXPECT_DOUBLE_EQ(fqae::one_norm(small_ising()), 3.5);
    EXPECT_DOUBLE_EQ(fqae::one_norm(PauliSum(2)), 0.0);
    EXPECT_DOUBLE_EQ(fqae::one_norm(sum_of(1, {{"Z", -3.0}})), 3.0);
    EXPECT_DOUBLE_EQ(fqae::one_norm(sum_of(1, {{"I", 5.0}, {"X", 1.0}})), 1.0);
}

TEST(TextForm, RoundTrip) {
    const auto h = sum_of(3, {{"ZZI", -1.0}, {"XII", 0.7}, {"IIZ", 0.35}});
    const auto text = fqae::format_pauli_sum(h);
    EXPECT_EQ(fqae::parse_pauli_sum(text), h);
    EXPECT_EQ(fqae::parse_pauli_sum("", 2), PauliSum(2));
    EXPECT_THROW(fqae::parse_pauli_sum("1*XX 2*ZZ"), std::invalid_argument);
    EXPECT_THROW(fqae::parse_pauli_sum("1*XX +2*Z"), std::invalid_argument);
}

TEST(Hermitian, Flag) {
    EXPECT_TRUE(small_ising().is_hermitian());
    EXPECT_FALSE(PauliSum::from_term(PauliString::from_letters("X"), Complex(0, 1)).is_hermitian());
}
