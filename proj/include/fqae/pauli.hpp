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
 * @file pauli.hpp
 * Symbolic algebra over n-qubit Pauli strings and weighted sums of them.
 *
 * Qubit 0 is the leftmost tensor factor and the most significant bit of a
 * computational basis label, so "ZI" acts with Z on qubit 0 and the basis
 * state |01> has index 1.
 */
#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <complex>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fqae/error.hpp"

namespace fqae {

using Complex = std::complex<double>;

/// Coefficients below this magnitude are dropped during canonicalization.
inline constexpr double kPruneThreshold = 1e-14;

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

inline char pauli_letter(Pauli p) { return "IXYZ"[static_cast<int>(p)]; }

/**
 * @brief Tensor product of single-qubit Paulis stored as X/Z bit masks.
 *
 * Letter q is encoded in bit (n-1-q) of the masks: I=(0,0), X=(1,0),
 * Y=(1,1), Z=(0,1). The operator equals i^{#Y} X^x Z^z, which is what the
 * state kernels and the product rule rely on.
 */
class PauliString {
  public:
    static constexpr std::size_t kMaxQubits = 63;

    PauliString() = default;
    explicit PauliString(std::size_t num_qubits) : n_(num_qubits) {
        if (num_qubits == 0 || num_qubits > kMaxQubits) {
            throw DimensionError("PauliString: qubit count must be in [1, 63]");
        }
    }

    static PauliString from_masks(std::size_t num_qubits, std::uint64_t x,
                                  std::uint64_t z) {
        PauliString s(num_qubits);
        const std::uint64_t full = s.full_mask();
        if ((x & ~full) != 0 || (z & ~full) != 0) {
            throw DimensionError("PauliString: mask exceeds qubit count");
        }
        s.x_ = x;
        s.z_ = z;
        return s;
    }

    static PauliString from_letters(std::string_view letters) {
        PauliString s(letters.size());
        for (std::size_t q = 0; q < letters.size(); ++q) {
            switch (letters[q]) {
            case 'I':
                break;
            case 'X':
                s.set(q, Pauli::X);
                break;
            case 'Y':
                s.set(q, Pauli::Y);
                break;
            case 'Z':
                s.set(q, Pauli::Z);
                break;
            default:
                throw std::invalid_argument(
                    "PauliString: invalid letter '" +
                    std::string(1, letters[q]) + "'");
            }
        }
        return s;
    }

    static PauliString single(std::size_t num_qubits, std::size_t qubit,
                              Pauli p) {
        PauliString s(num_qubits);
        s.set(qubit, p);
        return s;
    }

    [[nodiscard]] std::size_t num_qubits() const { return n_; }
    [[nodiscard]] std::uint64_t x_mask() const { return x_; }
    [[nodiscard]] std::uint64_t z_mask() const { return z_; }
    [[nodiscard]] bool is_identity() const { return (x_ | z_) == 0; }
    /// Only I and Z letters (diagonal in the computational basis).
    [[nodiscard]] bool is_diagonal() const { return x_ == 0; }
    [[nodiscard]] int y_count() const { return std::popcount(x_ & z_); }
    [[nodiscard]] std::size_t weight() const {
        return static_cast<std::size_t>(std::popcount(x_ | z_));
    }

    [[nodiscard]] Pauli at(std::size_t qubit) const {
        const std::uint64_t bit = bit_of(qubit);
        const bool x = (x_ & bit) != 0;
        const bool z = (z_ & bit) != 0;
        if (x) {
            return z ? Pauli::Y : Pauli::X;
        }
        return z ? Pauli::Z : Pauli::I;
    }

    void set(std::size_t qubit, Pauli p) {
        const std::uint64_t bit = bit_of(qubit);
        x_ &= ~bit;
        z_ &= ~bit;
        if (p == Pauli::X || p == Pauli::Y) {
            x_ |= bit;
        }
        if (p == Pauli::Z || p == Pauli::Y) {
            z_ |= bit;
        }
    }

    [[nodiscard]] bool commutes_with(const PauliString &other) const {
        detail::require_same_qubits(n_, other.n_, "PauliString::commutes_with");
        return std::popcount((x_ & other.z_) ^ (z_ & other.x_)) % 2 == 0;
    }

    [[nodiscard]] std::string to_string() const {
        std::string out(n_, 'I');
        for (std::size_t q = 0; q < n_; ++q) {
            out[q] = pauli_letter(at(q));
        }
        return out;
    }

    /// Basis-index bit that carries qubit `qubit`.
    [[nodiscard]] std::uint64_t bit_of(std::size_t qubit) const {
        if (qubit >= n_) {
            throw DimensionError("PauliString: qubit index out of range");
        }
        return std::uint64_t{1} << (n_ - 1 - qubit);
    }

    friend bool operator==(const PauliString &, const PauliString &) = default;

    /// Lexicographic over letters from qubit 0, with I < X < Y < Z.
    friend std::strong_ordering operator<=>(const PauliString &a,
                                            const PauliString &b) {
        if (a.n_ != b.n_) {
            return a.n_ <=> b.n_;
        }
        const std::uint64_t diff = (a.x_ ^ b.x_) | (a.z_ ^ b.z_);
        if (diff == 0) {
            return std::strong_ordering::equal;
        }
        const std::uint64_t top = std::uint64_t{1}
                                  << (63 - std::countl_zero(diff));
        return code(a.x_ & top, a.z_ & top) <=> code(b.x_ & top, b.z_ & top);
    }

  private:
    static int code(std::uint64_t x, std::uint64_t z) {
        if (x != 0) {
            return z != 0 ? 2 : 1;
        }
        return z != 0 ? 3 : 0;
    }

    [[nodiscard]] std::uint64_t full_mask() const {
        return n_ == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n_) - 1;
    }

    std::size_t n_ = 0;
    std::uint64_t x_ = 0;
    std::uint64_t z_ = 0;
};

/// i^k for any integer k.
inline Complex i_power(int k) {
    switch (((k % 4) + 4) % 4) {
    case 0:
        return {1.0, 0.0};
    case 1:
        return {0.0, 1.0};
    case 2:
        return {-1.0, 0.0};
    default:
        return {0.0, -1.0};
    }
}

struct PauliTerm {
    PauliString ops;
    Complex coeff{1.0, 0.0};
};

/**
 * @brief Operator product a·b as a single weighted Pauli string.
 *
 * Uses a = i^{ya} X^{xa} Z^{za}; moving Z^{za} past X^{xb} costs
 * (-1)^{|za & xb|}, and the result is re-expressed relative to its own Y
 * count.
 */
inline PauliTerm mul_terms(const PauliTerm &a, const PauliTerm &b) {
    detail::require_same_qubits(a.ops.num_qubits(), b.ops.num_qubits(),
                                "mul_terms");
    const std::uint64_t x = a.ops.x_mask() ^ b.ops.x_mask();
    const std::uint64_t z = a.ops.z_mask() ^ b.ops.z_mask();
    PauliString ops = PauliString::from_masks(a.ops.num_qubits(), x, z);
    const int swaps = std::popcount(a.ops.z_mask() & b.ops.x_mask());
    const int k = a.ops.y_count() + b.ops.y_count() - ops.y_count() + 2 * swaps;
    return {ops, a.coeff * b.coeff * i_power(k)};
}

/**
 * @brief Canonical weighted sum of Pauli strings on a fixed qubit count.
 *
 * Terms are sorted by PauliString ordering, each string appears once, and
 * coefficients with magnitude below kPruneThreshold are dropped. Instances
 * are immutable once built.
 */
class PauliSum {
  public:
    PauliSum() = default;
    explicit PauliSum(std::size_t num_qubits) : n_(num_qubits) {
        if (num_qubits == 0 || num_qubits > PauliString::kMaxQubits) {
            throw DimensionError("PauliSum: qubit count must be in [1, 63]");
        }
    }

    PauliSum(std::size_t num_qubits, std::vector<PauliTerm> terms)
        : n_(num_qubits), terms_(std::move(terms)) {
        if (num_qubits == 0 || num_qubits > PauliString::kMaxQubits) {
            throw DimensionError("PauliSum: qubit count must be in [1, 63]");
        }
        for (const auto &t : terms_) {
            detail::require_same_qubits(n_, t.ops.num_qubits(), "PauliSum");
        }
        canonicalize();
    }

    static PauliSum from_term(PauliString ops, Complex coeff) {
        const std::size_t n = ops.num_qubits();
        return PauliSum(n, {PauliTerm{ops, coeff}});
    }

    static PauliSum identity(std::size_t num_qubits, double coeff = 1.0) {
        return from_term(PauliString(num_qubits), coeff);
    }

    [[nodiscard]] std::size_t num_qubits() const { return n_; }
    [[nodiscard]] std::span<const PauliTerm> terms() const { return terms_; }
    [[nodiscard]] std::size_t size() const { return terms_.size(); }
    [[nodiscard]] bool empty() const { return terms_.empty(); }

    [[nodiscard]] bool is_hermitian(double tol = kPruneThreshold) const {
        return std::all_of(terms_.begin(), terms_.end(), [tol](const auto &t) {
            return std::abs(t.coeff.imag()) <= tol;
        });
    }

    [[nodiscard]] bool is_diagonal() const {
        return std::all_of(terms_.begin(), terms_.end(),
                           [](const auto &t) { return t.ops.is_diagonal(); });
    }

    [[nodiscard]] Complex identity_coefficient() const {
        for (const auto &t : terms_) {
            if (t.ops.is_identity()) {
                return t.coeff;
            }
        }
        return {0.0, 0.0};
    }

    /// Sum of |c_k| over non-identity terms.
    [[nodiscard]] double one_norm() const {
        double acc = 0.0;
        for (const auto &t : terms_) {
            if (!t.ops.is_identity()) {
                acc += std::abs(t.coeff);
            }
        }
        return acc;
    }

    friend PauliSum operator+(const PauliSum &a, const PauliSum &b) {
        detail::require_same_qubits(a.n_, b.n_, "PauliSum::operator+");
        std::vector<PauliTerm> all(a.terms_);
        all.insert(all.end(), b.terms_.begin(), b.terms_.end());
        return PauliSum(a.n_, std::move(all));
    }

    friend PauliSum operator*(Complex s, const PauliSum &a) {
        std::vector<PauliTerm> out(a.terms_);
        for (auto &t : out) {
            t.coeff *= s;
        }
        return PauliSum(a.n_, std::move(out));
    }

    friend PauliSum operator*(const PauliSum &a, const PauliSum &b) {
        detail::require_same_qubits(a.n_, b.n_, "PauliSum::operator*");
        std::vector<PauliTerm> out;
        out.reserve(a.size() * b.size());
        for (const auto &ta : a.terms_) {
            for (const auto &tb : b.terms_) {
                out.push_back(mul_terms(ta, tb));
            }
        }
        return PauliSum(a.n_, std::move(out));
    }

    friend bool operator==(const PauliSum &a, const PauliSum &b) {
        if (a.n_ != b.n_ || a.terms_.size() != b.terms_.size()) {
            return false;
        }
        for (std::size_t k = 0; k < a.terms_.size(); ++k) {
            if (a.terms_[k].ops != b.terms_[k].ops ||
                a.terms_[k].coeff != b.terms_[k].coeff) {
                return false;
            }
        }
        return true;
    }

  private:
    void canonicalize() {
        std::stable_sort(terms_.begin(), terms_.end(),
                         [](const auto &a, const auto &b) {
                             return a.ops < b.ops;
                         });
        std::vector<PauliTerm> merged;
        merged.reserve(terms_.size());
        for (const auto &t : terms_) {
            if (!merged.empty() && merged.back().ops == t.ops) {
                merged.back().coeff += t.coeff;
            } else {
                merged.push_back(t);
            }
        }
        std::erase_if(merged, [](const auto &t) {
            return std::abs(t.coeff) < kPruneThreshold;
        });
        for (auto &t : merged) {
            if (std::abs(t.coeff.real()) < kPruneThreshold) {
                t.coeff.real(0.0);
            }
            if (std::abs(t.coeff.imag()) < kPruneThreshold) {
                t.coeff.imag(0.0);
            }
        }
        terms_ = std::move(merged);
    }

    std::size_t n_ = 0;
    std::vector<PauliTerm> terms_;
};

/// Canonical expansion of i(ab - ba). Only anticommuting pairs survive,
/// each contributing 2i·(a_j b_k).
inline PauliSum commutator_i(const PauliSum &a, const PauliSum &b) {
    detail::require_same_qubits(a.num_qubits(), b.num_qubits(),
                                "commutator_i");
    std::vector<PauliTerm> out;
    for (const auto &ta : a.terms()) {
        for (const auto &tb : b.terms()) {
            if (ta.ops.commutes_with(tb.ops)) {
                continue;
            }
            PauliTerm prod = mul_terms(ta, tb);
            prod.coeff *= Complex(0.0, 2.0);
            out.push_back(prod);
        }
    }
    return PauliSum(a.num_qubits(), std::move(out));
}

inline double one_norm(const PauliSum &h) { return h.one_norm(); }

/**
 * @brief Renders a hermitian sum as `+1*ZI +2*IZ +0.5*ZZ`.
 *
 * Coefficients carry 12 significant digits; an empty sum renders as "".
 */
inline std::string format_pauli_sum(const PauliSum &h) {
    if (!h.is_hermitian()) {
        throw std::invalid_argument(
            "format_pauli_sum: text form holds real coefficients only");
    }
    std::string out;
    char buf[48];
    for (const auto &t : h.terms()) {
        const double c = t.coeff.real();
        std::snprintf(buf, sizeof(buf), "%c%.12g*", c < 0 ? '-' : '+',
                      std::abs(c));
        if (!out.empty()) {
            out += ' ';
        }
        out += buf;
        out += t.ops.to_string();
    }
    return out;
}

/**
 * @brief Parses the text form produced by format_pauli_sum.
 *
 * Every term is `<sign><number>*<letters>`; the sign of the first term may
 * be omitted. An empty string needs `num_qubits` to be supplied.
 */
inline PauliSum parse_pauli_sum(std::string_view text,
                                std::size_t num_qubits = 0) {
    std::vector<PauliTerm> terms;
    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < text.size() &&
               (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\n' ||
                text[pos] == '\r')) {
            ++pos;
        }
    };
    auto fail = [&](const std::string &why) {
        throw std::invalid_argument("parse_pauli_sum: " + why + " at offset " +
                                    std::to_string(pos));
    };
    skip_ws();
    while (pos < text.size()) {
        double sign = 1.0;
        if (text[pos] == '+' || text[pos] == '-') {
            sign = text[pos] == '-' ? -1.0 : 1.0;
            ++pos;
            skip_ws();
        } else if (!terms.empty()) {
            fail("expected '+' or '-'");
        }
        double value = 0.0;
        const auto [end, ec] =
            std::from_chars(text.data() + pos, text.data() + text.size(), value);
        if (ec != std::errc()) {
            fail("expected a number");
        }
        pos = static_cast<std::size_t>(end - text.data());
        skip_ws();
        if (pos >= text.size() || text[pos] != '*') {
            fail("expected '*'");
        }
        ++pos;
        skip_ws();
        const std::size_t start = pos;
        while (pos < text.size() && std::string_view("IXYZ").find(text[pos]) !=
                                        std::string_view::npos) {
            ++pos;
        }
        if (pos == start) {
            fail("expected Pauli letters");
        }
        const std::string_view letters = text.substr(start, pos - start);
        if (num_qubits == 0) {
            num_qubits = letters.size();
        } else if (letters.size() != num_qubits) {
            throw DimensionError("parse_pauli_sum: term '" +
                                 std::string(letters) + "' has wrong length");
        }
        terms.push_back({PauliString::from_letters(letters), sign * value});
        skip_ws();
    }
    if (num_qubits == 0) {
        throw std::invalid_argument(
            "parse_pauli_sum: empty sum needs an explicit qubit count");
    }
    return PauliSum(num_qubits, std::move(terms));
}

} // namespace fqae
