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
 * @file state.hpp
 * Dense statevector with index-permutation kernels for Pauli strings.
 */
#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fqae/error.hpp"
#include "fqae/pauli.hpp"

namespace fqae {

using Amplitudes = std::vector<Complex>;

/// Largest register the dense engine accepts (2^26 amplitudes = 1 GiB).
inline constexpr std::size_t kMaxStateQubits = 26;

/**
 * @brief Unit-norm amplitude vector over n qubits.
 *
 * Amplitude index b has qubit 0 as its most significant bit.
 */
class StateVector {
  public:
    StateVector() = default;

    /// Computational basis state |index>.
    static StateVector basis(std::size_t num_qubits, std::uint64_t index) {
        check_qubits(num_qubits);
        StateVector s;
        s.n_ = num_qubits;
        s.amps_.assign(std::size_t{1} << num_qubits, Complex{});
        if (index >= s.amps_.size()) {
            throw DimensionError("StateVector::basis: index out of range");
        }
        s.amps_[index] = 1.0;
        return s;
    }

    /**
     * @brief Product state from one character per qubit.
     *
     * Accepts '0', '1', '+', '-'; so "01" is |01> and "++" is |++>.
     */
    static StateVector product(std::string_view labels) {
        const std::size_t n = labels.size();
        check_qubits(n);
        StateVector s;
        s.n_ = n;
        s.amps_.assign(std::size_t{1} << n, Complex{1.0, 0.0});
        const double h = 1.0 / std::sqrt(2.0);
        for (std::size_t q = 0; q < n; ++q) {
            const std::uint64_t bit = std::uint64_t{1} << (n - 1 - q);
            const char c = labels[q];
            if (c != '0' && c != '1' && c != '+' && c != '-') {
                throw std::invalid_argument(
                    "StateVector::product: labels must be 0, 1, + or -");
            }
            for (std::size_t b = 0; b < s.amps_.size(); ++b) {
                const bool one = (b & bit) != 0;
                switch (c) {
                case '0':
                    s.amps_[b] *= one ? 0.0 : 1.0;
                    break;
                case '1':
                    s.amps_[b] *= one ? 1.0 : 0.0;
                    break;
                case '+':
                    s.amps_[b] *= h;
                    break;
                default:
                    s.amps_[b] *= one ? -h : h;
                    break;
                }
            }
        }
        return s;
    }

    /// |+>^{⊗n}.
    static StateVector plus(std::size_t num_qubits) {
        return product(std::string(num_qubits, '+'));
    }

    /// Wraps raw amplitudes; rescales to unit norm when `normalize` is set,
    /// otherwise the norm must already be 1 within 1e-10.
    static StateVector from_amplitudes(Amplitudes amps, bool normalize = false) {
        const std::size_t dim = amps.size();
        if (dim < 2 || !std::has_single_bit(dim)) {
            throw DimensionError(
                "StateVector: amplitude count must be a power of two >= 2");
        }
        StateVector s;
        s.n_ = static_cast<std::size_t>(std::countr_zero(dim));
        check_qubits(s.n_);
        s.amps_ = std::move(amps);
        const double nrm = s.norm_sq();
        if (normalize) {
            if (!(nrm > 0.0) || !std::isfinite(nrm)) {
                throw std::invalid_argument("StateVector: cannot normalize");
            }
            const double scale = 1.0 / std::sqrt(nrm);
            for (auto &a : s.amps_) {
                a *= scale;
            }
        } else if (std::abs(nrm - 1.0) > 1e-10) {
            throw std::invalid_argument("StateVector: amplitudes not unit norm");
        }
        return s;
    }

    [[nodiscard]] std::size_t num_qubits() const { return n_; }
    [[nodiscard]] std::size_t dimension() const { return amps_.size(); }
    [[nodiscard]] std::span<const Complex> amplitudes() const { return amps_; }
    [[nodiscard]] std::span<Complex> amplitudes_mut() { return amps_; }
    [[nodiscard]] Complex operator[](std::size_t i) const { return amps_[i]; }

    [[nodiscard]] double norm_sq() const {
        double acc = 0.0;
        for (const auto &a : amps_) {
            acc += std::norm(a);
        }
        return acc;
    }

  private:
    static void check_qubits(std::size_t n) {
        if (n == 0 || n > kMaxStateQubits) {
            throw DimensionError("StateVector: qubit count must be in [1, " +
                                 std::to_string(kMaxStateQubits) + "]");
        }
    }

    std::size_t n_ = 0;
    Amplitudes amps_;
};

namespace detail {

/// Sign (-1)^{|b & z|}.
inline double parity_sign(std::uint64_t b, std::uint64_t z) {
    return (std::popcount(b & z) & 1) != 0 ? -1.0 : 1.0;
}

inline void check_pauli_dims(const PauliString &ops, std::size_t n,
                             const char *what) {
    require_same_qubits(ops.num_qubits(), n, what);
}

} // namespace detail

/// out = O·in, where O|b> = i^{#Y} (-1)^{|b & z|} |b ^ x>.
inline void apply_pauli_into(const PauliString &ops, std::span<const Complex> in,
                             std::span<Complex> out) {
    const std::uint64_t x = ops.x_mask();
    const std::uint64_t z = ops.z_mask();
    const Complex global = i_power(ops.y_count());
    for (std::uint64_t b = 0; b < in.size(); ++b) {
        out[b ^ x] = global * detail::parity_sign(b, z) * in[b];
    }
}

/// O|ψ> as a raw amplitude vector.
inline Amplitudes apply_pauli(const PauliString &ops, const StateVector &state) {
    detail::check_pauli_dims(ops, state.num_qubits(), "apply_pauli");
    Amplitudes out(state.dimension());
    apply_pauli_into(ops, state.amplitudes(), out);
    return out;
}

/// H|ψ> as a raw (unnormalized) amplitude vector.
inline Amplitudes apply_sum(const PauliSum &h, std::span<const Complex> in) {
    Amplitudes out(in.size());
    for (const auto &t : h.terms()) {
        const std::uint64_t x = t.ops.x_mask();
        const std::uint64_t z = t.ops.z_mask();
        const Complex c = t.coeff * i_power(t.ops.y_count());
        for (std::uint64_t b = 0; b < in.size(); ++b) {
            out[b ^ x] += c * detail::parity_sign(b, z) * in[b];
        }
    }
    return out;
}

inline Amplitudes apply_sum(const PauliSum &h, const StateVector &state) {
    detail::require_same_qubits(h.num_qubits(), state.num_qubits(),
                                "apply_sum");
    return apply_sum(h, state.amplitudes());
}

/**
 * @brief In place |ψ> <- exp(-i·angle·O)|ψ> = cos(angle)|ψ> - i sin(angle) O|ψ>.
 */
inline void apply_pauli_exp_inplace(StateVector &state, const PauliString &ops,
                                    double angle) {
    detail::check_pauli_dims(ops, state.num_qubits(), "apply_pauli_exp");
    if (!std::isfinite(angle)) {
        throw std::invalid_argument("apply_pauli_exp: angle is not finite");
    }
    if (angle == 0.0) {
        return;
    }
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    auto amps = state.amplitudes_mut();
    const std::uint64_t x = ops.x_mask();
    const std::uint64_t z = ops.z_mask();
    if (x == 0) {
        const Complex plus(c, -s);
        const Complex minus(c, s);
        for (std::uint64_t b = 0; b < amps.size(); ++b) {
            amps[b] *= detail::parity_sign(b, z) > 0 ? plus : minus;
        }
        return;
    }
    // (O ψ)[b] = phase(b ^ x) ψ[b ^ x]; pairs are visited once via the top
    // bit of x.
    const Complex global = i_power(ops.y_count());
    const Complex minus_i_s(0.0, -s);
    const std::uint64_t top = std::uint64_t{1} << (63 - std::countl_zero(x));
    for (std::uint64_t b = 0; b < amps.size(); ++b) {
        if ((b & top) != 0) {
            continue;
        }
        const std::uint64_t p = b ^ x;
        const Complex a0 = amps[b];
        const Complex a1 = amps[p];
        const Complex o_at_b = global * detail::parity_sign(p, z) * a1;
        const Complex o_at_p = global * detail::parity_sign(b, z) * a0;
        amps[b] = c * a0 + minus_i_s * o_at_b;
        amps[p] = c * a1 + minus_i_s * o_at_p;
    }
}

inline StateVector apply_pauli_exp(StateVector state, const PauliString &ops,
                                   double angle) {
    apply_pauli_exp_inplace(state, ops, angle);
    return state;
}

/**
 * @brief First-order product formula, repeated `slices` times. Each slice
 * applies the diagonal terms together as one exact phase and then
 * exp(-i c_k (t/slices) O_k) for the remaining terms in canonical order.
 */
inline void apply_sum_trotter_inplace(StateVector &state, const PauliSum &h,
                                      double t, int slices = 1) {
    detail::require_same_qubits(h.num_qubits(), state.num_qubits(),
                                "apply_sum_trotter");
    if (!h.is_hermitian()) {
        throw std::invalid_argument("apply_sum_trotter: sum is not hermitian");
    }
    if (slices < 1) {
        throw std::invalid_argument("apply_sum_trotter: slices must be >= 1");
    }
    const double step = t / slices;
    std::vector<PauliTerm> diagonal;
    std::vector<PauliTerm> rest;
    for (const auto &term : h.terms()) {
        (term.ops.is_diagonal() ? diagonal : rest).push_back(term);
    }
    std::vector<Complex> phases;
    if (!diagonal.empty()) {
        phases.resize(state.dimension());
        for (std::uint64_t b = 0; b < phases.size(); ++b) {
            double e = 0.0;
            for (const auto &term : diagonal) {
                e += term.coeff.real() * detail::parity_sign(b, term.ops.z_mask());
            }
            phases[b] = std::polar(1.0, -e * step);
        }
    }
    for (int s = 0; s < slices; ++s) {
        if (!phases.empty()) {
            auto amps = state.amplitudes_mut();
            for (std::size_t b = 0; b < amps.size(); ++b) {
                amps[b] *= phases[b];
            }
        }
        for (const auto &term : rest) {
            apply_pauli_exp_inplace(state, term.ops, term.coeff.real() * step);
        }
    }
}

/**
 * @brief |ψ> <- exp(-i t H)|ψ> to machine precision by a truncated Taylor
 * series, with t split so every step has ||H||_1·|dt| <= 1/2.
 */
inline void apply_sum_exp_inplace(StateVector &state, const PauliSum &h,
                                  double t) {
    detail::require_same_qubits(h.num_qubits(), state.num_qubits(),
                                "apply_sum_exp");
    if (!h.is_hermitian()) {
        throw std::invalid_argument("apply_sum_exp: sum is not hermitian");
    }
    if (!std::isfinite(t)) {
        throw std::invalid_argument("apply_sum_exp: time is not finite");
    }
    double norm = 0.0;
    for (const auto &term : h.terms()) {
        norm += std::abs(term.coeff);
    }
    if (norm == 0.0 || t == 0.0) {
        return;
    }
    const auto steps =
        static_cast<int>(std::max(1.0, std::ceil(2.0 * norm * std::abs(t))));
    const double dt = t / steps;
    auto amps = state.amplitudes_mut();
    Amplitudes term(amps.begin(), amps.end());
    for (int s = 0; s < steps; ++s) {
        term.assign(amps.begin(), amps.end());
        for (int k = 1; k < 40; ++k) {
            Amplitudes next = apply_sum(h, term);
            const Complex f(0.0, -dt / k);
            double mass = 0.0;
            for (std::size_t i = 0; i < next.size(); ++i) {
                next[i] *= f;
                amps[i] += next[i];
                mass += std::norm(next[i]);
            }
            term.swap(next);
            if (mass < 1e-34) {
                break;
            }
        }
    }
}

inline StateVector apply_sum_exp(StateVector state, const PauliSum &h,
                                 double t) {
    apply_sum_exp_inplace(state, h, t);
    return state;
}

inline StateVector apply_sum_trotter(StateVector state, const PauliSum &h,
                                     double t, int slices = 1) {
    apply_sum_trotter_inplace(state, h, t, slices);
    return state;
}

/// <left|O|right>.
inline Complex matrix_element(const StateVector &left, const PauliString &ops,
                              const StateVector &right) {
    detail::require_same_qubits(left.num_qubits(), right.num_qubits(),
                                "matrix_element");
    detail::check_pauli_dims(ops, right.num_qubits(), "matrix_element");
    const auto l = left.amplitudes();
    const auto r = right.amplitudes();
    const std::uint64_t x = ops.x_mask();
    const std::uint64_t z = ops.z_mask();
    Complex acc{};
    for (std::uint64_t b = 0; b < r.size(); ++b) {
        acc += std::conj(l[b ^ x]) * (detail::parity_sign(b, z) * r[b]);
    }
    return acc * i_power(ops.y_count());
}

/// <ψ|O|ψ> for a single Pauli string (always real).
inline double pauli_expectation(const StateVector &state,
                                const PauliString &ops) {
    return matrix_element(state, ops, state).real();
}

/**
 * @brief <ψ|H|ψ> for a hermitian sum.
 *
 * The imaginary residue is checked against 1e-10 (scaled by the sum's
 * coefficient mass) and then discarded.
 */
inline double expectation(const StateVector &state, const PauliSum &h) {
    detail::require_same_qubits(h.num_qubits(), state.num_qubits(),
                                "expectation");
    Complex acc{};
    double mass = 0.0;
    for (const auto &t : h.terms()) {
        acc += t.coeff * matrix_element(state, t.ops, state);
        mass += std::abs(t.coeff);
    }
    if (std::abs(acc.imag()) > 1e-10 * std::max(1.0, mass)) {
        throw std::logic_error("expectation: non-hermitian operator (imag " +
                               std::to_string(acc.imag()) + ")");
    }
    return acc.real();
}

/// <a|b>.
inline Complex inner(const StateVector &a, const StateVector &b) {
    detail::require_same_qubits(a.num_qubits(), b.num_qubits(), "inner");
    const auto x = a.amplitudes();
    const auto y = b.amplitudes();
    Complex acc{};
    for (std::size_t i = 0; i < x.size(); ++i) {
        acc += std::conj(x[i]) * y[i];
    }
    return acc;
}

inline double fidelity(const StateVector &a, const StateVector &b) {
    return std::norm(inner(a, b));
}

/// Debug dump: uint32 qubit count, then interleaved re/im doubles, all
/// little-endian.
inline void write_state_binary(std::ostream &os, const StateVector &state) {
    static_assert(std::endian::native == std::endian::little,
                  "binary dump assumes a little-endian host");
    const auto n = static_cast<std::uint32_t>(state.num_qubits());
    os.write(reinterpret_cast<const char *>(&n), sizeof(n));
    for (const auto &a : state.amplitudes()) {
        const double parts[2] = {a.real(), a.imag()};
        os.write(reinterpret_cast<const char *>(parts), sizeof(parts));
    }
}

inline StateVector read_state_binary(std::istream &is) {
    std::uint32_t n = 0;
    if (!is.read(reinterpret_cast<char *>(&n), sizeof(n)) || n == 0 ||
        n > kMaxStateQubits) {
        throw std::invalid_argument("read_state_binary: bad header");
    }
    Amplitudes amps(std::size_t{1} << n);
    for (auto &a : amps) {
        double parts[2];
        if (!is.read(reinterpret_cast<char *>(parts), sizeof(parts))) {
            throw std::invalid_argument("read_state_binary: truncated data");
        }
        a = {parts[0], parts[1]};
    }
    return StateVector::from_amplitudes(std::move(amps), true);
}

} // namespace fqae
