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
 * @file sampling.hpp
 * Shot-noise models: an exact quantity parameterizes a two-outcome
 * distribution that is sampled `shots` times, which reproduces the
 * statistics of measuring the corresponding circuit.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "fqae/error.hpp"
#include "fqae/pauli.hpp"
#include "fqae/state.hpp"

namespace fqae {

/**
 * @brief Counter-based generator: output i of stream (seed, stream) is
 * splitmix64(key + (i+1)·γ), with key mixed from both ids.
 *
 * Pure integer arithmetic, so sequences are identical on every platform.
 */
class CounterRng {
  public:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : state_(mix(mix(seed) ^ (stream * 0xD1B54A32D192ED03ull + kGamma))) {}

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t next() {
        state_ += kGamma;
        return mix(state_);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

  private:
    std::uint64_t state_;
};

/**
 * @brief Shots per estimated scalar plus the master seed. The exact
 * sentinel bypasses sampling altogether.
 */
struct ShotBudget {
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;
    bool exact = true;

    static ShotBudget exact_mode() { return {}; }
    static ShotBudget sampled(std::uint64_t shots, std::uint64_t seed) {
        if (shots < 1) {
            throw std::invalid_argument("ShotBudget: shots must be >= 1");
        }
        return {shots, seed, false};
    }
};

namespace detail {
/// Number of successes in `shots` Bernoulli(p) trials.
inline std::uint64_t count_successes(double p, const ShotBudget &budget,
                                     std::uint64_t stream) {
    CounterRng rng(budget.seed, stream);
    std::uint64_t hits = 0;
    for (std::uint64_t s = 0; s < budget.shots; ++s) {
        hits += rng.uniform() < p ? 1 : 0;
    }
    return hits;
}

/// Mean of ±1 outcomes with P(+1) = (1 + v)/2.
inline double sample_pm1(double v, const ShotBudget &budget,
                         std::uint64_t stream) {
    const double p = std::clamp((1.0 + v) / 2.0, 0.0, 1.0);
    const auto hits = static_cast<double>(count_successes(p, budget, stream));
    const auto m = static_cast<double>(budget.shots);
    return (2.0 * hits - m) / m;
}
} // namespace detail

/// Sampled <ψ|O|ψ> for a non-identity Pauli string.
inline double sample_pauli_expectation(const StateVector &state,
                                       const PauliString &ops,
                                       const ShotBudget &budget,
                                       std::uint64_t stream) {
    if (ops.is_identity()) {
        throw std::invalid_argument(
            "sample_pauli_expectation: identity string has no outcome noise");
    }
    const double e = pauli_expectation(state, ops);
    if (budget.exact) {
        return e;
    }
    return detail::sample_pm1(e, budget, stream);
}

enum class HadamardPart { Real, Imag };

/**
 * @brief Ancilla <Z> of a Hadamard test for <left|O|right>: real part with
 * a = 0, imaginary part with the phase gate (a = 1).
 */
inline double sample_hadamard_test(const StateVector &left,
                                   const PauliString &ops,
                                   const StateVector &right, HadamardPart part,
                                   const ShotBudget &budget,
                                   std::uint64_t stream) {
    const Complex z = matrix_element(left, ops, right);
    const double v = part == HadamardPart::Real ? z.real() : z.imag();
    if (std::abs(v) > 1.0 + 1e-9) {
        throw std::logic_error(
            "sample_hadamard_test: |value| > 1, inputs are not normalized");
    }
    if (budget.exact) {
        return v;
    }
    return detail::sample_pm1(v, budget, stream);
}

/// Fraction of all-zero bitstrings when measuring U^(j)† U_k |0>, whose
/// success probability is |<q_j|ψ_k>|².
inline double sample_zero_fraction(double overlap_sq, const ShotBudget &budget,
                                   std::uint64_t stream) {
    if (!(overlap_sq >= 0.0) || overlap_sq > 1.0 + 1e-9) {
        throw std::invalid_argument(
            "sample_zero_fraction: probability out of range");
    }
    if (budget.exact) {
        return overlap_sq;
    }
    const double p = std::min(overlap_sq, 1.0);
    return static_cast<double>(detail::count_successes(p, budget, stream)) /
           static_cast<double>(budget.shots);
}

/**
 * @brief Hands out consecutive sub-stream ids for one estimation pipeline.
 *
 * Calls made in a fixed order draw fixed streams, so a run is reproducible
 * from (seed, shots) alone.
 */
class ShotSampler {
  public:
    explicit ShotSampler(ShotBudget budget, std::uint64_t first_stream = 0)
        : budget_(budget), next_(first_stream) {}

    [[nodiscard]] const ShotBudget &budget() const { return budget_; }
    [[nodiscard]] bool exact() const { return budget_.exact; }

    double pauli_expectation(const StateVector &state, const PauliString &ops) {
        return sample_pauli_expectation(state, ops, budget_, next_++);
    }
    double hadamard(const StateVector &left, const PauliString &ops,
                    const StateVector &right, HadamardPart part) {
        return sample_hadamard_test(left, ops, right, part, budget_, next_++);
    }
    double zero_fraction(double overlap_sq) {
        return sample_zero_fraction(overlap_sq, budget_, next_++);
    }

  private:
    ShotBudget budget_;
    std::uint64_t next_;
};

} // namespace fqae
