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
 * @file feedback.hpp
 * Feedback-based excited-state preparation.
 *
 * A circuit is grown one layer at a time: layer k applies exp(-i H0 dt) and
 * then exp(-i u_k^(q) H_q dt) for every control channel q. The controls of
 * layer k+1 come from the state after layer k through the feedback law
 *
 *     u_{k+1}^(q) = -K_q <ψ_k| i[H_q, P] |ψ_k>,
 *
 * where P = H0 + Σ_j α_j |q_j><q_j| lifts the known lower eigenstates q_j
 * above the target. P only ever enters the controller; the circuit itself
 * evolves under H0. With no shifts P = H0 and the loop is the ground-state
 * algorithm.
 */
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fqae/error.hpp"
#include "fqae/pauli.hpp"
#include "fqae/sampling.hpp"
#include "fqae/spectrum.hpp"
#include "fqae/state.hpp"

namespace fqae {

/// One penalty term α·|ref><ref| of the shifted operator.
struct ProjectorShift {
    double alpha = 0.0;
    StateVector ref_state;
    double ref_energy = 0.0;
};

/**
 * @brief P = H0 + Σ_j α_j |q_j><q_j|, kept in factored form.
 *
 * The projectors are never expanded into Pauli strings.
 */
class ShiftedOperator {
  public:
    explicit ShiftedOperator(PauliSum h0, std::vector<ProjectorShift> shifts = {})
        : h0_(std::move(h0)), shifts_(std::move(shifts)) {
        for (const auto &s : shifts_) {
            detail::require_same_qubits(h0_.num_qubits(),
                                        s.ref_state.num_qubits(),
                                        "ShiftedOperator");
            if (!(s.alpha >= 0.0) || !std::isfinite(s.alpha)) {
                throw std::invalid_argument(
                    "ShiftedOperator: shift weights must be finite and >= 0");
            }
            if (std::abs(s.ref_state.norm_sq() - 1.0) > 1e-10) {
                throw std::invalid_argument(
                    "ShiftedOperator: reference states must be unit norm");
            }
        }
    }

    [[nodiscard]] const PauliSum &h0() const { return h0_; }
    [[nodiscard]] std::span<const ProjectorShift> shifts() const {
        return shifts_;
    }
    [[nodiscard]] std::size_t num_qubits() const { return h0_.num_qubits(); }
    [[nodiscard]] double total_alpha() const {
        double acc = 0.0;
        for (const auto &s : shifts_) {
            acc += s.alpha;
        }
        return acc;
    }

    /// Max ||H0 q_j - E_j q_j|| over the shifts.
    [[nodiscard]] double max_eigen_residual() const {
        double worst = 0.0;
        for (const auto &s : shifts_) {
            const Amplitudes hq = apply_sum(h0_, s.ref_state);
            double acc = 0.0;
            for (std::size_t i = 0; i < hq.size(); ++i) {
                acc += std::norm(hq[i] - s.ref_energy * s.ref_state[i]);
            }
            worst = std::max(worst, std::sqrt(acc));
        }
        return worst;
    }

    /// P|ψ> as raw amplitudes.
    [[nodiscard]] Amplitudes apply(const StateVector &psi) const {
        Amplitudes out = apply_sum(h0_, psi);
        for (const auto &s : shifts_) {
            const Complex w = s.alpha * inner(s.ref_state, psi);
            const auto r = s.ref_state.amplitudes();
            for (std::size_t i = 0; i < out.size(); ++i) {
                out[i] += w * r[i];
            }
        }
        return out;
    }

  private:
    PauliSum h0_;
    std::vector<ProjectorShift> shifts_;
};

/// V(ψ) = <ψ|H0|ψ> + Σ_j α_j |<q_j|ψ>|².
inline double lyapunov_value(const StateVector &state,
                             const ShiftedOperator &p_op) {
    detail::require_same_qubits(state.num_qubits(), p_op.num_qubits(),
                                "lyapunov_value");
    double v = expectation(state, p_op.h0());
    for (const auto &s : p_op.shifts()) {
        v += s.alpha * fidelity(s.ref_state, state);
    }
    return v;
}

/// 2·Σ|c_k| over non-identity terms, an upper bound on the spectral width of
/// H0 and therefore a safe uniform shift weight.
inline double alpha_from_bound(const PauliSum &h0) {
    if (!h0.is_hermitian()) {
        throw std::invalid_argument("alpha_from_bound: sum is not hermitian");
    }
    return 2.0 * h0.one_norm();
}

/// λ when `h` has exactly the two eigenvalues ±λ (h² = λ² I, h not ∝ I).
inline std::optional<double> two_eigenvalue_lambda(const PauliSum &h) {
    if (h.empty() || !h.is_hermitian() ||
        (h.size() == 1 && h.terms()[0].ops.is_identity())) {
        return std::nullopt;
    }
    const PauliSum sq = h * h;
    if (sq.size() != 1 || !sq.terms()[0].ops.is_identity()) {
        return std::nullopt;
    }
    const Complex c = sq.terms()[0].coeff;
    if (std::abs(c.imag()) > 1e-12 || c.real() <= 0.0) {
        return std::nullopt;
    }
    return std::sqrt(c.real());
}

/**
 * @brief A control Hamiltonian H_q with the data every backend reuses:
 * the expansion of i[H_q, H0] and the structure of the generator.
 */
struct ControlChannel {
    PauliSum generator;
    PauliSum drift_commutator;
    std::optional<double> two_level_lambda;
    bool commuting_terms = true;

    static ControlChannel make(const PauliSum &generator, const PauliSum &h0) {
        detail::require_same_qubits(generator.num_qubits(), h0.num_qubits(),
                                    "ControlChannel");
        if (!generator.is_hermitian()) {
            throw std::invalid_argument(
                "ControlChannel: control Hamiltonian is not hermitian");
        }
        ControlChannel ch{generator, commutator_i(generator, h0),
                          two_eigenvalue_lambda(generator), true};
        const auto terms = generator.terms();
        for (std::size_t a = 0; a < terms.size() && ch.commuting_terms; ++a) {
            for (std::size_t b = a + 1; b < terms.size(); ++b) {
                if (!terms[a].ops.commutes_with(terms[b].ops)) {
                    ch.commuting_terms = false;
                    break;
                }
            }
        }
        return ch;
    }

    /// K·(2||i[H_q,H0]||_1 + 2 Σα ||H_q||_1): no exact controller can exceed it.
    [[nodiscard]] double control_bound(double gain,
                                       const ShiftedOperator &p_op) const {
        return gain * (2.0 * drift_commutator.one_norm() +
                       2.0 * p_op.total_alpha() * generator.one_norm());
    }
};

/**
 * @brief |ψ> <- exp(-i θ H_q)|ψ>.
 *
 * Exact when the generator's terms commute (product of Pauli exponentials)
 * or when it has two eigenvalues (closed form); otherwise one first-order
 * product-formula slice.
 */
inline void apply_control_unitary(StateVector &state,
                                  const ControlChannel &channel, double theta) {
    if (theta == 0.0) {
        return;
    }
    if (channel.commuting_terms || !channel.two_level_lambda) {
        apply_sum_trotter_inplace(state, channel.generator, theta);
        return;
    }
    const double lambda = *channel.two_level_lambda;
    const Amplitudes hpsi = apply_sum(channel.generator, state);
    const double c = std::cos(theta * lambda);
    const Complex s(0.0, -std::sin(theta * lambda) / lambda);
    auto amps = state.amplitudes_mut();
    for (std::size_t i = 0; i < amps.size(); ++i) {
        amps[i] = c * amps[i] + s * hpsi[i];
    }
}

namespace detail {

inline void require_positive_gain(double gain) {
    if (!(gain > 0.0) || !std::isfinite(gain)) {
        throw std::invalid_argument("controller: gain must be > 0");
    }
}

/**
 * Shared assembly of -K(<i[H,H0]> + 2 Re{i Σ_j α_j <ψ|H|q_j><q_j|ψ>}).
 * `pauli`, `element` and `overlap` supply <ψ|O|ψ>, <ψ|O|q_j> and <q_j|ψ>;
 * the exact and sampled controllers differ only in these estimators.
 */
template <class PauliEst, class ElementEst, class OverlapEst>
double assemble_overlap_law(const StateVector &state,
                            const ControlChannel &channel,
                            const ShiftedOperator &p_op, double gain,
                            PauliEst &&pauli, ElementEst &&element,
                            OverlapEst &&overlap) {
    detail::require_same_qubits(state.num_qubits(), p_op.num_qubits(),
                                "controller");
    detail::require_same_qubits(channel.generator.num_qubits(),
                                p_op.num_qubits(), "controller");
    require_positive_gain(gain);
    double drift = 0.0;
    for (const auto &t : channel.drift_commutator.terms()) {
        drift += t.coeff.real() * pauli(t.ops);
    }
    Complex shifted{};
    for (const auto &s : p_op.shifts()) {
        Complex h_elem{};
        for (const auto &t : channel.generator.terms()) {
            h_elem += t.coeff * element(t.ops, s.ref_state);
        }
        shifted += s.alpha * h_elem * overlap(s.ref_state);
    }
    return -gain * (drift + 2.0 * (Complex(0.0, 1.0) * shifted).real());
}

} // namespace detail

/**
 * @brief Exact controller for one channel, evaluated by linear algebra.
 *
 * The H0 part is the Pauli expansion of i[H_q,H0]; the projector part uses
 * <ψ|H_q|q_j> and <q_j|ψ> computed directly on the statevectors.
 */
inline double controller_exact(const StateVector &state,
                               const ControlChannel &channel,
                               const ShiftedOperator &p_op, double gain) {
    const PauliString id(state.num_qubits());
    return detail::assemble_overlap_law(
        state, channel, p_op, gain,
        [&](const PauliString &o) { return pauli_expectation(state, o); },
        [&](const PauliString &o, const StateVector &q) {
            return matrix_element(state, o, q);
        },
        [&](const StateVector &q) { return matrix_element(q, id, state); });
}

inline double controller_exact(const StateVector &state,
                               const PauliSum &h_ctrl,
                               const ShiftedOperator &p_op, double gain) {
    return controller_exact(state, ControlChannel::make(h_ctrl, p_op.h0()),
                            p_op, gain);
}

/**
 * @brief Expectation-and-overlap estimator of the controller.
 *
 * Each commutator string is a sampled Pauli expectation, each <ψ|O|q_j> a
 * pair of Hadamard tests (real then imaginary part), and each <q_j|ψ> a
 * pair of Hadamard tests on the identity string. The pieces are combined
 * classically. With an exact budget every estimate is the exact value, so
 * the result matches controller_exact bit for bit.
 */
inline double controller_overlap_sampled(const StateVector &state,
                                         const ControlChannel &channel,
                                         const ShiftedOperator &p_op,
                                         double gain, ShotSampler &sampler) {
    const PauliString id(state.num_qubits());
    return detail::assemble_overlap_law(
        state, channel, p_op, gain,
        [&](const PauliString &o) { return sampler.pauli_expectation(state, o); },
        [&](const PauliString &o, const StateVector &q) {
            const double re = sampler.hadamard(state, o, q, HadamardPart::Real);
            const double im = sampler.hadamard(state, o, q, HadamardPart::Imag);
            return Complex(re, im);
        },
        [&](const StateVector &q) {
            const double re = sampler.hadamard(q, id, state, HadamardPart::Real);
            const double im = sampler.hadamard(q, id, state, HadamardPart::Imag);
            return Complex(re, im);
        });
}

/**
 * @brief V(ψ) from measurements: H0 as sampled Pauli expectations (the
 * identity coefficient is added exactly) and each |<q_j|ψ>|² as the
 * all-zero fraction of U^(j)†|ψ>.
 */
inline double estimate_lyapunov(const StateVector &state,
                                const ShiftedOperator &p_op,
                                ShotSampler &sampler) {
    double v = 0.0;
    for (const auto &t : p_op.h0().terms()) {
        if (t.ops.is_identity()) {
            v += t.coeff.real();
        } else {
            v += t.coeff.real() * sampler.pauli_expectation(state, t.ops);
        }
    }
    for (const auto &s : p_op.shifts()) {
        v += s.alpha *
             sampler.zero_fraction(std::min(1.0, fidelity(s.ref_state, state)));
    }
    return v;
}

namespace detail {
/// V after closing layer k with an extra rotation exp(-i·shift·dt·H_q).
inline double probed_lyapunov(const StateVector &state,
                              const ControlChannel &channel,
                              const ShiftedOperator &p_op, double dt,
                              double shift, ShotSampler &sampler) {
    StateVector probe = state;
    apply_control_unitary(probe, channel, shift * dt);
    return estimate_lyapunov(probe, p_op, sampler);
}
} // namespace detail

/// Default finite-difference step: noise-dominated when sampling.
inline double default_fd_epsilon(const ShotBudget &budget) {
    return budget.exact ? 1e-5 : 1e-3;
}

/**
 * @brief Gradient controller by central differences:
 * u = -(K/dt)·(V(u_k+ε) - V(u_k-ε))/(2ε).
 *
 * The shifted control of channel q is realized as a rotation
 * exp(∓i ε dt H_q) appended to layer k, so the derivative at ε = 0 is
 * dt·<ψ_k|i[H_q,P]|ψ_k> for every channel. This coincides with shifting
 * u_k^(q) in place whenever H_q is the last factor of the layer or
 * commutes with the factors after it.
 */
inline double controller_grad_fd(const StateVector &state,
                                 const ControlChannel &channel,
                                 const ShiftedOperator &p_op, double gain,
                                 double dt, double epsilon,
                                 ShotSampler &sampler) {
    detail::require_positive_gain(gain);
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw std::invalid_argument("controller_grad_fd: epsilon must be > 0");
    }
    if (!(dt > 0.0)) {
        throw std::invalid_argument("controller_grad_fd: dt must be > 0");
    }
    detail::require_same_qubits(state.num_qubits(), p_op.num_qubits(),
                                "controller_grad_fd");
    const double plus =
        detail::probed_lyapunov(state, channel, p_op, dt, epsilon, sampler);
    const double minus =
        detail::probed_lyapunov(state, channel, p_op, dt, -epsilon, sampler);
    return -(gain / dt) * (plus - minus) / (2.0 * epsilon);
}

enum class PsrRule {
    /// Shift π/(4λ dt) in u, prefactor λ·dt: exact for exp(-i u dt H).
    DtAware,
    /// ∂V/∂u = (V(u+π/2) - V(u-π/2))/2, exact only for λ·dt = 1/2.
    PaperLiteral,
};

/**
 * @brief Parameter-shift controller for a generator with eigenvalues ±λ.
 *
 * With the default rule, u = -(K/dt)·λ·dt·[V(u+s) - V(u-s)] and
 * s = π/(4 λ dt); probes are appended to layer k as in controller_grad_fd.
 */
inline double controller_grad_psr(const StateVector &state,
                                  const ControlChannel &channel,
                                  const ShiftedOperator &p_op, double gain,
                                  double dt, ShotSampler &sampler,
                                  PsrRule rule = PsrRule::DtAware) {
    detail::require_positive_gain(gain);
    if (!(dt > 0.0)) {
        throw std::invalid_argument("controller_grad_psr: dt must be > 0");
    }
    if (!channel.two_level_lambda) {
        throw UnsupportedError(
            "controller_grad_psr: control Hamiltonian does not have exactly two "
            "eigenvalues; use the finite-difference backend instead");
    }
    detail::require_same_qubits(state.num_qubits(), p_op.num_qubits(),
                                "controller_grad_psr");
    const double lambda = *channel.two_level_lambda;
    if (rule == PsrRule::PaperLiteral) {
        const double s = std::numbers::pi / 2.0;
        const double plus =
            detail::probed_lyapunov(state, channel, p_op, dt, s, sampler);
        const double minus =
            detail::probed_lyapunov(state, channel, p_op, dt, -s, sampler);
        return -(gain / dt) * 0.5 * (plus - minus);
    }
    const double s = std::numbers::pi / (4.0 * lambda * dt);
    const double plus =
        detail::probed_lyapunov(state, channel, p_op, dt, s, sampler);
    const double minus =
        detail::probed_lyapunov(state, channel, p_op, dt, -s, sampler);
    return -(gain / dt) * lambda * dt * (plus - minus);
}

/// True when `h` is Σ_j X_j with unit weights on every qubit.
inline bool is_standard_mixer(const PauliSum &h) {
    if (h.size() != h.num_qubits()) {
        return false;
    }
    for (const auto &t : h.terms()) {
        if (t.ops.z_mask() != 0 || t.ops.weight() != 1 ||
            t.coeff != Complex(1.0, 0.0)) {
            return false;
        }
    }
    return true;
}

/**
 * @brief Controller for a diagonal H0 with the ΣX mixer and a single
 * basis-state shift |q0> = |b_0 ... b_{n-1}>.
 *
 *     i[Σ_j X_j, α0 M0] = α0 Σ_j (-1)^{b_j} (⊗_{l≠j} P_l) ⊗ Y_j,
 *     P_l = (I + (-1)^{b_l} Z_l)/2,
 *
 * so each term is read off by measuring qubit j in the Y basis and every
 * other qubit in the computational basis. Only the two amplitudes that
 * agree with q0 off qubit j contribute.
 */
inline double controller_diagonal_fastpath(const StateVector &state,
                                           std::uint64_t q0, double alpha0,
                                           const ControlChannel &mixer,
                                           const PauliSum &h0, double gain) {
    detail::require_positive_gain(gain);
    if (!h0.is_diagonal() || !h0.is_hermitian()) {
        throw UnsupportedError(
            "controller_diagonal_fastpath: drift Hamiltonian must be diagonal");
    }
    if (!is_standard_mixer(mixer.generator)) {
        throw UnsupportedError(
            "controller_diagonal_fastpath: control must be the standard ΣX "
            "mixer");
    }
    detail::require_same_qubits(state.num_qubits(), h0.num_qubits(),
                                "controller_diagonal_fastpath");
    const std::size_t n = state.num_qubits();
    if (q0 >= state.dimension()) {
        throw DimensionError("controller_diagonal_fastpath: bitstring too long");
    }
    double drift = 0.0;
    for (const auto &t : mixer.drift_commutator.terms()) {
        drift += t.coeff.real() * pauli_expectation(state, t.ops);
    }
    double projector = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const std::uint64_t bit = std::uint64_t{1} << (n - 1 - j);
        const Complex a0 = state[q0 & ~bit];
        const Complex a1 = state[q0 | bit];
        // <a|Y|a> restricted to the pair {q0 with bit j = 0, = 1}.
        const double y = 2.0 * (std::conj(a0) * a1).imag();
        const double sign = (q0 & bit) != 0 ? -1.0 : 1.0;
        projector += sign * y;
    }
    return -gain * (drift + alpha0 * projector);
}

inline double controller_diagonal_fastpath(const StateVector &state,
                                           std::uint64_t q0, double alpha0,
                                           const PauliSum &h0,
                                           const PauliSum &mixer, double gain) {
    return controller_diagonal_fastpath(
        state, q0, alpha0, ControlChannel::make(mixer, h0), h0, gain);
}

enum class Backend { Exact, OverlapHadamard, GradFd, GradPsr };

inline const char *backend_name(Backend b) {
    switch (b) {
    case Backend::Exact:
        return "exact";
    case Backend::OverlapHadamard:
        return "overlap_hadamard";
    case Backend::GradFd:
        return "grad_fd";
    default:
        return "grad_psr";
    }
}

/// Optional stopping rules; both are off by default.
struct EarlyStop {
    /// Stop once max_q |u_{k+1}^(q)| falls below this.
    std::optional<double> control_threshold;
    /// Stop once |V_k - V_{k-1}| falls below this.
    std::optional<double> lyapunov_delta;
};

struct FeedbackConfig {
    double dt = 0.1;
    std::vector<double> gains;
    int depth = 100;
    Backend backend = Backend::Exact;
    /// Finite-difference step; non-positive picks default_fd_epsilon.
    double fd_epsilon = 0.0;
    PsrRule psr_rule = PsrRule::DtAware;
    /// u_1 per channel; empty means all zeros.
    std::vector<double> initial_controls;
    ShotBudget budget = ShotBudget::exact_mode();
    /// Product-formula slices for exp(-i H0 dt) per layer.
    int trotter_slices = 1;
    /// Apply exp(-i H0 dt) exactly instead of by a product formula.
    bool exact_drift = false;
    EarlyStop early_stop;
    /// Slack for counting V_{k+1} - V_k > 0 as a Lyapunov violation.
    double lyapunov_tolerance = 1e-9;
    /// End the run at the first violation (used when tuning dt).
    bool stop_on_violation = false;
    /// Wall-clock budget in seconds; exceeding it fails the run with the
    /// layers completed so far.
    std::optional<double> time_limit_s;

    void validate(std::size_t num_channels) const {
        if (!(dt > 0.0) || !std::isfinite(dt)) {
            throw std::invalid_argument("FeedbackConfig: dt must be > 0");
        }
        if (depth < 1) {
            throw std::invalid_argument("FeedbackConfig: depth must be >= 1");
        }
        if (num_channels == 0) {
            throw std::invalid_argument(
                "FeedbackConfig: at least one control channel is required");
        }
        if (gains.size() != num_channels) {
            throw std::invalid_argument(
                "FeedbackConfig: need one gain per control channel");
        }
        for (double k : gains) {
            if (!(k > 0.0) || !std::isfinite(k)) {
                throw std::invalid_argument("FeedbackConfig: gains must be > 0");
            }
        }
        if (!initial_controls.empty() &&
            initial_controls.size() != num_channels) {
            throw std::invalid_argument(
                "FeedbackConfig: need one initial control per channel");
        }
        if (trotter_slices < 1) {
            throw std::invalid_argument(
                "FeedbackConfig: trotter_slices must be >= 1");
        }
        if (time_limit_s && !(*time_limit_s >= 0.0)) {
            throw std::invalid_argument(
                "FeedbackConfig: time_limit_s must be >= 0");
        }
    }
};

struct LayerRecord {
    int layer = 0;                ///< k, starting at 1
    std::vector<double> controls; ///< u_k^(q) applied in this layer
    double lyapunov = 0.0;        ///< V_k = <ψ_k|P|ψ_k>
    double energy = 0.0;          ///< <ψ_k|H0|ψ_k>
    std::vector<double> fidelities;
    double max_abs_control = 0.0;
};

struct RunTrace {
    std::vector<LayerRecord> layers;
    StateVector final_state;
    std::vector<double> final_controls;
    double initial_lyapunov = 0.0;
    int lyapunov_violations = 0;
    /// max_k (V_k - V_{k-1}), starting from V_0.
    double max_lyapunov_increase = -std::numeric_limits<double>::infinity();
    bool stopped_early = false;

    [[nodiscard]] bool lyapunov_monotone() const {
        return lyapunov_violations == 0;
    }
};

/// A backend failure mid-run; carries every layer completed so far.
class RunError : public std::runtime_error {
  public:
    RunError(const std::string &what, RunTrace partial)
        : std::runtime_error(what), partial_(std::move(partial)) {}
    [[nodiscard]] const RunTrace &partial() const { return partial_; }

  private:
    RunTrace partial_;
};

/**
 * @brief Grows the feedback circuit for `config.depth` layers.
 *
 * Layer k applies exp(-i H0 dt) (config.trotter_slices product-formula
 * slices) followed by each channel's exp(-i u_k^(q) H_q dt) in channel
 * order. All controls of layer k+1 are computed from the same |ψ_k>.
 * `tracked` states get a fidelity column per layer.
 */
inline RunTrace run_fqae(const PauliSum &h0, std::span<const PauliSum> h_ctrls,
                         const ShiftedOperator &p_op, const StateVector &psi0,
                         const FeedbackConfig &config,
                         std::span<const StateVector> tracked = {}) {
    config.validate(h_ctrls.size());
    detail::require_same_qubits(h0.num_qubits(), psi0.num_qubits(), "run_fqae");
    if (!(p_op.h0() == h0)) {
        throw std::invalid_argument(
            "run_fqae: the shifted operator must be built on the drift "
            "Hamiltonian");
    }
    for (const auto &t : tracked) {
        detail::require_same_qubits(t.num_qubits(), psi0.num_qubits(),
                                    "run_fqae tracked state");
    }
    std::vector<ControlChannel> channels;
    channels.reserve(h_ctrls.size());
    for (const auto &h : h_ctrls) {
        channels.push_back(ControlChannel::make(h, h0));
    }
    if (config.backend == Backend::GradPsr) {
        for (const auto &ch : channels) {
            if (!ch.two_level_lambda) {
                throw UnsupportedError(
                    "run_fqae: grad_psr needs two-eigenvalue control "
                    "Hamiltonians; use grad_fd instead");
            }
        }
    }
    const double eps = config.fd_epsilon > 0.0
                           ? config.fd_epsilon
                           : default_fd_epsilon(config.budget);
    ShotSampler sampler(config.budget);

    RunTrace trace;
    StateVector psi = psi0;
    std::vector<double> u = config.initial_controls.empty()
                                ? std::vector<double>(channels.size(), 0.0)
                                : config.initial_controls;
    trace.initial_lyapunov = lyapunov_value(psi, p_op);
    double prev_v = trace.initial_lyapunov;
    const auto started = std::chrono::steady_clock::now();

    try {
        for (int k = 1; k <= config.depth; ++k) {
            if (config.exact_drift) {
                apply_sum_exp_inplace(psi, h0, config.dt);
            } else {
                apply_sum_trotter_inplace(psi, h0, config.dt,
                                          config.trotter_slices);
            }
            for (std::size_t q = 0; q < channels.size(); ++q) {
                apply_control_unitary(psi, channels[q], u[q] * config.dt);
            }
            LayerRecord rec;
            rec.layer = k;
            rec.controls = u;
            rec.lyapunov = lyapunov_value(psi, p_op);
            rec.energy = expectation(psi, h0);
            for (const auto &t : tracked) {
                rec.fidelities.push_back(fidelity(t, psi));
            }
            for (double x : u) {
                rec.max_abs_control = std::max(rec.max_abs_control, std::abs(x));
            }
            if (!std::isfinite(rec.lyapunov)) {
                throw std::runtime_error("run_fqae: Lyapunov value not finite");
            }
            const double dv = rec.lyapunov - prev_v;
            trace.max_lyapunov_increase =
                std::max(trace.max_lyapunov_increase, dv);
            if (dv > config.lyapunov_tolerance) {
                ++trace.lyapunov_violations;
            }
            prev_v = rec.lyapunov;
            trace.layers.push_back(rec);
            if (config.time_limit_s &&
                std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              started)
                        .count() > *config.time_limit_s) {
                throw std::runtime_error("run_fqae: time limit exceeded after "
                                         "layer " + std::to_string(k));
            }
            if (config.stop_on_violation && trace.lyapunov_violations > 0) {
                trace.stopped_early = k < config.depth;
                break;
            }

            if (config.early_stop.lyapunov_delta && k > 1 &&
                std::abs(dv) < *config.early_stop.lyapunov_delta) {
                trace.stopped_early = k < config.depth;
                break;
            }
            if (k == config.depth) {
                break;
            }
            std::vector<double> next(channels.size());
            for (std::size_t q = 0; q < channels.size(); ++q) {
                const double gain = config.gains[q];
                switch (config.backend) {
                case Backend::Exact: {
                    next[q] = controller_exact(psi, channels[q], p_op, gain);
                    const double bound = channels[q].control_bound(gain, p_op);
                    if (std::abs(next[q]) > bound * (1.0 + 1e-12) + 1e-12) {
                        throw std::logic_error(
                            "run_fqae: controller exceeds its analytic bound");
                    }
                    break;
                }
                case Backend::OverlapHadamard:
                    next[q] = controller_overlap_sampled(psi, channels[q], p_op,
                                                         gain, sampler);
                    break;
                case Backend::GradFd:
                    next[q] = controller_grad_fd(psi, channels[q], p_op, gain,
                                                 config.dt, eps, sampler);
                    break;
                case Backend::GradPsr:
                    next[q] = controller_grad_psr(psi, channels[q], p_op, gain,
                                                  config.dt, sampler,
                                                  config.psr_rule);
                    break;
                }
            }
            u = std::move(next);
            if (config.early_stop.control_threshold) {
                double m = 0.0;
                for (double x : u) {
                    m = std::max(m, std::abs(x));
                }
                if (m < *config.early_stop.control_threshold) {
                    trace.stopped_early = true;
                    break;
                }
            }
        }
    } catch (const std::exception &e) {
        trace.final_state = psi;
        trace.final_controls =
            trace.layers.empty() ? u : trace.layers.back().controls;
        throw RunError(e.what(), std::move(trace));
    }
    trace.final_state = std::move(psi);
    trace.final_controls = trace.layers.back().controls;
    return trace;
}

/// Ground-state special case: P = H0 and u_1 = 0.
inline RunTrace run_falqon(const PauliSum &h0, std::span<const PauliSum> h_ctrls,
                           const StateVector &psi0, FeedbackConfig config,
                           std::span<const StateVector> tracked = {}) {
    config.initial_controls.assign(h_ctrls.size(), 0.0);
    return run_fqae(h0, h_ctrls, ShiftedOperator(h0), psi0, config, tracked);
}

/**
 * @brief True when the run's final state overlaps a known lower eigenstate
 * with fidelity above `threshold`.
 */
inline bool converged_to_lower_state(const RunTrace &trace,
                                     std::span<const StateVector> lower_states,
                                     double threshold = 0.5) {
    return std::any_of(lower_states.begin(), lower_states.end(),
                       [&](const StateVector &q) {
                           return fidelity(q, trace.final_state) > threshold;
                       });
}

/**
 * @brief Doubles the shift weight until a run no longer lands on a lower
 * eigenstate.
 *
 * `run(alpha)` executes the feedback loop with every shift set to alpha;
 * `lands_on_lower(trace)` reports whether the run converged to one of the
 * known lower states.
 */
template <class RunFn, class LowerFn>
double alpha_iterative(RunFn &&run, LowerFn &&lands_on_lower, double alpha0,
                       int max_doublings = 32) {
    if (!(alpha0 > 0.0) || !std::isfinite(alpha0)) {
        throw std::invalid_argument("alpha_iterative: alpha0 must be > 0");
    }
    double alpha = alpha0;
    for (int i = 0; i <= max_doublings; ++i) {
        if (!lands_on_lower(run(alpha))) {
            return alpha;
        }
        alpha *= 2.0;
    }
    throw ConvergenceError("alpha_iterative: no sufficient shift after " +
                           std::to_string(max_doublings) + " doublings");
}

struct DeflationStage {
    std::size_t stage = 0;
    double energy = 0.0;
    StateVector state;
    RunTrace trace;
    std::vector<double> alphas; ///< shift weights used in this stage
    /// Fidelity to the reference eigenvector of the same index, if known.
    std::optional<double> reference_fidelity;
    std::string warning;
};

struct DeflationOptions {
    /// α_j for the j-th converged state; missing entries use alpha_from_bound.
    std::vector<double> alphas;
    /// Reference eigenvectors in ascending order, for convergence warnings.
    std::vector<StateVector> references;
    double warn_below_fidelity = 0.9;
    /// Per-stage replacements for the shared run configuration.
    std::map<std::size_t, FeedbackConfig> stage_configs;
};

/**
 * @brief Climbs the spectrum: stage 0 is a ground-state run, and each
 * later stage shifts every state converged so far by its α_j.
 *
 * `psi0_for_stage(s)` supplies the initial state of stage s. Stages are
 * returned in ascending energy.
 */
inline std::vector<DeflationStage>
deflate_spectrum(const PauliSum &h0, std::span<const PauliSum> h_ctrls,
                 const std::function<StateVector(std::size_t)> &psi0_for_stage,
                 const FeedbackConfig &config, std::size_t count,
                 const DeflationOptions &options = {}) {
    if (count < 1) {
        throw std::invalid_argument("deflate_spectrum: count must be >= 1");
    }
    const double bound_alpha = alpha_from_bound(h0);
    std::vector<ProjectorShift> shifts;
    std::vector<DeflationStage> stages;
    for (std::size_t s = 0; s < count; ++s) {
        const StateVector psi0 = psi0_for_stage(s);
        DeflationStage st;
        st.stage = s;
        std::vector<StateVector> tracked(options.references.begin(),
                                         options.references.end());
        const auto it = options.stage_configs.find(s);
        const FeedbackConfig &cfg =
            it != options.stage_configs.end() ? it->second : config;
        st.trace = run_fqae(h0, h_ctrls, ShiftedOperator(h0, shifts), psi0,
                            cfg, tracked);
        st.state = st.trace.final_state;
        st.energy = expectation(st.state, h0);
        for (const auto &sh : shifts) {
            st.alphas.push_back(sh.alpha);
        }
        if (s < options.references.size()) {
            st.reference_fidelity = fidelity(options.references[s], st.state);
            if (*st.reference_fidelity < options.warn_below_fidelity) {
                st.warning = "stage " + std::to_string(s) +
                             " fidelity to reference eigenstate " +
                             std::to_string(*st.reference_fidelity) +
                             " below threshold";
            }
        }
        const double alpha =
            s < options.alphas.size() ? options.alphas[s] : bound_alpha;
        shifts.push_back({alpha, st.state, st.energy});
        stages.push_back(std::move(st));
    }
    std::stable_sort(stages.begin(), stages.end(),
                     [](const auto &a, const auto &b) {
                         return a.energy < b.energy;
                     });
    return stages;
}

} // namespace fqae
