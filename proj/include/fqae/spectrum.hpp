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
 * @file spectrum.hpp
 * Reference eigensolvers used to validate runs: a diagonal sort for {I,Z}
 * sums, cyclic Jacobi for small dense Hermitian matrices, and a Lanczos
 * fallback when only a few low-lying pairs of a larger matrix are needed.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "fqae/error.hpp"
#include "fqae/pauli.hpp"
#include "fqae/state.hpp"

namespace fqae {

/// Row-major square complex matrix.
struct DenseMatrix {
    std::size_t dim = 0;
    std::vector<Complex> data;

    DenseMatrix() = default;
    explicit DenseMatrix(std::size_t d) : dim(d), data(d * d) {}

    Complex &operator()(std::size_t r, std::size_t c) {
        return data[r * dim + c];
    }
    Complex operator()(std::size_t r, std::size_t c) const {
        return data[r * dim + c];
    }
};

inline DenseMatrix to_dense(const PauliSum &h) {
    const std::size_t dim = std::size_t{1} << h.num_qubits();
    DenseMatrix m(dim);
    for (const auto &t : h.terms()) {
        const Complex c = t.coeff * i_power(t.ops.y_count());
        for (std::uint64_t b = 0; b < dim; ++b) {
            m(b ^ t.ops.x_mask(), b) +=
                c * detail::parity_sign(b, t.ops.z_mask());
        }
    }
    return m;
}

struct HermitianEigen {
    std::vector<double> values;  ///< ascending
    DenseMatrix vectors;         ///< column k pairs with values[k]
};

/**
 * @brief Cyclic Jacobi diagonalization of a Hermitian matrix.
 *
 * Each rotation first removes the phase of a_pq with a diagonal unitary,
 * then applies a real Givens rotation. Sweeps stop once the off-diagonal
 * Frobenius norm drops below `tol`.
 */
inline HermitianEigen jacobi_eigh(DenseMatrix a, double tol = 1e-10,
                                  int max_sweeps = 100) {
    const std::size_t n = a.dim;
    DenseMatrix v(n);
    for (std::size_t i = 0; i < n; ++i) {
        v(i, i) = 1.0;
    }
    auto off_norm = [&] {
        double acc = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < n; ++c) {
                if (r != c) {
                    acc += std::norm(a(r, c));
                }
            }
        }
        return std::sqrt(acc);
    };
    int sweep = 0;
    for (; sweep < max_sweeps && off_norm() > tol; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double mag = std::abs(a(p, q));
                if (mag < 1e-300) {
                    continue;
                }
                // Column/row q scaled by e^{-iφ} (resp. e^{iφ}) makes a_pq real.
                const Complex ph = std::conj(a(p, q)) / mag;
                for (std::size_t r = 0; r < n; ++r) {
                    a(r, q) *= ph;
                    v(r, q) *= ph;
                }
                for (std::size_t c = 0; c < n; ++c) {
                    a(q, c) *= std::conj(ph);
                }
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double theta = (aqq - app) / (2.0 * mag);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double cs = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * cs;
                for (std::size_t r = 0; r < n; ++r) {
                    const Complex arp = a(r, p);
                    const Complex arq = a(r, q);
                    a(r, p) = cs * arp - sn * arq;
                    a(r, q) = sn * arp + cs * arq;
                    const Complex vrp = v(r, p);
                    const Complex vrq = v(r, q);
                    v(r, p) = cs * vrp - sn * vrq;
                    v(r, q) = sn * vrp + cs * vrq;
                }
                for (std::size_t c = 0; c < n; ++c) {
                    const Complex apc = a(p, c);
                    const Complex aqc = a(q, c);
                    a(p, c) = cs * apc - sn * aqc;
                    a(q, c) = sn * apc + cs * aqc;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
            }
        }
    }
    if (off_norm() > tol) {
        throw ConvergenceError("jacobi_eigh: no convergence");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) {
        return a(i, i).real() < a(j, j).real();
    });
    HermitianEigen out;
    out.values.resize(n);
    out.vectors = DenseMatrix(n);
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]).real();
        for (std::size_t r = 0; r < n; ++r) {
            out.vectors(r, k) = v(r, order[k]);
        }
    }
    return out;
}

struct EigenPair {
    double value = 0.0;
    StateVector vector;
};

/**
 * @brief Lowest `count` eigenpairs of a hermitian sum by Lanczos with full
 * reorthogonalization; Ritz pairs are accepted once every residual
 * ||Hv - λv|| is below `tol`.
 *
 * Exactly degenerate levels are resolved only up to the start vector's
 * projection, so this is meant for generic (non-degenerate) spectra.
 */
inline std::vector<EigenPair> lanczos_lowest(const PauliSum &h,
                                             std::size_t count,
                                             double tol = 1e-9) {
    const std::size_t n = h.num_qubits();
    const std::size_t dim = std::size_t{1} << n;
    count = std::min(count, dim);
    // Deterministic, non-symmetric start vector.
    Amplitudes start(dim);
    std::uint64_t s = 0x9E3779B97F4A7C15ull;
    for (auto &a : start) {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        a = Complex(static_cast<double>(s % 1000003) / 1000003.0 - 0.5,
                    static_cast<double>((s >> 20) % 1000003) / 1000003.0 - 0.5);
    }
    auto normalize = [](Amplitudes &x) {
        double nrm = 0.0;
        for (const auto &c : x) {
            nrm += std::norm(c);
        }
        nrm = std::sqrt(nrm);
        for (auto &c : x) {
            c /= nrm;
        }
        return nrm;
    };
    normalize(start);
    std::vector<Amplitudes> basis{start};
    std::vector<double> alpha;
    std::vector<double> beta;
    auto dot = [](const Amplitudes &x, const Amplitudes &y) {
        Complex acc{};
        for (std::size_t i = 0; i < x.size(); ++i) {
            acc += std::conj(x[i]) * y[i];
        }
        return acc;
    };
    const std::size_t max_iter = std::min<std::size_t>(dim, 600);
    for (std::size_t it = 0; it < max_iter; ++it) {
        Amplitudes w = apply_sum(h, basis.back());
        alpha.push_back(dot(basis.back(), w).real());
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto &b : basis) {
                const Complex c = dot(b, w);
                for (std::size_t i = 0; i < dim; ++i) {
                    w[i] -= c * b[i];
                }
            }
        }
        double nrm = 0.0;
        for (const auto &c : w) {
            nrm += std::norm(c);
        }
        nrm = std::sqrt(nrm);
        const bool exhausted = nrm < 1e-12 || basis.size() == max_iter;
        const std::size_t m = basis.size();
        if (exhausted || (m >= count && (m % 10 == 0))) {
            DenseMatrix t(m);
            for (std::size_t i = 0; i < m; ++i) {
                t(i, i) = alpha[i];
                if (i + 1 < m) {
                    t(i, i + 1) = beta[i];
                    t(i + 1, i) = beta[i];
                }
            }
            const HermitianEigen ritz = jacobi_eigh(t, 1e-13);
            const std::size_t got = std::min(count, m);
            bool converged = got == count;
            for (std::size_t k = 0; k < got && converged; ++k) {
                // Residual of a Ritz pair is |β_m · y_{m,k}|.
                converged = nrm * std::abs(ritz.vectors(m - 1, k)) < tol;
            }
            if (converged || exhausted) {
                if (got < count) {
                    throw ConvergenceError(
                        "lanczos_lowest: Krylov space smaller than requested "
                        "eigenpair count (degenerate spectrum?)");
                }
                std::vector<EigenPair> out;
                for (std::size_t k = 0; k < count; ++k) {
                    Amplitudes vec(dim);
                    for (std::size_t j = 0; j < m; ++j) {
                        const Complex y = ritz.vectors(j, k);
                        for (std::size_t i = 0; i < dim; ++i) {
                            vec[i] += y * basis[j][i];
                        }
                    }
                    out.push_back({ritz.values[k],
                                   StateVector::from_amplitudes(std::move(vec),
                                                                true)});
                }
                return out;
            }
        }
        for (auto &c : w) {
            c /= nrm;
        }
        beta.push_back(nrm);
        basis.push_back(std::move(w));
    }
    throw ConvergenceError("lanczos_lowest: iteration limit reached");
}

/// Dense path limit (4096 amplitudes).
inline constexpr std::size_t kMaxDenseQubits = 12;
/// Dense matrices above this dimension use Lanczos when a partial spectrum
/// suffices.
inline constexpr std::size_t kJacobiMaxDim = 256;

/**
 * @brief Ascending eigenpairs of a hermitian sum, limited to the lowest
 * `count` when given.
 *
 * {I,Z}-only sums are handled up to 26 qubits by sorting the diagonal
 * (ties keep ascending basis index) and return basis states. Other sums go
 * through Jacobi up to 12 qubits, or Lanczos when `count` is small and the
 * matrix is large.
 */
inline std::vector<EigenPair>
reference_spectrum(const PauliSum &h,
                   std::optional<std::size_t> count = std::nullopt) {
    if (!h.is_hermitian()) {
        throw std::invalid_argument("reference_spectrum: sum is not hermitian");
    }
    const std::size_t n = h.num_qubits();
    const std::size_t dim = std::size_t{1} << std::min<std::size_t>(n, 63);
    if (h.is_diagonal()) {
        if (n > kMaxStateQubits) {
            throw DimensionError("reference_spectrum: diagonal path limited to " +
                                 std::to_string(kMaxStateQubits) + " qubits");
        }
        std::vector<double> diag(dim, 0.0);
        for (const auto &t : h.terms()) {
            const double c = t.coeff.real();
            const std::uint64_t z = t.ops.z_mask();
            for (std::uint64_t b = 0; b < dim; ++b) {
                diag[b] += c * detail::parity_sign(b, z);
            }
        }
        std::vector<std::uint64_t> order(dim);
        std::iota(order.begin(), order.end(), 0);
        const std::size_t want = std::min(count.value_or(dim), dim);
        std::partial_sort(order.begin(), order.begin() + want, order.end(),
                          [&](auto i, auto j) {
                              return diag[i] < diag[j] ||
                                     (diag[i] == diag[j] && i < j);
                          });
        std::vector<EigenPair> out;
        out.reserve(want);
        for (std::size_t k = 0; k < want; ++k) {
            out.push_back({diag[order[k]], StateVector::basis(n, order[k])});
        }
        return out;
    }
    if (n > kMaxDenseQubits) {
        throw DimensionError("reference_spectrum: dense path limited to " +
                             std::to_string(kMaxDenseQubits) + " qubits");
    }
    const std::size_t want = std::min(count.value_or(dim), dim);
    if (dim > kJacobiMaxDim && want <= 16) {
        return lanczos_lowest(h, want);
    }
    const HermitianEigen eig = jacobi_eigh(to_dense(h));
    std::vector<EigenPair> out;
    out.reserve(want);
    for (std::size_t k = 0; k < want; ++k) {
        Amplitudes vec(dim);
        for (std::size_t r = 0; r < dim; ++r) {
            vec[r] = eig.vectors(r, k);
        }
        out.push_back(
            {eig.values[k], StateVector::from_amplitudes(std::move(vec), true)});
    }
    return out;
}

} // namespace fqae
