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
 * @file models.hpp
 * Hamiltonian families, control sets and random instance generators.
 *
 * Qubits are 0-based: the first site of every model is qubit 0.
 */
#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fqae/error.hpp"
#include "fqae/pauli.hpp"
#include "fqae/sampling.hpp"

namespace fqae {

/// H0 = Σ_{q<j} J_{qj} Z_q Z_j + Σ_q h_q Z_q.
struct IsingSpec {
    std::size_t n = 0;
    /// n×n row-major; symmetric with a zero diagonal.
    std::vector<double> couplings;
    std::vector<double> fields;

    [[nodiscard]] double coupling(std::size_t q, std::size_t j) const {
        return couplings[q * n + j];
    }
};

inline PauliSum build_ising(const IsingSpec &spec) {
    const std::size_t n = spec.n;
    if (n == 0) {
        throw DimensionError("build_ising: n must be >= 1");
    }
    if (spec.couplings.size() != n * n || spec.fields.size() != n) {
        throw DimensionError("build_ising: coupling matrix must be n×n and "
                             "fields must have n entries");
    }
    std::vector<PauliTerm> terms;
    for (std::size_t q = 0; q < n; ++q) {
        if (spec.coupling(q, q) != 0.0) {
            throw std::invalid_argument(
                "build_ising: diagonal couplings must be zero");
        }
        for (std::size_t j = q + 1; j < n; ++j) {
            if (spec.coupling(q, j) != spec.coupling(j, q)) {
                throw std::invalid_argument(
                    "build_ising: couplings are not symmetric");
            }
            PauliString zz(n);
            zz.set(q, Pauli::Z);
            zz.set(j, Pauli::Z);
            terms.push_back({zz, spec.coupling(q, j)});
        }
        terms.push_back(
            {PauliString::single(n, q, Pauli::Z), spec.fields[q]});
    }
    return PauliSum(n, std::move(terms));
}

/// Two-qubit instance Z_0 + 2 Z_1 + 0.5 Z_0 Z_1.
inline IsingSpec small_ising_spec() {
    return IsingSpec{2, {0.0, 0.5, 0.5, 0.0}, {1.0, 2.0}};
}

/// Ring H0 = J Σ Z_q Z_{q+1} + h Σ X_q + g Σ Z_q with Z_{n-1} Z_0 closing it.
struct MfiSpec {
    std::size_t n = 0;
    double J = 0.0;
    double h = 0.0;
    double g = 0.0;
};

inline PauliSum build_mfi(const MfiSpec &spec) {
    const std::size_t n = spec.n;
    if (n < 3) {
        throw DimensionError("build_mfi: the ring needs n >= 3");
    }
    std::vector<PauliTerm> terms;
    for (std::size_t q = 0; q < n; ++q) {
        PauliString zz(n);
        zz.set(q, Pauli::Z);
        zz.set((q + 1) % n, Pauli::Z);
        terms.push_back({zz, spec.J});
        terms.push_back({PauliString::single(n, q, Pauli::X), spec.h});
        terms.push_back({PauliString::single(n, q, Pauli::Z), spec.g});
    }
    return PauliSum(n, std::move(terms));
}

/// H0 = h0 I + h1 Z_0 + h2 Z_1 + h3 Z_0 Z_1 + h4 Y_0 Y_1 + h5 X_0 X_1.
struct H2Spec {
    double R = 0.0;
    std::array<double, 6> h{};
};

inline PauliSum build_h2(const H2Spec &spec) {
    const auto &h = spec.h;
    return PauliSum(2, {{PauliString::from_letters("II"), h[0]},
                        {PauliString::from_letters("ZI"), h[1]},
                        {PauliString::from_letters("IZ"), h[2]},
                        {PauliString::from_letters("ZZ"), h[3]},
                        {PauliString::from_letters("YY"), h[4]},
                        {PauliString::from_letters("XX"), h[5]}});
}

/// Rows of a coefficient table with header `R,h0,h1,h2,h3,h4,h5`.
class H2Table {
  public:
    static H2Table parse(std::istream &in) {
        H2Table t;
        std::string line;
        std::size_t line_no = 0;
        bool header = false;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') {
                line.pop_back();
            }
            if (line.empty() || line[0] == '#') {
                continue;
            }
            if (!header) {
                if (line.rfind("R", 0) != 0) {
                    throw ConfigError(
                        "H2Table: expected header R,h0,h1,h2,h3,h4,h5");
                }
                header = true;
                continue;
            }
            std::vector<double> vals;
            std::string_view rest(line);
            while (true) {
                const auto comma = rest.find(',');
                std::string_view cell = rest.substr(0, comma);
                while (!cell.empty() && cell.front() == ' ') {
                    cell.remove_prefix(1);
                }
                while (!cell.empty() && cell.back() == ' ') {
                    cell.remove_suffix(1);
                }
                double v = 0.0;
                const auto res =
                    std::from_chars(cell.data(), cell.data() + cell.size(), v);
                if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
                    throw ConfigError("H2Table: bad number on line " +
                                      std::to_string(line_no));
                }
                vals.push_back(v);
                if (comma == std::string_view::npos) {
                    break;
                }
                rest.remove_prefix(comma + 1);
            }
            if (vals.size() != 7) {
                throw ConfigError("H2Table: line " + std::to_string(line_no) +
                                  " must have 7 columns");
            }
            H2Spec s;
            s.R = vals[0];
            std::copy(vals.begin() + 1, vals.end(), s.h.begin());
            t.rows_.push_back(s);
        }
        if (!header) {
            throw ConfigError("H2Table: missing header row");
        }
        return t;
    }

    static H2Table load(const std::string &path) {
        std::ifstream in(path);
        if (!in) {
            throw ConfigError("H2Table: cannot open " + path);
        }
        return parse(in);
    }

    [[nodiscard]] const std::vector<H2Spec> &rows() const { return rows_; }

    [[nodiscard]] bool contains(double R) const {
        for (const auto &s : rows_) {
            if (std::abs(s.R - R) < 1e-9) {
                return true;
            }
        }
        return false;
    }

    [[nodiscard]] H2Spec lookup(double R) const {
        for (const auto &s : rows_) {
            if (std::abs(s.R - R) < 1e-9) {
                return s;
            }
        }
        std::ostringstream msg;
        msg << "H2Table: no row for R=" << R << "; available:";
        for (const auto &s : rows_) {
            msg << ' ' << s.R;
        }
        throw std::out_of_range(msg.str());
    }

  private:
    std::vector<H2Spec> rows_;
};

namespace detail {
/// Instance draws use their own key space, apart from shot-noise streams.
inline constexpr std::uint64_t kInstanceSalt = 0x6A09E667F3BCC909ull;

inline double uniform_in(CounterRng &rng, double low, double high) {
    return low + (high - low) * rng.uniform();
}
} // namespace detail

/// Fully connected instance with every J_{qj} and h_q uniform on [low, high].
inline IsingSpec random_ising(std::size_t n, std::uint64_t seed,
                              double low = -2.0, double high = 2.0) {
    if (n < 2) {
        throw DimensionError("random_ising: n must be >= 2");
    }
    if (!(low <= high)) {
        throw std::invalid_argument("random_ising: low must be <= high");
    }
    CounterRng rng(seed ^ detail::kInstanceSalt, 1);
    IsingSpec s{n, std::vector<double>(n * n, 0.0), std::vector<double>(n)};
    for (std::size_t q = 0; q < n; ++q) {
        for (std::size_t j = q + 1; j < n; ++j) {
            const double v = detail::uniform_in(rng, low, high);
            s.couplings[q * n + j] = v;
            s.couplings[j * n + q] = v;
        }
    }
    for (auto &f : s.fields) {
        f = detail::uniform_in(rng, low, high);
    }
    return s;
}

/// J = -1, h ~ U(0.4, 1), g ~ U(0.1, 0.6).
inline MfiSpec random_mfi(std::uint64_t seed, std::size_t n = 12) {
    CounterRng rng(seed ^ detail::kInstanceSalt, 2);
    MfiSpec s;
    s.n = n;
    s.J = -1.0;
    s.h = detail::uniform_in(rng, 0.4, 1.0);
    s.g = detail::uniform_in(rng, 0.1, 0.6);
    return s;
}

enum class ControlKind { YPerQubit, ZPerQubit, YzPerQubit, GlobalXyz, XMixer };

inline ControlKind parse_control_kind(std::string_view name) {
    if (name == "y_per_qubit") {
        return ControlKind::YPerQubit;
    }
    if (name == "z_per_qubit") {
        return ControlKind::ZPerQubit;
    }
    if (name == "yz_per_qubit") {
        return ControlKind::YzPerQubit;
    }
    if (name == "global_xyz") {
        return ControlKind::GlobalXyz;
    }
    if (name == "x_mixer") {
        return ControlKind::XMixer;
    }
    throw std::invalid_argument("unknown control kind '" + std::string(name) +
                                "'");
}

namespace detail {
inline PauliSum global_sum(std::size_t n, Pauli p) {
    std::vector<PauliTerm> terms;
    for (std::size_t q = 0; q < n; ++q) {
        terms.push_back({PauliString::single(n, q, p), 1.0});
    }
    return PauliSum(n, std::move(terms));
}
} // namespace detail

/**
 * @brief Named control families.
 *
 * y_per_qubit: [Y_0, ..., Y_{n-1}]; z_per_qubit likewise with Z;
 * yz_per_qubit: Y's then Z's; global_xyz: [ΣX, ΣY, ΣZ]; x_mixer: [ΣX].
 */
inline std::vector<PauliSum> standard_controls(ControlKind kind, std::size_t n) {
    std::vector<PauliSum> out;
    auto per_qubit = [&](Pauli p) {
        for (std::size_t q = 0; q < n; ++q) {
            out.push_back(
                PauliSum::from_term(PauliString::single(n, q, p), 1.0));
        }
    };
    switch (kind) {
    case ControlKind::YPerQubit:
        per_qubit(Pauli::Y);
        break;
    case ControlKind::ZPerQubit:
        per_qubit(Pauli::Z);
        break;
    case ControlKind::YzPerQubit:
        per_qubit(Pauli::Y);
        per_qubit(Pauli::Z);
        break;
    case ControlKind::GlobalXyz:
        out.push_back(detail::global_sum(n, Pauli::X));
        out.push_back(detail::global_sum(n, Pauli::Y));
        out.push_back(detail::global_sum(n, Pauli::Z));
        break;
    case ControlKind::XMixer:
        out.push_back(detail::global_sum(n, Pauli::X));
        break;
    }
    return out;
}

inline std::vector<PauliSum> standard_controls(std::string_view kind,
                                               std::size_t n) {
    return standard_controls(parse_control_kind(kind), n);
}

} // namespace fqae
