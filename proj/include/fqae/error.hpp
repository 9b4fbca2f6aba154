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
#pragma once

#include <stdexcept>
#include <string>

namespace fqae {

/// Operands live on different qubit counts (or lengths otherwise disagree).
class DimensionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A generator or model does not satisfy the structure a routine requires.
class UnsupportedError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// An iterative procedure gave up before meeting its stopping rule.
class ConvergenceError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-domain user input (config files, CLI flags, tables).
class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {
inline void require_same_qubits(std::size_t a, std::size_t b,
                                const char *what) {
    if (a != b) {
        throw DimensionError(std::string(what) + ": qubit count mismatch (" +
                             std::to_string(a) + " vs " + std::to_string(b) +
                             ")");
    }
}
} // namespace detail

} // namespace fqae
