// Copyright 2026 The qpem authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <map>
#include <optional>
#include <vector>

#include "qpem/pauli.hpp"

namespace qpem {

/// The three equivalent parameterizations of an n-qubit Pauli channel:
///   Rates:        Lambda(rho) = sum_P p_P P rho P,      sum p_P = 1
///   Eigenvalues:  Lambda(P)   = lambda_P P,             lambda_I = 1
///   Generators:   Lambda      = exp(sum_P gamma_P P.P), gamma_I = -sum gamma
enum class ChannelRep { Rates, Eigenvalues, Generators };

class PauliChannel {
 public:
  PauliChannel() = default;

  /// Terms exclude the identity Pauli; its value is implied per rep.
  static PauliChannel from_rates(std::size_t n,
                                 std::map<PauliString, double> terms);
  static PauliChannel from_eigenvalues(std::size_t n,
                                       std::map<PauliString, double> terms);
  static PauliChannel from_generators(std::size_t n,
                                      std::map<PauliString, double> terms);

  /// Identity channel on n qubits.
  static PauliChannel identity(std::size_t n) {
    return from_generators(n, {});
  }
  /// Depolarizing channel of total error rate p on one qubit.
  static PauliChannel depolarizing1(double p);

  std::size_t num_qubits() const { return n_; }
  ChannelRep rep() const { return rep_; }
  const std::map<PauliString, double>& terms() const { return terms_; }

  /// Union of supports of stored Paulis.
  std::vector<std::size_t> support() const;
  /// Max weight among stored Paulis.
  std::size_t locality() const;
  bool is_trivial() const { return terms_.empty(); }

  /// Eigenvalue lambda_a for any Pauli a, computable from any representation.
  double eigenvalue(const PauliString& a) const;

  /// Lossless conversions (dense over the channel support).
  /// Negative rates within `clip_tol` of 0 are projected to 0; anything more
  /// negative raises (unphysical spectrum / gauge violation).
  PauliChannel to_rates(double clip_tol = 1e-9) const;
  PauliChannel to_eigenvalues() const;
  /// Requires all eigenvalues > 0 on the support group.
  PauliChannel to_generators() const;

  /// 1 - entanglement fidelity to the identity. For a Pauli channel this is
  /// 1 - p_I.
  double infidelity() const;

  /// Composition: eigenvalues multiply elementwise.
  PauliChannel compose(const PauliChannel& other) const;

  /// Channel restricted to a qubit subset the support must lie in; local
  /// labels follow the order of `qubits`.
  PauliChannel restrict_to(const std::vector<std::size_t>& qubits) const;

  /// Same channel with all terms scaled (generator rep only).
  PauliChannel scaled(double factor) const;

 private:
  std::size_t n_ = 0;
  ChannelRep rep_ = ChannelRep::Generators;
  std::map<PauliString, double> terms_;  // identity excluded
};

}  // namespace qpem
