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

#include <random>

#include "qpem/circuit.hpp"

namespace qpem {

/// Canonical single-qubit compression. The angles are reported in the
/// u3(theta, phi, lambda) convention and realized with fixed depth 5 as
///   rz(phi + pi) . sx . rz(theta + pi) . sx . rz(lambda),
/// equal to the input up to global phase.
struct CompressedSqg {
  double theta, phi, lambda;
  std::array<double, 3> rz_angles() const {
    return {phi + M_PI, theta + M_PI, lambda};
  }
  CMat matrix() const;
};
CompressedSqg compress_sqg(const Eigen::Matrix2cd& u);
/// Compress a run of gates acting on one qubit (first element acts first).
CompressedSqg compress_sqg(const std::vector<Eigen::Matrix2cd>& run);

/// Conjugate a Pauli by an explicit Clifford unitary: U P U^dag = +-P'.
/// Throws if the result is not a signed Pauli (non-Clifford input).
struct SignedPauli {
  PauliString pauli;
  int sign = 1;
};
SignedPauli conjugate_pauli(const CMat& u, const PauliString& p);

/// Pre/post Pauli layers of one twirl draw.
struct TwirlPair {
  PauliString pre;
  PauliString post;
};

/// Full Pauli twirl of a Clifford two-qubit layer: pre is uniform on the
/// layer's qubits, post = L pre L^dag so the ideal action is unchanged.
TwirlPair pauli_twirl_clifford(const Layer& layer, std::size_t n,
                               std::mt19937_64& rng);

/// Commutant subgroup of a fractional gate's generator within the two-qubit
/// Pauli group (local labels).
std::vector<PauliString> fractional_commutant(const TwoQubitGate& g);

/// Partial Pauli twirl of a fractional layer: per gate, a uniform element of
/// the generator's commutant; pre == post.
TwirlPair partial_twirl_fractional(const Layer& layer, std::size_t n,
                                   std::mt19937_64& rng);

/// Equality classes gamma_P = gamma_{U^dag P U} imposed by a square-root-
/// Pauli twirl group on a parameter set. A class whose orbit leaves the
/// declared set is forced to zero.
struct SpClass {
  std::vector<PauliString> members;
  bool forced_zero = false;
};
std::vector<SpClass> sp_twirl_constraints(
    const std::vector<PauliString>& parameters,
    const std::vector<CMat>& group_unitaries);

/// Default SP-twirl group of a CZ or rzz layer: per-gate tensor products of
/// {I, sqrt(Z)} on the gate's qubits, as n-qubit unitaries restricted to the
/// layer support.
std::vector<CMat> sp_group_sqrt_z(const Layer& layer,
                                  const std::vector<std::size_t>& support);

/// Measurement twirl: the circuit paired with its complementary X-mask
/// partner. Averaging outcome-flipped results symmetrizes readout bias.
struct MeasTwirlPair {
  LayeredCircuit a, b;
  std::vector<bool> flip_a, flip_b;  // per-qubit outcome flips
};
MeasTwirlPair measurement_twirl_pair(const LayeredCircuit& c,
                                     const std::vector<std::size_t>& subset);

}  // namespace qpem
