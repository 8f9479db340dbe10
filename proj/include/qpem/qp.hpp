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

#include <optional>
#include <string>
#include <vector>

#include "qpem/channel.hpp"
#include "qpem/superop.hpp"

namespace qpem {

/// A gate slot a basis element may reference around its Pauli layer.
struct GateRef {
  enum class Kind { None, Gate, Idle, Sub, Extra };
  Kind kind = Kind::None;
  std::size_t index = 0;  // Sub / Extra
  static GateRef none() { return {}; }
  static GateRef gate() { return {Kind::Gate, 0}; }
  static GateRef idle() { return {Kind::Idle, 0}; }
  static GateRef sub(std::size_t i) { return {Kind::Sub, i}; }
  static GateRef extra(std::size_t i) { return {Kind::Extra, i}; }
};

/// One sub-circuit type: a Pauli layer slot with optional gates before and
/// after it (in time order). The trivial type is the bare gate.
struct QPType {
  bool trivial = false;
  GateRef before;  // applied before the Pauli
  GateRef after;   // applied after the Pauli
  static QPType bare() {
    QPType t;
    t.trivial = true;
    return t;
  }
  // elements G . P (Pauli first in time)
  static QPType gate_pauli() { return {false, GateRef::none(), GateRef::gate()}; }
  // elements P . G (gate first in time)
  static QPType pauli_gate() { return {false, GateRef::gate(), GateRef::none()}; }
  // elements P followed by a noisy idle of the gate duration
  static QPType pauli_idle() { return {false, GateRef::none(), GateRef::idle()}; }
};

/// Ideal and noisy PTMs for everything a basis may reference.
struct QPGateContext {
  std::size_t k = 2;  // qubits of the mitigated sub-circuit
  Mat ideal_gate, noisy_gate;
  Mat ideal_idle, noisy_idle;
  std::vector<Mat> ideal_sub, noisy_sub;      // per-gate fragments of a layer
  std::vector<Mat> ideal_extra, noisy_extra;  // extra mitigation gates
};

struct QPBasisElement {
  QPType type;
  PauliString pauli;  // undefined for the trivial element
  std::string label;
};

/// Multi-type basis: element 0 is the bare noisy gate.
struct QPBasis {
  QPGateContext ctx;
  std::vector<QPBasisElement> elements;
  std::vector<PauliString> mitigation_set;  // the Pauli layers S

  Mat ideal_ptm(std::size_t i) const;
  Mat noisy_ptm(std::size_t i) const;
};

/// Enumerate and deduplicate (by ideal superoperator) the element list.
QPBasis build_basis(const QPGateContext& ctx, const std::vector<QPType>& types,
                    const std::vector<PauliString>& mitigation_set);

/// A local Choi row: the real or imaginary part of the coefficient of
/// P_left . P_right under the normalized Frobenius pairing.
struct ChoiRow {
  PauliString left, right;
  bool imag = false;
};

/// All rows (P_i, P_j) with combined support at most max_support qubits;
/// (I, I) first. Pure-real rows only appear once.
std::vector<ChoiRow> local_choi_rows(std::size_t k, std::size_t max_support);

struct LeastSquaresData {
  Eigen::MatrixXd a;  // rows x elements
  Eigen::VectorXd y;
  std::vector<ChoiRow> rows;
};

/// First-order data: columns from ideal inverses G0^-1 B_i0; y from the
/// before-error generator L_b.
LeastSquaresData build_least_squares(const Mat& l_before, const QPBasis& basis,
                                     const std::vector<ChoiRow>& rows);

/// Beyond-first-order data: columns from exact noisy inverses G^-1 B_i and
/// target G^-1 G0.
LeastSquaresData build_least_squares_nonlinear(const QPBasis& basis,
                                               const std::vector<ChoiRow>& rows);

struct QPDecomposition {
  std::vector<double> c;
  double w = 1.0;                 // sum |c_i|
  double residual_frobenius = 0;  // || sum c_i B_i - G0 ||_F (noisy elements)
  double frobenius_noise = 0;     // || G - G0 ||_F
  double infidelity = 0;            // IF of the bare noisy gate
  double residual_infidelity = 0;   // IF of sum c_i B_i relative to G0
  double mitigated_infidelity = 0;  // IF - residual_infidelity
  double blowup_rate = 0;           // (W - 1) / IF
  double coeff_sum = 1.0;
  std::vector<std::size_t> support() const {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c[i] != 0.0) s.push_back(i);
    return s;
  }
};

struct QPSolveOptions {
  double svd_threshold = 1e-8;  // relative singular-value cutoff
  bool nonlinear = false;       // use noisy inverses (beyond first order)
};

/// Coefficient construction: pseudo-inverse, image projection, then the
/// l1-minimizing linear program over the kernel's affine space.
QPDecomposition solve_first_order(const LeastSquaresData& data,
                                  const QPBasis& basis,
                                  const QPSolveOptions& opts = {});

/// Convenience: rows + data + solve + metrics in one call.
QPDecomposition solve_qp(const QPBasis& basis, const QPSolveOptions& opts = {},
                         std::size_t choi_support = 0);

/// W lower bound (1 + IF) / (1 - IF).
double qp_norm_lower_bound(double infidelity);

/// Signed-coefficient inverse of a Pauli channel over Pauli insertions:
/// N^-1 = sum_b c_b P_b . P_b, exact.
struct PauliInverse {
  std::vector<PauliString> paulis;  // paulis[0] = identity
  std::vector<double> c;
  double w = 1.0;
};
PauliInverse pauli_channel_inverse(const PauliChannel& ch);

}  // namespace qpem
