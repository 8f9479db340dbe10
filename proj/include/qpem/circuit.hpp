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

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "qpem/superop.hpp"

namespace qpem {

enum class LayerKind { SQG, Clifford2Q, Fractional2Q };

/// Single-qubit gate: explicit 2x2 unitary plus a label for serialization.
struct SqGate {
  std::size_t q = 0;
  Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
  std::string label;          // "rz", "rx", "sx", "x", "pauli", ...
  double angle = 0.0;         // meaningful for rotation labels
};

/// Two-qubit gate. Clifford gates carry an explicit 4x4 unitary; fractional
/// gates carry KAK coefficients of the generating Hamiltonian
///   H = (ax XX + ay YY + az ZZ)/2,   U = exp(-i H).
/// An rzz gate is (0, 0, alpha); the Clifford point sits at alpha = pi/2.
struct TwoQubitGate {
  std::array<std::size_t, 2> q{0, 1};
  bool fractional = false;
  Eigen::Matrix4cd u = Eigen::Matrix4cd::Identity();  // Clifford only
  std::string name;                                   // "cz", "cx", "rzz", "kak"
  double ax = 0, ay = 0, az = 0;

  /// Unitary matrix regardless of kind.
  CMat unitary() const {
    if (!fractional) return u;
    return kak_matrix(ax, ay, az);
  }
  static TwoQubitGate rzz(std::size_t q0, std::size_t q1, double alpha) {
    TwoQubitGate g;
    g.q = {q0, q1};
    g.fractional = true;
    g.name = "rzz";
    g.az = alpha;
    return g;
  }
  static TwoQubitGate kak(std::size_t q0, std::size_t q1, double ax, double ay,
                          double az) {
    TwoQubitGate g;
    g.q = {q0, q1};
    g.fractional = true;
    g.name = "kak";
    g.ax = ax;
    g.ay = ay;
    g.az = az;
    return g;
  }
  static TwoQubitGate cz(std::size_t q0, std::size_t q1) {
    TwoQubitGate g;
    g.q = {q0, q1};
    g.name = "cz";
    g.u = cz_matrix();
    return g;
  }
  static TwoQubitGate cx(std::size_t control, std::size_t target) {
    TwoQubitGate g;
    g.q = {control, target};
    g.name = "cx";
    g.u = cx_matrix();
    return g;
  }
};

struct Layer {
  LayerKind kind = LayerKind::SQG;
  std::vector<SqGate> sq;           // kind == SQG
  std::vector<TwoQubitGate> gates;  // otherwise; disjoint qubit pairs
  std::string id;                   // unique-layer id noise attaches to;
                                    // empty = noiseless (twirls, fiducials)

  bool is_two_qubit() const { return kind != LayerKind::SQG; }
  std::vector<std::size_t> qubits() const;
  void validate(std::size_t n) const;
};

Layer sqg_layer(std::vector<SqGate> gates);
Layer pauli_layer(const PauliString& p);  // SQG layer applying p
Layer two_qubit_layer(LayerKind kind, std::vector<TwoQubitGate> gates,
                      std::string id);

/// SPAM + layers + final measurement-basis rotation + observables.
class LayeredCircuit {
 public:
  LayeredCircuit() = default;
  LayeredCircuit(std::size_t n, std::string prep = "")
      : n_(n), prep_(prep.empty() ? std::string(n, '0') : std::move(prep)) {
    if (prep_.size() != n_) throw std::invalid_argument("prep length != n");
  }

  std::size_t num_qubits() const { return n_; }
  const std::string& prep() const { return prep_; }

  void append(Layer layer) {
    layer.validate(n_);
    layers_.push_back(std::move(layer));
  }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  std::size_t depth() const { return layers_.size(); }

  void set_meas_basis(Layer l) {
    l.validate(n_);
    meas_basis_ = std::move(l);
  }
  const std::optional<Layer>& meas_basis() const { return meas_basis_; }

  void add_observable(const PauliString& p, double w) {
    if (p.num_qubits() != n_)
      throw std::invalid_argument("observable qubit count mismatch");
    observables_.emplace_back(p, w);
  }
  const std::vector<std::pair<PauliString, double>>& observables() const {
    return observables_;
  }

  /// Insert a layer before position `at` (0 = before everything,
  /// depth() = at the end).
  void insert(std::size_t at, Layer layer) {
    layer.validate(n_);
    layers_.insert(layers_.begin() + at, std::move(layer));
  }

 private:
  std::size_t n_ = 0;
  std::string prep_;
  std::vector<Layer> layers_;
  std::optional<Layer> meas_basis_;
  std::vector<std::pair<PauliString, double>> observables_;
};

}  // namespace qpem
