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
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "qpem/channel.hpp"
#include "qpem/circuit.hpp"

namespace qpem {

/// Where a layer's Pauli channel acts relative to the ideal gates.
enum class Placement { After, During };

struct LayerNoise {
  PauliChannel channel;                    // generator rep preferred
  Placement placement = Placement::After;  // During only for fractional layers
  std::map<PauliString, double> coherent;  // extra Hamiltonian terms (during)
  double angle_factor = 1.0;               // over-rotation: executed angle =
                                           // angle_factor * programmed angle
};

struct ReadoutError {
  double p01 = 0;  // P(read 1 | state 0)
  double p10 = 0;  // P(read 0 | state 1)
  double bias() const { return 0.5 * (p10 - p01); }
};

/// Noise attaches per unique layer id; untagged layers are noiseless.
struct NoiseModel {
  std::map<std::string, LayerNoise> layers;
  std::optional<PauliChannel> prep;  // after state preparation
  std::optional<PauliChannel> meas;  // before measurement
  std::vector<ReadoutError> readout;  // per qubit; empty = ideal readout

  bool has_noise(const std::string& id) const {
    return layers.count(id) > 0;
  }
};

/// n-qubit state as real coefficients over the orthonormal Pauli basis:
/// v[a] = Tr(sigma_a rho) with sigma_a = P_a / sqrt(2^n). Index a uses base-4
/// digits, qubit 0 least significant.
class PauliState {
 public:
  explicit PauliState(std::size_t n);
  static PauliState from_bitstring(const std::string& bits);

  std::size_t num_qubits() const { return n_; }
  double trace() const;

  double expectation(const PauliString& p) const;

  /// Apply a general PTM on a qubit subset.
  void apply_ptm(const std::vector<std::size_t>& qubits, const Mat& s);
  /// Apply a diagonal PTM on a qubit subset (Pauli channels, Pauli gates).
  void apply_diag(const std::vector<std::size_t>& qubits, const Vec& d);
  /// Pauli conjugation rho -> P rho P (sign flips only).
  void apply_pauli(const PauliString& p);
  void apply_pauli_channel(const PauliChannel& c);
  void apply_unitary1(std::size_t q, const Eigen::Matrix2cd& u);
  void apply_unitary2(std::size_t q0, std::size_t q1, const CMat& u);

  /// Computational-basis probabilities, optionally through readout confusion.
  std::vector<double> z_diagonal(const std::vector<ReadoutError>* ro = nullptr) const;

  /// Expectation of a Z-string as seen by the (possibly biased) readout.
  double measured_z_expectation(const PauliString& zstring,
                                const std::vector<ReadoutError>* ro) const;

  /// Dense density matrix (n <= 8).
  CMat to_density_matrix() const;

  const std::vector<double>& data() const { return v_; }
  std::vector<double>& data() { return v_; }

 private:
  std::size_t n_;
  std::vector<double> v_;
};

/// Validated dense view of a state: Hermitian, unit trace, PSD within tol.
struct DensityState {
  CMat rho;
  static DensityState from(const PauliState& s);
  double trace_error() const;
  double min_eigenvalue() const;
};

/// Exact noisy-circuit evaluator. Caches the exponentiated PTMs of noisy
/// fractional clusters, keyed by layer id and cluster content, so sampled
/// circuit ensembles that reuse layers stay cheap.
class Simulator {
 public:
  explicit Simulator(NoiseModel model, std::size_t max_qubits = 10)
      : model_(std::move(model)), max_qubits_(max_qubits) {}

  const NoiseModel& model() const { return model_; }

  PauliState run(const LayeredCircuit& c) const;

  /// Tr(rho O) for the weighted Pauli sum held by the circuit.
  double expectation(const PauliState& s,
                     const std::vector<std::pair<PauliString, double>>& obs) const;

  /// Exact post-readout expectation of a Z-string observable.
  double measured_expectation(const LayeredCircuit& c,
                              const PauliString& zstring) const;

  /// Multinomial bitstring counts; deterministic per seed.
  std::map<std::string, std::size_t> sample_shots(const LayeredCircuit& c,
                                                  std::size_t n_shots,
                                                  std::uint64_t seed) const;
  /// Shot sampling from an already-evolved state.
  std::map<std::string, std::size_t> sample_from_state(
      const PauliState& s, std::size_t n_shots, std::uint64_t seed) const;

  /// PTM of the noisy realization of one fractional cluster: gates plus
  /// during-channel generators and coherent terms on `qubits`.
  Mat noisy_cluster_ptm(const std::vector<std::size_t>& qubits,
                        const std::vector<TwoQubitGate>& gates,
                        const LayerNoise* noise) const;

  void apply_layer(PauliState& s, const Layer& layer) const;

 private:
  NoiseModel model_;
  std::size_t max_qubits_;
  mutable std::unordered_map<std::string, Mat> cluster_cache_;
  mutable std::mutex cache_mutex_;
};

/// Fig.-style dissipative two-qubit gate: amplitude damping plus pure
/// dephasing on each qubit during an rzz(alpha), with rates
/// t_g/2T1 = t_g/Tphi = eps/3. Returns the 16x16 PTM.
Mat noisy_dissipative_gate(double alpha, double eps);
/// The same dissipative environment with the drive off (noisy idle).
Mat noisy_dissipative_idle(double eps);
/// Generator of the dissipative environment alone (for custom clusters).
Mat dissipative_generator(double eps);

/// KAK-family dissipative gate, same environment.
Mat noisy_dissipative_kak(double ax, double ay, double az, double eps);

/// Entanglement infidelity of a noisy gate PTM relative to the ideal PTM.
double gate_infidelity(const Mat& noisy, const Mat& ideal);

}  // namespace qpem
