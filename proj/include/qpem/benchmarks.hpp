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

#include <string>
#include <vector>

#include "qpem/circuit.hpp"

namespace qpem {

enum class Geometry { Path, Ring, HeavyHexPatch };

/// Kicked transverse-field Ising circuit: per step, three rzz sublayers over
/// an edge coloring, each preceded by a single-qubit kick layer
/// rz(alpha_z/3) rx(alpha_x/3).
struct KickedIsingSpec {
  Geometry geometry = Geometry::Ring;
  std::size_t n_qubits = 8;
  std::size_t steps = 3;
  double alpha_zz = 1.0;
  double alpha_x = 1.6;
  double alpha_z = 0.3;
  std::size_t max_observable_weight = 2;  // Z-chains up to this length
};

/// Edge list of the geometry.
std::vector<std::pair<std::size_t, std::size_t>> geometry_edges(
    Geometry g, std::size_t n);

/// The circuit, with Z-string observables attached (all weight-1 strings and
/// contiguous chains up to max_observable_weight).
LayeredCircuit build_kicked_ising(const KickedIsingSpec& spec);

/// Ids of the unique rzz layers the builder emits ("rzz_c0", ...).
std::vector<std::string> kicked_ising_layer_ids(const KickedIsingSpec& spec);

struct ObservableResult {
  PauliString pauli;
  double ideal = 0;
  double noisy = 0;
  double mitigated = 0;
  double stddev = 0;
  double zscore() const {
    return stddev > 0 ? (mitigated - ideal) / stddev : 0.0;
  }
};

struct MagnetizationResult {
  double value = 0;
  double stddev = 0;  // covariance-aware over shared circuits
};

/// M = (1/N) sum <Z_i>; the variance uses the sampled covariance of the
/// per-qubit estimators plus their individual variances.
MagnetizationResult magnetization(
    const std::vector<ObservableResult>& per_qubit,
    const std::vector<std::vector<double>>& per_circuit_values,
    std::size_t n_circuits);

struct ZScoreSummary {
  double mean = 0;
  double stddev = 0;
  double ks_distance = 0;  // vs the standard normal
  std::vector<double> zscores;
};
ZScoreSummary zscore_suite(const std::vector<ObservableResult>& results);

}  // namespace qpem
