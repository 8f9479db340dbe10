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

#include "qpem/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace qpem {

std::vector<std::pair<std::size_t, std::size_t>> geometry_edges(
    Geometry g, std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  switch (g) {
    case Geometry::Path:
      for (std::size_t i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
      break;
    case Geometry::Ring:
      for (std::size_t i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
      if (n > 2) edges.emplace_back(n - 1, 0);
      break;
    case Geometry::HeavyHexPatch: {
      // ten-qubit fragment with degree-3 row qubits and vertical bridges:
      //   0-1-2-3-4
      //     |   |
      //     5   6
      //     |   |
      //   7-8. 9.    (5-7, 6-9, 7-8, 8-9)
      if (n != 10)
        throw std::invalid_argument("heavy-hex patch is fixed at 10 qubits");
      edges = {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {1, 5},
               {3, 6}, {5, 7}, {7, 8}, {8, 9}, {6, 9}};
      break;
    }
  }
  return edges;
}

namespace {

// greedy proper 3-edge-coloring of the geometry
std::vector<std::vector<std::pair<std::size_t, std::size_t>>> color_edges(
    const std::vector<std::pair<std::size_t, std::size_t>>& edges,
    std::size_t n) {
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> colors(3);
  std::vector<std::array<bool, 3>> used(n, {false, false, false});
  for (const auto& e : edges) {
    int c = -1;
    for (int k = 0; k < 3; ++k)
      if (!used[e.first][k] && !used[e.second][k]) {
        c = k;
        break;
      }
    if (c < 0) throw std::runtime_error("geometry is not 3-edge-colorable");
    colors[c].push_back(e);
    used[e.first][c] = used[e.second][c] = true;
  }
  return colors;
}

Layer kick_layer(std::size_t n, double ax3, double az3) {
  std::vector<SqGate> sq;
  for (std::size_t q = 0; q < n; ++q) {
    SqGate g;
    g.q = q;
    g.u = Eigen::Matrix2cd(rz_matrix(az3) * rx_matrix(ax3));
    g.label = "kick";
    sq.push_back(g);
  }
  return sqg_layer(std::move(sq));
}

}  // namespace

std::vector<std::string> kicked_ising_layer_ids(const KickedIsingSpec& spec) {
  auto colors = color_edges(geometry_edges(spec.geometry, spec.n_qubits),
                            spec.n_qubits);
  std::vector<std::string> ids;
  for (std::size_t c = 0; c < colors.size(); ++c)
    if (!colors[c].empty()) ids.push_back("rzz_c" + std::to_string(c));
  return ids;
}

LayeredCircuit build_kicked_ising(const KickedIsingSpec& spec) {
  std::size_t n = spec.n_qubits;
  auto edges = geometry_edges(spec.geometry, n);
  auto colors = color_edges(edges, n);
  LayeredCircuit c(n);
  for (std::size_t step = 0; step < spec.steps; ++step) {
    for (std::size_t ci = 0; ci < colors.size(); ++ci) {
      c.append(kick_layer(n, spec.alpha_x / 3.0, spec.alpha_z / 3.0));
      if (colors[ci].empty()) continue;
      std::vector<TwoQubitGate> gates;
      for (const auto& e : colors[ci])
        gates.push_back(TwoQubitGate::rzz(e.first, e.second, spec.alpha_zz));
      c.append(two_qubit_layer(LayerKind::Fractional2Q, std::move(gates),
                               "rzz_c" + std::to_string(ci)));
    }
  }
  // observables: single Z and contiguous Z-chains along the qubit line
  for (std::size_t q = 0; q < n; ++q)
    c.add_observable(PauliString(n, q, Pauli::Z), 1.0);
  for (std::size_t w = 2; w <= spec.max_observable_weight; ++w) {
    std::size_t count = spec.geometry == Geometry::Ring ? n : n - w + 1;
    for (std::size_t start = 0; start < count; ++start) {
      PauliString p(n);
      for (std::size_t i = 0; i < w; ++i) p.set((start + i) % n, Pauli::Z);
      c.add_observable(p, 1.0);
    }
  }
  return c;
}

MagnetizationResult magnetization(
    const std::vector<ObservableResult>& per_qubit,
    const std::vector<std::vector<double>>& per_circuit_values,
    std::size_t n_circuits) {
  MagnetizationResult out;
  std::size_t n = per_qubit.size();
  if (n == 0) return out;
  for (const auto& r : per_qubit) out.value += r.mitigated;
  out.value /= static_cast<double>(n);
  if (per_circuit_values.empty() || n_circuits < 2) {
    double var = 0;
    for (const auto& r : per_qubit) var += r.stddev * r.stddev;
    out.stddev = std::sqrt(var) / static_cast<double>(n);
    return out;
  }
  // covariance of the per-circuit weighted values across shared circuits
  std::vector<double> means(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n_circuits; ++j)
      means[i] += per_circuit_values[i][j] / n_circuits;
  double var_sum = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      double cov = 0;
      for (std::size_t j = 0; j < n_circuits; ++j)
        cov += (per_circuit_values[i][j] - means[i]) *
               (per_circuit_values[k][j] - means[k]);
      cov /= (n_circuits - 1.0) * n_circuits;  // covariance of the means
      var_sum += cov;
    }
  out.stddev = std::sqrt(std::max(0.0, var_sum)) / static_cast<double>(n);
  return out;
}

ZScoreSummary zscore_suite(const std::vector<ObservableResult>& results) {
  ZScoreSummary out;
  for (const auto& r : results) out.zscores.push_back(r.zscore());
  std::size_t n = out.zscores.size();
  if (n == 0) return out;
  for (double z : out.zscores) out.mean += z;
  out.mean /= n;
  if (n > 1) {
    double ss = 0;
    for (double z : out.zscores) ss += (z - out.mean) * (z - out.mean);
    out.stddev = std::sqrt(ss / (n - 1));
  }
  // Kolmogorov-Smirnov distance to N(0, 1)
  auto sorted = out.zscores;
  std::sort(sorted.begin(), sorted.end());
  auto phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  double ks = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double f = phi(sorted[i]);
    ks = std::max(ks, std::abs(f - static_cast<double>(i) / n));
    ks = std::max(ks, std::abs(static_cast<double>(i + 1) / n - f));
  }
  out.ks_distance = ks;
  return out;
}

}  // namespace qpem
