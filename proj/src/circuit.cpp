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

#include "qpem/circuit.hpp"

#include <set>
#include <stdexcept>

namespace qpem {

std::vector<std::size_t> Layer::qubits() const {
  std::set<std::size_t> s;
  if (kind == LayerKind::SQG) {
    for (const auto& g : sq) s.insert(g.q);
  } else {
    for (const auto& g : gates) {
      s.insert(g.q[0]);
      s.insert(g.q[1]);
    }
  }
  return {s.begin(), s.end()};
}

void Layer::validate(std::size_t n) const {
  if (kind == LayerKind::SQG) {
    std::set<std::size_t> seen;
    for (const auto& g : sq) {
      if (g.q >= n) throw std::invalid_argument("gate qubit out of range");
      if (!seen.insert(g.q).second)
        throw std::invalid_argument("duplicate qubit in SQG layer");
    }
    return;
  }
  std::set<std::size_t> seen;
  for (const auto& g : gates) {
    if (g.q[0] >= n || g.q[1] >= n)
      throw std::invalid_argument("gate qubit out of range");
    if (g.q[0] == g.q[1])
      throw std::invalid_argument("two-qubit gate on a single qubit");
    if (!seen.insert(g.q[0]).second || !seen.insert(g.q[1]).second)
      throw std::invalid_argument("overlapping two-qubit gates in one layer");
    if (kind == LayerKind::Fractional2Q && !g.fractional)
      throw std::invalid_argument("non-fractional gate in fractional layer");
    if (kind == LayerKind::Clifford2Q && g.fractional)
      throw std::invalid_argument("fractional gate in Clifford layer");
  }
}

Layer sqg_layer(std::vector<SqGate> gates) {
  Layer l;
  l.kind = LayerKind::SQG;
  l.sq = std::move(gates);
  return l;
}

Layer pauli_layer(const PauliString& p) {
  Layer l;
  l.kind = LayerKind::SQG;
  for (auto q : p.support()) {
    SqGate g;
    g.q = q;
    g.label = std::string(1, pauli_char(p.at(q)));
    g.u = pauli_matrix(PauliString(1, 0, p.at(q)));
    l.sq.push_back(g);
  }
  return l;
}

Layer two_qubit_layer(LayerKind kind, std::vector<TwoQubitGate> gates,
                      std::string id) {
  Layer l;
  l.kind = kind;
  l.gates = std::move(gates);
  l.id = std::move(id);
  return l;
}

}  // namespace qpem
