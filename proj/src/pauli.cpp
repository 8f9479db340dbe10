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

#include "qpem/pauli.hpp"

namespace qpem {

int commutes(const PauliString& a, const PauliString& b) {
  if (a.num_qubits() != b.num_qubits())
    throw std::invalid_argument("commutes: qubit count mismatch");
  int parity = 0;
  for (std::size_t q = 0; q < a.num_qubits(); ++q) {
    auto la = a.at(q), lb = b.at(q);
    if (la != Pauli::I && lb != Pauli::I && la != lb) parity ^= 1;
  }
  return parity;
}

namespace {
// letter product: s_a * s_b = i^t * s_c.  t indexed by [a][b].
constexpr std::uint8_t kProd[4][4] = {
    {0, 1, 2, 3}, {1, 0, 3, 2}, {2, 3, 0, 1}, {3, 2, 1, 0}};
constexpr std::uint8_t kTurns[4][4] = {
    {0, 0, 0, 0}, {0, 0, 1, 3}, {0, 3, 0, 1}, {0, 1, 3, 0}};
}  // namespace

PauliProduct multiply(const PauliString& a, const PauliString& b) {
  if (a.num_qubits() != b.num_qubits())
    throw std::invalid_argument("multiply: qubit count mismatch");
  PauliString c(a.num_qubits());
  unsigned turns = 0;
  for (std::size_t q = 0; q < a.num_qubits(); ++q) {
    int la = static_cast<int>(a.at(q)), lb = static_cast<int>(b.at(q));
    c.set(q, static_cast<Pauli>(kProd[la][lb]));
    turns += kTurns[la][lb];
  }
  return {c, turns % 4u};
}

std::size_t pauli_index(const PauliString& p) {
  std::size_t idx = 0;
  for (std::size_t q = p.num_qubits(); q-- > 0;)
    idx = idx * 4 + static_cast<std::size_t>(p.at(q));
  return idx;
}

PauliString pauli_from_index(std::size_t n, std::size_t idx) {
  PauliString p(n);
  for (std::size_t q = 0; q < n; ++q) {
    p.set(q, static_cast<Pauli>(idx & 3));
    idx >>= 2;
  }
  return p;
}

std::vector<PauliString> all_paulis(std::size_t n) {
  if (n > 10) throw std::invalid_argument("all_paulis: n too large");
  std::vector<PauliString> out;
  out.reserve(std::size_t(1) << (2 * n));
  for (std::size_t i = 0; i < (std::size_t(1) << (2 * n)); ++i)
    out.push_back(pauli_from_index(n, i));
  return out;
}

std::vector<PauliString> local_paulis(std::size_t n, std::size_t max_weight) {
  std::vector<PauliString> out;
  for (const auto& p : all_paulis(n)) {
    auto w = p.weight();
    if (w >= 1 && w <= max_weight) out.push_back(p);
  }
  return out;
}

}  // namespace qpem
