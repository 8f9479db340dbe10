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

#include <doctest.h>

#include <random>

#include "qpem/pauli.hpp"
#include "qpem/superop.hpp"

using namespace qpem;

TEST_CASE("symplectic form basics") {
  auto P = [](const char* s) { return PauliString::from_string(s); };
  CHECK(commutes(P("XI"), P("ZI")) == 1);
  CHECK(commutes(P("II"), P("ZZ")) == 0);
  CHECK(commutes(P("XY"), P("YX")) == 0);
  CHECK(commutes(P("X"), P("Y")) == 1);
  CHECK_THROWS(commutes(P("XI"), P("X")));
}

TEST_CASE("symplectic form is symmetric and additive over disjoint supports") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> d(0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    PauliString a(5), b(5);
    for (std::size_t q = 0; q < 5; ++q) {
      a.set(q, static_cast<Pauli>(d(rng)));
      b.set(q, static_cast<Pauli>(d(rng)));
    }
    CHECK(commutes(a, b) == commutes(b, a));
    // concatenation bilinearity: <a1a2, b1b2> = <a1,b1> ^ <a2,b2>
    PauliString a2(10), b2(10);
    for (std::size_t q = 0; q < 5; ++q) {
      a2.set(q, a.at(q));
      b2.set(q, b.at(q));
      a2.set(q + 5, b.at(q));
      b2.set(q + 5, a.at(q));
    }
    CHECK(commutes(a2, b2) == 0);  // x ^ x = 0 by symmetry
  }
}

TEST_CASE("pauli product matches matrix multiplication") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> d(0, 3);
  for (int trial = 0; trial < 50; ++trial) {
    PauliString a(3), b(3);
    for (std::size_t q = 0; q < 3; ++q) {
      a.set(q, static_cast<Pauli>(d(rng)));
      b.set(q, static_cast<Pauli>(d(rng)));
    }
    auto prod = multiply(a, b);
    CMat lhs = pauli_matrix(a) * pauli_matrix(b);
    cx phase = std::pow(cx(0, 1), prod.quarter_turns);
    CMat rhs = phase * pauli_matrix(prod.pauli);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("index round trip") {
  for (std::size_t i = 0; i < 256; ++i) {
    auto p = pauli_from_index(4, i);
    CHECK(pauli_index(p) == i);
  }
  CHECK(local_paulis(2, 2).size() == 15);
  CHECK(local_paulis(2, 1).size() == 6);
}

TEST_CASE("support and weight") {
  auto p = PauliString::from_string("IXIZY");
  CHECK(p.weight() == 3);
  CHECK(p.support() == std::vector<std::size_t>{1, 3, 4});
  CHECK(p.restrict_to({1, 3}).str() == "XZ");
  CHECK(PauliString::embed(5, {1, 3}, PauliString::from_string("XZ")).str() ==
        "IXIZI");
}
