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

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qpem {

/// Single-qubit Pauli letter.
enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

inline char pauli_char(Pauli p) { return "IXYZ"[static_cast<int>(p)]; }

/// Phase-free n-qubit Pauli label. Qubit q holds letters()[q].
class PauliString {
 public:
  PauliString() = default;
  explicit PauliString(std::size_t n) : letters_(n, 0) {}
  PauliString(std::size_t n, std::size_t qubit, Pauli p) : letters_(n, 0) {
    set(qubit, p);
  }

  static PauliString from_string(std::string_view s) {
    PauliString p(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      switch (s[i]) {
        case 'I': break;
        case 'X': p.letters_[i] = 1; break;
        case 'Y': p.letters_[i] = 2; break;
        case 'Z': p.letters_[i] = 3; break;
        default:
          throw std::invalid_argument("bad Pauli letter: " +
                                      std::string(1, s[i]));
      }
    }
    return p;
  }

  std::size_t num_qubits() const { return letters_.size(); }

  Pauli at(std::size_t q) const { return static_cast<Pauli>(letters_[q]); }
  void set(std::size_t q, Pauli p) {
    letters_[q] = static_cast<std::uint8_t>(p);
  }

  bool is_identity() const {
    for (auto l : letters_)
      if (l) return false;
    return true;
  }

  std::size_t weight() const {
    std::size_t w = 0;
    for (auto l : letters_)
      if (l) ++w;
    return w;
  }

  std::vector<std::size_t> support() const {
    std::vector<std::size_t> s;
    for (std::size_t q = 0; q < letters_.size(); ++q)
      if (letters_[q]) s.push_back(q);
    return s;
  }

  std::string str() const {
    std::string s(letters_.size(), 'I');
    for (std::size_t q = 0; q < letters_.size(); ++q)
      s[q] = "IXYZ"[letters_[q]];
    return s;
  }

  /// Restriction to a qubit subset (letters outside are dropped).
  PauliString restrict_to(const std::vector<std::size_t>& qubits) const {
    PauliString r(qubits.size());
    for (std::size_t i = 0; i < qubits.size(); ++i)
      r.letters_[i] = letters_[qubits[i]];
    return r;
  }

  /// Embedding of a local Pauli onto n qubits at the given positions.
  static PauliString embed(std::size_t n, const std::vector<std::size_t>& at,
                           const PauliString& local) {
    PauliString p(n);
    for (std::size_t i = 0; i < at.size(); ++i)
      p.letters_[at[i]] = local.letters_[i];
    return p;
  }

  friend bool operator==(const PauliString& a, const PauliString& b) {
    return a.letters_ == b.letters_;
  }
  friend bool operator!=(const PauliString& a, const PauliString& b) {
    return !(a == b);
  }
  friend bool operator<(const PauliString& a, const PauliString& b) {
    return a.letters_ < b.letters_;
  }

 private:
  std::vector<std::uint8_t> letters_;
};

/// Symplectic form <a,b>: 0 if the operators commute, 1 if they anticommute.
/// Throws on mismatched qubit counts.
int commutes(const PauliString& a, const PauliString& b);

/// Phase-tracked product: a * b = i^quarter_turns * pauli.
struct PauliProduct {
  PauliString pauli;
  unsigned quarter_turns;  // power of i, mod 4
};
PauliProduct multiply(const PauliString& a, const PauliString& b);

/// Dense index of a local Pauli: base-4 digits, qubit 0 least significant.
std::size_t pauli_index(const PauliString& p);
PauliString pauli_from_index(std::size_t n, std::size_t idx);

/// All 4^n Paulis on n qubits in index order (n must stay small).
std::vector<PauliString> all_paulis(std::size_t n);

/// All Paulis on n qubits with 1 <= weight <= max_weight.
std::vector<PauliString> local_paulis(std::size_t n, std::size_t max_weight);

}  // namespace qpem
