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

#include "qpem/superop.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <stdexcept>

namespace qpem {

namespace {

// Pauli action as a permutation with phases: P|i> = phase[i] |perm[i]>.
struct PauliAction {
  std::vector<std::size_t> perm;
  std::vector<cx> phase;
};

PauliAction pauli_action(const PauliString& p) {
  std::size_t k = p.num_qubits(), dim = std::size_t(1) << k;
  PauliAction a{std::vector<std::size_t>(dim), std::vector<cx>(dim)};
  for (std::size_t i = 0; i < dim; ++i) {
    std::size_t j = i;
    cx ph(1.0, 0.0);
    for (std::size_t q = 0; q < k; ++q) {
      bool bit = (i >> q) & 1;
      switch (p.at(q)) {
        case Pauli::I: break;
        case Pauli::X: j ^= (std::size_t(1) << q); break;
        case Pauli::Y:
          j ^= (std::size_t(1) << q);
          ph *= bit ? cx(0, -1) : cx(0, 1);
          break;
        case Pauli::Z:
          if (bit) ph = -ph;
          break;
      }
    }
    a.perm[i] = j;
    a.phase[i] = ph;
  }
  return a;
}

}  // namespace

CMat pauli_matrix(const PauliString& p) {
  std::size_t dim = std::size_t(1) << p.num_qubits();
  auto act = pauli_action(p);
  CMat m = CMat::Zero(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) m(act.perm[i], i) = act.phase[i];
  return m;
}

CMat embed_operator(const CMat& op, const std::vector<std::size_t>& op_qubits,
                    const std::vector<std::size_t>& all_qubits) {
  std::size_t k = all_qubits.size();
  std::size_t dim = std::size_t(1) << k;
  std::vector<int> pos(op_qubits.size());
  for (std::size_t i = 0; i < op_qubits.size(); ++i) {
    auto it = std::find(all_qubits.begin(), all_qubits.end(), op_qubits[i]);
    if (it == all_qubits.end())
      throw std::invalid_argument("embed_operator: qubit not in target set");
    pos[i] = static_cast<int>(it - all_qubits.begin());
  }
  auto sub = [&](std::size_t full) {
    std::size_t s = 0;
    for (std::size_t i = 0; i < pos.size(); ++i)
      s |= ((full >> pos[i]) & 1) << i;
    return s;
  };
  std::size_t rest_mask = dim - 1;
  for (int p : pos) rest_mask &= ~(std::size_t(1) << p);
  CMat m = CMat::Zero(dim, dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      if ((i & rest_mask) != (j & rest_mask)) continue;
      m(i, j) = op(sub(i), sub(j));
    }
  return m;
}

namespace {

std::vector<PauliAction> all_actions(std::size_t k) {
  std::size_t nd = std::size_t(1) << (2 * k);
  std::vector<PauliAction> acts;
  acts.reserve(nd);
  for (std::size_t a = 0; a < nd; ++a)
    acts.push_back(pauli_action(pauli_from_index(k, a)));
  return acts;
}

}  // namespace

Mat ptm_of_unitary(const CMat& u) {
  std::size_t dim = u.rows();
  std::size_t k = 0;
  while ((std::size_t(1) << k) < dim) ++k;
  std::size_t nd = std::size_t(1) << (2 * k);
  auto acts = all_actions(k);
  Mat s(nd, nd);
  for (std::size_t b = 0; b < nd; ++b) {
    CMat m = u * pauli_matrix(pauli_from_index(k, b)) * u.adjoint();
    for (std::size_t a = 0; a < nd; ++a) {
      cx tr(0, 0);
      for (std::size_t i = 0; i < dim; ++i)
        tr += acts[a].phase[i] * m(i, acts[a].perm[i]);
      s(a, b) = tr.real() / static_cast<double>(dim);
    }
  }
  return s;
}

CMat ptm_of_sandwich(const CMat& a, const CMat& b) {
  std::size_t dim = a.rows();
  std::size_t k = 0;
  while ((std::size_t(1) << k) < dim) ++k;
  std::size_t nd = std::size_t(1) << (2 * k);
  auto acts = all_actions(k);
  CMat s(nd, nd);
  for (std::size_t col = 0; col < nd; ++col) {
    CMat m = a * pauli_matrix(pauli_from_index(k, col)) * b;
    for (std::size_t row = 0; row < nd; ++row) {
      cx tr(0, 0);
      for (std::size_t i = 0; i < dim; ++i)
        tr += acts[row].phase[i] * m(i, acts[row].perm[i]);
      s(row, col) = tr / static_cast<double>(dim);
    }
  }
  return s;
}

Vec pauli_conj_diag(std::size_t k, const PauliString& p) {
  std::size_t nd = std::size_t(1) << (2 * k);
  Vec d(nd);
  for (std::size_t a = 0; a < nd; ++a)
    d(a) = commutes(pauli_from_index(k, a), p) ? -1.0 : 1.0;
  return d;
}

Mat hamiltonian_generator_ptm(std::size_t k,
                              const std::map<PauliString, double>& h_terms) {
  std::size_t nd = std::size_t(1) << (2 * k);
  Mat g = Mat::Zero(nd, nd);
  for (const auto& [pc, hc] : h_terms) {
    for (std::size_t b = 0; b < nd; ++b) {
      PauliString pb = pauli_from_index(k, b);
      if (commutes(pc, pb) == 0) continue;
      // -i[P_c, P_b] = -2i * i^t * P_d with P_c P_b = i^t P_d; t is odd for
      // anticommuting Hermitian Paulis, so the coefficient is real.
      auto prod = multiply(pc, pb);
      double coeff;
      switch (prod.quarter_turns) {
        case 1: coeff = 2.0; break;   // -2i * i = 2
        case 3: coeff = -2.0; break;  // -2i * (-i) = -2
        default:
          throw std::logic_error("anticommuting product must be odd power of i");
      }
      g(pauli_index(prod.pauli), b) += hc * coeff;
    }
  }
  return g;
}

Vec pauli_generator_diag(std::size_t k,
                         const std::map<PauliString, double>& gamma) {
  std::size_t nd = std::size_t(1) << (2 * k);
  Vec d = Vec::Zero(nd);
  for (std::size_t a = 0; a < nd; ++a) {
    PauliString pa = pauli_from_index(k, a);
    double s = 0;
    for (const auto& [p, g] : gamma)
      if (commutes(pa, p)) s += g;
    d(a) = -2.0 * s;
  }
  return d;
}

Mat expm(const Mat& m) { return m.exp(); }

Mat logm(const Mat& m) {
  CMat c = m.cast<cx>();
  CMat l = c.log();
  return l.real();
}

double entanglement_fidelity_ptm(const Mat& s) {
  return s.trace() / static_cast<double>(s.rows());
}

double ptm_inner(const Mat& a, const Mat& b) {
  return (a.transpose() * b).trace() / static_cast<double>(a.rows());
}

double ptm_norm(const Mat& a) { return std::sqrt(std::max(0.0, ptm_inner(a, a))); }

Mat dissipator_ptm(const CMat& l) {
  std::size_t dim = l.rows();
  std::size_t k = 0;
  while ((std::size_t(1) << k) < dim) ++k;
  std::size_t nd = std::size_t(1) << (2 * k);
  CMat ll = l.adjoint() * l;
  Mat g(nd, nd);
  for (std::size_t b = 0; b < nd; ++b) {
    CMat pb = pauli_matrix(pauli_from_index(k, b));
    CMat m = l * pb * l.adjoint() - 0.5 * (ll * pb + pb * ll);
    for (std::size_t a = 0; a < nd; ++a) {
      auto pa = pauli_matrix(pauli_from_index(k, a));
      g(a, b) = (pa * m).trace().real() / static_cast<double>(dim);
    }
  }
  return g;
}

CMat rz_matrix(double theta) {
  CMat m(2, 2);
  m << std::exp(cx(0, -theta / 2)), 0, 0, std::exp(cx(0, theta / 2));
  return m;
}

CMat rx_matrix(double theta) {
  CMat m(2, 2);
  double c = std::cos(theta / 2), s = std::sin(theta / 2);
  m << c, cx(0, -s), cx(0, -s), c;
  return m;
}

CMat ry_matrix(double theta) {
  CMat m(2, 2);
  double c = std::cos(theta / 2), s = std::sin(theta / 2);
  m << c, -s, s, c;
  return m;
}

CMat sx_matrix() {
  CMat m(2, 2);
  m << cx(0.5, 0.5), cx(0.5, -0.5), cx(0.5, -0.5), cx(0.5, 0.5);
  return m;
}

CMat sqrt_pauli_matrix(Pauli p) {
  switch (p) {
    case Pauli::I: return CMat::Identity(2, 2);
    case Pauli::X: return sx_matrix();
    case Pauli::Y: {
      CMat m(2, 2);
      m << cx(0.5, 0.5), cx(-0.5, -0.5), cx(0.5, 0.5), cx(0.5, 0.5);
      return m;
    }
    case Pauli::Z: {
      CMat m(2, 2);
      m << 1, 0, 0, cx(0, 1);
      return m;
    }
  }
  throw std::logic_error("unreachable");
}

CMat cz_matrix() {
  CMat m = CMat::Identity(4, 4);
  m(3, 3) = -1;
  return m;
}

CMat cx_matrix() {
  // control = qubit 0 (LSB), target = qubit 1
  CMat m = CMat::Zero(4, 4);
  m(0, 0) = 1;  // |00>
  m(3, 1) = 1;  // |01> -> |11>
  m(2, 2) = 1;  // |10>
  m(1, 3) = 1;  // |11> -> |01>
  return m;
}

CMat rzz_matrix(double alpha) { return kak_matrix(0, 0, alpha); }

CMat kak_matrix(double ax, double ay, double az) {
  CMat h = 0.5 * (ax * pauli_matrix(PauliString::from_string("XX")) +
                  ay * pauli_matrix(PauliString::from_string("YY")) +
                  az * pauli_matrix(PauliString::from_string("ZZ")));
  CMat m = (cx(0, -1) * h).exp();
  return m;
}

}  // namespace qpem
