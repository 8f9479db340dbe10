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

#include "qpem/twirl.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace qpem {

CMat CompressedSqg::matrix() const {
  auto a = rz_angles();
  return rz_matrix(a[0]) * sx_matrix() * rz_matrix(a[1]) * sx_matrix() *
         rz_matrix(a[2]);
}

CompressedSqg compress_sqg(const Eigen::Matrix2cd& u) {
  // unitarity check
  if ((u * u.adjoint() - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff() >
      1e-10)
    throw std::invalid_argument("compress_sqg: input is not unitary");
  // strip global phase: make det = 1
  cx det = u.determinant();
  Eigen::Matrix2cd v = u / std::sqrt(det);
  // v = rz(phi) ry(theta) rz(lambda) up to sign
  double theta = 2.0 * std::atan2(std::abs(v(1, 0)), std::abs(v(0, 0)));
  double phi, lambda;
  if (std::abs(v(1, 0)) < 1e-12) {
    // diagonal: all rotation in phi + lambda
    phi = 2.0 * std::arg(v(1, 1));
    lambda = 0.0;
    theta = 0.0;
  } else if (std::abs(v(0, 0)) < 1e-12) {
    theta = M_PI;
    phi = 2.0 * std::arg(v(1, 0));
    lambda = 0.0;
  } else {
    double s = std::arg(v(1, 1));  // (phi + lambda)/2
    double d = std::arg(v(1, 0));  // (phi - lambda)/2
    phi = s + d;
    lambda = s - d;
  }
  CompressedSqg out{theta, phi, lambda};
  // verify to 1e-12 up to global phase
  CMat m = out.matrix();
  cx ratio(0, 0);
  double best = 0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      if (std::abs(u(i, j)) > best) {
        best = std::abs(u(i, j));
        ratio = m(i, j) / u(i, j);
      }
  if ((m - ratio * u).cwiseAbs().maxCoeff() > 1e-11)
    throw std::logic_error("compress_sqg: decomposition check failed");
  return out;
}

CompressedSqg compress_sqg(const std::vector<Eigen::Matrix2cd>& run) {
  Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
  for (const auto& g : run) u = g * u;
  return compress_sqg(u);
}

SignedPauli conjugate_pauli(const CMat& u, const PauliString& p) {
  CMat m = u * pauli_matrix(p) * u.adjoint();
  std::size_t k = p.num_qubits();
  for (std::size_t i = 0; i < (std::size_t(1) << (2 * k)); ++i) {
    PauliString cand = pauli_from_index(k, i);
    CMat pm = pauli_matrix(cand);
    double dplus = (m - pm).cwiseAbs().maxCoeff();
    if (dplus < 1e-9) return {cand, 1};
    double dminus = (m + pm).cwiseAbs().maxCoeff();
    if (dminus < 1e-9) return {cand, -1};
  }
  throw std::invalid_argument("conjugate_pauli: not a Clifford conjugation");
}

TwirlPair pauli_twirl_clifford(const Layer& layer, std::size_t n,
                               std::mt19937_64& rng) {
  if (layer.kind != LayerKind::Clifford2Q)
    throw std::invalid_argument("pauli_twirl_clifford: layer not Clifford");
  std::uniform_int_distribution<int> d(0, 3);
  PauliString pre(n);
  for (auto q : layer.qubits()) pre.set(q, static_cast<Pauli>(d(rng)));
  PauliString post = pre;
  for (const auto& g : layer.gates) {
    PauliString local(2);
    local.set(0, pre.at(g.q[0]));
    local.set(1, pre.at(g.q[1]));
    auto conj = conjugate_pauli(g.u, local);
    post.set(g.q[0], conj.pauli.at(0));
    post.set(g.q[1], conj.pauli.at(1));
  }
  return {pre, post};
}

std::vector<PauliString> fractional_commutant(const TwoQubitGate& g) {
  if (!g.fractional)
    throw std::invalid_argument("fractional_commutant: Clifford gate");
  std::vector<PauliString> terms;
  if (g.ax != 0) terms.push_back(PauliString::from_string("XX"));
  if (g.ay != 0) terms.push_back(PauliString::from_string("YY"));
  if (g.az != 0) terms.push_back(PauliString::from_string("ZZ"));
  std::vector<PauliString> out;
  for (const auto& p : all_paulis(2)) {
    bool ok = true;
    for (const auto& t : terms) ok = ok && commutes(p, t) == 0;
    if (ok) out.push_back(p);
  }
  return out;
}

TwirlPair partial_twirl_fractional(const Layer& layer, std::size_t n,
                                   std::mt19937_64& rng) {
  if (layer.kind != LayerKind::Fractional2Q)
    throw std::invalid_argument("partial_twirl_fractional: layer not fractional");
  PauliString pre(n);
  for (const auto& g : layer.gates) {
    auto comm = fractional_commutant(g);
    std::uniform_int_distribution<std::size_t> d(0, comm.size() - 1);
    const auto& pick = comm[d(rng)];
    pre.set(g.q[0], pick.at(0));
    pre.set(g.q[1], pick.at(1));
  }
  return {pre, pre};
}

std::vector<SpClass> sp_twirl_constraints(
    const std::vector<PauliString>& parameters,
    const std::vector<CMat>& group_unitaries) {
  std::set<PauliString> declared(parameters.begin(), parameters.end());
  std::vector<SpClass> classes;
  std::set<PauliString> assigned;
  for (const auto& seed : parameters) {
    if (assigned.count(seed)) continue;
    // orbit closure under all group elements
    std::set<PauliString> orbit{seed};
    bool grew = true, escapes = false;
    while (grew) {
      grew = false;
      for (const auto& p : std::vector<PauliString>(orbit.begin(), orbit.end()))
        for (const auto& u : group_unitaries) {
          auto conj = conjugate_pauli(u.adjoint(), p);  // U^dag P U
          if (orbit.insert(conj.pauli).second) grew = true;
        }
    }
    for (const auto& p : orbit)
      if (!declared.count(p) && !p.is_identity()) escapes = true;
    SpClass cls;
    for (const auto& p : orbit)
      if (declared.count(p)) {
        cls.members.push_back(p);
        assigned.insert(p);
      }
    cls.forced_zero = escapes;
    std::sort(cls.members.begin(), cls.members.end());
    classes.push_back(std::move(cls));
  }
  return classes;
}

std::vector<CMat> sp_group_sqrt_z(const Layer& layer,
                                  const std::vector<std::size_t>& support) {
  // per gate: {I (x) I, I (x) S, S (x) I, S (x) S}; product over gates
  std::size_t k = support.size();
  std::vector<std::size_t> locals(k);
  for (std::size_t i = 0; i < k; ++i) locals[i] = i;
  auto local_of = [&](std::size_t q) {
    auto it = std::find(support.begin(), support.end(), q);
    if (it == support.end())
      throw std::invalid_argument("sp_group: gate outside support");
    return static_cast<std::size_t>(it - support.begin());
  };
  std::vector<CMat> group{CMat::Identity(std::size_t(1) << k,
                                         std::size_t(1) << k)};
  CMat s = sqrt_pauli_matrix(Pauli::Z);
  for (const auto& g : layer.gates) {
    CMat s0 = embed_operator(s, {local_of(g.q[0])}, locals);
    CMat s1 = embed_operator(s, {local_of(g.q[1])}, locals);
    std::vector<CMat> next;
    for (const auto& base : group)
      for (int mask = 0; mask < 4; ++mask) {
        CMat u = base;
        if (mask & 1) u = s0 * u;
        if (mask & 2) u = s1 * u;
        next.push_back(u);
      }
    group = std::move(next);
  }
  return group;
}

MeasTwirlPair measurement_twirl_pair(const LayeredCircuit& c,
                                     const std::vector<std::size_t>& subset) {
  std::size_t n = c.num_qubits();
  MeasTwirlPair out{c, c, std::vector<bool>(n, false),
                    std::vector<bool>(n, false)};
  PauliString mask_a(n), mask_b(n);
  std::vector<bool> in_subset(n, false);
  for (auto q : subset) in_subset[q] = true;
  for (std::size_t q = 0; q < n; ++q) {
    if (in_subset[q]) {
      mask_a.set(q, Pauli::X);
      out.flip_a[q] = true;
    } else {
      mask_b.set(q, Pauli::X);
      out.flip_b[q] = true;
    }
  }
  out.a.append(pauli_layer(mask_a));
  out.b.append(pauli_layer(mask_b));
  return out;
}

}  // namespace qpem
