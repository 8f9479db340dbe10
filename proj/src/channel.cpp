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

#include "qpem/channel.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <set>
#include <stdexcept>

namespace qpem {

namespace {

constexpr std::size_t kMaxDenseSupport = 6;

void check_terms(std::size_t n, const std::map<PauliString, double>& terms) {
  for (const auto& [p, v] : terms) {
    (void)v;
    if (p.num_qubits() != n)
      throw std::invalid_argument("channel term qubit count mismatch");
    if (p.is_identity())
      throw std::invalid_argument("identity term is implied, do not store it");
  }
}

}  // namespace

PauliChannel PauliChannel::from_rates(std::size_t n,
                                      std::map<PauliString, double> terms) {
  check_terms(n, terms);
  double sum = 0;
  for (auto& [p, v] : terms) {
    (void)p;
    if (v < 0) throw std::invalid_argument("negative Pauli rate");
    sum += v;
  }
  if (sum > 1.0 + 1e-9)
    throw std::invalid_argument("Pauli rates exceed 1");
  PauliChannel c;
  c.n_ = n;
  c.rep_ = ChannelRep::Rates;
  c.terms_ = std::move(terms);
  return c;
}

PauliChannel PauliChannel::from_eigenvalues(
    std::size_t n, std::map<PauliString, double> terms) {
  check_terms(n, terms);
  for (auto& [p, v] : terms) {
    (void)p;
    if (v < -1.0 - 1e-9 || v > 1.0 + 1e-9)
      throw std::invalid_argument("Pauli eigenvalue outside [-1, 1]");
  }
  PauliChannel c;
  c.n_ = n;
  c.rep_ = ChannelRep::Eigenvalues;
  c.terms_ = std::move(terms);
  return c;
}

PauliChannel PauliChannel::from_generators(
    std::size_t n, std::map<PauliString, double> terms) {
  check_terms(n, terms);
  PauliChannel c;
  c.n_ = n;
  c.rep_ = ChannelRep::Generators;
  c.terms_ = std::move(terms);
  return c;
}

PauliChannel PauliChannel::depolarizing1(double p) {
  std::map<PauliString, double> t;
  for (Pauli l : {Pauli::X, Pauli::Y, Pauli::Z})
    t[PauliString(1, 0, l)] = p / 3.0;
  return from_rates(1, std::move(t));
}

std::vector<std::size_t> PauliChannel::support() const {
  std::set<std::size_t> s;
  for (const auto& [p, v] : terms_) {
    (void)v;
    for (auto q : p.support()) s.insert(q);
  }
  return {s.begin(), s.end()};
}

std::size_t PauliChannel::locality() const {
  std::size_t w = 0;
  for (const auto& [p, v] : terms_) {
    (void)v;
    w = std::max(w, p.weight());
  }
  return w;
}

double PauliChannel::eigenvalue(const PauliString& a) const {
  if (a.num_qubits() != n_)
    throw std::invalid_argument("eigenvalue: qubit count mismatch");
  switch (rep_) {
    case ChannelRep::Generators: {
      // lambda_a = exp(-2 sum_b <a,b> gamma_b)
      double s = 0;
      for (const auto& [b, g] : terms_)
        if (commutes(a, b)) s += g;
      return std::exp(-2.0 * s);
    }
    case ChannelRep::Rates: {
      // lambda_a = 1 - 2 sum_{b anticommuting with a} p_b
      double s = 0;
      for (const auto& [b, p] : terms_)
        if (commutes(a, b)) s += p;
      return 1.0 - 2.0 * s;
    }
    case ChannelRep::Eigenvalues: {
      if (a.is_identity()) return 1.0;
      // The channel acts as identity outside its support, so lambda_a equals
      // the eigenvalue of the restriction of a to the support.
      auto sup = support();
      PauliString key = PauliString::embed(n_, sup, a.restrict_to(sup));
      if (key.is_identity()) return 1.0;
      auto it = terms_.find(key);
      return it != terms_.end() ? it->second : 1.0;
    }
  }
  throw std::logic_error("unreachable");
}

PauliChannel PauliChannel::to_eigenvalues() const {
  if (terms_.empty()) return from_eigenvalues(n_, {});
  auto sup = support();
  if (sup.size() > kMaxDenseSupport)
    throw std::invalid_argument("channel support too large for dense conversion");
  std::size_t k = sup.size();
  std::map<PauliString, double> out;
  for (std::size_t i = 1; i < (std::size_t(1) << (2 * k)); ++i) {
    PauliString local = pauli_from_index(k, i);
    PauliString full = PauliString::embed(n_, sup, local);
    out[full] = eigenvalue(full);
  }
  return from_eigenvalues(n_, std::move(out));
}

PauliChannel PauliChannel::to_rates(double clip_tol) const {
  if (terms_.empty()) return from_rates(n_, {});
  auto sup = support();
  if (sup.size() > kMaxDenseSupport)
    throw std::invalid_argument("channel support too large for dense conversion");
  std::size_t k = sup.size();
  std::size_t nd = std::size_t(1) << (2 * k);
  // p_b = 4^-k sum_a lambda_a (-1)^{<a,b>}
  std::vector<double> lambda(nd);
  std::vector<PauliString> locals(nd);
  for (std::size_t a = 0; a < nd; ++a) {
    locals[a] = pauli_from_index(k, a);
    lambda[a] = eigenvalue(PauliString::embed(n_, sup, locals[a]));
  }
  std::map<PauliString, double> out;
  const double inv = 1.0 / static_cast<double>(nd);
  for (std::size_t b = 0; b < nd; ++b) {
    double p = 0;
    for (std::size_t a = 0; a < nd; ++a)
      p += lambda[a] * (commutes(locals[a], locals[b]) ? -1.0 : 1.0);
    p *= inv;
    if (p < -clip_tol)
      throw std::runtime_error("unphysical spectrum: negative Pauli rate " +
                               std::to_string(p));
    if (b == 0) continue;  // identity rate implied
    if (p <= 0) continue;  // clipped to zero
    out[PauliString::embed(n_, sup, locals[b])] = p;
  }
  return from_rates(n_, std::move(out));
}

PauliChannel PauliChannel::to_generators() const {
  if (rep_ == ChannelRep::Generators) return *this;
  if (terms_.empty()) return from_generators(n_, {});
  auto sup = support();
  if (sup.size() > kMaxDenseSupport)
    throw std::invalid_argument("channel support too large for dense conversion");
  std::size_t k = sup.size();
  std::size_t nd = std::size_t(1) << (2 * k);
  // Solve sum_b <a,b> gamma_b = -ln(lambda_a)/2 over non-identity Paulis.
  std::vector<PauliString> locals(nd);
  for (std::size_t a = 0; a < nd; ++a) locals[a] = pauli_from_index(k, a);
  Eigen::MatrixXd m(nd - 1, nd - 1);
  Eigen::VectorXd rhs(nd - 1);
  for (std::size_t a = 1; a < nd; ++a) {
    double lam = eigenvalue(PauliString::embed(n_, sup, locals[a]));
    if (lam <= 0)
      throw std::runtime_error("non-invertible channel: eigenvalue <= 0");
    rhs(a - 1) = -0.5 * std::log(lam);
    for (std::size_t b = 1; b < nd; ++b)
      m(a - 1, b - 1) = commutes(locals[a], locals[b]) ? 1.0 : 0.0;
  }
  Eigen::VectorXd gamma = m.colPivHouseholderQr().solve(rhs);
  std::map<PauliString, double> out;
  for (std::size_t b = 1; b < nd; ++b) {
    if (std::abs(gamma(b - 1)) < 1e-15) continue;
    out[PauliString::embed(n_, sup, locals[b])] = gamma(b - 1);
  }
  return from_generators(n_, std::move(out));
}

double PauliChannel::infidelity() const {
  if (terms_.empty()) return 0.0;
  auto sup = support();
  std::size_t k = sup.size();
  if (k <= kMaxDenseSupport) {
    // p_I = 4^-k sum_a lambda_a
    std::size_t nd = std::size_t(1) << (2 * k);
    double s = 0;
    for (std::size_t a = 0; a < nd; ++a)
      s += eigenvalue(PauliString::embed(n_, sup, pauli_from_index(k, a)));
    return 1.0 - s / static_cast<double>(nd);
  }
  if (rep_ == ChannelRep::Rates) {
    double s = 0;
    for (const auto& [p, v] : terms_) {
      (void)p;
      s += v;
    }
    return s;
  }
  throw std::invalid_argument("infidelity: support too large");
}

PauliChannel PauliChannel::compose(const PauliChannel& other) const {
  if (n_ != other.n_)
    throw std::invalid_argument("compose: qubit count mismatch");
  if (rep_ == ChannelRep::Generators &&
      other.rep_ == ChannelRep::Generators) {
    auto t = terms_;
    for (const auto& [p, g] : other.terms_) t[p] += g;
    return from_generators(n_, std::move(t));
  }
  // generic route: multiply eigenvalues on the union support
  std::set<std::size_t> s;
  for (auto q : support()) s.insert(q);
  for (auto q : other.support()) s.insert(q);
  std::vector<std::size_t> sup(s.begin(), s.end());
  if (sup.size() > kMaxDenseSupport)
    throw std::invalid_argument("compose: union support too large");
  std::size_t k = sup.size();
  std::map<PauliString, double> out;
  for (std::size_t i = 1; i < (std::size_t(1) << (2 * k)); ++i) {
    PauliString full = PauliString::embed(n_, sup, pauli_from_index(k, i));
    out[full] = eigenvalue(full) * other.eigenvalue(full);
  }
  return from_eigenvalues(n_, std::move(out));
}

PauliChannel PauliChannel::restrict_to(
    const std::vector<std::size_t>& qubits) const {
  std::map<PauliString, double> out;
  for (const auto& [p, v] : terms_) {
    for (auto q : p.support()) {
      bool found = false;
      for (auto r : qubits)
        if (r == q) found = true;
      if (!found)
        throw std::invalid_argument("restrict_to: support not contained");
    }
    out[p.restrict_to(qubits)] = v;
  }
  PauliChannel c;
  c.n_ = qubits.size();
  c.rep_ = rep_;
  c.terms_ = std::move(out);
  return c;
}

PauliChannel PauliChannel::scaled(double factor) const {
  if (rep_ != ChannelRep::Generators)
    throw std::invalid_argument("scaled: generator representation required");
  auto t = terms_;
  for (auto& [p, g] : t) {
    (void)p;
    g *= factor;
  }
  return from_generators(n_, std::move(t));
}

}  // namespace qpem
