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

#include "qpem/simulator.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "qpem/rng.hpp"

namespace qpem {

PauliState::PauliState(std::size_t n)
    : n_(n), v_(std::size_t(1) << (2 * n), 0.0) {
  if (n > 12) throw std::invalid_argument("PauliState: too many qubits");
}

PauliState PauliState::from_bitstring(const std::string& bits) {
  PauliState s(bits.size());
  // product state: per qubit coefficients over (I,X,Y,Z) are
  // (1, 0, 0, +-1)/sqrt(2)
  std::size_t n = bits.size();
  const double inv = 1.0 / std::sqrt(2.0);
  std::vector<std::array<double, 4>> f(n);
  for (std::size_t q = 0; q < n; ++q) {
    if (bits[q] != '0' && bits[q] != '1')
      throw std::invalid_argument("prep bitstring must be 0/1");
    double z = bits[q] == '0' ? 1.0 : -1.0;
    f[q] = {inv, 0.0, 0.0, z * inv};
  }
  for (std::size_t a = 0; a < s.v_.size(); ++a) {
    double val = 1.0;
    std::size_t idx = a;
    for (std::size_t q = 0; q < n; ++q) {
      val *= f[q][idx & 3];
      idx >>= 2;
      if (val == 0.0) break;
    }
    s.v_[a] = val;
  }
  return s;
}

double PauliState::trace() const {
  return v_[0] * std::pow(2.0, n_ / 2.0);
}

double PauliState::expectation(const PauliString& p) const {
  if (p.num_qubits() != n_)
    throw std::invalid_argument("expectation: qubit count mismatch");
  return v_[pauli_index(p)] * std::pow(2.0, n_ / 2.0);
}

void PauliState::apply_ptm(const std::vector<std::size_t>& qubits,
                           const Mat& s) {
  std::size_t k = qubits.size();
  std::size_t sub_dim = std::size_t(1) << (2 * k);
  if (static_cast<std::size_t>(s.rows()) != sub_dim)
    throw std::invalid_argument("apply_ptm: dimension mismatch");
  // strides of each local digit in the global index
  std::vector<std::size_t> stride(k);
  for (std::size_t i = 0; i < k; ++i)
    stride[i] = std::size_t(1) << (2 * qubits[i]);
  // offsets of all local sub-indices
  std::vector<std::size_t> offset(sub_dim);
  for (std::size_t si = 0; si < sub_dim; ++si) {
    std::size_t off = 0, t = si;
    for (std::size_t i = 0; i < k; ++i) {
      off += (t & 3) * stride[i];
      t >>= 2;
    }
    offset[si] = off;
  }
  // enumerate outer indices: indices with zero digits at `qubits`
  std::size_t total = v_.size();
  Eigen::VectorXd in(sub_dim), out(sub_dim);
  std::size_t mask = 0;
  for (std::size_t i = 0; i < k; ++i) stride[i] = std::size_t(3) << (2 * qubits[i]);
  for (std::size_t i = 0; i < k; ++i) mask |= stride[i];
  for (std::size_t base = 0; base < total; ++base) {
    if (base & mask) continue;  // not an outer index
    for (std::size_t si = 0; si < sub_dim; ++si) in(si) = v_[base + offset[si]];
    out.noalias() = s * in;
    for (std::size_t si = 0; si < sub_dim; ++si) v_[base + offset[si]] = out(si);
  }
}

void PauliState::apply_diag(const std::vector<std::size_t>& qubits,
                            const Vec& d) {
  std::size_t k = qubits.size();
  std::size_t sub_dim = std::size_t(1) << (2 * k);
  if (static_cast<std::size_t>(d.size()) != sub_dim)
    throw std::invalid_argument("apply_diag: dimension mismatch");
  std::vector<std::size_t> shift(k);
  for (std::size_t i = 0; i < k; ++i) shift[i] = 2 * qubits[i];
  for (std::size_t a = 0; a < v_.size(); ++a) {
    std::size_t si = 0;
    for (std::size_t i = 0; i < k; ++i) si |= ((a >> shift[i]) & 3) << (2 * i);
    v_[a] *= d(si);
  }
}

void PauliState::apply_pauli(const PauliString& p) {
  if (p.is_identity()) return;
  // v[a] *= (-1)^{<a,p>}
  for (std::size_t a = 0; a < v_.size(); ++a) {
    int parity = 0;
    std::size_t idx = a;
    for (std::size_t q = 0; q < n_; ++q) {
      auto la = static_cast<Pauli>(idx & 3);
      idx >>= 2;
      auto lp = p.at(q);
      if (la != Pauli::I && lp != Pauli::I && la != lp) parity ^= 1;
    }
    if (parity) v_[a] = -v_[a];
  }
}

void PauliState::apply_pauli_channel(const PauliChannel& c) {
  if (c.is_trivial()) return;
  auto sup = c.support();
  std::size_t k = sup.size();
  std::size_t sub_dim = std::size_t(1) << (2 * k);
  Vec d(sub_dim);
  for (std::size_t si = 0; si < sub_dim; ++si)
    d(si) = c.eigenvalue(PauliString::embed(n_, sup, pauli_from_index(k, si)));
  apply_diag(sup, d);
}

void PauliState::apply_unitary1(std::size_t q, const Eigen::Matrix2cd& u) {
  apply_ptm({q}, ptm_of_unitary(u));
}

void PauliState::apply_unitary2(std::size_t q0, std::size_t q1,
                                const CMat& u) {
  apply_ptm({q0, q1}, ptm_of_unitary(u));
}

std::vector<double> PauliState::z_diagonal(
    const std::vector<ReadoutError>* ro) const {
  // Gather the 2^n I/Z-sector coefficients w[mask], apply per-qubit readout
  // confusion to the (I,Z) pairs, then Walsh-Hadamard to probabilities.
  std::size_t dim = std::size_t(1) << n_;
  std::vector<double> w(dim);
  for (std::size_t m = 0; m < dim; ++m) {
    std::size_t a = 0;
    for (std::size_t q = 0; q < n_; ++q)
      if ((m >> q) & 1) a |= std::size_t(3) << (2 * q);
    w[m] = v_[a];
  }
  if (ro && !ro->empty()) {
    // per qubit: w'_Z = (1 - p01 - p10) w_Z + (p10 - p01) w_I
    for (std::size_t q = 0; q < n_; ++q) {
      const auto& e = (*ro)[q];
      if (e.p01 == 0 && e.p10 == 0) continue;
      double scale = 1.0 - e.p01 - e.p10;
      double shift = e.p10 - e.p01;
      std::size_t bit = std::size_t(1) << q;
      for (std::size_t m = 0; m < dim; ++m) {
        if (m & bit) continue;
        double wi = w[m], wz = w[m | bit];
        w[m | bit] = scale * wz + shift * wi;
      }
    }
  }
  // p(x) = 2^{-n/2} sum_mask w[mask] (-1)^{popcount(x & mask)}
  for (std::size_t len = 1; len < dim; len <<= 1)
    for (std::size_t i = 0; i < dim; i += (len << 1))
      for (std::size_t j = i; j < i + len; ++j) {
        double a = w[j], b = w[j + len];
        w[j] = a + b;
        w[j + len] = a - b;
      }
  double norm = std::pow(2.0, -static_cast<double>(n_) / 2.0);
  for (auto& x : w) x *= norm;
  return w;
}

double PauliState::measured_z_expectation(
    const PauliString& zstring, const std::vector<ReadoutError>* ro) const {
  for (std::size_t q = 0; q < n_; ++q)
    if (zstring.at(q) == Pauli::X || zstring.at(q) == Pauli::Y)
      throw std::invalid_argument("measured observable must be a Z-string");
  double val = expectation(zstring);
  if (ro && !ro->empty()) {
    // each Z factor scales by (1 - p01 - p10); the bias couples in lower
    // Z-strings, handled exactly via the transformed I/Z tensor
    double scale = 1.0;
    bool any_bias = false;
    for (auto q : zstring.support()) {
      scale *= 1.0 - (*ro)[q].p01 - (*ro)[q].p10;
      if ((*ro)[q].bias() != 0) any_bias = true;
    }
    if (!any_bias) return scale * val;
    // exact: transform the I/Z sector and read the coefficient back out
    std::size_t dim = std::size_t(1) << n_;
    std::vector<double> w(dim);
    for (std::size_t m = 0; m < dim; ++m) {
      std::size_t a = 0;
      for (std::size_t q = 0; q < n_; ++q)
        if ((m >> q) & 1) a |= std::size_t(3) << (2 * q);
      w[m] = v_[a];
    }
    for (std::size_t q = 0; q < n_; ++q) {
      const auto& e = (*ro)[q];
      if (e.p01 == 0 && e.p10 == 0) continue;
      double sc = 1.0 - e.p01 - e.p10;
      double sh = e.p10 - e.p01;
      std::size_t bit = std::size_t(1) << q;
      for (std::size_t m = 0; m < dim; ++m) {
        if (m & bit) continue;
        w[m | bit] = sc * w[m | bit] + sh * w[m];
      }
    }
    std::size_t mask = 0;
    for (auto q : zstring.support()) mask |= std::size_t(1) << q;
    return w[mask] * std::pow(2.0, n_ / 2.0);
  }
  return val;
}

CMat PauliState::to_density_matrix() const {
  if (n_ > 8)
    throw std::invalid_argument("to_density_matrix: n too large");
  std::size_t dim = std::size_t(1) << n_;
  CMat rho = CMat::Zero(dim, dim);
  double norm = std::pow(2.0, -static_cast<double>(n_) / 2.0);
  for (std::size_t a = 0; a < v_.size(); ++a) {
    if (v_[a] == 0.0) continue;
    rho += (v_[a] * norm) * pauli_matrix(pauli_from_index(n_, a));
  }
  return rho;
}

DensityState DensityState::from(const PauliState& s) {
  return DensityState{s.to_density_matrix()};
}

double DensityState::trace_error() const {
  return std::abs(rho.trace().real() - 1.0) + std::abs(rho.trace().imag());
}

double DensityState::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<CMat> es(rho);
  return es.eigenvalues().minCoeff();
}

namespace {

std::string cluster_key(const std::vector<std::size_t>& qubits,
                        const std::vector<TwoQubitGate>& gates,
                        const LayerNoise* noise) {
  std::ostringstream os;
  for (auto q : qubits) os << q << ",";
  os << "|";
  for (const auto& g : gates) {
    os << g.name << g.q[0] << "," << g.q[1] << ";";
    if (g.fractional) os << g.ax << "," << g.ay << "," << g.az << ";";
  }
  if (noise) {
    os << "|n";
    for (const auto& [p, v] : noise->channel.terms()) os << p.str() << v << ";";
    for (const auto& [p, v] : noise->coherent) os << p.str() << v << ";";
    os << "af" << noise->angle_factor;
  }
  return os.str();
}

}  // namespace

Mat Simulator::noisy_cluster_ptm(const std::vector<std::size_t>& qubits,
                                 const std::vector<TwoQubitGate>& gates,
                                 const LayerNoise* noise) const {
  std::string key = cluster_key(qubits, gates, noise);
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = cluster_cache_.find(key);
    if (it != cluster_cache_.end()) return it->second;
  }
  std::size_t k = qubits.size();
  if (k > 5) throw std::runtime_error("fractional cluster too large");
  std::map<PauliString, double> h_terms;  // local labels on the cluster
  auto local_of = [&](std::size_t q) {
    for (std::size_t i = 0; i < qubits.size(); ++i)
      if (qubits[i] == q) return i;
    throw std::logic_error("qubit not in cluster");
  };
  double af = noise ? noise->angle_factor : 1.0;
  for (const auto& g : gates) {
    std::size_t a = local_of(g.q[0]), b = local_of(g.q[1]);
    auto add = [&](Pauli pl, double coeff) {
      if (coeff == 0) return;
      PauliString p(k);
      p.set(a, pl);
      p.set(b, pl);
      h_terms[p] += coeff;
    };
    add(Pauli::X, 0.5 * af * g.ax);
    add(Pauli::Y, 0.5 * af * g.ay);
    add(Pauli::Z, 0.5 * af * g.az);
  }
  if (noise) {
    for (const auto& [p, c] : noise->coherent) {
      bool inside = true;
      for (auto q : p.support())
        inside = inside &&
                 std::find(qubits.begin(), qubits.end(), q) != qubits.end();
      if (!inside) continue;
      PauliString local(k);
      for (auto q : p.support()) local.set(local_of(q), p.at(q));
      h_terms[local] += c;
    }
  }
  Mat gen = hamiltonian_generator_ptm(k, h_terms);
  if (noise && !noise->channel.is_trivial()) {
    std::map<PauliString, double> local_gamma;
    auto gens = noise->channel.rep() == ChannelRep::Generators
                    ? noise->channel
                    : noise->channel.to_generators();
    for (const auto& [p, g] : gens.terms()) {
      bool inside = true;
      for (auto q : p.support())
        inside = inside &&
                 std::find(qubits.begin(), qubits.end(), q) != qubits.end();
      if (!inside) continue;
      PauliString local(k);
      for (auto q : p.support()) local.set(local_of(q), p.at(q));
      local_gamma[local] += g;
    }
    Vec d = pauli_generator_diag(k, local_gamma);
    gen += d.asDiagonal().toDenseMatrix();
  }
  Mat result = expm(gen);
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    cluster_cache_[key] = result;
  }
  return result;
}

void Simulator::apply_layer(PauliState& s, const Layer& layer) const {
  const LayerNoise* noise = nullptr;
  auto it = model_.layers.find(layer.id);
  if (!layer.id.empty() && it != model_.layers.end()) noise = &it->second;

  if (layer.kind == LayerKind::SQG) {
    for (const auto& g : layer.sq) s.apply_unitary1(g.q, g.u);
    if (noise) s.apply_pauli_channel(noise->channel);
    return;
  }
  if (layer.kind == LayerKind::Clifford2Q) {
    for (const auto& g : layer.gates) s.apply_unitary2(g.q[0], g.q[1], g.u);
    if (noise) {
      if (noise->placement != Placement::After)
        throw std::invalid_argument("during-noise on a Clifford layer");
      s.apply_pauli_channel(noise->channel);
    }
    return;
  }
  // Fractional layer: cluster gates with during-noise generators that couple
  // them, exponentiate each cluster exactly.
  std::vector<std::vector<std::size_t>> groups;  // gate indices per group
  std::vector<std::vector<std::size_t>> group_qubits;
  std::vector<std::size_t> gate_group(layer.gates.size());
  for (std::size_t gi = 0; gi < layer.gates.size(); ++gi) {
    groups.push_back({gi});
    group_qubits.push_back({layer.gates[gi].q[0], layer.gates[gi].q[1]});
    gate_group[gi] = gi;
  }
  // union-find driven by noise-term supports
  std::vector<std::size_t> parent(groups.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<std::map<PauliString, double>> extra;  // off-gate noise terms
  if (noise && noise->placement == Placement::During) {
    auto link_support = [&](const std::vector<std::size_t>& sup) {
      // find all groups touching the support, union them
      std::vector<std::size_t> touch;
      for (std::size_t g = 0; g < groups.size(); ++g) {
        for (auto q : sup)
          if (std::find(group_qubits[g].begin(), group_qubits[g].end(), q) !=
              group_qubits[g].end()) {
            touch.push_back(g);
            break;
          }
      }
      for (std::size_t i = 1; i < touch.size(); ++i)
        parent[find(touch[i])] = find(touch[0]);
      return touch;
    };
    auto gens = noise->channel.rep() == ChannelRep::Generators
                    ? noise->channel
                    : noise->channel.to_generators();
    for (const auto& [p, g] : gens.terms()) {
      (void)g;
      link_support(p.support());
    }
    for (const auto& [p, c] : noise->coherent) {
      (void)c;
      link_support(p.support());
    }
  }
  // materialize merged clusters
  std::map<std::size_t, std::vector<std::size_t>> cluster_gates;
  for (std::size_t gi = 0; gi < layer.gates.size(); ++gi)
    cluster_gates[find(gi)].push_back(gi);
  for (const auto& [root, gis] : cluster_gates) {
    std::set<std::size_t> qs;
    std::vector<TwoQubitGate> gates;
    for (auto gi : gis) {
      gates.push_back(layer.gates[gi]);
      qs.insert(layer.gates[gi].q[0]);
      qs.insert(layer.gates[gi].q[1]);
    }
    // pull in noise-term qubits that fall in this cluster
    if (noise && noise->placement == Placement::During) {
      bool changed = true;
      while (changed) {
        changed = false;
        for (const auto& [p, g] : noise->channel.terms()) {
          (void)g;
          auto sup = p.support();
          bool touches = false;
          for (auto q : sup) touches = touches || qs.count(q);
          if (touches)
            for (auto q : sup)
              if (!qs.count(q)) {
                qs.insert(q);
                changed = true;
              }
        }
        for (const auto& [p, c] : noise->coherent) {
          (void)c;
          auto sup = p.support();
          bool touches = false;
          for (auto q : sup) touches = touches || qs.count(q);
          if (touches)
            for (auto q : sup)
              if (!qs.count(q)) {
                qs.insert(q);
                changed = true;
              }
        }
      }
    }
    std::vector<std::size_t> qubits(qs.begin(), qs.end());
    Mat ptm = noisy_cluster_ptm(
        qubits, gates,
        (noise && noise->placement == Placement::During) ? noise : nullptr);
    s.apply_ptm(qubits, ptm);
  }
  if (noise && noise->placement == Placement::After)
    s.apply_pauli_channel(noise->channel);
  if (noise && noise->placement == Placement::During) {
    // during-terms fully outside every gate cluster act as a bare channel
    std::map<PauliString, double> leftover;
    auto gens = noise->channel.rep() == ChannelRep::Generators
                    ? noise->channel
                    : noise->channel.to_generators();
    std::set<std::size_t> covered;
    for (const auto& g : layer.gates) {
      covered.insert(g.q[0]);
      covered.insert(g.q[1]);
    }
    for (const auto& [p, g] : gens.terms()) {
      bool touches = false;
      for (auto q : p.support()) touches = touches || covered.count(q);
      if (!touches) leftover[p] = g;
    }
    if (!leftover.empty())
      s.apply_pauli_channel(
          PauliChannel::from_generators(s.num_qubits(), leftover));
  }
}

PauliState Simulator::run(const LayeredCircuit& c) const {
  if (c.num_qubits() > max_qubits_)
    throw std::invalid_argument("circuit exceeds simulator qubit cap");
  PauliState s = PauliState::from_bitstring(c.prep());
  if (model_.prep) s.apply_pauli_channel(*model_.prep);
  for (const auto& layer : c.layers()) apply_layer(s, layer);
  if (c.meas_basis()) apply_layer(s, *c.meas_basis());
  if (model_.meas) s.apply_pauli_channel(*model_.meas);
  return s;
}

double Simulator::expectation(
    const PauliState& s,
    const std::vector<std::pair<PauliString, double>>& obs) const {
  double val = 0;
  for (const auto& [p, w] : obs) val += w * s.expectation(p);
  return val;
}

double Simulator::measured_expectation(const LayeredCircuit& c,
                                       const PauliString& zstring) const {
  PauliState s = run(c);
  return s.measured_z_expectation(
      zstring, model_.readout.empty() ? nullptr : &model_.readout);
}

std::map<std::string, std::size_t> Simulator::sample_from_state(
    const PauliState& s, std::size_t n_shots, std::uint64_t seed) const {
  std::map<std::string, std::size_t> counts;
  if (n_shots == 0) return counts;
  auto probs =
      s.z_diagonal(model_.readout.empty() ? nullptr : &model_.readout);
  for (auto& p : probs) p = std::max(0.0, p);
  double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, total);
  std::size_t n = s.num_qubits();
  for (std::size_t shot = 0; shot < n_shots; ++shot) {
    double r = u(rng), acc = 0;
    std::size_t x = probs.size() - 1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (r <= acc) {
        x = i;
        break;
      }
    }
    std::string bits(n, '0');
    for (std::size_t q = 0; q < n; ++q)
      if ((x >> q) & 1) bits[q] = '1';
    ++counts[bits];
  }
  return counts;
}

std::map<std::string, std::size_t> Simulator::sample_shots(
    const LayeredCircuit& c, std::size_t n_shots, std::uint64_t seed) const {
  PauliState s = run(c);
  return sample_from_state(s, n_shots, seed);
}

Mat dissipative_generator(double eps) {
  // per-qubit amplitude damping (1/T1 = 2 eps/3) and pure dephasing
  // (1/Tphi = eps/3) over unit gate time
  double k1 = 2.0 * eps / 3.0;
  double kphi = eps / 3.0;
  CMat sm(2, 2);  // sigma_minus = |0><1|
  sm << 0, 1, 0, 0;
  CMat z(2, 2);
  z << 1, 0, 0, -1;
  Mat d1 = dissipator_ptm(std::sqrt(k1) * sm) +
           dissipator_ptm(std::sqrt(kphi / 2.0) * z);
  // embed on both qubits of the pair
  Mat gen = Mat::Zero(16, 16);
  Mat id4 = Mat::Identity(4, 4);
  // kron over PTM indices: qubit 0 = low digit
  auto kron_ptm = [](const Mat& low, const Mat& high) {
    Mat out(low.rows() * high.rows(), low.cols() * high.cols());
    for (int i = 0; i < high.rows(); ++i)
      for (int j = 0; j < high.cols(); ++j)
        out.block(i * low.rows(), j * low.cols(), low.rows(), low.cols()) =
            high(i, j) * low;
    return out;
  };
  gen += kron_ptm(d1, id4);
  gen += kron_ptm(id4, d1);
  return gen;
}

Mat noisy_dissipative_gate(double alpha, double eps) {
  std::map<PauliString, double> h;
  h[PauliString::from_string("ZZ")] = 0.5 * alpha;
  return expm(hamiltonian_generator_ptm(2, h) + dissipative_generator(eps));
}

Mat noisy_dissipative_idle(double eps) {
  return expm(dissipative_generator(eps));
}

Mat noisy_dissipative_kak(double ax, double ay, double az, double eps) {
  std::map<PauliString, double> h;
  if (ax != 0) h[PauliString::from_string("XX")] = 0.5 * ax;
  if (ay != 0) h[PauliString::from_string("YY")] = 0.5 * ay;
  if (az != 0) h[PauliString::from_string("ZZ")] = 0.5 * az;
  return expm(hamiltonian_generator_ptm(2, h) + dissipative_generator(eps));
}

double gate_infidelity(const Mat& noisy, const Mat& ideal) {
  // F = Tr(ideal^T noisy) / dim; ideal PTM of a unitary is orthogonal
  double f = (ideal.transpose() * noisy).trace() /
             static_cast<double>(noisy.rows());
  return 1.0 - f;
}

}  // namespace qpem
