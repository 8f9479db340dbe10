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

#include "qpem/lightcone.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace qpem {

namespace {

constexpr double kZeroEps = 1e-9;  // numerical floor standing in for eps = 0

std::vector<std::size_t> sorted_union(const std::vector<std::size_t>& a,
                                      const std::vector<std::size_t>& b) {
  std::set<std::size_t> s(a.begin(), a.end());
  s.insert(b.begin(), b.end());
  return {s.begin(), s.end()};
}

// normalized Frobenius norm 2^{-k/2} sqrt(tr(A^dag A)) of a k-qubit operator
double nfrob(const CMat& a) {
  std::size_t k = 0;
  while ((std::size_t(1) << k) < static_cast<std::size_t>(a.rows())) ++k;
  return std::sqrt(std::max(0.0, (a.adjoint() * a).trace().real()) /
                   static_cast<double>(a.rows()));
}

double op_norm(const CMat& a) {
  Eigen::JacobiSVD<CMat> svd(a);
  return svd.singularValues()(0);
}

struct PropagationResult {
  CMat u;                            // propagated operator
  std::vector<std::size_t> support;  // register qubits it acts on
  bool reached_end = false;
  std::size_t stop_layer = 0;  // cone index where propagation stopped
};

// propagate g's unitary forward through in-cone gates, capping the support
PropagationResult propagate_gate(const LayeredCircuit& c, std::size_t layer,
                                 const TwoQubitGate& gate,
                                 const ExpandingLightcone& lc,
                                 std::size_t maxsupp) {
  PropagationResult res;
  res.support = {std::min(gate.q[0], gate.q[1]),
                 std::max(gate.q[0], gate.q[1])};
  res.u = gate.q[0] < gate.q[1]
              ? gate.unitary()
              : embed_operator(gate.unitary(), {gate.q[0], gate.q[1]},
                               res.support);
  auto conj_by = [&](const CMat& g, const std::vector<std::size_t>& gq) {
    auto uni = sorted_union(res.support, gq);
    CMat ge = embed_operator(g, gq, uni);
    CMat ue = embed_operator(res.u, res.support, uni);
    res.u = ge * ue * ge.adjoint();
    res.support = uni;
  };
  for (std::size_t k = layer + 1; k <= c.depth(); ++k) {
    const auto& cone_k = lc.cone.at(k);
    if (k == c.depth()) {
      res.reached_end = true;
      res.stop_layer = k;
      return res;
    }
    const Layer& lay = c.layers()[k];
    if (lay.kind == LayerKind::SQG) {
      for (const auto& g : lay.sq) {
        if (!cone_k.count(g.q)) continue;
        if (std::find(res.support.begin(), res.support.end(), g.q) ==
            res.support.end())
          continue;
        conj_by(CMat(g.u), {g.q});
      }
      continue;
    }
    for (const auto& g : lay.gates) {
      bool inside = cone_k.count(g.q[0]) && cone_k.count(g.q[1]);
      if (!inside) continue;
      bool touches = false;
      for (auto q : {g.q[0], g.q[1]})
        touches = touches || std::find(res.support.begin(), res.support.end(),
                                       q) != res.support.end();
      if (!touches) continue;
      auto uni = sorted_union(res.support, {g.q[0], g.q[1]});
      if (uni.size() > maxsupp) {
        res.reached_end = false;
        res.stop_layer = k;
        return res;
      }
      conj_by(g.unitary(), {g.q[0], g.q[1]});
    }
  }
  res.reached_end = true;
  res.stop_layer = c.depth();
  return res;
}

// || U - I_in (x) B* ||, with B* the normalized partial trace over `inside`
double factorization_distance(const CMat& u,
                              const std::vector<std::size_t>& support,
                              const std::set<std::size_t>& inside_set,
                              bool operator_norm, double* bstar_defect) {
  std::vector<std::size_t> inside, outside;
  for (auto q : support)
    (inside_set.count(q) ? inside : outside).push_back(q);
  // local index positions of inside qubits
  std::size_t ki = inside.size(), ko = outside.size();
  std::size_t di = std::size_t(1) << ki, do_ = std::size_t(1) << ko;
  std::vector<int> pos_in, pos_out;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (inside_set.count(support[i]))
      pos_in.push_back(static_cast<int>(i));
    else
      pos_out.push_back(static_cast<int>(i));
  }
  auto split = [&](std::size_t full) {
    std::size_t in = 0, out = 0;
    for (std::size_t i = 0; i < pos_in.size(); ++i)
      in |= ((full >> pos_in[i]) & 1) << i;
    for (std::size_t i = 0; i < pos_out.size(); ++i)
      out |= ((full >> pos_out[i]) & 1) << i;
    return std::pair<std::size_t, std::size_t>{in, out};
  };
  CMat bstar = CMat::Zero(do_, do_);
  std::size_t dim = std::size_t(1) << support.size();
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t cc = 0; cc < dim; ++cc) {
      auto [ri, ro] = split(r);
      auto [ci, co] = split(cc);
      if (ri == ci) bstar(ro, co) += u(r, cc);
    }
  bstar /= static_cast<double>(di);
  CMat approx = CMat::Zero(dim, dim);
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t cc = 0; cc < dim; ++cc) {
      auto [ri, ro] = split(r);
      auto [ci, co] = split(cc);
      if (ri == ci) approx(r, cc) = bstar(ro, co);
    }
  if (bstar_defect) {
    CMat defect = bstar.adjoint() * bstar - CMat::Identity(do_, do_);
    *bstar_defect = operator_norm ? op_norm(defect) : nfrob(defect);
  }
  CMat diff = u - approx;
  return operator_norm ? op_norm(diff) : nfrob(diff);
}

double commutator_norm(const CMat& u, const std::vector<std::size_t>& u_sup,
                       const PauliString& obs, bool operator_norm) {
  auto osup = obs.support();
  auto uni = sorted_union(u_sup, osup);
  CMat ue = embed_operator(u, u_sup, uni);
  CMat oe = embed_operator(pauli_matrix(obs.restrict_to(osup)), osup, uni);
  CMat comm = ue * oe - oe * ue;
  return operator_norm ? op_norm(comm) : nfrob(comm);
}

}  // namespace

bool ExpandingLightcone::nested_in(const ExpandingLightcone& outer) const {
  if (cone.size() != outer.cone.size()) return false;
  for (std::size_t l = 0; l < cone.size(); ++l)
    for (auto q : cone[l])
      if (!outer.cone[l].count(q)) return false;
  return true;
}

ExpandingLightcone connectivity_lightcone(const LayeredCircuit& c,
                                          const PauliString& obs) {
  ExpandingLightcone lc;
  lc.cone.resize(c.depth() + 1);
  auto sup = obs.support();
  lc.cone[c.depth()] = {sup.begin(), sup.end()};
  for (std::size_t l = c.depth(); l-- > 0;) {
    lc.cone[l] = lc.cone[l + 1];
    const Layer& lay = c.layers()[l];
    if (lay.kind == LayerKind::SQG) continue;
    for (const auto& g : lay.gates) {
      bool touches = lc.cone[l + 1].count(g.q[0]) ||
                     lc.cone[l + 1].count(g.q[1]);
      if (touches) {
        lc.cone[l].insert(g.q[0]);
        lc.cone[l].insert(g.q[1]);
      }
    }
  }
  return lc;
}

bool extractable_bruteforce(const LayeredCircuit& c, std::size_t layer,
                            const TwoQubitGate& gate,
                            const ExpandingLightcone& lc,
                            const PauliString& obs, double eps,
                            std::size_t maxsupp) {
  double e = std::max(eps, kZeroEps);
  auto res = propagate_gate(c, layer, gate, lc, maxsupp);
  if (res.reached_end)
    return commutator_norm(res.u, res.support, obs, false) < e;
  return factorization_distance(res.u, res.support,
                                lc.cone.at(res.stop_layer), false, nullptr) < e;
}

bool extractable_tracing(const LayeredCircuit& c, std::size_t layer,
                         const TwoQubitGate& gate,
                         const ExpandingLightcone& lc, double eps) {
  double e = std::max(eps, kZeroEps);
  // superoperator of the gate in PTM form on its (sorted) support
  std::vector<std::size_t> support = {std::min(gate.q[0], gate.q[1]),
                                      std::max(gate.q[0], gate.q[1])};
  CMat u0 = gate.q[0] < gate.q[1]
                ? gate.unitary()
                : embed_operator(gate.unitary(), {gate.q[0], gate.q[1]},
                                 support);
  Mat s = ptm_of_unitary(u0);
  for (std::size_t l = layer + 1; l <= c.depth(); ++l) {
    const auto& cone = lc.cone.at(l);
    // trace out the legs outside the cone
    std::vector<std::size_t> q_in;
    for (auto q : support)
      if (cone.count(q)) q_in.push_back(q);
    if (q_in.size() < support.size()) {
      std::size_t k = support.size(), ki = q_in.size();
      std::vector<std::size_t> keep_digits;
      for (std::size_t i = 0; i < k; ++i)
        if (cone.count(support[i])) keep_digits.push_back(i);
      std::size_t ndi = std::size_t(1) << (2 * ki);
      Mat s2(ndi, ndi);
      auto expand = [&](std::size_t idx) {
        std::size_t full = 0;
        for (std::size_t i = 0; i < ki; ++i)
          full |= ((idx >> (2 * i)) & 3) << (2 * keep_digits[i]);
        return full;  // I on traced digits
      };
      for (std::size_t a = 0; a < ndi; ++a)
        for (std::size_t b = 0; b < ndi; ++b)
          s2(a, b) = s(expand(a), expand(b));
      s = s2;
      support = q_in;
    }
    std::size_t dim = std::size_t(1) << (2 * support.size());
    if (support.empty() ||
        (s - Mat::Identity(dim, dim)).norm() / std::sqrt(double(dim)) < e)
      return true;
    if (l == c.depth()) break;
    // conjugate by the next layer's gates acting on the in-cone support
    const Layer& lay = c.layers()[l];
    if (lay.kind == LayerKind::SQG) {
      for (const auto& g : lay.sq) {
        if (std::find(support.begin(), support.end(), g.q) == support.end())
          continue;
        auto uni = support;
        CMat ge = embed_operator(CMat(g.u), {g.q}, uni);
        Mat gp = ptm_of_unitary(ge);
        s = gp * s * gp.transpose();
      }
    } else {
      for (const auto& g : lay.gates) {
        bool touches = false;
        for (auto q : {g.q[0], g.q[1]})
          touches = touches ||
                    std::find(support.begin(), support.end(), q) !=
                        support.end();
        if (!touches) continue;
        auto uni = sorted_union(support, {g.q[0], g.q[1]});
        if (uni.size() > 5) return false;  // keep the superoperator small
        if (uni.size() > support.size()) {
          // embed s on the larger support
          std::size_t ku = uni.size();
          std::size_t ndu = std::size_t(1) << (2 * ku);
          std::vector<int> digit(support.size());
          for (std::size_t i = 0; i < support.size(); ++i)
            digit[i] = static_cast<int>(
                std::find(uni.begin(), uni.end(), support[i]) - uni.begin());
          Mat s2 = Mat::Zero(ndu, ndu);
          // s (x) identity on the new qubits, in PTM index form
          for (std::size_t a = 0; a < ndu; ++a) {
            std::size_t a_old = 0, a_rest = a;
            for (std::size_t i = 0; i < support.size(); ++i) {
              a_old |= ((a >> (2 * digit[i])) & 3) << (2 * i);
              a_rest &= ~(std::size_t(3) << (2 * digit[i]));
            }
            for (std::size_t b = 0; b < ndu; ++b) {
              std::size_t b_old = 0, b_rest = b;
              for (std::size_t i = 0; i < support.size(); ++i) {
                b_old |= ((b >> (2 * digit[i])) & 3) << (2 * i);
                b_rest &= ~(std::size_t(3) << (2 * digit[i]));
              }
              s2(a, b) = (a_rest == b_rest) ? s(a_old, b_old) : 0.0;
            }
          }
          s = s2;
          support = uni;
        }
        CMat ge = embed_operator(g.unitary(), {g.q[0], g.q[1]}, support);
        Mat gp = ptm_of_unitary(ge);
        s = gp * s * gp.transpose();
      }
    }
  }
  return false;
}

ExpandingLightcone commutativity_lightcone(const LayeredCircuit& c,
                                           const PauliString& obs,
                                           const LightconeOptions& opts) {
  ExpandingLightcone lc;
  lc.cone.resize(c.depth() + 1);
  auto sup = obs.support();
  lc.cone[c.depth()] = {sup.begin(), sup.end()};
  for (std::size_t l = c.depth(); l-- > 0;) {
    lc.cone[l] = lc.cone[l + 1];
    const Layer& lay = c.layers()[l];
    if (lay.kind == LayerKind::SQG) continue;
    for (const auto& g : lay.gates) {
      bool q0_in = lc.cone[l + 1].count(g.q[0]);
      bool q1_in = lc.cone[l + 1].count(g.q[1]);
      if (!(q0_in || q1_in) || (q0_in && q1_in)) continue;
      std::size_t outside = q0_in ? g.q[1] : g.q[0];
      bool ext;
      if (opts.extractor == Extractor::BruteForce)
        ext = extractable_bruteforce(c, l, g, lc, obs, opts.eps, opts.maxsupp);
      else
        ext = extractable_tracing(c, l, g, lc, opts.eps);
      if (!ext) lc.cone[l].insert(outside);
    }
  }
  return lc;
}

std::size_t active_volume(const LayeredCircuit& c,
                          const ExpandingLightcone& lc) {
  std::size_t count = 0;
  for (std::size_t l = 0; l < c.depth(); ++l) {
    const Layer& lay = c.layers()[l];
    if (lay.kind == LayerKind::SQG) continue;
    for (const auto& g : lay.gates)
      if (lc.cone[l + 1].count(g.q[0]) || lc.cone[l + 1].count(g.q[1]))
        ++count;
  }
  return count;
}

double bias_bound(const LayeredCircuit& c, const ExpandingLightcone& lc,
                  const PauliString& obs,
                  const std::vector<NoisePlacement>& placements,
                  std::size_t maxsupp) {
  // boundary gates with their eta norms (operator norm per the theorem)
  struct BoundaryGate {
    std::size_t layer;
    std::array<std::size_t, 2> q;
    double eta;
  };
  std::vector<BoundaryGate> boundary;
  for (std::size_t l = 0; l < c.depth(); ++l) {
    const Layer& lay = c.layers()[l];
    if (lay.kind == LayerKind::SQG) continue;
    for (const auto& g : lay.gates) {
      bool q0_in = lc.cone[l + 1].count(g.q[0]);
      bool q1_in = lc.cone[l + 1].count(g.q[1]);
      if (!(q0_in ^ q1_in)) continue;
      auto res = propagate_gate(c, l, g, lc, maxsupp);
      double eta;
      if (res.reached_end) {
        eta = commutator_norm(res.u, res.support, obs, true);
      } else {
        double defect = 0;
        double dist = factorization_distance(
            res.u, res.support, lc.cone.at(res.stop_layer), true, &defect);
        eta = 2 * dist + defect;
      }
      boundary.push_back({l, g.q, eta});
    }
  }
  double bound = 0;
  for (const auto& np : placements) {
    // the channel acts between layers np.layer and np.layer + 1; only
    // boundary gates inside its forward connectivity cone contribute
    std::set<std::size_t> forward(np.support.begin(), np.support.end());
    double eta_sum = 0;
    for (std::size_t l = np.layer + 1; l < c.depth(); ++l) {
      for (const auto& bg : boundary)
        if (bg.layer == l &&
            (forward.count(bg.q[0]) || forward.count(bg.q[1])))
          eta_sum += bg.eta;
      const Layer& lay = c.layers()[l];
      if (lay.kind == LayerKind::SQG) continue;
      for (const auto& g : lay.gates)
        if (forward.count(g.q[0]) || forward.count(g.q[1])) {
          forward.insert(g.q[0]);
          forward.insert(g.q[1]);
        }
    }
    bound += 2.0 * np.total_error * eta_sum;
  }
  return bound;
}

BiasEstimate heuristic_bias(const std::vector<double>& values,
                            const std::vector<bool>& in_cand,
                            const std::vector<bool>& in_diff, double o_noisy,
                            double sigma_noisy, double o_exact,
                            double sigma_exact, double prob_diff) {
  BiasEstimate out;
  if (prob_diff <= 0) {
    out.value = 0;
    out.error = 0;
    out.method = BiasEstimate::Method::Heuristic;
    return out;
  }
  double gamma = 1.0, sigma_gamma = prob_diff;
  std::size_t n_diff = 0;
  double mean = 0, m2 = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (in_cand[i] || !in_diff[i]) continue;
    ++n_diff;
    double delta = values[i] - mean;
    mean += delta / n_diff;
    m2 += delta * (values[i] - mean);
  }
  bool have_diff = n_diff >= 2 && std::abs(o_noisy) > 1e-12;
  if (have_diff) {
    double var_mean = m2 / (n_diff - 1) / n_diff;
    gamma = prob_diff * mean / o_noisy + 1.0 - prob_diff;
    sigma_gamma = prob_diff *
                  std::sqrt(var_mean / (o_noisy * o_noisy) +
                            std::pow(mean / (o_noisy * o_noisy), 2) *
                                sigma_noisy * sigma_noisy);
  }
  double b_hat = o_exact * (gamma * gamma - 1.0);
  double d1 = gamma * gamma - 1.0;
  double d2 = 2.0 * o_exact * gamma;
  double e_hat = std::sqrt(d1 * d1 * sigma_exact * sigma_exact +
                           d2 * d2 * sigma_gamma * sigma_gamma +
                           2.0 * std::abs(d1 * d2) * sigma_exact * sigma_gamma);
  double sign_n = o_noisy >= 0 ? 1.0 : -1.0;
  double b_triv = sign_n * (gamma * gamma - 1.0);
  double e_triv = 2.0 * std::abs(gamma) * sigma_gamma;
  auto upper = [](double b, double e) {
    return std::max(std::abs(b + e), std::abs(b - e));
  };
  if (have_diff && upper(b_hat, e_hat) < upper(b_triv, e_triv)) {
    out.value = b_hat;
    out.error = e_hat;
    out.method = BiasEstimate::Method::Heuristic;
  } else {
    out.value = b_triv;
    out.error = e_triv;
    out.method = BiasEstimate::Method::TrivialBound;
  }
  return out;
}

std::vector<double> default_eps_grid() {
  std::vector<double> grid{0.0};
  double lo = std::log(1e-4), hi = std::log(0.6);
  for (int i = 0; i < 50; ++i)
    grid.push_back(std::exp(lo + (hi - lo) * i / 49.0));
  return grid;
}

LightconeFamily build_lightcone_family(const LayeredCircuit& c,
                                       const PauliString& obs,
                                       const std::vector<double>& eps_grid,
                                       const LightconeOptions& base) {
  LightconeFamily fam;
  for (double eps : eps_grid) {
    LightconeOptions opts = base;
    opts.eps = eps;
    auto cone = commutativity_lightcone(c, obs, opts);
    if (!fam.candidates.empty()) {
      // enforce nesting against the previous (larger) candidate
      const auto& prev = fam.candidates.back().cone;
      for (std::size_t l = 0; l < cone.cone.size(); ++l) {
        std::set<std::size_t> inter;
        for (auto q : cone.cone[l])
          if (prev.cone[l].count(q)) inter.insert(q);
        cone.cone[l] = std::move(inter);
      }
    }
    std::size_t vol = active_volume(c, cone);
    if (!fam.candidates.empty() &&
        fam.candidates.back().volume < vol + 2)
      continue;  // differs by fewer than two gates
    fam.candidates.push_back({eps, std::move(cone), vol});
  }
  return fam;
}

std::vector<std::size_t> nested_select(
    const std::vector<std::vector<CandidateScore>>& per_observable, double tau,
    std::size_t n_batches, std::uint64_t seed, std::size_t search_iters) {
  std::vector<std::size_t> pick(per_observable.size(), 0);
  auto objective = [&](std::size_t oi, std::size_t ci) {
    const auto& s = per_observable[oi][ci];
    return s.variance / static_cast<double>(n_batches) + s.bias_sq;
  };
  auto feasible = [&](std::size_t oi, std::size_t ci) {
    const auto& s = per_observable[oi][ci];
    return s.bias_sq < tau * tau * s.variance ||
           s.bias_sq == 0.0;  // the exact candidate always qualifies
  };
  for (std::size_t oi = 0; oi < per_observable.size(); ++oi) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t ci = 0; ci < per_observable[oi].size(); ++ci) {
      if (!feasible(oi, ci)) continue;
      double v = objective(oi, ci);
      if (v < best) {
        best = v;
        pick[oi] = ci;
      }
    }
  }
  // stochastic local search over single-observable moves
  std::mt19937_64 rng(seed);
  if (!per_observable.empty()) {
    std::uniform_int_distribution<std::size_t> od(0,
                                                  per_observable.size() - 1);
    for (std::size_t it = 0; it < search_iters; ++it) {
      std::size_t oi = od(rng);
      if (per_observable[oi].size() < 2) continue;
      std::uniform_int_distribution<std::size_t> cd(
          0, per_observable[oi].size() - 1);
      std::size_t ci = cd(rng);
      if (!feasible(oi, ci)) continue;
      if (objective(oi, ci) < objective(oi, pick[oi])) pick[oi] = ci;
    }
  }
  return pick;
}

}  // namespace qpem
