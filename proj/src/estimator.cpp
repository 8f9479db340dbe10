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

#include "qpem/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "qpem/parallel.hpp"
#include "qpem/rng.hpp"

namespace qpem {

// ---------------------------------------------------------------------------
// plans and bounds
// ---------------------------------------------------------------------------

namespace {

SamplingPlan finish_plan(double v_c, double v_s, DeviceTimes t,
                         std::size_t n_c, std::size_t n_s) {
  SamplingPlan p;
  p.n_c = std::max<std::size_t>(1, n_c);
  p.n_s = std::max<std::size_t>(1, n_s);
  p.eps2t = std::pow(std::sqrt(v_c * t.t_c) + std::sqrt(v_s * t.t_s), 2);
  p.cost = p.n_c * (t.t_c + p.n_s * t.t_s);
  p.eps = std::sqrt((v_c + v_s / p.n_s) / p.n_c);
  return p;
}

}  // namespace

SamplingPlan optimal_plan_for_eps(double v_c, double v_s, DeviceTimes t,
                                  double eps) {
  if (eps <= 0) throw std::invalid_argument("eps must be positive");
  if (v_c < 0 || v_s < 0) throw std::invalid_argument("negative variance");
  if (v_c == 0 && v_s == 0) return finish_plan(0, 0, t, 1, 1);
  if (v_c <= 0)
    return finish_plan(v_c, v_s, t, 1,
                       static_cast<std::size_t>(std::ceil(v_s / (eps * eps))));
  if (t.t_c <= 0 || v_s <= 0) {
    std::size_t n_c = static_cast<std::size_t>(
        std::ceil((v_c + v_s) / (eps * eps)));
    return finish_plan(v_c, v_s, t, n_c, 1);
  }
  double n_s = std::sqrt(v_s * t.t_c / (v_c * t.t_s));
  double n_c = std::sqrt(v_c / t.t_c) *
               (std::sqrt(v_c * t.t_c) + std::sqrt(v_s * t.t_s)) / (eps * eps);
  auto plan = finish_plan(v_c, v_s, t, static_cast<std::size_t>(std::ceil(n_c)),
                          static_cast<std::size_t>(std::ceil(n_s)));
  return plan;
}

SamplingPlan optimal_plan_for_budget(double v_c, double v_s, DeviceTimes t,
                                     double budget) {
  if (budget <= 0) throw std::invalid_argument("budget must be positive");
  if (v_c <= 0) {
    std::size_t n_s = static_cast<std::size_t>(
        std::floor((budget - t.t_c) / std::max(t.t_s, 1e-12)));
    return finish_plan(v_c, v_s, t, 1, std::max<std::size_t>(1, n_s));
  }
  if (t.t_c <= 0 || v_s <= 0) {
    std::size_t n_c = static_cast<std::size_t>(
        std::floor(budget / (t.t_c + t.t_s)));
    return finish_plan(v_c, v_s, t, std::max<std::size_t>(1, n_c), 1);
  }
  double n_s = std::sqrt(v_s * t.t_c / (v_c * t.t_s));
  double n_c = budget / std::sqrt(t.t_c / v_c) /
               (std::sqrt(v_c * t.t_c) + std::sqrt(v_s * t.t_s));
  return finish_plan(v_c, v_s, t,
                     static_cast<std::size_t>(std::max(1.0, std::floor(n_c))),
                     static_cast<std::size_t>(std::ceil(n_s)));
}

SampleBounds sample_bounds(double w, double delta, double eps, double v) {
  if (delta <= 0 || delta >= 1)
    throw std::invalid_argument("delta must lie in (0,1)");
  if (eps >= w + 1)
    throw std::invalid_argument("eps must be below W + 1");
  SampleBounds out;
  out.hoeffding_nc = 2.0 * std::log(2.0 / delta) * w * w / (eps * eps);
  double xi = (w + 1.0) * eps / v;
  double bracket = (1.0 + xi) / xi * std::log1p(xi) - 1.0;
  out.hoeffding_var_nc =
      std::log(2.0 / delta) * (w + 1.0) / eps / bracket;
  out.depol_vc = w;
  out.depol_vs = w * w + w;
  return out;
}

TimeModel semi_empirical_model(double w, double p_noisy, DeviceTimes t,
                               double eps) {
  TimeModel m;
  m.w = w;
  m.v_c = w * w * p_noisy * p_noisy;
  m.v_s = w * w * (1.0 - p_noisy * p_noisy);
  m.plan = optimal_plan_for_eps(m.v_c, m.v_s, t, eps);
  return m;
}

TimeModel phenomenological_model(double infidelity, double active_volume,
                                 double r, double p_ideal, DeviceTimes t,
                                 double eps) {
  if (r <= 0 || r > 1) throw std::invalid_argument("r must lie in (0, 1]");
  if (infidelity < 0) throw std::invalid_argument("negative infidelity");
  TimeModel m;
  double expo = infidelity * active_volume;
  m.w = std::exp(2.0 * expo);
  m.v_c = std::exp(2.0 * (2.0 - r) * expo) * p_ideal * p_ideal;
  m.v_s = std::exp(4.0 * expo) - m.v_c;
  m.plan = optimal_plan_for_eps(m.v_c, std::max(0.0, m.v_s), t, eps);
  return m;
}

TimeModel phenomenological_composite(const std::vector<double>& alpha,
                                     const std::vector<double>& w_p,
                                     const std::vector<double>& p_target,
                                     double r, DeviceTimes t, double eps) {
  TimeModel m;
  double o_target = 0;
  for (std::size_t i = 0; i < alpha.size(); ++i)
    o_target += alpha[i] * p_target[i];
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    double a2 = alpha[i] * alpha[i];
    double w2r = std::pow(w_p[i], 2.0 - r);
    m.v_c += a2 * w2r * p_target[i] * p_target[i];
    m.v_s += a2 * (w_p[i] * w_p[i] - w2r * p_target[i] * p_target[i]);
    m.w = std::max(m.w, w_p[i]);
  }
  m.v_c -= o_target * o_target;
  m.v_c = std::max(0.0, m.v_c);
  m.plan = optimal_plan_for_eps(m.v_c, m.v_s, t, eps);
  return m;
}

double basis_chi(double v_c, double v_s, DeviceTimes t) {
  return std::pow(std::sqrt(v_c * t.t_c) + std::sqrt(v_s * t.t_s), 2);
}

std::vector<double> allocate_bases_eps(const std::vector<double>& chi,
                                       double total_eps) {
  double sum = 0;
  for (double x : chi) {
    if (x < 0) throw std::invalid_argument("negative chi");
    sum += std::sqrt(x);
  }
  std::vector<double> out(chi.size());
  for (std::size_t i = 0; i < chi.size(); ++i)
    out[i] = total_eps * total_eps * std::sqrt(chi[i]) / sum;
  return out;  // eps_i^2 values
}

std::vector<double> allocate_bases_budget(const std::vector<double>& chi,
                                          double budget) {
  double sum = 0;
  for (double x : chi) sum += std::sqrt(x);
  std::vector<double> out(chi.size());
  for (std::size_t i = 0; i < chi.size(); ++i)
    out[i] = std::sqrt(chi[i]) * sum / budget;
  return out;
}

Aggregate aggregate_observables(const std::vector<double>& values,
                                const Eigen::MatrixXd& covariance,
                                AggregationMode mode,
                                const std::vector<double>& shots) {
  std::size_t n = values.size();
  Aggregate out;
  out.lambda.assign(n, 0.0);
  if (n == 0) return out;
  if (n == 1) {
    out.lambda[0] = 1.0;
    out.value = values[0];
    out.variance = covariance.size() ? covariance(0, 0) : 0.0;
    return out;
  }
  if (mode == AggregationMode::ShotsWeighting) {
    double total = std::accumulate(shots.begin(), shots.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) out.lambda[i] = shots[i] / total;
  } else {
    if (static_cast<std::size_t>(covariance.rows()) != n)
      throw std::invalid_argument("covariance size mismatch");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance);
    if (es.eigenvalues().minCoeff() < -1e-9 * es.eigenvalues().maxCoeff())
      throw std::invalid_argument("covariance must be PSD");
    // lambda proportional to C^+ 1 via the pseudo-inverse
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    Eigen::MatrixXd pinv =
        covariance.completeOrthogonalDecomposition().pseudoInverse();
    Eigen::VectorXd lam = pinv * ones;
    double s = lam.sum();
    if (std::abs(s) < 1e-14)
      throw std::invalid_argument("degenerate covariance weights");
    lam /= s;
    for (std::size_t i = 0; i < n; ++i) out.lambda[i] = lam(i);
  }
  for (std::size_t i = 0; i < n; ++i) out.value += out.lambda[i] * values[i];
  if (covariance.size()) {
    Eigen::VectorXd lam(n);
    for (std::size_t i = 0; i < n; ++i) lam(i) = out.lambda[i];
    out.variance = lam.dot(covariance * lam);
  }
  return out;
}

MultistepVariance multistep_variance(
    const std::vector<std::vector<std::vector<double>>>& tree) {
  // balanced three-level tree; degenerate inner levels reduce naturally
  std::size_t n1 = tree.size();
  if (n1 == 0) return {};
  std::size_t n2 = tree[0].size();
  std::size_t n3 = tree[0][0].size();
  MultistepVariance out;
  std::vector<double> m1(n1, 0.0);
  double s3 = 0, s2 = 0;
  std::size_t s3_count = 0;
  for (std::size_t i = 0; i < n1; ++i) {
    std::vector<double> m2(n2, 0.0);
    for (std::size_t j = 0; j < n2; ++j) {
      double mean = 0;
      for (double x : tree[i][j]) mean += x;
      mean /= n3;
      m2[j] = mean;
      if (n3 > 1) {
        double ss = 0;
        for (double x : tree[i][j]) ss += (x - mean) * (x - mean);
        s3 += ss / (n3 - 1);
        ++s3_count;
      }
      m1[i] += mean / n2;
    }
    if (n2 > 1) {
      double mm = 0;
      for (double v : m2) mm += v / n2;
      double ss = 0;
      for (double v : m2) ss += (v - mm) * (v - mm);
      s2 += ss / (n2 - 1) / n1;
    }
  }
  if (s3_count) s3 /= s3_count;
  double grand = 0;
  for (double v : m1) grand += v / n1;
  double s1 = 0;
  if (n1 > 1) {
    for (double v : m1) s1 += (v - grand) * (v - grand);
    s1 /= (n1 - 1);
  }
  double v3 = s3;
  double v2 = n3 > 1 ? s2 - s3 / n3 : s2;
  double v1 = n2 > 1 ? s1 - s2 / n2 : s1;
  out.level = {std::max(0.0, v1), std::max(0.0, v2), std::max(0.0, v3)};
  out.total = s1 / n1;
  return out;
}

// ---------------------------------------------------------------------------
// mitigation plan
// ---------------------------------------------------------------------------

namespace {

// split a channel into connected components of its term supports
std::vector<PauliChannel> channel_components(const PauliChannel& ch) {
  std::vector<std::map<PauliString, double>> groups;
  std::vector<std::set<std::size_t>> supports;
  auto gens = ch;
  for (const auto& [p, v] : gens.terms()) {
    auto sup = p.support();
    std::vector<std::size_t> touching;
    for (std::size_t g = 0; g < groups.size(); ++g)
      for (auto q : sup)
        if (supports[g].count(q)) {
          touching.push_back(g);
          break;
        }
    if (touching.empty()) {
      groups.push_back({{p, v}});
      supports.emplace_back(sup.begin(), sup.end());
    } else {
      auto root = touching[0];
      groups[root][p] = v;
      supports[root].insert(sup.begin(), sup.end());
      for (std::size_t t = touching.size(); t-- > 1;) {
        auto g = touching[t];
        for (const auto& [pp, vv] : groups[g]) groups[root][pp] = vv;
        supports[root].insert(supports[g].begin(), supports[g].end());
        groups.erase(groups.begin() + g);
        supports.erase(supports.begin() + g);
      }
    }
  }
  std::vector<PauliChannel> out;
  for (auto& g : groups) {
    switch (ch.rep()) {
      case ChannelRep::Generators:
        out.push_back(PauliChannel::from_generators(ch.num_qubits(), g));
        break;
      case ChannelRep::Rates:
        out.push_back(PauliChannel::from_rates(ch.num_qubits(), g));
        break;
      case ChannelRep::Eigenvalues:
        out.push_back(PauliChannel::from_eigenvalues(ch.num_qubits(), g));
        break;
    }
  }
  return out;
}

MitigationSite insertion_site(SiteKind kind, std::size_t layer_index,
                              const PauliChannel& component) {
  MitigationSite site;
  site.kind = kind;
  site.layer_index = layer_index;
  site.support = component.support();
  auto inv = pauli_channel_inverse(component);
  site.pauli = inv.paulis;
  site.c = inv.c;
  site.w = inv.w;
  return site;
}

}  // namespace

MitigationPlan build_mitigation_plan(const LayeredCircuit& circuit,
                                     const NoiseModel& model,
                                     const MitigationOptions& opts) {
  MitigationPlan plan;
  plan.base = circuit;
  if (model.prep && !model.prep->is_trivial())
    for (const auto& comp : channel_components(model.prep->to_generators()))
      plan.sites.push_back(insertion_site(SiteKind::Prep, 0, comp));
  std::map<std::string, std::vector<std::shared_ptr<QPBasis>>> basis_cache;
  std::map<std::string, std::vector<QPDecomposition>> decomp_cache;
  std::map<std::string, std::vector<std::vector<std::size_t>>> gates_cache;
  for (std::size_t l = 0; l < circuit.depth(); ++l) {
    const Layer& lay = circuit.layers()[l];
    if (lay.id.empty() || !model.has_noise(lay.id)) continue;
    const LayerNoise& noise = model.layers.at(lay.id);
    if (noise.placement == Placement::After) {
      for (const auto& comp :
           channel_components(noise.channel.to_generators()))
        plan.sites.push_back(insertion_site(SiteKind::AfterLayer, l, comp));
      continue;
    }
    // during terms disjoint from every gate act as a plain Pauli channel
    // (they commute with the layer) and get insertion sites
    {
      auto gens = noise.channel.to_generators();
      std::set<std::size_t> gate_qubits;
      for (const auto& g : lay.gates) {
        gate_qubits.insert(g.q[0]);
        gate_qubits.insert(g.q[1]);
      }
      std::map<PauliString, double> orphan;
      for (const auto& [p, v] : gens.terms()) {
        bool touches = false;
        for (auto q : p.support()) touches = touches || gate_qubits.count(q);
        if (!touches) orphan[p] = v;
      }
      if (!orphan.empty())
        for (const auto& comp : channel_components(PauliChannel::from_generators(
                 circuit.num_qubits(), orphan)))
          plan.sites.push_back(insertion_site(SiteKind::AfterLayer, l, comp));
    }
    // during noise: cluster gates with the channel terms coupling them
    if (!basis_cache.count(lay.id)) {
      auto gens = noise.channel.to_generators();
      // assign gates to clusters via shared noise-term supports
      std::vector<std::set<std::size_t>> cluster_qubits;
      std::vector<std::vector<std::size_t>> cluster_gates;
      for (std::size_t gi = 0; gi < lay.gates.size(); ++gi) {
        cluster_qubits.push_back(
            {lay.gates[gi].q[0], lay.gates[gi].q[1]});
        cluster_gates.push_back({gi});
      }
      bool merged = true;
      while (merged) {
        merged = false;
        for (const auto& [p, v] : gens.terms()) {
          (void)v;
          auto sup = p.support();
          std::vector<std::size_t> touching;
          for (std::size_t ci = 0; ci < cluster_qubits.size(); ++ci)
            for (auto q : sup)
              if (cluster_qubits[ci].count(q)) {
                touching.push_back(ci);
                break;
              }
          if (touching.size() > 1) {
            auto root = touching[0];
            for (std::size_t t = touching.size(); t-- > 1;) {
              auto ci = touching[t];
              cluster_qubits[root].insert(cluster_qubits[ci].begin(),
                                          cluster_qubits[ci].end());
              cluster_gates[root].insert(cluster_gates[root].end(),
                                         cluster_gates[ci].begin(),
                                         cluster_gates[ci].end());
              cluster_qubits.erase(cluster_qubits.begin() + ci);
              cluster_gates.erase(cluster_gates.begin() + ci);
            }
            merged = true;
            break;
          }
        }
      }
      std::vector<std::shared_ptr<QPBasis>> bases;
      std::vector<QPDecomposition> decomps;
      for (std::size_t ci = 0; ci < cluster_gates.size(); ++ci) {
        std::set<std::size_t> qs = cluster_qubits[ci];
        for (const auto& [p, v] : gens.terms()) {
          (void)v;
          bool touches = false;
          for (auto q : p.support()) touches = touches || qs.count(q);
          if (touches)
            for (auto q : p.support()) qs.insert(q);
        }
        std::vector<std::size_t> qubits(qs.begin(), qs.end());
        if (qubits.size() > opts.crosstalk_support)
          throw std::runtime_error("during-noise cluster too large");
        std::size_t k = qubits.size();
        std::size_t nd = std::size_t(1) << (2 * k);
        // local gamma
        std::map<PauliString, double> local_gamma;
        for (const auto& [p, v] : gens.terms()) {
          bool inside = true;
          for (auto q : p.support())
            inside = inside && qs.count(q);
          bool touches = false;
          for (auto q : p.support()) touches = touches || qs.count(q);
          if (touches && !inside)
            throw std::logic_error("cluster closure failed");
          if (!inside) continue;
          PauliString local(k);
          for (auto q : p.support()) {
            auto it = std::find(qubits.begin(), qubits.end(), q);
            local.set(it - qubits.begin(), p.at(q));
          }
          local_gamma[local] += v;
        }
        Vec d = pauli_generator_diag(k, local_gamma);
        // gate Hamiltonians (local)
        auto gate_h = [&](std::size_t gi) {
          std::map<PauliString, double> h;
          const auto& g = lay.gates[gi];
          auto lo = [&](std::size_t q) {
            return static_cast<std::size_t>(
                std::find(qubits.begin(), qubits.end(), q) - qubits.begin());
          };
          auto add = [&](Pauli pl, double coeff) {
            if (coeff == 0) return;
            PauliString p(k);
            p.set(lo(g.q[0]), pl);
            p.set(lo(g.q[1]), pl);
            h[p] += coeff * noise.angle_factor;
          };
          add(Pauli::X, 0.5 * g.ax);
          add(Pauli::Y, 0.5 * g.ay);
          add(Pauli::Z, 0.5 * g.az);
          return h;
        };
        QPGateContext ctx;
        ctx.k = k;
        std::map<PauliString, double> h_all;
        for (auto gi : cluster_gates[ci])
          for (const auto& [p, v] : gate_h(gi)) h_all[p] += v;
        Mat k_all = hamiltonian_generator_ptm(k, h_all);
        ctx.ideal_gate = expm(k_all);
        ctx.noisy_gate = expm(Mat(k_all + Mat(d.asDiagonal())));
        ctx.ideal_idle = Mat::Identity(nd, nd);
        ctx.noisy_idle = expm(Mat(d.asDiagonal()));
        std::vector<QPType> types{QPType::gate_pauli(), QPType::pauli_idle()};
        if (cluster_gates[ci].size() == 2) {
          // crosstalk cluster: the seven-type basis
          for (std::size_t s = 0; s < 2; ++s) {
            auto h = gate_h(cluster_gates[ci][s]);
            Mat ks = hamiltonian_generator_ptm(k, h);
            ctx.ideal_sub.push_back(expm(ks));
            ctx.noisy_sub.push_back(expm(Mat(ks + Mat(d.asDiagonal()))));
          }
          types.push_back(QPType::pauli_gate());
          types.push_back({false, GateRef::none(), GateRef::sub(0)});
          types.push_back({false, GateRef::none(), GateRef::sub(1)});
          types.push_back({false, GateRef::sub(0), GateRef::none()});
          types.push_back({false, GateRef::sub(1), GateRef::none()});
        } else if (cluster_gates[ci].size() > 2) {
          throw std::runtime_error("more than two gates in one cluster");
        }
        auto basis = std::make_shared<QPBasis>(
            build_basis(ctx, types, all_paulis(k)));
        QPSolveOptions sopts = opts.qp;
        sopts.nonlinear = opts.nonlinear;
        auto dec = solve_qp(*basis, sopts);
        bases.push_back(basis);
        decomps.push_back(std::move(dec));
      }
      basis_cache[lay.id] = bases;
      decomp_cache[lay.id] = decomps;
      gates_cache[lay.id] = cluster_gates;
    }
    const auto& bases = basis_cache[lay.id];
    const auto& decomps = decomp_cache[lay.id];
    const auto& cgates = gates_cache[lay.id];
    for (std::size_t ci = 0; ci < bases.size(); ++ci) {
      MitigationSite site;
      site.kind = SiteKind::DuringGate;
      site.layer_index = l;
      site.gate_index = cgates[ci][0];
      site.gate_indices = cgates[ci];
      std::set<std::size_t> qs;
      for (auto gi : cgates[ci]) {
        qs.insert(lay.gates[gi].q[0]);
        qs.insert(lay.gates[gi].q[1]);
      }
      site.support = {qs.begin(), qs.end()};
      site.basis = bases[ci];
      site.c = decomps[ci].c;
      site.w = decomps[ci].w;
      plan.sites.push_back(std::move(site));
    }
  }
  if (model.meas && !model.meas->is_trivial())
    for (const auto& comp : channel_components(model.meas->to_generators()))
      plan.sites.push_back(
          insertion_site(SiteKind::Meas, circuit.depth(), comp));
  plan.total_w = 1.0;
  for (const auto& s : plan.sites) plan.total_w *= s.w;
  return plan;
}

// ---------------------------------------------------------------------------
// sampling
// ---------------------------------------------------------------------------

namespace {

struct ElementAction {
  PauliString pre, post;              // full-register Pauli layers
  std::vector<std::size_t> fired;     // gate indices that still fire
};

ElementAction element_action(const MitigationSite& site, std::size_t n,
                             std::size_t element) {
  ElementAction act{PauliString(n), PauliString(n), site.gate_indices};
  if (site.kind != SiteKind::DuringGate) {
    act.post = site.pauli.at(element);  // insertion after the channel
    return act;
  }
  const auto& e = site.basis->elements.at(element);
  if (e.type.trivial) return act;
  // map the local element Pauli onto the register
  PauliString reg(n);
  for (std::size_t i = 0; i < site.support.size(); ++i)
    reg.set(site.support[i], e.pauli.at(i));
  auto fired_of = [&](const GateRef& r) -> std::vector<std::size_t> {
    switch (r.kind) {
      case GateRef::Kind::Gate: return site.gate_indices;
      case GateRef::Kind::Idle: return {};
      case GateRef::Kind::Sub: return {site.gate_indices.at(r.index)};
      default: return {};
    }
  };
  if (e.type.before.kind != GateRef::Kind::None) {
    // gate block first, then the Pauli
    act.fired = fired_of(e.type.before);
    act.post = reg;
  } else {
    act.pre = reg;
    act.fired = fired_of(e.type.after);
  }
  return act;
}

}  // namespace

std::vector<SampledCircuit> sample_qp(const MitigationPlan& plan,
                                      std::size_t n_c, std::uint64_t seed) {
  std::vector<SampledCircuit> out(n_c);
  std::size_t n = plan.base.num_qubits();
  for (std::size_t j = 0; j < n_c; ++j) {
    auto rng = substream(seed, "qp-sample", j);
    SampledCircuit& s = out[j];
    s.draws.resize(plan.sites.size());
    s.sign = 1.0;
    // draw elements
    for (std::size_t si = 0; si < plan.sites.size(); ++si) {
      const auto& site = plan.sites[si];
      std::uniform_real_distribution<double> u(0.0, site.w);
      double r = u(rng), acc = 0;
      std::size_t pick = 0;
      for (std::size_t e = 0; e < site.c.size(); ++e) {
        acc += std::abs(site.c[e]);
        if (r <= acc) {
          pick = e;
          break;
        }
        pick = e;
      }
      s.draws[si] = pick;
      if (site.c[pick] < 0) s.sign = -s.sign;
    }
    // realize the circuit
    std::vector<PauliString> pre(plan.base.depth() + 1, PauliString(n));
    std::vector<PauliString> post(plan.base.depth() + 1, PauliString(n));
    std::map<std::pair<std::size_t, std::size_t>, bool> fires;
    PauliString prep_insert(n), meas_insert(n);
    for (std::size_t si = 0; si < plan.sites.size(); ++si) {
      const auto& site = plan.sites[si];
      auto act = element_action(site, n, s.draws[si]);
      auto merge = [&](PauliString& into, const PauliString& p) {
        into = multiply(into, p).pauli;
      };
      switch (site.kind) {
        case SiteKind::Prep: merge(prep_insert, act.post); break;
        case SiteKind::Meas: merge(meas_insert, act.post); break;
        case SiteKind::AfterLayer:
          merge(post[site.layer_index], act.post);
          break;
        case SiteKind::DuringGate: {
          merge(pre[site.layer_index], act.pre);
          merge(post[site.layer_index], act.post);
          std::set<std::size_t> fired(act.fired.begin(), act.fired.end());
          for (auto gi : site.gate_indices)
            fires[{site.layer_index, gi}] = fired.count(gi) > 0;
          break;
        }
      }
    }
    LayeredCircuit c(n, plan.base.prep());
    if (!prep_insert.is_identity()) c.append(pauli_layer(prep_insert));
    for (std::size_t l = 0; l < plan.base.depth(); ++l) {
      if (!pre[l].is_identity()) c.append(pauli_layer(pre[l]));
      Layer lay = plan.base.layers()[l];
      if (lay.kind == LayerKind::Fractional2Q) {
        for (std::size_t gi = 0; gi < lay.gates.size(); ++gi) {
          auto it = fires.find({l, gi});
          if (it != fires.end() && !it->second) {
            lay.gates[gi].ax = 0;
            lay.gates[gi].ay = 0;
            lay.gates[gi].az = 0;
          }
        }
      }
      c.append(std::move(lay));
      if (!post[l].is_identity()) c.append(pauli_layer(post[l]));
    }
    if (!meas_insert.is_identity()) c.append(pauli_layer(meas_insert));
    for (const auto& [p, wt] : plan.base.observables())
      c.add_observable(p, wt);
    s.circuit = std::move(c);
  }
  return out;
}

namespace {

bool site_in_cone(const MitigationSite& site, const ExpandingLightcone* cone,
                  std::size_t depth) {
  if (!cone) return true;
  std::size_t idx;
  switch (site.kind) {
    case SiteKind::Prep: idx = 0; break;
    case SiteKind::Meas: idx = depth; break;
    default: idx = site.layer_index + 1; break;
  }
  for (auto q : site.support)
    if (cone->cone.at(idx).count(q)) return true;
  return false;
}

}  // namespace

double circuit_weight(const MitigationPlan& plan, const SampledCircuit& s,
                      const ExpandingLightcone* cone) {
  double f = 1.0;
  for (std::size_t si = 0; si < plan.sites.size(); ++si) {
    const auto& site = plan.sites[si];
    if (!site_in_cone(site, cone, plan.base.depth())) continue;
    f *= site.w;
    if (site.c[s.draws[si]] < 0) f = -f;
  }
  return f;
}

bool has_insertion(const MitigationPlan& plan, const SampledCircuit& s,
                   const ExpandingLightcone* cone) {
  for (std::size_t si = 0; si < plan.sites.size(); ++si) {
    if (s.draws[si] == 0) continue;
    if (site_in_cone(plan.sites[si], cone, plan.base.depth())) return true;
  }
  return false;
}

double mitigated_expectation_exact(const MitigationPlan& plan,
                                   const NoiseModel& device,
                                   const PauliString& obs,
                                   const ExpandingLightcone* cone) {
  Simulator sim(device);
  std::size_t n = plan.base.num_qubits();
  PauliState state = PauliState::from_bitstring(plan.base.prep());
  if (device.prep) state.apply_pauli_channel(*device.prep);
  auto apply_site_mixture = [&](const MitigationSite& site, bool in_cone) {
    std::size_t k = site.support.size();
    std::size_t nd = std::size_t(1) << (2 * k);
    Mat mix = Mat::Zero(nd, nd);
    if (site.kind == SiteKind::DuringGate) {
      for (std::size_t e = 0; e < site.c.size(); ++e) {
        double coeff = in_cone ? site.c[e] : std::abs(site.c[e]) / site.w;
        if (coeff == 0) continue;
        mix += coeff * site.basis->noisy_ptm(e);
      }
    } else {
      Vec diag = Vec::Zero(nd);
      for (std::size_t e = 0; e < site.c.size(); ++e) {
        double coeff = in_cone ? site.c[e] : std::abs(site.c[e]) / site.w;
        PauliString local(k);
        for (std::size_t i = 0; i < k; ++i)
          local.set(i, site.pauli[e].at(site.support[i]));
        diag += coeff * pauli_conj_diag(k, local);
      }
      mix = diag.asDiagonal();
    }
    state.apply_ptm(site.support, mix);
  };
  // prep sites
  for (const auto& site : plan.sites)
    if (site.kind == SiteKind::Prep)
      apply_site_mixture(site, site_in_cone(site, cone, plan.base.depth()));
  for (std::size_t l = 0; l < plan.base.depth(); ++l) {
    const Layer& lay = plan.base.layers()[l];
    bool handled = false;
    if (lay.kind == LayerKind::Fractional2Q) {
      // during sites replace the noisy layer action entirely
      std::vector<const MitigationSite*> here;
      for (const auto& site : plan.sites)
        if (site.kind == SiteKind::DuringGate && site.layer_index == l)
          here.push_back(&site);
      if (!here.empty()) {
        for (const auto* site : here)
          apply_site_mixture(*site,
                             site_in_cone(*site, cone, plan.base.depth()));
        // the physical during-terms disjoint from every gate still act as a
        // bare channel; their inverse lives in AfterLayer sites
        auto it = device.layers.find(lay.id);
        if (it != device.layers.end()) {
          std::set<std::size_t> gate_qubits;
          for (const auto& g : lay.gates) {
            gate_qubits.insert(g.q[0]);
            gate_qubits.insert(g.q[1]);
          }
          std::map<PauliString, double> orphan;
          for (const auto& [p, v] : it->second.channel.to_generators().terms()) {
            bool touches = false;
            for (auto q : p.support())
              touches = touches || gate_qubits.count(q);
            if (!touches) orphan[p] = v;
          }
          if (!orphan.empty())
            state.apply_pauli_channel(
                PauliChannel::from_generators(n, orphan));
        }
        handled = true;
      }
    }
    if (!handled) sim.apply_layer(state, lay);
    if (lay.kind != LayerKind::SQG)
      for (const auto& site : plan.sites)
        if (site.kind == SiteKind::AfterLayer && site.layer_index == l)
          apply_site_mixture(site, site_in_cone(site, cone, plan.base.depth()));
  }
  if (device.meas) state.apply_pauli_channel(*device.meas);
  for (const auto& site : plan.sites)
    if (site.kind == SiteKind::Meas)
      apply_site_mixture(site, site_in_cone(site, cone, plan.base.depth()));
  return state.measured_z_expectation(
      obs, device.readout.empty() ? nullptr : &device.readout);
}

// ---------------------------------------------------------------------------
// estimation
// ---------------------------------------------------------------------------

VarianceReport qp_estimate(const EstimatorInput& in) {
  std::size_t n_c = in.f.size();
  if (n_c < 2) throw std::invalid_argument("need at least two circuits");
  VarianceReport out;
  std::vector<double> o_hat(n_c);
  for (std::size_t j = 0; j < n_c; ++j) o_hat[j] = in.f[j] * in.mean[j];
  double tot = std::accumulate(o_hat.begin(), o_hat.end(), 0.0) / n_c;
  out.estimate = tot;
  double ss = 0;
  for (double v : o_hat) ss += (v - tot) * (v - tot);
  out.s2_tot = ss / (n_c - 1.0) / n_c;
  double s_shot = 0;
  for (std::size_t j = 0; j < n_c; ++j)
    s_shot += in.f[j] * in.f[j] * in.svar[j];
  out.s2_shot = s_shot / n_c;
  out.s2_circ = n_c * out.s2_tot - out.s2_shot / in.n_s;
  if (out.s2_circ < 0) {
    out.s2_circ = 0;
    out.clipped = true;
  }
  double var_tot = std::max(out.s2_tot, out.s2_shot / in.n_s / n_c);
  out.stderr_est = std::sqrt(var_tot);
  return out;
}

namespace {

struct BatchData {
  EstimatorInput input;
  VarianceReport report;
};

BatchData run_batch(const MitigationPlan& plan, const NoiseModel& device,
                    const PauliString& obs, const ExpandingLightcone* cone,
                    std::size_t n_c, std::size_t n_s, std::uint64_t seed,
                    bool exact_values) {
  auto samples = sample_qp(plan, n_c, seed);
  BatchData out;
  out.input.n_s = exact_values ? 1 : n_s;
  out.input.f.resize(n_c);
  out.input.mean.resize(n_c);
  out.input.svar.assign(n_c, 0.0);
  Simulator sim(device);
  parallel_for(n_c, [&](std::size_t j) {
    out.input.f[j] = circuit_weight(plan, samples[j], cone);
    PauliState state = sim.run(samples[j].circuit);
    if (exact_values) {
      out.input.mean[j] = state.measured_z_expectation(
          obs, device.readout.empty() ? nullptr : &device.readout);
    } else {
      auto counts = sim.sample_from_state(state, n_s,
                                          derive_seed(seed, "shots", j));
      double mean = 0;
      for (const auto& [bits, cnt] : counts) {
        int parity = 0;
        for (auto q : obs.support())
          if (bits[q] == '1') parity ^= 1;
        mean += (parity ? -1.0 : 1.0) * cnt;
      }
      mean /= n_s;
      out.input.mean[j] = mean;
      if (n_s > 1)
        out.input.svar[j] = (1.0 - mean * mean) * n_s / (n_s - 1.0);
    }
  });
  out.report = qp_estimate(out.input);
  return out;
}

}  // namespace

AdaptiveResult adaptive_run(const MitigationPlan& plan,
                            const NoiseModel& device, const PauliString& obs,
                            const ExpandingLightcone* cone, double eps,
                            const AdaptiveOptions& opts) {
  AdaptiveResult out;
  auto pilot = run_batch(plan, device, obs, cone, opts.pilot_circuits,
                         opts.pilot_shots, derive_seed(opts.seed, "pilot"),
                         opts.exact_values);
  double v_c = pilot.report.s2_circ;
  double v_s = pilot.report.s2_shot;
  out.plan = optimal_plan_for_eps(std::max(v_c, 1e-12), v_s, opts.times, eps);
  out.batches.push_back({pilot.report.estimate,
                         pilot.report.stderr_est * pilot.report.stderr_est,
                         opts.pilot_circuits, opts.pilot_shots});
  out.qpu_time = opts.pilot_circuits *
                 (opts.times.t_c + opts.pilot_shots * opts.times.t_s);
  // terminate after the pilot when it already meets the target
  if (pilot.report.stderr_est > eps * 0.98) {
    auto main = run_batch(plan, device, obs, cone, out.plan.n_c, out.plan.n_s,
                          derive_seed(opts.seed, "main"), opts.exact_values);
    out.batches.push_back({main.report.estimate,
                           main.report.stderr_est * main.report.stderr_est,
                           out.plan.n_c, out.plan.n_s});
    out.qpu_time += out.plan.cost;
  }
  // inverse-variance combination of the batches
  double num = 0, den = 0;
  for (const auto& b : out.batches) {
    double var = std::max(b.variance, 1e-18);
    num += b.value / var;
    den += 1.0 / var;
  }
  out.value = num / den;
  out.stderr_est = std::sqrt(1.0 / den);
  return out;
}

// ---------------------------------------------------------------------------
// ZNE baseline
// ---------------------------------------------------------------------------

LayeredCircuit fold_circuit(const LayeredCircuit& c, std::size_t factor) {
  if (factor % 2 == 0) throw std::invalid_argument("folding factor must be odd");
  LayeredCircuit out(c.num_qubits(), c.prep());
  for (const auto& lay : c.layers()) {
    out.append(lay);
    if (lay.kind != LayerKind::Fractional2Q || factor == 1) continue;
    PauliString xmask(c.num_qubits());
    for (const auto& g : lay.gates) xmask.set(g.q[0], Pauli::X);
    for (std::size_t rep = 0; rep < (factor - 1) / 2; ++rep) {
      out.append(pauli_layer(xmask));
      out.append(lay);
      out.append(pauli_layer(xmask));
      out.append(lay);
    }
  }
  for (const auto& [p, w] : c.observables()) out.add_observable(p, w);
  return out;
}

ZneResult zne_baseline(const LayeredCircuit& c, const NoiseModel& device,
                       const PauliString& obs,
                       const std::vector<std::size_t>& factors, ZneFit fit) {
  for (auto f : factors)
    if (f % 2 == 0)
      throw std::invalid_argument("folding factors must be odd");
  ZneResult out;
  Simulator sim(device);
  for (auto f : factors) {
    auto folded = fold_circuit(c, f);
    out.measured.push_back(sim.measured_expectation(folded, obs));
  }
  std::size_t m = factors.size();
  if (fit == ZneFit::Exponential) {
    bool same_sign = true;
    double s0 = out.measured[0] >= 0 ? 1.0 : -1.0;
    for (double v : out.measured)
      same_sign = same_sign && (v * s0 > 1e-14);
    if (same_sign) {
      // log-linear fit: log|v| = log A - b n
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (std::size_t i = 0; i < m; ++i) {
        double x = static_cast<double>(factors[i]);
        double y = std::log(std::abs(out.measured[i]));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
      }
      double denom = m * sxx - sx * sx;
      double slope = (m * sxy - sx * sy) / denom;
      double inter = (sy - slope * sx) / m;
      double a = std::exp(inter);
      out.value = s0 * std::min(a, 1.0);
      return out;
    }
    fit = ZneFit::Linear;  // mixed signs: exponential model is inapplicable
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    double x = static_cast<double>(factors[i]);
    double y = out.measured[i];
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double denom = m * sxx - sx * sx;
  double slope = (m * sxy - sx * sy) / denom;
  double inter = (sy - slope * sx) / m;
  out.value = std::clamp(inter, -1.0, 1.0);
  return out;
}

}  // namespace qpem
