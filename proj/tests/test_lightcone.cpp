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

#include "qpem/benchmarks.hpp"
#include "qpem/lightcone.hpp"
#include "qpem/simulator.hpp"

using namespace qpem;

namespace {

Eigen::Matrix2cd random_su2(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-M_PI, M_PI);
  return Eigen::Matrix2cd(rz_matrix(u(rng)) * rx_matrix(u(rng)) *
                          rz_matrix(u(rng)));
}

// independent graph-walk oracle for the connectivity cone base
std::set<std::size_t> conn_base_oracle(const LayeredCircuit& c,
                                       const PauliString& obs) {
  auto sup = obs.support();
  std::set<std::size_t> reach(sup.begin(), sup.end());
  for (std::size_t l = c.depth(); l-- > 0;) {
    const Layer& lay = c.layers()[l];
    if (lay.kind == LayerKind::SQG) continue;
    for (const auto& g : lay.gates)
      if (reach.count(g.q[0]) || reach.count(g.q[1])) {
        reach.insert(g.q[0]);
        reach.insert(g.q[1]);
      }
  }
  return reach;
}

}  // namespace

TEST_CASE("connectivity cone basics") {
  // depth 0
  LayeredCircuit c0(3);
  auto lc0 = connectivity_lightcone(c0, PauliString::from_string("IZI"));
  CHECK(lc0.cone.size() == 1);
  CHECK(lc0.cone[0] == std::set<std::size_t>{1});

  // 1D brickwork growth: width <= 2d + 1
  KickedIsingSpec spec;
  spec.geometry = Geometry::Path;
  spec.n_qubits = 9;
  spec.steps = 2;
  auto c = build_kicked_ising(spec);
  auto lc = connectivity_lightcone(c, PauliString(9, 4, Pauli::Z));
  std::size_t d = 0;
  for (const auto& lay : c.layers())
    if (lay.is_two_qubit()) ++d;
  CHECK(lc.cone[0].size() <= 2 * d + 1);
  CHECK(lc.cone[0].size() >= 3);
  // matches the independent graph-walk oracle
  CHECK(lc.cone[0] == conn_base_oracle(c, PauliString(9, 4, Pauli::Z)));

  // heavy-hex mini instance
  KickedIsingSpec hh;
  hh.geometry = Geometry::HeavyHexPatch;
  hh.n_qubits = 10;
  hh.steps = 1;
  auto chh = build_kicked_ising(hh);
  PauliString obs(10, 2, Pauli::Z);
  auto lhh = connectivity_lightcone(chh, obs);
  CHECK(lhh.cone[0] == conn_base_oracle(chh, obs));
}

TEST_CASE("fully commuting circuit keeps the cone at the observable") {
  KickedIsingSpec spec;
  spec.geometry = Geometry::Ring;
  spec.n_qubits = 6;
  spec.steps = 2;
  spec.alpha_x = 0.0;  // rz and rzz commute with Z observables
  auto c = build_kicked_ising(spec);
  PauliString obs(6, 2, Pauli::Z);
  auto lc = commutativity_lightcone(c, obs);
  for (const auto& s : lc.cone) CHECK(s == std::set<std::size_t>{2});
  // only the gates touching qubit 2 stay mitigated: 2 per step
  CHECK(active_volume(c, lc) == 2 * spec.steps);
  CHECK(active_volume(c, lc) <
        active_volume(c, connectivity_lightcone(c, obs)));
}

TEST_CASE("eps = 0 cone sits between the support and the connectivity cone") {
  KickedIsingSpec spec;
  spec.geometry = Geometry::Ring;
  spec.n_qubits = 6;
  spec.steps = 2;
  auto c = build_kicked_ising(spec);
  PauliString obs(6, 1, Pauli::Z);
  auto comm = commutativity_lightcone(c, obs);
  auto conn = connectivity_lightcone(c, obs);
  CHECK(comm.nested_in(conn));
  for (std::size_t l = 0; l < comm.cone.size(); ++l)
    CHECK(comm.cone[l].count(1) == 1);
  CHECK(active_volume(c, comm) <= active_volume(c, conn));
}

TEST_CASE("zero-bias: unitary errors outside the exact cone do nothing") {
  KickedIsingSpec spec;
  spec.geometry = Geometry::Path;
  spec.n_qubits = 7;
  spec.steps = 2;
  auto c = build_kicked_ising(spec);
  PauliString obs(7, 0, Pauli::Z);
  auto lc = commutativity_lightcone(c, obs);
  Simulator sim{NoiseModel{}};
  double ideal = sim.run(c).expectation(obs);
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::size_t> ld(0, c.depth() - 1);
  int done = 0;
  while (done < 50) {
    std::size_t l = ld(rng);
    std::vector<std::size_t> outside;
    for (std::size_t q = 0; q < 7; ++q)
      if (!lc.cone[l + 1].count(q)) outside.push_back(q);
    if (outside.empty()) continue;
    std::uniform_int_distribution<std::size_t> qd(0, outside.size() - 1);
    LayeredCircuit cc = c;
    cc.insert(l + 1, sqg_layer({SqGate{outside[qd(rng)], random_su2(rng),
                                       "err"}}));
    double v = sim.run(cc).expectation(obs);
    CHECK(std::abs(v - ideal) < 1e-9);
    ++done;
  }
}

TEST_CASE("brute-force extractability on hand cases") {
  // rzz commutes with everything downstream that is Z-like
  LayeredCircuit c(3);
  c.append(two_qubit_layer(LayerKind::Fractional2Q,
                           {TwoQubitGate::rzz(1, 2, 0.8)}, "a"));
  PauliString obs(3, 2, Pauli::Z);
  ExpandingLightcone lc;
  lc.cone.assign(2, {});
  lc.cone[1] = {2};
  auto gate = c.layers()[0].gates[0];
  CHECK(extractable_bruteforce(c, 0, gate, lc, obs, 0.0, 8));

  // CX whose target feeds a measured Z fails for small eps; the measured
  // control commutes and passes
  LayeredCircuit c2(2);
  c2.append(two_qubit_layer(LayerKind::Clifford2Q,
                            {TwoQubitGate::cx(1, 0)}, "b"));
  PauliString z_target(2, 0, Pauli::Z);  // target qubit is register 0
  ExpandingLightcone lc2;
  lc2.cone.assign(2, {});
  lc2.cone[1] = {0};
  auto g2 = c2.layers()[0].gates[0];
  // oracle: 4x4 commutator norm of CX with Z on the target
  CMat cx = embed_operator(cx_matrix(), {1, 0}, {0, 1});
  CMat zt = pauli_matrix(PauliString::from_string("ZI"));
  CMat comm = cx * zt - zt * cx;
  double manual =
      std::sqrt((comm.adjoint() * comm).trace().real() / 4.0);
  CHECK(manual > 0.1);
  CHECK(!extractable_bruteforce(c2, 0, g2, lc2, z_target, 0.05, 8));
  CHECK(extractable_bruteforce(c2, 0, g2, lc2, z_target, manual * 1.01, 8));
  PauliString z_control(2, 1, Pauli::Z);
  ExpandingLightcone lc3;
  lc3.cone.assign(2, {});
  lc3.cone[1] = {1};
  CHECK(extractable_bruteforce(c2, 0, g2, lc3, z_control, 0.0, 8));
}

TEST_CASE("tracing-based extractability") {
  // gate entirely outside the cone: immediately extractable
  LayeredCircuit c(4);
  c.append(two_qubit_layer(LayerKind::Fractional2Q,
                           {TwoQubitGate::rzz(2, 3, 0.9)}, "a"));
  ExpandingLightcone lc;
  lc.cone.assign(2, {});
  lc.cone[1] = {0};
  auto g = c.layers()[0].gates[0];
  CHECK(extractable_tracing(c, 0, g, lc, 0.0));

  // identity gate: extractable
  LayeredCircuit c2(2);
  c2.append(two_qubit_layer(LayerKind::Fractional2Q,
                            {TwoQubitGate::rzz(0, 1, 0.0)}, "b"));
  ExpandingLightcone lc2;
  lc2.cone.assign(2, {});
  lc2.cone[1] = {0};
  CHECK(extractable_tracing(c2, 0, c2.layers()[0].gates[0], lc2, 0.0));

  // cross-check against brute force on 3-qubit instances: fully-outside
  // gates, identity gates, and strongly coupled gates settle identically
  // (the tracing check carries no end-of-circuit commutator test, so it is
  // one-sidedly conservative in between)
  for (int trial = 0; trial < 6; ++trial) {
    LayeredCircuit c3(3);
    double a = 0.3 + 0.2 * trial;
    bool coupled = trial % 2 == 0;
    if (coupled)
      c3.append(two_qubit_layer(LayerKind::Clifford2Q,
                                {TwoQubitGate::cx(1, 0)}, "x"));
    else
      c3.append(two_qubit_layer(LayerKind::Fractional2Q,
                                {TwoQubitGate::rzz(1, 2, a)}, "x"));
    c3.append(two_qubit_layer(LayerKind::Fractional2Q,
                              {TwoQubitGate::rzz(0, 1, 0.4)}, "y"));
    PauliString obs(3, 0, Pauli::Z);
    ExpandingLightcone lc3;
    lc3.cone.assign(3, {});
    lc3.cone[2] = {0};
    lc3.cone[1] = {0, 1};
    auto gg = c3.layers()[0].gates[0];
    bool bf = extractable_bruteforce(c3, 0, gg, lc3, obs, 1e-6, 8);
    bool tr = extractable_tracing(c3, 0, gg, lc3, 1e-6);
    if (coupled) {
      // CX target feeds the measured qubit through rzz: both reject
      CHECK(!bf);
      CHECK(!tr);
    } else {
      // gate fully outside the cone at its own layer boundary
      CHECK(bf == tr);
      CHECK(tr);
    }
  }
}

TEST_CASE("analytic bias bound covers the simulated bias") {
  KickedIsingSpec spec;
  spec.geometry = Geometry::Path;
  spec.n_qubits = 4;
  spec.steps = 2;
  auto c = build_kicked_ising(spec);
  PauliString obs(4, 0, Pauli::Z);
  LightconeOptions opts;
  opts.eps = 0.15;  // loose cone so some noise lands outside
  auto lc = commutativity_lightcone(c, obs, opts);
  Simulator ideal_sim{NoiseModel{}};
  double ideal = ideal_sim.run(c).expectation(obs);

  // place a Pauli channel outside the cone (support disjoint from cone)
  std::vector<NoisePlacement> placements;
  NoiseModel noisy;
  LayeredCircuit cc = c;
  std::mt19937_64 rng(5);
  double p = 0.02;
  int placed = 0;
  for (std::size_t l = 0; l + 1 < cc.depth() && placed < 3; ++l) {
    std::vector<std::size_t> outside;
    for (std::size_t q = 0; q < 4; ++q)
      if (!lc.cone[l + 1].count(q)) outside.push_back(q);
    if (outside.empty()) continue;
    std::size_t q = outside[placed % outside.size()];
    // model the channel as an explicit mixture layer marker: use prep-style
    // insertion via a dedicated noisy identity layer
    Layer marker = two_qubit_layer(LayerKind::Clifford2Q, {}, "");
    (void)marker;
    placements.push_back({l, {q}, p});
    ++placed;
  }
  REQUIRE(placed > 0);
  double bound = bias_bound(c, lc, obs, placements);
  // simulate the actual biased value: X errors with probability p at the
  // recorded placements
  // exact mixture over error patterns (small count)
  double biased = 0;
  std::size_t patterns = std::size_t(1) << placements.size();
  for (std::size_t mask = 0; mask < patterns; ++mask) {
    LayeredCircuit cm = c;
    double prob = 1.0;
    // insert from the back so layer indices stay valid
    for (std::size_t i = placements.size(); i-- > 0;) {
      if ((mask >> i) & 1) {
        prob *= p;
        PauliString err(4, placements[i].support[0], Pauli::X);
        cm.insert(placements[i].layer + 1, pauli_layer(err));
      } else {
        prob *= 1 - p;
      }
    }
    biased += prob * ideal_sim.run(cm).expectation(obs);
  }
  CHECK(std::abs(biased - ideal) <= bound + 1e-12);
}

TEST_CASE("exact cone gives zero bound and zero bias") {
  KickedIsingSpec spec;
  spec.geometry = Geometry::Path;
  spec.n_qubits = 4;
  spec.steps = 1;
  auto c = build_kicked_ising(spec);
  PauliString obs(4, 0, Pauli::Z);
  auto lc = commutativity_lightcone(c, obs);
  std::vector<NoisePlacement> placements;
  for (std::size_t l = 0; l < c.depth(); ++l) {
    std::vector<std::size_t> outside;
    for (std::size_t q = 0; q < 4; ++q)
      if (!lc.cone[l + 1].count(q)) placements.push_back({l, {q}, 0.05});
  }
  if (!placements.empty())
    CHECK(bias_bound(c, lc, obs, placements) < 1e-6);
}

TEST_CASE("heuristic bias estimate branches") {
  // Prob(diff) = 0: gamma = 1, B = 0
  auto b0 = heuristic_bias({}, {}, {}, 0.5, 0.01, 0.5, 0.01, 0.0);
  CHECK(b0.value == doctest::Approx(0.0));

  // Clifford-channel toy: outside channel scales O by gamma_diff; circuits
  // with a diff insertion flip the sign pattern so that
  // O_diff / O_n = gamma_diff exactly
  double o_id = 0.9, g_cand = 0.95, g_diff = 0.9;
  double o_n = o_id * g_cand * g_diff;
  double o_diff = o_id * g_cand * g_diff * g_diff;
  std::vector<double> values;
  std::vector<bool> in_cand, in_diff;
  for (int i = 0; i < 400; ++i) {
    values.push_back(o_diff);  // members of S_diff measure O_diff on average
    in_cand.push_back(false);
    in_diff.push_back(true);
  }
  double prob_diff = 0.3;
  auto est = heuristic_bias(values, in_cand, in_diff, o_n, 1e-4, o_id, 1e-4,
                            prob_diff);
  double gamma_expected = prob_diff * (o_diff / o_n) + 1 - prob_diff;
  double b_expected = o_id * (gamma_expected * gamma_expected - 1);
  CHECK(est.value == doctest::Approx(b_expected).epsilon(1e-6));

  // empty S_diff: the trivial branch fires
  auto triv = heuristic_bias({}, {}, {}, 0.5, 0.01, 0.5, 0.01, 0.2);
  CHECK(triv.method == BiasEstimate::Method::TrivialBound);
}

TEST_CASE("nested family and selection") {
  KickedIsingSpec spec;
  spec.geometry = Geometry::Ring;
  spec.n_qubits = 6;
  spec.steps = 2;
  auto c = build_kicked_ising(spec);
  PauliString obs(6, 3, Pauli::Z);
  auto fam = build_lightcone_family(c, obs, default_eps_grid());
  REQUIRE(!fam.candidates.empty());
  CHECK(fam.candidates[0].eps == 0.0);
  for (std::size_t i = 1; i < fam.candidates.size(); ++i) {
    CHECK(fam.candidates[i].eps > fam.candidates[i - 1].eps);
    CHECK(fam.candidates[i].volume + 2 <= fam.candidates[i - 1].volume);
    CHECK(fam.candidates[i].cone.nested_in(fam.candidates[i - 1].cone));
  }

  // selection: single candidate goes through; infeasible biased candidates
  // are rejected
  std::vector<std::vector<CandidateScore>> scores(2);
  scores[0] = {{1.0, 0.0}};
  scores[1] = {{1.0, 0.0}, {0.2, 10.0}, {0.1, 0.001}};
  auto pick = nested_select(scores, 0.5, 1, 7);
  CHECK(pick[0] == 0);
  CHECK(pick[1] == 2);  // low variance, bias within tau^2 V
}
