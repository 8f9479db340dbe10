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
#include <set>

#include "qpem/simulator.hpp"
#include "qpem/twirl.hpp"

using namespace qpem;

TEST_CASE("sqg compression: named gates") {
  auto id = compress_sqg(Eigen::Matrix2cd::Identity());
  CHECK(id.theta == doctest::Approx(0.0));
  CHECK(std::fmod(std::abs(id.phi + id.lambda), 2 * M_PI) ==
        doctest::Approx(0.0).epsilon(1e-9));

  double t = 0.77;
  auto rz = compress_sqg(Eigen::Matrix2cd(rz_matrix(t)));
  CHECK(rz.theta == doctest::Approx(0.0));
  // all rotation collects in phi + lambda
  double total = rz.phi + rz.lambda;
  CHECK(std::remainder(total - t, 2 * M_PI) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("sqg compression: random runs against matrix oracle") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-M_PI, M_PI);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Eigen::Matrix2cd> run;
    for (int g = 0; g < 6; ++g) {
      switch (trial % 3) {
        case 0: run.push_back(rz_matrix(u(rng))); break;
        case 1: run.push_back(rx_matrix(u(rng))); break;
        default: run.push_back(ry_matrix(u(rng))); break;
      }
    }
    Eigen::Matrix2cd prod = Eigen::Matrix2cd::Identity();
    for (const auto& g : run) prod = g * prod;
    auto c = compress_sqg(run);
    CMat m = c.matrix();
    // compare up to global phase
    cx ratio(0, 0);
    double best = 0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        if (std::abs(prod(i, j)) > best) {
          best = std::abs(prod(i, j));
          ratio = m(i, j) / prod(i, j);
        }
    CHECK((m - ratio * prod).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(std::abs(ratio) - 1.0) < 1e-12);
  }
  CHECK_THROWS(compress_sqg(Eigen::Matrix2cd(2 * rz_matrix(0.3))));
}

TEST_CASE("clifford pauli twirl preserves the ideal action") {
  Layer cz = two_qubit_layer(LayerKind::Clifford2Q,
                             {TwoQubitGate::cz(0, 1)}, "cz");
  std::mt19937_64 rng(9);
  // identity pair for P = II must appear; CZ maps XI -> XZ
  auto conj = conjugate_pauli(cz_matrix(), PauliString::from_string("XI"));
  CHECK(conj.pauli.str() == "XZ");
  for (int trial = 0; trial < 60; ++trial) {
    auto tp = pauli_twirl_clifford(cz, 2, rng);
    // post . L . pre == L up to phase
    CMat lhs = pauli_matrix(tp.post) * cz_matrix() * pauli_matrix(tp.pre);
    cx ratio = lhs(0, 0) != cx(0, 0) ? cz_matrix()(0, 0) / lhs(0, 0) : cx(1, 0);
    bool ok = false;
    for (cx ph : {cx(1, 0), cx(-1, 0), cx(0, 1), cx(0, -1)})
      if ((ph * lhs - cz_matrix()).cwiseAbs().maxCoeff() < 1e-12) ok = true;
    (void)ratio;
    CHECK(ok);
    if (tp.pre.is_identity()) CHECK(tp.post.is_identity());
  }
  Layer frac = two_qubit_layer(LayerKind::Fractional2Q,
                               {TwoQubitGate::rzz(0, 1, 0.6)}, "f");
  CHECK_THROWS(pauli_twirl_clifford(frac, 2, rng));
}

TEST_CASE("ensemble average over 16 pairs equals analytic twirl of noisy CZ") {
  // noisy CZ: ideal CZ followed by a non-Pauli channel (coherent overshoot)
  Mat over = expm(Mat(0.05 * hamiltonian_generator_ptm(
                             2, {{PauliString::from_string("XI"), 1.0}})));
  Mat noisy = over * ptm_of_unitary(cz_matrix());
  Layer cz = two_qubit_layer(LayerKind::Clifford2Q,
                             {TwoQubitGate::cz(0, 1)}, "cz");
  Mat avg = Mat::Zero(16, 16);
  for (const auto& pre : all_paulis(2)) {
    auto conj = conjugate_pauli(cz_matrix(), pre);
    Mat pre_d = pauli_conj_diag(2, pre).asDiagonal();
    Mat post_d = pauli_conj_diag(2, conj.pauli).asDiagonal();
    avg += post_d * noisy * pre_d;
  }
  avg /= 16.0;
  // analytic: twirled channel = CZ followed by Pauli-twirled error; the
  // twirl projects the error PTM onto its diagonal (conjugated frame)
  Mat err = noisy * ptm_of_unitary(cz_matrix()).transpose();
  Mat err_diag = err.diagonal().asDiagonal();
  Mat expected = err_diag * ptm_of_unitary(cz_matrix());
  CHECK((avg - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fractional commutant membership") {
  TwoQubitGate rzz = TwoQubitGate::rzz(0, 1, 0.8);
  auto comm = fractional_commutant(rzz);
  std::set<std::string> strs;
  for (const auto& p : comm) strs.insert(p.str());
  CHECK(strs == std::set<std::string>{"II", "IZ", "ZI", "ZZ", "XX", "XY", "YX",
                                      "YY"});
  CHECK(strs.count("XI") == 0);

  TwoQubitGate kak = TwoQubitGate::kak(0, 1, 0.3, 0.5, 0.7);
  auto kc = fractional_commutant(kak);
  std::set<std::string> ks;
  for (const auto& p : kc) ks.insert(p.str());
  CHECK(ks == std::set<std::string>{"II", "XX", "YY", "ZZ"});
}

TEST_CASE("partial twirl leaves the ideal gate unchanged") {
  Layer frac = two_qubit_layer(LayerKind::Fractional2Q,
                               {TwoQubitGate::rzz(0, 1, 1.1)}, "f");
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    auto tp = partial_twirl_fractional(frac, 2, rng);
    CHECK(tp.pre == tp.post);
    CMat g = rzz_matrix(1.1);
    CMat twirled = pauli_matrix(tp.post) * g * pauli_matrix(tp.pre);
    bool ok = false;
    for (cx ph : {cx(1, 0), cx(-1, 0), cx(0, 1), cx(0, -1)})
      if ((ph * twirled - g).cwiseAbs().maxCoeff() < 1e-12) ok = true;
    CHECK(ok);
  }
}

TEST_CASE("sp twirl classes for a CZ layer") {
  Layer cz = two_qubit_layer(LayerKind::Clifford2Q,
                             {TwoQubitGate::cz(0, 1)}, "cz");
  auto group = sp_group_sqrt_z(cz, {0, 1});
  CHECK(group.size() == 4);
  auto classes = sp_twirl_constraints(local_paulis(2, 2), group);
  // constraints equate X <-> Y on each slot:
  //   {IX,IY} {XI,YI} {XX,XY,YX,YY} {XZ,YZ} {ZX,ZY} {IZ} {ZI} {ZZ}
  CHECK(classes.size() == 8);
  std::set<std::set<std::string>> got;
  for (const auto& c : classes) {
    CHECK(!c.forced_zero);
    std::set<std::string> m;
    for (const auto& p : c.members) m.insert(p.str());
    got.insert(m);
  }
  CHECK(got.count({"IX", "IY"}) == 1);
  CHECK(got.count({"XX", "XY", "YX", "YY"}) == 1);
  CHECK(got.count({"XI", "YI"}) == 1);
  CHECK(got.count({"XZ", "YZ"}) == 1);
  CHECK(got.count({"ZX", "ZY"}) == 1);
  CHECK(got.count({"IZ"}) == 1);
  CHECK(got.count({"ZI"}) == 1);
  CHECK(got.count({"ZZ"}) == 1);
}

TEST_CASE("sp twirl: trivial group gives singletons, escapes force zero") {
  auto classes = sp_twirl_constraints(
      local_paulis(2, 2), {CMat(CMat::Identity(4, 4))});
  CHECK(classes.size() == 15);
  for (const auto& c : classes) {
    CHECK(c.members.size() == 1);
    CHECK(!c.forced_zero);
  }
  // declare a set missing IY: the {IX, IY} orbit escapes it
  std::vector<PauliString> partial;
  for (const auto& p : local_paulis(2, 2))
    if (p.str() != "IY") partial.push_back(p);
  Layer cz = two_qubit_layer(LayerKind::Clifford2Q,
                             {TwoQubitGate::cz(0, 1)}, "cz");
  auto classes2 = sp_twirl_constraints(partial, sp_group_sqrt_z(cz, {0, 1}));
  bool found = false;
  for (const auto& c : classes2)
    if (c.members.size() == 1 && c.members[0].str() == "IX") {
      CHECK(c.forced_zero);
      found = true;
    }
  CHECK(found);
}

TEST_CASE("measurement twirl pair symmetrizes readout bias exactly") {
  // 1 qubit, strongly biased readout
  NoiseModel m;
  m.readout = {ReadoutError{0.10, 0.02}};
  Simulator sim{m};
  LayeredCircuit c(1);
  c.append(sqg_layer({SqGate{0, rx_matrix(0.9), "rx"}}));

  auto pair = measurement_twirl_pair(c, {});
  CHECK(pair.a.layers().size() == 1 + 1);
  // empty subset: partner carries X on every qubit
  CHECK(pair.flip_a == std::vector<bool>{false});
  CHECK(pair.flip_b == std::vector<bool>{true});

  auto measured = [&](const LayeredCircuit& cc, bool flip) {
    auto s = sim.run(cc);
    double ev = s.measured_z_expectation(PauliString::from_string("Z"),
                                         &m.readout);
    return flip ? -ev : ev;
  };
  double avg = 0.5 * (measured(pair.a, pair.flip_a[0]) +
                      measured(pair.b, pair.flip_b[0]));
  // unbiased symmetric readout of the same state
  NoiseModel sym;
  double p = 0.5 * (0.10 + 0.02);
  sym.readout = {ReadoutError{p, p}};
  Simulator sim2{sym};
  auto s = sim2.run(c);
  double expected = s.measured_z_expectation(PauliString::from_string("Z"),
                                             &sym.readout);
  CHECK(avg == doctest::Approx(expected).epsilon(1e-12));

  // unbiased readout: pair average equals the single-circuit value
  NoiseModel none;
  Simulator sim3{none};
  auto pa = sim3.run(pair.a);
  auto pb = sim3.run(pair.b);
  double va = pa.expectation(PauliString::from_string("Z"));
  double vb = pb.expectation(PauliString::from_string("Z"));
  double flipped = 0.5 * ((pair.flip_a[0] ? -va : va) +
                          (pair.flip_b[0] ? -vb : vb));
  auto plain = sim3.run(c);
  CHECK(flipped ==
        doctest::Approx(plain.expectation(PauliString::from_string("Z")))
            .epsilon(1e-12));
}
