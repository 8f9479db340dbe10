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

#include <cmath>
#include <random>

#include "qpem/simulator.hpp"

using namespace qpem;

namespace {

// high-order ODE oracle: integrate dM/dt = G M with RK4
Mat rk4_expm(const Mat& gen, int steps = 4000) {
  Mat m = Mat::Identity(gen.rows(), gen.cols());
  double h = 1.0 / steps;
  for (int i = 0; i < steps; ++i) {
    Mat k1 = gen * m;
    Mat k2 = gen * (m + 0.5 * h * k1);
    Mat k3 = gen * (m + 0.5 * h * k2);
    Mat k4 = gen * (m + h * k3);
    m += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return m;
}

LayeredCircuit bell_circuit() {
  LayeredCircuit c(2);
  Eigen::Matrix2cd h;
  h << 1, 1, 1, -1;
  h /= std::sqrt(2.0);
  c.append(sqg_layer({SqGate{0, h, "h"}}));
  c.append(two_qubit_layer(LayerKind::Clifford2Q,
                           {TwoQubitGate::cx(0, 1)}, ""));
  return c;
}

}  // namespace

TEST_CASE("pure ideal state for a noiseless circuit") {
  Simulator sim{NoiseModel{}};
  auto s = sim.run(bell_circuit());
  CHECK(s.expectation(PauliString::from_string("ZZ")) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.expectation(PauliString::from_string("XX")) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.expectation(PauliString::from_string("ZI")) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.trace() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("prep bit flip shows up in <Z>") {
  double p = 0.03;
  NoiseModel m;
  m.prep = PauliChannel::from_rates(2, {{PauliString::from_string("XI"), p}});
  Simulator sim{m};
  LayeredCircuit c(2);
  auto s = sim.run(c);
  CHECK(s.expectation(PauliString::from_string("ZI")) ==
        doctest::Approx(1.0 - 2 * p).epsilon(1e-12));
  CHECK(s.expectation(PauliString::from_string("IZ")) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("expectation basics") {
  PauliState zero = PauliState::from_bitstring("000");
  CHECK(zero.expectation(PauliString::from_string("IZI")) ==
        doctest::Approx(1.0));
  // maximally mixed: only the identity coefficient
  PauliState mixed(2);
  mixed.data()[0] = 0.5;  // trace 1
  CHECK(mixed.expectation(PauliString::from_string("XZ")) ==
        doctest::Approx(0.0));
  CHECK(mixed.trace() == doctest::Approx(1.0));
}

TEST_CASE("during-noise evolution matches Lindblad integrator") {
  double eps = 5e-3, alpha = M_PI / 4;
  std::map<PauliString, double> h{{PauliString::from_string("ZZ"), alpha / 2}};
  Mat gen = hamiltonian_generator_ptm(2, h) + dissipative_generator(eps);
  Mat via_exp = noisy_dissipative_gate(alpha, eps);
  Mat via_ode = rk4_expm(gen);
  CHECK((via_exp - via_ode).cwiseAbs().maxCoeff() < 1e-12);

  // same through the simulator with a planted Pauli during-channel
  std::map<PauliString, double> gamma{
      {PauliString::from_string("ZI"), 2e-3},
      {PauliString::from_string("XX"), 1e-3}};
  NoiseModel m;
  m.layers["rzz"] = LayerNoise{PauliChannel::from_generators(2, gamma),
                               Placement::During,
                               {},
                               1.0};
  Simulator sim{m};
  LayeredCircuit c(2);
  c.append(sqg_layer({SqGate{0, sx_matrix(), "sx"}, SqGate{1, sx_matrix(), "sx"}}));
  c.append(two_qubit_layer(LayerKind::Fractional2Q,
                           {TwoQubitGate::rzz(0, 1, alpha)}, "rzz"));
  auto s = sim.run(c);

  Mat gen2 = hamiltonian_generator_ptm(2, h) + Mat(pauli_generator_diag(2, gamma).asDiagonal());
  Mat ode = rk4_expm(gen2);
  PauliState ref = PauliState::from_bitstring("00");
  ref.apply_unitary1(0, sx_matrix());
  ref.apply_unitary1(1, sx_matrix());
  ref.apply_ptm({0, 1}, ode);
  for (std::size_t i = 0; i < 16; ++i)
    CHECK(s.data()[i] == doctest::Approx(ref.data()[i]).epsilon(1e-10));
}

TEST_CASE("trace preservation through arbitrary evolution") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0, 1);
  NoiseModel m;
  m.layers["f"] = LayerNoise{
      PauliChannel::from_generators(
          3, {{PauliString::from_string("ZZI"), 0.01},
              {PauliString::from_string("IXY"), 0.005}}),
      Placement::During,
      {},
      1.0};
  m.prep = PauliChannel::from_rates(3, {{PauliString::from_string("XII"), 0.01}});
  m.meas = PauliChannel::from_rates(3, {{PauliString::from_string("IXI"), 0.02}});
  Simulator sim{m};
  LayeredCircuit c(3);
  for (int rep = 0; rep < 3; ++rep) {
    std::vector<SqGate> sq;
    for (std::size_t q = 0; q < 3; ++q) {
      Eigen::Matrix2cd g = (rx_matrix(u(rng) * 3) * rz_matrix(u(rng) * 3));
      sq.push_back(SqGate{q, g, "u"});
    }
    c.append(sqg_layer(sq));
    c.append(two_qubit_layer(LayerKind::Fractional2Q,
                             {TwoQubitGate::rzz(0, 1, 0.9)}, "f"));
  }
  auto s = sim.run(c);
  CHECK(std::abs(s.trace() - 1.0) < 1e-10);
  auto d = DensityState::from(s);
  CHECK(d.trace_error() < 1e-10);
  CHECK(d.min_eigenvalue() > -1e-10);
}

TEST_CASE("fractional layer with zero noise is the ideal unitary") {
  NoiseModel m;
  Simulator sim{m};
  LayeredCircuit c(2);
  c.append(sqg_layer({SqGate{0, sx_matrix(), "sx"}}));
  c.append(two_qubit_layer(LayerKind::Fractional2Q,
                           {TwoQubitGate::rzz(0, 1, 0.7)}, "rzz"));
  auto s = sim.run(c);
  PauliState ref = PauliState::from_bitstring("00");
  ref.apply_unitary1(0, sx_matrix());
  ref.apply_unitary2(0, 1, rzz_matrix(0.7));
  for (std::size_t i = 0; i < 16; ++i)
    CHECK(s.data()[i] == doctest::Approx(ref.data()[i]).epsilon(1e-12));
}

TEST_CASE("sampling follows the exact diagonal") {
  NoiseModel m;
  Simulator sim{m};
  auto counts0 = sim.sample_shots(bell_circuit(), 0, 1);
  CHECK(counts0.empty());

  LayeredCircuit c00(2);
  auto counts1 = sim.sample_shots(c00, 64, 2);
  CHECK(counts1.at("00") == 64);

  // frequencies within 5 sigma of the exact diagonal
  auto c = bell_circuit();
  std::size_t n_shots = 20000;
  auto counts = sim.sample_shots(c, n_shots, 3);
  auto s = sim.run(c);
  auto probs = s.z_diagonal();
  for (std::size_t x = 0; x < probs.size(); ++x) {
    std::string bits(2, '0');
    for (std::size_t q = 0; q < 2; ++q)
      if ((x >> q) & 1) bits[q] = '1';
    double freq =
        counts.count(bits) ? double(counts.at(bits)) / n_shots : 0.0;
    double sigma = std::sqrt(std::max(probs[x] * (1 - probs[x]), 1e-12) / n_shots);
    CHECK(std::abs(freq - probs[x]) < 5 * sigma + 1e-9);
  }
  // determinism per seed
  auto again = sim.sample_shots(c, 100, 42);
  auto again2 = sim.sample_shots(c, 100, 42);
  CHECK(again == again2);
}

TEST_CASE("dissipative gate: infidelity near eps and CPTP") {
  double eps = 5e-3;
  Mat ideal = ptm_of_unitary(rzz_matrix(M_PI / 4));
  Mat noisy = noisy_dissipative_gate(M_PI / 4, eps);
  double inf = gate_infidelity(noisy, ideal);
  CHECK(inf > 0.9 * eps);
  CHECK(inf < 1.1 * eps);

  Mat id = noisy_dissipative_gate(0.42, 0.0);
  CHECK((id - ptm_of_unitary(rzz_matrix(0.42))).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("partial twirl shapes dissipation into a during Pauli channel") {
  double eps = 4e-3, alpha = 0.9;
  Mat noisy = noisy_dissipative_gate(alpha, eps);
  // commutant of ZZ within the two-qubit Paulis
  std::vector<PauliString> commutant;
  PauliString zz = PauliString::from_string("ZZ");
  for (const auto& p : all_paulis(2))
    if (commutes(p, zz) == 0) commutant.push_back(p);
  REQUIRE(commutant.size() == 8);
  Mat avg = Mat::Zero(16, 16);
  for (const auto& q : commutant) {
    Vec d = pauli_conj_diag(2, q);
    avg += d.asDiagonal() * noisy * d.asDiagonal();
  }
  avg /= 8.0;
  // effective generator must only connect Paulis whose product commutes with
  // the whole twirl group, i.e. lies in {II, ZZ}
  std::map<PauliString, double> h{{zz, alpha / 2}};
  Mat k = hamiltonian_generator_ptm(2, h);
  Mat gen = logm(avg);
  for (std::size_t a = 0; a < 16; ++a)
    for (std::size_t b = 0; b < 16; ++b) {
      auto prod = multiply(pauli_from_index(2, a), pauli_from_index(2, b));
      bool allowed = prod.pauli.is_identity() || prod.pauli == zz;
      if (!allowed) CHECK(std::abs(gen(a, b) - k(a, b)) < 20 * eps * eps);
    }
  // and the diagonal part matches a valid Pauli-generator channel
  Mat resid = gen - k;
  Vec diag = resid.diagonal();
  // fit gamma for the 15 non-identity Paulis from the diagonal (oracle:
  // least squares over the commutation matrix)
  Eigen::MatrixXd a(16, 15);
  for (std::size_t r = 0; r < 16; ++r)
    for (std::size_t c = 1; c < 16; ++c)
      a(r, c - 1) = commutes(pauli_from_index(2, r), pauli_from_index(2, c))
                        ? -2.0
                        : 0.0;
  Eigen::VectorXd gam = a.colPivHouseholderQr().solve(diag);
  CHECK((a * gam - diag).cwiseAbs().maxCoeff() < 20 * eps * eps);
  CHECK(gam.minCoeff() > -20 * eps * eps);
}

TEST_CASE("during layer splits into ideal then after-error to first order") {
  double alpha = 1.1;
  std::map<PauliString, double> gamma{
      {PauliString::from_string("XI"), 3e-3},
      {PauliString::from_string("ZZ"), 2e-3}};
  std::map<PauliString, double> h{{PauliString::from_string("ZZ"), alpha / 2}};
  Mat k = hamiltonian_generator_ptm(2, h);
  Mat d = pauli_generator_diag(2, gamma).asDiagonal();
  Mat during = expm(k + d);
  // Dyson first order: L_b = int_0^1 e^{-K t} D e^{K t} dt
  Mat lb = Mat::Zero(16, 16);
  int steps = 2000;
  for (int i = 0; i < steps; ++i) {
    double t = (i + 0.5) / steps;
    lb += expm(Mat(-t * k)) * d * expm(Mat(t * k)) / steps;
  }
  Mat split = expm(k) * expm(lb);
  double gnorm = 5e-3;
  CHECK((during - split).cwiseAbs().maxCoeff() < 10 * gnorm * gnorm);
}

TEST_CASE("readout bias and measured expectation") {
  NoiseModel m;
  m.readout = {ReadoutError{0.08, 0.02}, ReadoutError{0, 0}};
  Simulator sim{m};
  LayeredCircuit c(2);
  double ev = sim.measured_expectation(c, PauliString::from_string("ZI"));
  // state |0>: P(read 1) = p01 -> <Z> = 1 - 2 p01
  CHECK(ev == doctest::Approx(1.0 - 2 * 0.08).epsilon(1e-12));
  auto s = sim.run(c);
  auto probs = s.z_diagonal(&m.readout);
  CHECK(probs[0] == doctest::Approx(0.92).epsilon(1e-12));
  CHECK(probs[1] == doctest::Approx(0.08).epsilon(1e-12));
}

TEST_CASE("qubit cap raises") {
  Simulator sim{NoiseModel{}, 3};
  LayeredCircuit c(4);
  CHECK_THROWS(sim.run(c));
}
