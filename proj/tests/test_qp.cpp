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

#include "qpem/qp.hpp"
#include "qpem/simplex.hpp"
#include "qpem/simulator.hpp"

using namespace qpem;

namespace {

// twirl a 2-qubit PTM with the commutant of its rzz generator
Mat rzz_partial_twirl(const Mat& noisy) {
  PauliString zz = PauliString::from_string("ZZ");
  Mat avg = Mat::Zero(16, 16);
  int count = 0;
  for (const auto& p : all_paulis(2)) {
    if (commutes(p, zz) != 0) continue;
    Mat d = pauli_conj_diag(2, p).asDiagonal();
    avg += d * noisy * d;
    ++count;
  }
  return avg / count;
}

QPGateContext dissipative_rzz_context(double alpha, double eps) {
  QPGateContext ctx;
  ctx.k = 2;
  ctx.ideal_gate = ptm_of_unitary(rzz_matrix(alpha));
  ctx.noisy_gate = rzz_partial_twirl(noisy_dissipative_gate(alpha, eps));
  ctx.ideal_idle = Mat::Identity(16, 16);
  ctx.noisy_idle = rzz_partial_twirl(noisy_dissipative_idle(eps));
  return ctx;
}

}  // namespace

TEST_CASE("simplex: small known problems") {
  // min -x - y st x + y <= ... as equalities with slack baked in:
  // x + y + s = 4, x - y + t = 2
  Eigen::MatrixXd a(2, 4);
  a << 1, 1, 1, 0, 1, -1, 0, 1;
  Eigen::VectorXd b(2);
  b << 4, 2;
  Eigen::VectorXd c(4);
  c << -1, -1, 0, 0;
  auto r = solve_lp(a, b, c);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.objective == doctest::Approx(-4.0));

  // infeasible: x = -1 with x >= 0
  Eigen::MatrixXd a2(1, 1);
  a2 << 1;
  Eigen::VectorXd b2(1);
  b2 << -1;
  Eigen::VectorXd c2(1);
  c2 << 1;
  CHECK(solve_lp(a2, b2, c2).status == LpStatus::Infeasible);

  // unbounded: min -x st x - y = 1
  Eigen::MatrixXd a3(1, 2);
  a3 << 1, -1;
  Eigen::VectorXd b3(1);
  b3 << 1;
  Eigen::VectorXd c3(2);
  c3 << -1, 0;
  CHECK(solve_lp(a3, b3, c3).status == LpStatus::Unbounded);
}

TEST_CASE("zero noise returns the bare gate") {
  QPGateContext ctx;
  ctx.k = 2;
  ctx.ideal_gate = ptm_of_unitary(rzz_matrix(0.8));
  ctx.noisy_gate = ctx.ideal_gate;
  ctx.ideal_idle = Mat::Identity(16, 16);
  ctx.noisy_idle = ctx.ideal_idle;
  auto basis = build_basis(ctx, {QPType::gate_pauli(), QPType::pauli_idle()},
                           all_paulis(2));
  auto d = solve_qp(basis);
  CHECK(d.w == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(d.c[0] == doctest::Approx(1.0).epsilon(1e-9));
  for (std::size_t i = 1; i < d.c.size(); ++i)
    CHECK(std::abs(d.c[i]) < 1e-9);
  CHECK(d.coeff_sum == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("single Pauli channel: exact closed-form coefficients") {
  // channel (1-p) I + p XI after an idle gate; basis {G, G.P}
  double p = 0.03;
  QPGateContext ctx;
  ctx.k = 2;
  ctx.ideal_gate = Mat::Identity(16, 16);
  Vec d = pauli_conj_diag(2, PauliString::from_string("XI"));
  Mat chan = Mat::Zero(16, 16);
  chan.diagonal() = (1 - p) * Vec::Ones(16) + p * d;
  ctx.noisy_gate = chan;
  ctx.ideal_idle = Mat::Identity(16, 16);
  ctx.noisy_idle = Mat::Identity(16, 16);
  auto basis = build_basis(ctx, {QPType::gate_pauli()},
                           {PauliString::from_string("XI")});
  REQUIRE(basis.elements.size() == 2);
  QPSolveOptions opts;
  opts.nonlinear = true;  // exact route
  auto dec = solve_qp(basis, opts);
  CHECK(dec.c[0] == doctest::Approx((1 - p) / (1 - 2 * p)).epsilon(1e-10));
  CHECK(dec.c[1] == doctest::Approx(-p / (1 - 2 * p)).epsilon(1e-10));
  CHECK(dec.w == doctest::Approx(1.0 / (1 - 2 * p)).epsilon(1e-10));
  CHECK(dec.residual_frobenius < 1e-12);

  // first-order route agrees to O(p^2)
  auto dec1 = solve_qp(basis);
  CHECK(std::abs(dec1.c[1] - dec.c[1]) < 5 * p * p);
}

TEST_CASE("single-qubit gamma_Z channel with basis {I, Z}: one-row system") {
  double g = 0.01;
  QPGateContext ctx;
  ctx.k = 1;
  ctx.ideal_gate = Mat::Identity(4, 4);
  Vec diag = pauli_generator_diag(
      1, {{PauliString::from_string("Z"), g}});
  ctx.noisy_gate = expm(Mat(diag.asDiagonal()));
  ctx.ideal_idle = Mat::Identity(4, 4);
  ctx.noisy_idle = Mat::Identity(4, 4);
  auto basis = build_basis(ctx, {QPType::gate_pauli()},
                           {PauliString::from_string("Z")});
  QPSolveOptions opts;
  opts.nonlinear = true;
  auto dec = solve_qp(basis, opts);
  // hand oracle: lambda = e^{-2g} on X,Y; N^-1 = c0 I + c1 Z.Z with
  // c0 + c1 = 1, c0 - c1 = e^{2g}
  double c0 = 0.5 * (1 + std::exp(2 * g));
  double c1 = 0.5 * (1 - std::exp(2 * g));
  CHECK(dec.c[0] == doctest::Approx(c0).epsilon(1e-10));
  CHECK(dec.c[1] == doctest::Approx(c1).epsilon(1e-10));
}

TEST_CASE("dissipative rzz with basis B3 reaches the optimal blowup rate") {
  double eps = 5e-3;
  for (double alpha : {0.5, M_PI / 4, 1.3}) {
    auto ctx = dissipative_rzz_context(alpha, eps);
    auto basis = build_basis(
        ctx, {QPType::gate_pauli(), QPType::pauli_idle()}, all_paulis(2));
    auto dec = solve_qp(basis);
    CHECK(dec.coeff_sum == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(dec.blowup_rate > 1.9);
    CHECK(dec.blowup_rate < 2.1);
    CHECK(dec.residual_frobenius / dec.frobenius_noise < eps);
    // norm bound with the infidelity actually eliminated by mitigation
    CHECK(dec.w >= qp_norm_lower_bound(dec.mitigated_infidelity) - 1e-6);
  }
}

TEST_CASE("B1 basis blowup stays under 2.18 below the Clifford midpoint") {
  double eps = 5e-3;
  for (double alpha : {0.3, 0.6, 0.75}) {
    auto ctx = dissipative_rzz_context(alpha, eps);
    auto basis = build_basis(
        ctx, {QPType::gate_pauli(), QPType::pauli_gate()}, all_paulis(2));
    auto dec = solve_qp(basis);
    CHECK(dec.blowup_rate < 2.18);
  }
}

TEST_CASE("rzz B3 least squares has a nontrivial kernel") {
  auto ctx = dissipative_rzz_context(M_PI / 4, 5e-3);
  auto basis = build_basis(ctx, {QPType::gate_pauli(), QPType::pauli_idle()},
                           all_paulis(2));
  auto rows = local_choi_rows(2, 0);
  Mat lb = logm(ctx.ideal_gate.partialPivLu().inverse() * ctx.noisy_gate);
  auto data = build_least_squares(lb, basis, rows);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(data.a);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-8 * sv(0)) ++rank;
  CHECK(rank < static_cast<int>(basis.elements.size()));
  // L_b = 0 gives y = 0
  auto data0 = build_least_squares(Mat::Zero(16, 16), basis, rows);
  CHECK(data0.y.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("l1 optimality: kernel perturbations never reduce the norm") {
  auto ctx = dissipative_rzz_context(0.9, 5e-3);
  auto basis = build_basis(ctx, {QPType::gate_pauli(), QPType::pauli_idle()},
                           all_paulis(2));
  auto rows = local_choi_rows(2, 0);
  Mat lb = logm(ctx.ideal_gate.partialPivLu().inverse() * ctx.noisy_gate);
  auto data = build_least_squares(lb, basis, rows);
  auto dec = solve_first_order(data, basis);
  Eigen::VectorXd x(dec.c.size());
  for (std::size_t i = 0; i < dec.c.size(); ++i) x(i) = dec.c[i];
  x(0) -= 1.0;
  Eigen::VectorXd ax = data.a * x;
  // kernel basis
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(data.a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-8 * sv(0)) ++rank;
  Eigen::MatrixXd kernel =
      svd.matrixV().rightCols(svd.matrixV().cols() - rank);
  REQUIRE(kernel.cols() > 0);
  std::mt19937_64 rng(123);
  std::normal_distribution<double> gauss;
  double w0 = dec.w;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(kernel.cols());
    for (int i = 0; i < dir.size(); ++i) dir(i) = gauss(rng);
    Eigen::VectorXd pert = kernel * dir;
    pert *= (0.001 + 0.1 * trial / 100.0) / pert.norm();
    Eigen::VectorXd xp = x + pert;
    // still satisfies the projected constraints
    CHECK((data.a * xp - ax).cwiseAbs().maxCoeff() < 1e-8);
    double w = std::abs(1.0 + xp(0));
    for (int i = 1; i < xp.size(); ++i) w += std::abs(xp(i));
    CHECK(w >= w0 - 1e-7);
  }
}

TEST_CASE("mixture applied to random states matches the ideal to first order") {
  // superoperator oracle: error of sum c_i B_i vs G0 is O(||L_b||^2)
  for (double eps : {2e-3, 4e-3, 8e-3}) {
    auto ctx = dissipative_rzz_context(1.1, eps);
    auto basis = build_basis(ctx, {QPType::gate_pauli(), QPType::pauli_idle()},
                             all_paulis(2));
    auto dec = solve_qp(basis);
    CHECK(dec.residual_frobenius < 3.0 * eps * eps);
  }
}

TEST_CASE("qp norm lower bound chain") {
  CHECK(qp_norm_lower_bound(0.0) == doctest::Approx(1.0));
  double inf = 5e-3;
  double wmin = qp_norm_lower_bound(inf);
  CHECK(wmin == doctest::Approx(1.0100503).epsilon(1e-6));
  CHECK(wmin >= std::exp(2 * inf));
  CHECK(std::exp(2 * inf) >= 1 + 2 * inf);
  CHECK_THROWS(qp_norm_lower_bound(1.0));
}

TEST_CASE("pauli channel inverse") {
  auto ch = PauliChannel::from_rates(
      3, {{PauliString::from_string("XII"), 0.02},
          {PauliString::from_string("IZZ"), 0.01}});
  auto inv = pauli_channel_inverse(ch);
  REQUIRE(inv.paulis.size() >= 2);
  CHECK(inv.paulis[0].is_identity());
  // composing channel and inverse gives identity on every eigenvalue
  for (const auto& p : local_paulis(3, 3)) {
    double lam = ch.eigenvalue(p);
    double inv_lam = 0;
    for (std::size_t i = 0; i < inv.paulis.size(); ++i)
      inv_lam += inv.c[i] * (commutes(p, inv.paulis[i]) ? -1.0 : 1.0);
    CHECK(lam * inv_lam == doctest::Approx(1.0).epsilon(1e-10));
  }
  double csum = 0;
  for (auto c : inv.c) csum += c;
  CHECK(csum == doctest::Approx(1.0).epsilon(1e-12));
}
