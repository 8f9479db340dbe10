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

#include "qpem/qp.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "qpem/simplex.hpp"
#include "qpem/simulator.hpp"

namespace qpem {

namespace {

const Mat& ref_ptm(const QPGateContext& ctx, const GateRef& r, bool noisy) {
  switch (r.kind) {
    case GateRef::Kind::Gate: return noisy ? ctx.noisy_gate : ctx.ideal_gate;
    case GateRef::Kind::Idle: return noisy ? ctx.noisy_idle : ctx.ideal_idle;
    case GateRef::Kind::Sub:
      return noisy ? ctx.noisy_sub.at(r.index) : ctx.ideal_sub.at(r.index);
    case GateRef::Kind::Extra:
      return noisy ? ctx.noisy_extra.at(r.index) : ctx.ideal_extra.at(r.index);
    case GateRef::Kind::None: break;
  }
  throw std::logic_error("ref_ptm: empty gate reference");
}

Mat element_ptm(const QPGateContext& ctx, const QPBasisElement& e,
                bool noisy) {
  if (e.type.trivial) return noisy ? ctx.noisy_gate : ctx.ideal_gate;
  std::size_t nd = std::size_t(1) << (2 * ctx.k);
  Mat m = Mat::Identity(nd, nd);
  if (e.type.before.kind != GateRef::Kind::None)
    m = ref_ptm(ctx, e.type.before, noisy) * m;
  Vec d = pauli_conj_diag(ctx.k, e.pauli);
  m = d.asDiagonal() * m;
  if (e.type.after.kind != GateRef::Kind::None)
    m = ref_ptm(ctx, e.type.after, noisy) * m;
  return m;
}

std::string gate_ref_label(const GateRef& r) {
  switch (r.kind) {
    case GateRef::Kind::None: return "";
    case GateRef::Kind::Gate: return "G";
    case GateRef::Kind::Idle: return "idle";
    case GateRef::Kind::Sub: return "G" + std::to_string(r.index + 1);
    case GateRef::Kind::Extra: return "E" + std::to_string(r.index + 1);
  }
  return "";
}

std::uint64_t ptm_hash(const Mat& m) {
  std::uint64_t h = 1469598103934665603ULL;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) {
      auto q = static_cast<std::int64_t>(std::llround(m(i, j) * 1e7));
      h ^= static_cast<std::uint64_t>(q) + 0x9e3779b97f4a7c15ULL + (h << 6) +
           (h >> 2);
    }
  return h;
}

}  // namespace

Mat QPBasis::ideal_ptm(std::size_t i) const {
  return element_ptm(ctx, elements.at(i), false);
}

Mat QPBasis::noisy_ptm(std::size_t i) const {
  return element_ptm(ctx, elements.at(i), true);
}

QPBasis build_basis(const QPGateContext& ctx, const std::vector<QPType>& types,
                    const std::vector<PauliString>& mitigation_set) {
  QPBasis basis;
  basis.ctx = ctx;
  basis.mitigation_set = mitigation_set;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> seen;
  std::vector<Mat> ideal_kept;
  auto try_add = [&](QPBasisElement e) {
    Mat m = element_ptm(ctx, e, false);
    auto h = ptm_hash(m);
    for (auto idx : seen[h])
      if ((ideal_kept[idx] - m).cwiseAbs().maxCoeff() < 1e-9) return;
    seen[h].push_back(basis.elements.size());
    ideal_kept.push_back(std::move(m));
    basis.elements.push_back(std::move(e));
  };
  // element 0: the bare noisy gate
  QPBasisElement bare;
  bare.type = QPType::bare();
  bare.pauli = PauliString(ctx.k);
  bare.label = "G";
  try_add(std::move(bare));
  for (const auto& t : types) {
    if (t.trivial) continue;
    for (const auto& p : mitigation_set) {
      QPBasisElement e;
      e.type = t;
      e.pauli = p;
      std::ostringstream label;
      auto pre = gate_ref_label(t.before), post = gate_ref_label(t.after);
      if (!post.empty()) label << post << ".";
      label << p.str();
      if (!pre.empty()) label << "." << pre;
      e.label = label.str();
      try_add(std::move(e));
    }
  }
  return basis;
}

std::vector<ChoiRow> local_choi_rows(std::size_t k, std::size_t max_support) {
  if (max_support == 0 || max_support > k) max_support = k;
  std::vector<ChoiRow> rows;
  std::set<std::pair<std::size_t, std::size_t>> used;
  std::size_t nd = std::size_t(1) << (2 * k);
  rows.push_back({PauliString(k), PauliString(k), false});  // (I, I) first
  used.insert({0, 0});
  for (std::size_t i = 0; i < nd; ++i) {
    PauliString pi = pauli_from_index(k, i);
    for (std::size_t j = i; j < nd; ++j) {  // unordered pairs
      PauliString pj = pauli_from_index(k, j);
      std::set<std::size_t> sup;
      for (auto q : pi.support()) sup.insert(q);
      for (auto q : pj.support()) sup.insert(q);
      if (sup.size() > max_support) continue;
      if (used.count({i, j})) continue;
      used.insert({i, j});
      rows.push_back({pi, pj, false});
      if (i != j) rows.push_back({pi, pj, true});
    }
  }
  return rows;
}

namespace {

// Row functional of the pairing <P_i . P_j, S> on a k-qubit PTM S:
//   value = (1/4^k) sum_a conj(i^{t(a)}) S(a, b(a)),
// where P_b = P_a P_i P_j (phase-free) and t counts quarter turns of
// P_a P_i P_b P_j. Precomputed as (b(a), real weight, imag weight).
struct RowPlan {
  std::vector<std::size_t> b;
  std::vector<double> w;  // the requested part (real or imag)
};

RowPlan plan_row(std::size_t k, const ChoiRow& row) {
  std::size_t nd = std::size_t(1) << (2 * k);
  RowPlan plan;
  plan.b.resize(nd);
  plan.w.resize(nd);
  for (std::size_t a = 0; a < nd; ++a) {
    PauliString pa = pauli_from_index(k, a);
    // b = a * i * j (phase-free)
    auto mij = multiply(row.left, row.right);
    auto mb = multiply(pa, mij.pauli);
    std::size_t b = pauli_index(mb.pauli);
    // total phase of P_a P_i P_b P_j
    auto s1 = multiply(pa, row.left);
    auto s2 = multiply(s1.pauli, mb.pauli);
    auto s3 = multiply(s2.pauli, row.right);
    if (!s3.pauli.is_identity())
      throw std::logic_error("choi row: product must be identity");
    unsigned t = (s1.quarter_turns + s2.quarter_turns + s3.quarter_turns) % 4;
    // conj(i^t): real = {1,0,-1,0}, imag = {0,-1,0,1}
    static const double re[4] = {1, 0, -1, 0};
    static const double im[4] = {0, -1, 0, 1};
    plan.b[a] = b;
    plan.w[a] = row.imag ? im[t] : re[t];
  }
  double norm = 1.0 / static_cast<double>(nd);
  for (auto& w : plan.w) w *= norm;
  return plan;
}

double apply_row(const RowPlan& plan, const Mat& s) {
  double v = 0;
  for (std::size_t a = 0; a < plan.b.size(); ++a)
    if (plan.w[a] != 0.0) v += plan.w[a] * s(a, plan.b[a]);
  return v;
}

// For columns of the form L . diag(sign_P) . R the row functional reduces to
// a dot product with the sign vector: value = sum_c sign_P(c) K(c), with
// K(c) = sum_a w_a L(a, c) R(c, b(a)).
Vec row_kernel(const RowPlan& plan, const Mat& l, const Mat& r) {
  std::size_t nd = plan.b.size();
  Vec k = Vec::Zero(nd);
  for (std::size_t c = 0; c < nd; ++c) {
    double acc = 0;
    for (std::size_t a = 0; a < nd; ++a)
      if (plan.w[a] != 0.0) acc += plan.w[a] * l(a, c) * r(c, plan.b[a]);
    k(c) = acc;
  }
  return k;
}

Mat ptm_inverse(const Mat& m) {
  return m.partialPivLu().inverse();
}

LeastSquaresData assemble(const QPBasis& basis,
                          const std::vector<ChoiRow>& rows, const Mat* l_before,
                          bool nonlinear) {
  const auto& ctx = basis.ctx;
  std::size_t k = ctx.k;
  std::size_t nd = std::size_t(1) << (2 * k);
  Mat g0_inv = ptm_inverse(ctx.ideal_gate);
  Mat g_inv = nonlinear ? ptm_inverse(ctx.noisy_gate) : Mat();
  LeastSquaresData out;
  out.rows = rows;
  out.a.resize(rows.size(), basis.elements.size());
  out.y.resize(rows.size());
  // group elements by type to share (L, R) kernels
  std::vector<int> type_of(basis.elements.size(), -1);
  struct TypeLR {
    Mat l, r;
  };
  std::vector<TypeLR> lrs;
  std::vector<std::vector<std::size_t>> members;
  auto type_key = [&](const QPType& t) {
    return std::to_string(static_cast<int>(t.before.kind)) + "," +
           std::to_string(t.before.index) + ";" +
           std::to_string(static_cast<int>(t.after.kind)) + "," +
           std::to_string(t.after.index);
  };
  std::unordered_map<std::string, std::size_t> type_ids;
  for (std::size_t i = 0; i < basis.elements.size(); ++i) {
    const auto& e = basis.elements[i];
    if (e.type.trivial) continue;
    auto key = type_key(e.type);
    auto it = type_ids.find(key);
    std::size_t tid;
    if (it == type_ids.end()) {
      tid = lrs.size();
      type_ids[key] = tid;
      TypeLR lr;
      Mat inv = nonlinear ? g_inv : g0_inv;
      lr.l = inv;
      if (e.type.after.kind != GateRef::Kind::None)
        lr.l = inv * ref_ptm(ctx, e.type.after, nonlinear);
      lr.r = Mat::Identity(nd, nd);
      if (e.type.before.kind != GateRef::Kind::None)
        lr.r = ref_ptm(ctx, e.type.before, nonlinear);
      lrs.push_back(std::move(lr));
      members.emplace_back();
    } else {
      tid = it->second;
    }
    type_of[i] = static_cast<int>(tid);
    members[tid].push_back(i);
  }
  // sign vectors per element
  std::vector<Vec> signs(basis.elements.size());
  for (std::size_t i = 0; i < basis.elements.size(); ++i)
    if (!basis.elements[i].type.trivial)
      signs[i] = pauli_conj_diag(k, basis.elements[i].pauli);
  // target: first order uses -L_b; nonlinear uses G^-1 G0 - I
  Mat target;
  if (nonlinear)
    target = g_inv * ctx.ideal_gate - Mat::Identity(nd, nd);
  else
    target = -*l_before;
  // trivial element's column: x_0 multiplies B'_00 = I in both modes
  Mat identity = Mat::Identity(nd, nd);
  for (std::size_t ri = 0; ri < rows.size(); ++ri) {
    auto plan = plan_row(k, rows[ri]);
    double weight_norm = 0;
    for (auto w : plan.w) weight_norm += std::abs(w);
    if (weight_norm == 0.0) {
      out.a.row(ri).setZero();
      out.y(ri) = 0.0;
      continue;
    }
    out.y(ri) = apply_row(plan, target);
    for (std::size_t i = 0; i < basis.elements.size(); ++i)
      if (basis.elements[i].type.trivial)
        out.a(ri, i) = apply_row(plan, identity);
    for (std::size_t tid = 0; tid < lrs.size(); ++tid) {
      Vec kern = row_kernel(plan, lrs[tid].l, lrs[tid].r);
      for (auto i : members[tid]) out.a(ri, i) = kern.dot(signs[i]);
    }
  }
  return out;
}

}  // namespace

LeastSquaresData build_least_squares(const Mat& l_before, const QPBasis& basis,
                                     const std::vector<ChoiRow>& rows) {
  return assemble(basis, rows, &l_before, false);
}

LeastSquaresData build_least_squares_nonlinear(
    const QPBasis& basis, const std::vector<ChoiRow>& rows) {
  return assemble(basis, rows, nullptr, true);
}

QPDecomposition solve_first_order(const LeastSquaresData& data,
                                  const QPBasis& basis,
                                  const QPSolveOptions& opts) {
  const Eigen::MatrixXd& a = data.a;
  const Eigen::VectorXd& y = data.y;
  std::size_t m = a.cols();
  QPDecomposition out;
  out.c.assign(m, 0.0);
  out.c[0] = 1.0;

  double amax = a.cwiseAbs().maxCoeff();
  if (amax < 1e-14) {
    // degenerate problem; keep the bare gate
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    double cutoff = opts.svd_threshold * sv(0);
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > cutoff) ++rank;
    if (rank == 0) {
      // nothing mitigatable
    } else {
      Eigen::MatrixXd u_r = svd.matrixU().leftCols(rank);
      Eigen::MatrixXd v_r = svd.matrixV().leftCols(rank);
      Eigen::VectorXd s_r = sv.head(rank);
      // x^(-1) = V S^-1 U^T y ; y_par = A x^(-1)
      Eigen::VectorXd x_pinv =
          v_r * (s_r.cwiseInverse().asDiagonal() * (u_r.transpose() * y));
      // reduced equality constraints: S V^T x = S V^T x_pinv
      Eigen::MatrixXd constraint =
          s_r.asDiagonal() * v_r.transpose();  // rank x m
      Eigen::VectorXd rhs = constraint * x_pinv;
      // scale rows to O(1)
      for (int i = 0; i < constraint.rows(); ++i) {
        double norm = constraint.row(i).norm();
        if (norm > 0) {
          constraint.row(i) /= norm;
          rhs(i) /= norm;
        }
      }
      // LP over split variables: min x0+ - x0- + sum_{i>0}(xi+ + xi-)
      Eigen::MatrixXd lp_a(rank, 2 * m);
      lp_a.leftCols(m) = constraint;
      lp_a.rightCols(m) = -constraint;
      Eigen::VectorXd cost(2 * m);
      cost.setOnes();
      cost(0) = 1.0;
      cost(m) = -1.0;
      auto lp = solve_lp(lp_a, rhs, cost);
      if (lp.status == LpStatus::Unbounded) {
        // fall back to the coefficient-form basis pursuit
        Eigen::VectorXd b_par = rhs + constraint.col(0);
        Eigen::VectorXd cost2 = Eigen::VectorXd::Ones(2 * m);
        auto lp2 = solve_lp(lp_a, b_par, cost2);
        if (lp2.status != LpStatus::Optimal)
          throw std::runtime_error("qp solve: linear program failed");
        for (std::size_t i = 0; i < m; ++i)
          out.c[i] = lp2.x(i) - lp2.x(m + i);
      } else if (lp.status == LpStatus::Optimal) {
        for (std::size_t i = 0; i < m; ++i)
          out.c[i] = lp.x(i) - lp.x(m + i);
        out.c[0] += 1.0;
      } else {
        throw std::runtime_error("qp solve: linear program infeasible");
      }
    }
  }

  out.w = 0;
  out.coeff_sum = 0;
  for (double ci : out.c) {
    out.w += std::abs(ci);
    out.coeff_sum += ci;
  }
  // metrics against the noisy elements
  std::size_t nd = std::size_t(1) << (2 * basis.ctx.k);
  Mat mix = Mat::Zero(nd, nd);
  for (std::size_t i = 0; i < m; ++i)
    if (out.c[i] != 0.0) mix += out.c[i] * basis.noisy_ptm(i);
  out.residual_frobenius = ptm_norm(mix - basis.ctx.ideal_gate);
  out.frobenius_noise = ptm_norm(basis.ctx.noisy_gate - basis.ctx.ideal_gate);
  out.infidelity = gate_infidelity(basis.ctx.noisy_gate, basis.ctx.ideal_gate);
  out.residual_infidelity = gate_infidelity(mix, basis.ctx.ideal_gate);
  out.mitigated_infidelity = out.infidelity - out.residual_infidelity;
  out.blowup_rate =
      out.infidelity > 0 ? (out.w - 1.0) / out.infidelity : 0.0;
  return out;
}

QPDecomposition solve_qp(const QPBasis& basis, const QPSolveOptions& opts,
                         std::size_t choi_support) {
  auto rows = local_choi_rows(basis.ctx.k, choi_support);
  LeastSquaresData data;
  if (opts.nonlinear) {
    data = build_least_squares_nonlinear(basis, rows);
  } else {
    Mat l_before = logm(ptm_inverse(basis.ctx.ideal_gate) * basis.ctx.noisy_gate);
    data = build_least_squares(l_before, basis, rows);
  }
  return solve_first_order(data, basis, opts);
}

double qp_norm_lower_bound(double infidelity) {
  if (infidelity < 0 || infidelity >= 1)
    throw std::invalid_argument("infidelity must lie in [0, 1)");
  return (1.0 + infidelity) / (1.0 - infidelity);
}

PauliInverse pauli_channel_inverse(const PauliChannel& ch) {
  auto sup = ch.support();
  std::size_t k = sup.size();
  std::size_t nd = std::size_t(1) << (2 * k);
  PauliInverse out;
  if (ch.is_trivial()) {
    out.paulis = {PauliString(ch.num_qubits())};
    out.c = {1.0};
    out.w = 1.0;
    return out;
  }
  std::vector<double> inv_lambda(nd);
  std::vector<PauliString> locals(nd);
  for (std::size_t a = 0; a < nd; ++a) {
    locals[a] = pauli_from_index(k, a);
    double lam = ch.eigenvalue(PauliString::embed(ch.num_qubits(), sup, locals[a]));
    if (lam <= 0)
      throw std::runtime_error("pauli_channel_inverse: eigenvalue <= 0");
    inv_lambda[a] = 1.0 / lam;
  }
  out.w = 0;
  for (std::size_t b = 0; b < nd; ++b) {
    double cb = 0;
    for (std::size_t a = 0; a < nd; ++a)
      cb += inv_lambda[a] * (commutes(locals[a], locals[b]) ? -1.0 : 1.0);
    cb /= static_cast<double>(nd);
    if (std::abs(cb) < 1e-16 && b != 0) continue;
    out.paulis.push_back(PauliString::embed(ch.num_qubits(), sup, locals[b]));
    out.c.push_back(cb);
    out.w += std::abs(cb);
  }
  return out;
}

}  // namespace qpem
