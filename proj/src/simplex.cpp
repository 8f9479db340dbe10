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

#include "qpem/simplex.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace qpem {

namespace {

// constraint tableau plus a reduced-cost row, both updated by pivots
struct Tableau {
  Eigen::MatrixXd t;       // m x (n + 1), last column = rhs
  Eigen::RowVectorXd z;    // 1 x (n + 1), reduced costs; z(n) = -objective
  std::vector<int> basis;  // basis[i] = basic variable of row i
  double tol = 1e-9;

  int rows() const { return static_cast<int>(t.rows()); }
  int cols() const { return static_cast<int>(t.cols()) - 1; }

  void pivot(int r, int c) {
    t.row(r) /= t(r, c);
    for (int i = 0; i < rows(); ++i) {
      if (i == r) continue;
      double f = t(i, c);
      if (f != 0.0) t.row(i) -= f * t.row(r);
    }
    double zf = z(c);
    if (zf != 0.0) z -= zf * t.row(r);
    basis[r] = c;
  }

  void load_objective(const Eigen::VectorXd& c) {
    int n = cols(), m = rows();
    z.setZero(n + 1);
    for (int j = 0; j < n && j < c.size(); ++j) z(j) = c(j);
    for (int i = 0; i < m; ++i) {
      int bv = basis[i];
      if (bv >= 0 && bv < c.size() && c(bv) != 0.0) z -= c(bv) * t.row(i);
    }
  }

  LpStatus solve() {
    long iter = 0;
    const long bland_after = 20L * (rows() + cols());
    const long max_iter = 400L * (rows() + cols()) + 200000L;
    while (true) {
      bool bland = iter > bland_after;
      int enter = -1;
      if (bland) {
        for (int j = 0; j < cols(); ++j)
          if (z(j) < -tol) {
            enter = j;
            break;
          }
      } else {
        double best = -tol;
        for (int j = 0; j < cols(); ++j)
          if (z(j) < best) {
            best = z(j);
            enter = j;
          }
      }
      if (enter < 0) return LpStatus::Optimal;
      int leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < rows(); ++i) {
        if (t(i, enter) > tol) {
          double ratio = t(i, cols()) / t(i, enter);
          if (ratio < best_ratio - 1e-12 ||
              (ratio < best_ratio + 1e-12 &&
               (leave < 0 || basis[i] < basis[leave]))) {
            best_ratio = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) return LpStatus::Unbounded;
      pivot(leave, enter);
      if (++iter > max_iter) return LpStatus::Infeasible;  // stalled
    }
  }
};

}  // namespace

LpResult solve_lp(const Eigen::MatrixXd& a_in, const Eigen::VectorXd& b_in,
                  const Eigen::VectorXd& c, double tol) {
  int m = static_cast<int>(a_in.rows());
  int n = static_cast<int>(a_in.cols());
  Eigen::MatrixXd a = a_in;
  Eigen::VectorXd b = b_in;
  for (int i = 0; i < m; ++i)
    if (b(i) < 0) {
      a.row(i) = -a.row(i);
      b(i) = -b(i);
    }
  // phase 1 with artificial variables
  Tableau tab;
  tab.tol = tol;
  tab.t.resize(m, n + m + 1);
  tab.t.leftCols(n) = a;
  tab.t.middleCols(n, m) = Eigen::MatrixXd::Identity(m, m);
  tab.t.col(n + m) = b;
  tab.basis.resize(m);
  for (int i = 0; i < m; ++i) tab.basis[i] = n + i;
  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n + m);
  phase1.tail(m).setOnes();
  tab.load_objective(phase1);
  if (tab.solve() != LpStatus::Optimal) return {LpStatus::Infeasible, {}, 0.0};
  if (-tab.z(n + m) > 1e-7) return {LpStatus::Infeasible, {}, 0.0};
  // drive artificials out of the basis where a real pivot exists
  for (int i = 0; i < m; ++i) {
    if (tab.basis[i] < n) continue;
    for (int j = 0; j < n; ++j)
      if (std::abs(tab.t(i, j)) > tol) {
        tab.pivot(i, j);
        break;
      }
  }
  // phase 2 on the original variables; rows still carrying an artificial are
  // redundant (zero rows) and dropped
  std::vector<int> keep;
  for (int i = 0; i < m; ++i)
    if (tab.basis[i] < n) keep.push_back(i);
  Tableau tab2;
  tab2.tol = tol;
  tab2.t.resize(keep.size(), n + 1);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    tab2.t.row(i).head(n) = tab.t.row(keep[i]).head(n);
    tab2.t(i, n) = tab.t(keep[i], n + m);
    tab2.basis.push_back(tab.basis[keep[i]]);
  }
  tab2.load_objective(c);
  LpStatus s2 = tab2.solve();
  if (s2 != LpStatus::Optimal) return {s2, {}, 0.0};
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < tab2.basis.size(); ++i)
    if (tab2.basis[i] >= 0 && tab2.basis[i] < n)
      x(tab2.basis[i]) = tab2.t(i, n);
  return {LpStatus::Optimal, x, c.dot(x)};
}

}  // namespace qpem
