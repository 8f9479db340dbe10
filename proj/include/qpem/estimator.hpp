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

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>

#include "qpem/lightcone.hpp"
#include "qpem/qp.hpp"
#include "qpem/simulator.hpp"

namespace qpem {

// ---------------------------------------------------------------------------
// sampling-cost optimization
// ---------------------------------------------------------------------------

/// Controller and shot timescales of the virtual device.
struct DeviceTimes {
  double t_c = 0.16;    // seconds per loaded circuit
  double t_s = 300e-6;  // seconds per shot
};

struct SamplingPlan {
  std::size_t n_c = 1;
  std::size_t n_s = 1;
  double eps2t = 0;  // (sqrt(Vc tc) + sqrt(Vs ts))^2
  double cost = 0;   // n_c (t_c + n_s t_s)
  double eps = 0;    // predicted standard error
};

/// Optimal (N_c, N_s) for a target precision.
SamplingPlan optimal_plan_for_eps(double v_c, double v_s, DeviceTimes t,
                                  double eps);
/// Optimal (N_c, N_s) within a time budget.
SamplingPlan optimal_plan_for_budget(double v_c, double v_s, DeviceTimes t,
                                     double budget);

struct SampleBounds {
  double hoeffding_nc = 0;      // 2 log(2/delta) W^2 / eps^2
  double hoeffding_var_nc = 0;  // variance-aware bound
  double depol_vc = 0;          // W
  double depol_vs = 0;          // W^2 + W
};
SampleBounds sample_bounds(double w, double delta, double eps, double v);

// time-estimation models
struct TimeModel {
  double v_c = 0, v_s = 0, w = 1;
  SamplingPlan plan;
};
TimeModel semi_empirical_model(double w, double p_noisy, DeviceTimes t,
                               double eps);
/// W = exp(2 IF V_A); V_eff = r V_A.
TimeModel phenomenological_model(double infidelity, double active_volume,
                                 double r, double p_ideal, DeviceTimes t,
                                 double eps);
/// Composite observable sum alpha_P P without covariances.
TimeModel phenomenological_composite(const std::vector<double>& alpha,
                                     const std::vector<double>& w_p,
                                     const std::vector<double>& p_target,
                                     double r, DeviceTimes t, double eps);

/// Optimal per-basis precision for cost weights chi: eps_i^2 proportional to
/// sqrt(chi_i).
std::vector<double> allocate_bases_eps(const std::vector<double>& chi,
                                       double total_eps);
std::vector<double> allocate_bases_budget(const std::vector<double>& chi,
                                          double budget);
double basis_chi(double v_c, double v_s, DeviceTimes t);

enum class AggregationMode { PrecisionWeighting, ShotsWeighting };
/// Combine estimates of the same quantity: precision mode uses lambda
/// proportional to C^+ 1 over a (PSD) covariance; shots mode weights by
/// sample counts.
struct Aggregate {
  double value = 0;
  double variance = 0;
  std::vector<double> lambda;
};
Aggregate aggregate_observables(const std::vector<double>& values,
                                const Eigen::MatrixXd& covariance,
                                AggregationMode mode,
                                const std::vector<double>& shots = {});

/// Balanced-tree per-level variance estimators; the identity
/// V = V1/N1 + V2/(N1 N2) + V3/(N1 N2 N3) holds by construction.
struct MultistepVariance {
  std::vector<double> level;  // V1, V2, V3...
  double total = 0;           // variance of the grand mean
};
MultistepVariance multistep_variance(
    const std::vector<std::vector<std::vector<double>>>& tree);

// ---------------------------------------------------------------------------
// QP circuit sampling
// ---------------------------------------------------------------------------

enum class SiteKind { Prep, AfterLayer, DuringGate, Meas };

/// One local decomposition attached to a circuit position. Insertion sites
/// carry signed Pauli coefficients; during-gate sites carry a multi-type
/// basis decomposition.
struct MitigationSite {
  SiteKind kind = SiteKind::AfterLayer;
  std::size_t layer_index = 0;
  std::size_t gate_index = 0;
  std::vector<std::size_t> support;
  std::vector<double> c;
  double w = 1.0;
  std::vector<PauliString> pauli;        // insertion sites
  std::shared_ptr<QPBasis> basis;        // during sites
  std::vector<std::size_t> gate_indices; // gates the during cluster spans
};

struct MitigationPlan {
  LayeredCircuit base;
  std::vector<MitigationSite> sites;
  double total_w = 1.0;  // product of site norms
};

struct MitigationOptions {
  QPSolveOptions qp;
  bool nonlinear = true;      // exact local inverses by default
  std::size_t crosstalk_support = 4;
};

/// Decompose every characterized channel in the circuit into local inverses.
MitigationPlan build_mitigation_plan(const LayeredCircuit& circuit,
                                     const NoiseModel& model,
                                     const MitigationOptions& opts = {});

struct SampledCircuit {
  LayeredCircuit circuit;
  std::vector<std::size_t> draws;  // element per site
  double sign = 1.0;               // over all sites
};

/// Draw realizations with the canonical probabilities |c| / W.
std::vector<SampledCircuit> sample_qp(const MitigationPlan& plan,
                                      std::size_t n_c, std::uint64_t seed);

/// Weight restricted to the sites a cone keeps mitigated; the cone may be
/// null for full mitigation.
double circuit_weight(const MitigationPlan& plan, const SampledCircuit& s,
                      const ExpandingLightcone* cone);
/// True when some in-cone (resp. difference-volume) site drew a non-trivial
/// element.
bool has_insertion(const MitigationPlan& plan, const SampledCircuit& s,
                   const ExpandingLightcone* cone);

/// Expected value of the partially mitigated estimator, computed exactly:
/// in-cone sites are replaced by the mixture sum c_i B_i, out-of-cone sites
/// by the absolute mixture sum |c_i| B_i / W.
double mitigated_expectation_exact(const MitigationPlan& plan,
                                   const NoiseModel& device,
                                   const PauliString& obs,
                                   const ExpandingLightcone* cone);

// ---------------------------------------------------------------------------
// estimation
// ---------------------------------------------------------------------------

struct EstimatorInput {
  std::vector<double> f;     // per-circuit weight f_C
  std::vector<double> mean;  // per-circuit shot mean of o
  std::vector<double> svar;  // per-circuit unbiased shot variance
  std::size_t n_s = 1;
};

struct VarianceReport {
  double estimate = 0;
  double s2_tot = 0;
  double s2_shot = 0;
  double s2_circ = 0;  // clipped at zero
  bool clipped = false;
  double stderr_est = 0;  // sqrt(max(S2_tot, S2_s / N_s) / N_c ... )
};
VarianceReport qp_estimate(const EstimatorInput& in);

struct BatchRecord {
  double value = 0;
  double variance = 0;
  std::size_t n_c = 0, n_s = 0;
};

struct AdaptiveOptions {
  std::size_t pilot_circuits = 32;
  std::size_t pilot_shots = 128;
  DeviceTimes times;
  std::uint64_t seed = 1;
  bool exact_values = false;  // skip shot sampling, use exact per-circuit EVs
};

struct AdaptiveResult {
  double value = 0;
  double stderr_est = 0;
  SamplingPlan plan;
  std::vector<BatchRecord> batches;
  double qpu_time = 0;
};

/// Pilot batch, variance estimation, optimally planned main batch; results
/// combined by inverse-variance weighting.
AdaptiveResult adaptive_run(const MitigationPlan& plan,
                            const NoiseModel& device, const PauliString& obs,
                            const ExpandingLightcone* cone, double eps,
                            const AdaptiveOptions& opts);

// ---------------------------------------------------------------------------
// ZNE baseline
// ---------------------------------------------------------------------------

enum class ZneFit { Exponential, Linear };

/// Gate folding: each fractional layer L becomes L (X L X L)^((factor-1)/2)
/// with X on one qubit of each gate, amplifying during-noise by the factor.
LayeredCircuit fold_circuit(const LayeredCircuit& c, std::size_t factor);

struct ZneResult {
  double value = 0;
  std::vector<double> measured;  // per factor
};
ZneResult zne_baseline(const LayeredCircuit& c, const NoiseModel& device,
                       const PauliString& obs,
                       const std::vector<std::size_t>& factors, ZneFit fit);

}  // namespace qpem
