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
#include <set>
#include <vector>

#include "qpem/circuit.hpp"
#include "qpem/simulator.hpp"

namespace qpem {

/// Nested per-layer qubit sets. cone[l] is the set entering layer l;
/// cone[depth] contains the observable support; cone[l] >= cone[l+1].
struct ExpandingLightcone {
  std::vector<std::set<std::size_t>> cone;

  std::size_t depth() const { return cone.empty() ? 0 : cone.size() - 1; }
  /// Noise attached after/during layer l is filtered by cone[l + 1].
  bool intersects_after(std::size_t layer,
                        const std::vector<std::size_t>& support) const {
    for (auto q : support)
      if (cone.at(layer + 1).count(q)) return true;
    return false;
  }
  bool nested_in(const ExpandingLightcone& outer) const;
};

/// Backward trace over two-qubit gate supports from the observable.
ExpandingLightcone connectivity_lightcone(const LayeredCircuit& c,
                                          const PauliString& obs);

enum class Extractor { BruteForce, Tracing };

struct LightconeOptions {
  double eps = 0.0;
  std::size_t maxsupp = 8;
  Extractor extractor = Extractor::BruteForce;
};

/// Commutativity lightcone: gates on the boundary that propagate forward to
/// something trivial (or commuting with the observable) are left outside.
ExpandingLightcone commutativity_lightcone(const LayeredCircuit& c,
                                           const PauliString& obs,
                                           const LightconeOptions& opts = {});

/// Forward propagation of the gate unitary with the two stopping tests.
bool extractable_bruteforce(const LayeredCircuit& c, std::size_t layer,
                            const TwoQubitGate& gate,
                            const ExpandingLightcone& lc,
                            const PauliString& obs, double eps,
                            std::size_t maxsupp);

/// Superoperator variant with out-of-cone legs traced out per layer.
bool extractable_tracing(const LayeredCircuit& c, std::size_t layer,
                         const TwoQubitGate& gate,
                         const ExpandingLightcone& lc, double eps);

/// Number of two-qubit gates whose noise the cone keeps mitigated.
std::size_t active_volume(const LayeredCircuit& c,
                          const ExpandingLightcone& lc);

/// One noise placement for the analytic bias bound.
struct NoisePlacement {
  std::size_t layer;                  // channel acts after this layer
  std::vector<std::size_t> support;
  double total_error;                 // sum of non-identity probabilities
};

/// Theorem-style bound on |<O>_noisy - <O>_ideal| for noise placed outside
/// the cone: 2 sum_p p * sum_g eta_g with operator-norm eta.
double bias_bound(const LayeredCircuit& c, const ExpandingLightcone& lc,
                  const PauliString& obs,
                  const std::vector<NoisePlacement>& placements,
                  std::size_t maxsupp = 8);

struct BiasEstimate {
  double value = 0;   // B-hat
  double error = 0;   // E-hat, >= 0
  enum class Method { AnalyticBound, Heuristic, TrivialBound } method =
      Method::Heuristic;
  double upper() const {
    return std::max(std::abs(value + error), std::abs(value - error));
  }
};

/// Importance-style bias estimate from QP sample data. `values` are the
/// unweighted measured expectation values per sampled circuit;
/// `in_cand`/`in_diff` flag circuits with an insertion inside the candidate
/// cone / inside the difference volume.
BiasEstimate heuristic_bias(const std::vector<double>& values,
                            const std::vector<bool>& in_cand,
                            const std::vector<bool>& in_diff, double o_noisy,
                            double sigma_noisy, double o_exact,
                            double sigma_exact, double prob_diff);

struct LightconeCandidate {
  double eps = 0;
  ExpandingLightcone cone;
  std::size_t volume = 0;  // active volume
};

struct LightconeFamily {
  std::vector<LightconeCandidate> candidates;  // eps increasing, nested
};

/// Default grid: {0} plus log-spaced points, deduplicated when two candidates
/// differ by fewer than two gates.
std::vector<double> default_eps_grid();
LightconeFamily build_lightcone_family(const LayeredCircuit& c,
                                       const PauliString& obs,
                                       const std::vector<double>& eps_grid,
                                       const LightconeOptions& base = {});

/// Per-candidate data for the selection problem.
struct CandidateScore {
  double variance = 0;  // V-hat of the candidate's estimator
  double bias_sq = 0;   // squared upper bias estimate
};

/// Choose one candidate per observable: minimize V/N_b + B^2 subject to
/// B^2 < tau^2 V, then a stochastic local search over the joint assignment.
std::vector<std::size_t> nested_select(
    const std::vector<std::vector<CandidateScore>>& per_observable, double tau,
    std::size_t n_batches, std::uint64_t seed, std::size_t search_iters = 200);

}  // namespace qpem
