#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mixsel/dataset.hpp"
#include "mixsel/kernels.hpp"

namespace mixsel {

using kernels::EmptyComponentPolicy;

struct EmConfig {
  int max_iterations = 500;
  double rel_tolerance = 1e-6;
  int n_starts = 20;
  std::uint64_t seed = 0;
  // Absent: plain EM with omega fixed. Present: penalized EM with penalty c per parameter.
  std::optional<double> penalty_c;
  // Penalized mode: plain EM at the initial omega, until convergence or this many
  // iterations, before omega is freed.
  int warmup_iterations = 500;
  // When set, the winning start keeps iterating until this tighter tolerance
  // (at most polish_iterations more iterations).
  std::optional<double> polish_tolerance;
  int polish_iterations = 5000;
  // Penalized mode: after the starts, try flipping each omega_j of the winner and
  // re-fitting; keep flips that raise the objective. 0 disables it.
  int flip_rounds = 10;
  EmptyComponentPolicy empty_component_policy = EmptyComponentPolicy::Restart;
  // 0 = OpenMP default. Results do not depend on this value.
  int threads = 0;
};

struct EmResult {
  Parameters theta;
  Model model;
  double loglik = 0.0;
  double objective = 0.0;  // loglik, or loglik - nu_m * c in penalized mode
  FuzzyPartition fuzzy;
  int n_iterations = 0;
  bool converged = false;
  // Objective after initialization and after every iteration. After an accepted
  // omega flip it restarts with the first iteration of the flipped fit.
  std::vector<double> trace;
  int start = 0;              // index of the winning start
  int redraws = 0;            // empty-component re-draws spent by the winning start
  bool degenerate = false;    // the start exhausted its re-draws and finished under the Floor policy
  int flips = 0;              // accepted omega flips
};

// Responsibilities for fixed (model, theta); complete and masked data alike.
FuzzyPartition e_step(const Dataset& data, const Model& model, const Parameters& theta);

// Closed-form maximizer of the expected complete-data log-likelihood at fixed omega.
// Throws Error{EmptyComponent} under the Restart policy.
Parameters m_step(const Dataset& data, const Model& model, const FuzzyPartition& fuzzy,
                  EmptyComponentPolicy policy = EmptyComponentPolicy::Restart);

double observed_loglik(const Dataset& data, const Model& model, const Parameters& theta);

struct PenalizedStep {
  Model model;
  Parameters theta;
  std::vector<double> delta;
};

// Joint maximization over (omega, theta) of the expected penalized complete-data
// log-likelihood: omega_j = 1 iff Delta_j > 0.
PenalizedStep penalized_m_step(const Dataset& data, int g, const FuzzyPartition& fuzzy, double c,
                               EmptyComponentPolicy policy = EmptyComponentPolicy::Restart);

// Best of config.n_starts random starts at fixed model (penalty_c ignored).
EmResult run_em(const Dataset& data, const Model& model, const EmConfig& config);

// Best of config.n_starts random starts of the penalized EM at g components.
EmResult run_penalized_em(const Dataset& data, int g, double c, const EmConfig& config);

// Dispatches on config.penalty_c: run_em(model) when absent, run_penalized_em(model.g, c) otherwise.
EmResult fit_em(const Dataset& data, const Model& model, const EmConfig& config);

}  // namespace mixsel
