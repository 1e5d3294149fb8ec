#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "mixsel/dataset.hpp"

namespace mixsel {

// log[ Gamma(g u) / Gamma(u)^g * prod_k Gamma(n_k + u) / Gamma(n + g u) ]
double log_dirichlet_proportion_term(std::span<const std::size_t> counts, double u);

// Exact log marginal of column j under its conjugate prior, per class when
// `relevant`, once over all observed cells otherwise. Only observed cells count.
double log_marginal_variable(const Dataset& data, std::size_t j, const HardPartition& z, bool relevant,
                             const Hyperparameters& hyper);

// log p(x, z | m)
double log_integrated_complete(const Dataset& data, const HardPartition& z, const Model& model,
                               const Hyperparameters& hyper);

// omega_j = 1 iff the per-class marginal strictly beats the shared one.
std::vector<std::uint8_t> model_step(const Dataset& data, const HardPartition& z, const Hyperparameters& hyper);

// Conjugate sufficient statistics of the observed cells of one column in one class.
// Continuous columns use a running (count, mean, m2); integer columns (count, sum);
// categorical columns per-level counts.
struct ClassStats {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;
  double sum = 0.0;
  std::vector<double> levels;

  void add(double x, Kind kind);
  void remove(double x, Kind kind);
};

// Data-dependent part of one class' log marginal; the Poisson factorial term is
// partition-independent and accounted for per column.
double class_log_marginal(const VariableKind& kind, const VariablePrior& prior, const ClassStats& stats);

// (model, z) together with cached per-(column, class) statistics so that single
// observation moves cost O(d) instead of O(n d).
class MiclState {
 public:
  MiclState(const Dataset& data, const Hyperparameters& hyper, Model model, HardPartition z);

  const Model& model() const { return model_; }
  const HardPartition& partition() const { return z_; }
  double log_icl() const { return log_icl_; }

  // Change of log_icl if observation i moved to class k.
  double move_gain(std::size_t i, int k) const;
  void move(std::size_t i, int k);

  // Cached column marginal under omega_j = relevant.
  double column_value(std::size_t j, bool relevant) const;
  // Maximizer of log_icl over omega at the current partition (ties -> 0).
  std::vector<std::uint8_t> best_omega() const;
  void set_omega(std::vector<std::uint8_t> omega);

  // Full recomputation from (data, z); used to audit the caches.
  double recompute() const;
  // Largest absolute deviation between cached and freshly accumulated statistics.
  double stats_drift() const;

 private:
  const ClassStats& stats(std::size_t j, int k) const { return stats_[j * gs() + static_cast<std::size_t>(k)]; }
  ClassStats& stats(std::size_t j, int k) { return stats_[j * gs() + static_cast<std::size_t>(k)]; }
  std::size_t gs() const { return static_cast<std::size_t>(model_.g); }
  void refresh_total();

  const Dataset* data_;
  const Hyperparameters* hyper_;
  Model model_;
  HardPartition z_;
  std::vector<std::size_t> counts_;
  std::vector<ClassStats> stats_;        // [j * g + k]
  std::vector<double> class_value_;      // [j * g + k]
  std::vector<double> shared_value_;     // [j]
  std::vector<double> column_constant_;  // [j], -sum lgamma(x + 1) for integer columns
  double log_icl_ = 0.0;
};

// Moves below this gain are treated as ties.
inline constexpr double kMoveTolerance = 1e-10;

// Sweeps over random permutations of the observations, moving each to the class
// maximizing log p(x, z | m), until a sweep makes no move or `sweep_cap` sweeps ran.
// Returns the number of moves made.
int partition_step(MiclState& state, std::mt19937_64& rng, int sweep_cap = 50);

struct MiclConfig {
  int n_starts = 20;
  std::uint64_t seed = 0;
  int em_starts = 1;          // EM budget for the initial partition of each start
  int em_max_iterations = 200;
  int sweep_cap = 50;
  int max_alternations = 100;
  int threads = 0;
};

struct MiclResult {
  Model model;
  HardPartition z;
  double value = 0.0;          // MICL = log p(x, z* | m)
  std::vector<double> trace;   // log_icl after every partition and model step of the winning start
  int start = 0;
};

MiclResult run_micl(const Dataset& data, int g, const Hyperparameters& hyper, const MiclConfig& config);

}  // namespace mixsel
