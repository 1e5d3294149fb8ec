#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixsel/dataset.hpp"
#include "mixsel/em.hpp"
#include "mixsel/micl.hpp"

namespace mixsel {

// nu_m = (g - 1) + sum_j nu_j (g omega_j + 1 - omega_j)
long count_params(const Model& model, std::span<const VariableKind> kinds);

double bic(double loglik, long n_params, std::size_t n);
double aic(double loglik, long n_params);

// argmax_k t_ik, ties to the lowest k.
HardPartition map_partition(const FuzzyPartition& fuzzy);

enum class Criterion { Bic, Aic, Micl, BicNoSelect, IclNoSelect };

std::string to_string(Criterion criterion);
// Accepts bic, aic, micl, bic-noselect, icl-noselect.
Criterion parse_criterion(const std::string& name);

struct SelectConfig {
  EmConfig em;
  MiclConfig micl;
  // Flat defaults derived from the data when absent.
  std::optional<Hyperparameters> hyper;
};

struct SelectionRecord {
  Model model;
  double value = 0.0;        // criterion value at this g
  double loglik = 0.0;       // observed-data log-likelihood of the fit (EM-based criteria)
  long n_params = 0;
  std::optional<Parameters> theta;     // EM-based criteria
  std::optional<HardPartition> z_star; // micl
  double runtime_seconds = 0.0;
};

struct SelectionReport {
  Criterion criterion = Criterion::Bic;
  std::vector<SelectionRecord> records;  // records[g - 1]
  std::size_t best = 0;                  // index of the winning record
  Model model;                           // selected model
  Parameters theta;                      // for micl, refitted by EM on the selected model
  FuzzyPartition fuzzy;
  HardPartition partition;               // final hard partition
  double loglik = 0.0;

  int g() const { return model.g; }
  double value() const { return records[best].value; }
};

// Sweeps g = 1..g_max and keeps the best value of `criterion` (ties to smaller g).
SelectionReport select_model(const Dataset& data, Criterion criterion, int g_max, const SelectConfig& config);

}  // namespace mixsel
