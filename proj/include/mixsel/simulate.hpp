#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "mixsel/dataset.hpp"

namespace mixsel {

enum class Family { ContinuousTridiag, MixedIndep };

// Two balanced components; `r` relevant columns followed by d - r noise columns.
//  ContinuousTridiag: relevant block ~ N(+-delta 1, Sigma_r), Sigma_r tridiagonal with rho.
//  MixedIndep: thirds of continuous / integer / binary columns, r / 3 relevant in
//  each; component k in {1, 2} has mu = -+delta, lambda = 3 -+ delta and
//  P(level 2) = 0.5 -+ binary_shift.
struct ScenarioSpec {
  Family family = Family::ContinuousTridiag;
  std::size_t n = 200;
  std::size_t d = 10;
  std::size_t r = 6;
  double rho = 0.0;
  double target_error = 0.05;
  double missing_rate = 0.0;
  std::uint64_t seed = 0;
  double binary_shift = 0.2;
  // Skips calibration when set.
  std::optional<double> delta;
};

struct SimulatedData {
  Dataset data;
  HardPartition truth;
  Model model;
  double delta = 0.0;
};

// Bayes misclassification rate of the generative model at a given delta.
// Closed form for both families (the mixed family sums over the discrete part).
double bayes_error(const ScenarioSpec& spec, double delta);

// delta whose Bayes error equals spec.target_error. Throws Error{NoRoot}.
double calibrate_delta(const ScenarioSpec& spec);

SimulatedData gen_continuous(const ScenarioSpec& spec);
// Throws Error{InvalidShape} unless d and r are multiples of 3, Error{NonPositiveRate} if delta >= 3.
SimulatedData gen_mixed(const ScenarioSpec& spec);

// Masks each cell independently with probability `rate`; columns left with no
// observed cell are re-drawn. rate = 0 returns the dataset unchanged.
Dataset inject_mcar(const Dataset& data, double rate, std::uint64_t seed);

// gen_continuous / gen_mixed according to spec.family, followed by MCAR injection.
SimulatedData simulate(const ScenarioSpec& spec);

}  // namespace mixsel
