#pragma once

#include <cstddef>
#include <span>

#include "mixsel/dataset.hpp"

namespace mixsel {

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;

// Natural-log density (continuous) or log mass (integer, categorical).
// Throws Error{UnsupportedValue} when x lies outside the support of `kind`.
double log_density(double x, const VariableKind& kind, const Block& block);

// Weighted maximum-likelihood block for one margin. Continuous uses the biased
// (divisor sum-of-weights) variance. Floors from dataset.hpp are applied here.
// Throws Error{EmptyWeight} when the weights sum to zero.
Block weighted_mle(std::span<const double> values, std::span<const double> weights,
                   const VariableKind& kind);

// Unit weights; bit-identical to weighted_mle with every weight equal to one.
Block mle(std::span<const double> values, const VariableKind& kind);

// Sum of w_i log f(x_i | block).
double weighted_loglik(std::span<const double> values, std::span<const double> weights,
                       const VariableKind& kind, const Block& block);

// Sum of log densities over the observed cells of a column (masked cells skipped).
double column_loglik(const Column& column, const Block& block);
double column_loglik(const Column& column, std::span<const std::size_t> rows, const Block& block);

}  // namespace mixsel
