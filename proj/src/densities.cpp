#include "mixsel/densities.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mixsel/error.hpp"

namespace mixsel {
namespace {

template <typename T>
const T& expect_block(const Block& block) {
  if (const T* b = std::get_if<T>(&block)) return *b;
  throw Error(ErrorCode::InvalidArgument, "parameter block does not match the variable kind");
}

double weight_total(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size())
    throw Error(ErrorCode::LengthMismatch, "values and weights differ in length");
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw Error(ErrorCode::EmptyWeight, "weights sum to zero");
  return total;
}

}  // namespace

double log_density(double x, const VariableKind& kind, const Block& block) {
  switch (kind.tag) {
    case Kind::Continuous: {
      if (!std::isfinite(x)) throw Error(ErrorCode::UnsupportedValue, "non-finite continuous value");
      const auto& b = expect_block<GaussianBlock>(block);
      const double r = (x - b.mu) / b.sigma;
      return -kHalfLog2Pi - std::log(b.sigma) - 0.5 * r * r;
    }
    case Kind::Integer: {
      if (!(x >= 0) || x != std::floor(x))
        throw Error(ErrorCode::UnsupportedValue, "integer value " + std::to_string(x) + " outside Poisson support");
      const auto& b = expect_block<PoissonBlock>(block);
      return (x > 0 ? x * std::log(b.lambda) : 0.0) - b.lambda - std::lgamma(x + 1.0);
    }
    case Kind::Categorical: {
      if (!(x >= 1) || x > kind.levels || x != std::floor(x))
        throw Error(ErrorCode::UnsupportedValue, "level " + std::to_string(x) + " out of range");
      const auto& b = expect_block<CategoricalBlock>(block);
      return std::log(b.probs[static_cast<std::size_t>(x) - 1]);
    }
  }
  return 0.0;
}

Block weighted_mle(std::span<const double> values, std::span<const double> weights,
                   const VariableKind& kind) {
  const double total = weight_total(values, weights);
  const std::size_t m = values.size();
  switch (kind.tag) {
    case Kind::Continuous: {
      double sum = 0.0;
      for (std::size_t i = 0; i < m; ++i) sum += weights[i] * values[i];
      const double mu = sum / total;
      double ss = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double r = values[i] - mu;
        ss += weights[i] * r * r;
      }
      return GaussianBlock{mu, std::max(std::sqrt(ss / total), kSigmaFloor)};
    }
    case Kind::Integer: {
      double sum = 0.0;
      for (std::size_t i = 0; i < m; ++i) sum += weights[i] * values[i];
      return PoissonBlock{std::max(sum / total, kLambdaFloor)};
    }
    case Kind::Categorical: {
      std::vector<double> probs(static_cast<std::size_t>(kind.levels), 0.0);
      for (std::size_t i = 0; i < m; ++i) probs[static_cast<std::size_t>(values[i]) - 1] += weights[i];
      double norm = 0.0;
      for (double& p : probs) {
        p = std::max(p / total, kProbFloor);
        norm += p;
      }
      for (double& p : probs) p /= norm;
      return CategoricalBlock{std::move(probs)};
    }
  }
  return {};
}

Block mle(std::span<const double> values, const VariableKind& kind) {
  const std::vector<double> ones(values.size(), 1.0);
  return weighted_mle(values, ones, kind);
}

double weighted_loglik(std::span<const double> values, std::span<const double> weights,
                       const VariableKind& kind, const Block& block) {
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) total += weights[i] * log_density(values[i], kind, block);
  return total;
}

double column_loglik(const Column& column, const Block& block) {
  double total = 0.0;
  for (std::size_t i = 0; i < column.values.size(); ++i)
    if (column.is_observed(i)) total += log_density(column.values[i], column.kind, block);
  return total;
}

double column_loglik(const Column& column, std::span<const std::size_t> rows, const Block& block) {
  double total = 0.0;
  for (std::size_t i : rows)
    if (column.is_observed(i)) total += log_density(column.values[i], column.kind, block);
  return total;
}

}  // namespace mixsel
