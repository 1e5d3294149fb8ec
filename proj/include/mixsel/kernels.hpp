#pragma once

// Data-parallel inner loops of the EM engine. Every kernel writes per-row or
// per-column results into its own slot and reduces serially in index order, so
// output is bit-identical for any thread count. estep_reference() is the plain
// serial formulation kept as a test oracle and benchmark baseline.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mixsel/dataset.hpp"

namespace mixsel::kernels {

// Observed cells of one column, precomputed once per dataset.
struct ColumnView {
  const Column* column = nullptr;
  bool masked = false;
  std::vector<std::size_t> rows;        // observed rows, masked columns only
  std::vector<double> values;           // compact observed values, masked columns only
  std::vector<double> log_factorial;    // lgamma(x + 1) per row, integer columns only

  std::size_t count() const { return masked ? rows.size() : column->values.size(); }
  std::span<const double> observed_values() const {
    return masked ? std::span<const double>(values) : std::span<const double>(column->values);
  }
  std::size_t row(std::size_t r) const { return masked ? rows[r] : r; }
};

// Read-only per-dataset state shared by every start of a run.
class Workspace {
 public:
  explicit Workspace(const Dataset& data);

  const Dataset& data() const { return *data_; }
  const ColumnView& view(std::size_t j) const { return views_[j]; }
  // True when any column carries a mask; selects the masked code path.
  bool masked() const { return masked_; }
  std::span<const double> ones(std::size_t count) const { return {ones_.data(), count}; }

 private:
  const Dataset* data_;
  std::vector<ColumnView> views_;
  std::vector<double> ones_;
  bool masked_ = false;
};

// Block reduced to the constants needed by repeated evaluation.
struct LogDensity {
  Kind tag = Kind::Continuous;
  double mu = 0.0;
  double offset = 0.0;     // -log(sqrt(2 pi) sigma) or -lambda
  double scale = 0.0;      // 1 / (2 sigma^2) or log(lambda)
  std::vector<double> log_probs;

  static LogDensity from(const Block& block);

  // `log_factorial` is lgamma(x + 1), only read for integer columns.
  double operator()(double x, double log_factorial) const {
    switch (tag) {
      case Kind::Continuous: {
        const double r = x - mu;
        return offset - r * r * scale;
      }
      case Kind::Integer:
        return (x > 0 ? x * scale : 0.0) + offset - log_factorial;
      case Kind::Categorical:
        return log_probs[static_cast<std::size_t>(x) - 1];
    }
    return 0.0;
  }
};

int resolve_threads(int requested);

// Serial textbook E-step. Fills `fuzzy` and returns the observed-data log-likelihood.
double estep_reference(const Dataset& data, const Model& model, const Parameters& theta,
                       FuzzyPartition& fuzzy);

// Row-parallel E-step. Same contract as estep_reference.
double estep(const Workspace& ws, const Model& model, const Parameters& theta, FuzzyPartition& fuzzy,
             int threads);

enum class EmptyComponentPolicy { Restart, Floor };

inline constexpr double kEmptyComponentMass = 1e-8;
// Under Restart, a relevant continuous component whose sigma falls to this fraction
// of the column's shared sigma counts as collapsed.
inline constexpr double kCollapseRatio = 0.01;

struct MStepOutput {
  Parameters theta;
  std::vector<std::uint8_t> omega;
  std::vector<double> delta;  // filled in penalized mode only
};

// Column-parallel M-step. With `penalty` set, omega is re-estimated from
// the per-column gains Delta_j; otherwise `omega` is kept fixed.
// Throws Error{EmptyComponent} under the Restart policy.
MStepOutput mstep(const Workspace& ws, std::span<const std::uint8_t> omega, const FuzzyPartition& fuzzy,
                  std::optional<double> penalty, EmptyComponentPolicy policy, int threads);

}  // namespace mixsel::kernels
