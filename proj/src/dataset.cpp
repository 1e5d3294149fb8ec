#include "mixsel/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mixsel/error.hpp"

namespace mixsel {

int VariableKind::free_parameters() const {
  switch (tag) {
    case Kind::Continuous: return 2;
    case Kind::Integer: return 1;
    case Kind::Categorical: return levels - 1;
  }
  return 0;
}

std::string to_string(const VariableKind& kind) {
  switch (kind.tag) {
    case Kind::Continuous: return "cont";
    case Kind::Integer: return "int";
    case Kind::Categorical: return "cat(" + std::to_string(kind.levels) + ")";
  }
  return "?";
}

Dataset::Dataset(std::vector<Column> columns) : columns_(std::move(columns)) {
  if (columns_.empty()) throw Error(ErrorCode::InvalidShape, "dataset has no columns");
  n_ = columns_.front().values.size();
  if (n_ == 0) throw Error(ErrorCode::InvalidShape, "dataset has no rows");
  observed_counts_.reserve(columns_.size());
  for (const Column& col : columns_) {
    if (col.values.size() != n_)
      throw Error(ErrorCode::InvalidShape, "column '" + col.name + "' has a different length");
    if (col.has_mask() && col.observed.size() != n_)
      throw Error(ErrorCode::InvalidShape, "mask of column '" + col.name + "' has a different length");
    std::size_t count = n_;
    if (col.has_mask()) count = static_cast<std::size_t>(std::count(col.observed.begin(), col.observed.end(), 1));
    observed_counts_.push_back(count);
  }
}

bool Dataset::has_mask() const {
  return std::any_of(columns_.begin(), columns_.end(), [](const Column& c) { return c.has_mask(); });
}

std::size_t Dataset::missing_cells() const {
  return n_ * d() - std::accumulate(observed_counts_.begin(), observed_counts_.end(), std::size_t{0});
}

void validate(const Dataset& data) {
  for (std::size_t j = 0; j < data.d(); ++j) {
    const Column& col = data.column(j);
    if (data.observed_count(j) == 0)
      throw Error(ErrorCode::AllMissingColumn, "column " + std::to_string(j + 1) + " ('" + col.name + "')");
    if (col.kind.tag == Kind::Categorical && col.kind.levels < 2)
      throw Error(ErrorCode::InvalidShape,
                  "categorical column '" + col.name + "' needs at least two levels");
    for (std::size_t i = 0; i < data.n(); ++i) {
      if (!col.is_observed(i)) continue;
      const double x = col.values[i];
      const auto where = "cell (" + std::to_string(i + 1) + ", " + std::to_string(j + 1) + ")";
      if (!std::isfinite(x)) throw Error(ErrorCode::UnsupportedValue, where + " is not finite");
      switch (col.kind.tag) {
        case Kind::Continuous:
          break;
        case Kind::Integer:
          if (x != std::floor(x)) throw Error(ErrorCode::UnsupportedValue, where + " is not a whole number");
          if (x < 0) throw Error(ErrorCode::NegativeInteger, where);
          break;
        case Kind::Categorical:
          if (x != std::floor(x) || x < 1 || x > col.kind.levels)
            throw Error(ErrorCode::OutOfRangeCategorical, where);
          break;
      }
    }
  }
}

std::size_t Model::relevant_count() const {
  return static_cast<std::size_t>(std::count(omega.begin(), omega.end(), 1));
}

std::vector<std::size_t> HardPartition::counts() const {
  std::vector<std::size_t> out(static_cast<std::size_t>(g), 0);
  for (int k : z) ++out[static_cast<std::size_t>(k)];
  return out;
}

Hyperparameters Hyperparameters::defaults(const Dataset& data) {
  Hyperparameters h;
  h.u = 0.5;
  h.variables.resize(data.d());
  for (std::size_t j = 0; j < data.d(); ++j) {
    VariablePrior& p = h.variables[j];
    const Column& col = data.column(j);
    switch (col.kind.tag) {
      case Kind::Continuous: {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < data.n(); ++i) {
          if (!col.is_observed(i)) continue;
          sum += col.values[i];
          ++count;
        }
        p = {1.0, 1.0, count > 0 ? sum / static_cast<double>(count) : 0.0, 0.01};
        break;
      }
      case Kind::Integer:
        p = {1.0, 1.0, 0.0, 0.0};
        break;
      case Kind::Categorical:
        p = {0.5, 0.0, 0.0, 0.0};
        break;
    }
  }
  return h;
}

std::size_t observed_count(const Dataset& data, std::size_t j) { return data.observed_count(j); }

std::size_t observed_count(const Dataset& data, const HardPartition& z, std::size_t j, int k) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < data.n(); ++i)
    if (z.z[i] == k && data.observed(i, j)) ++count;
  return count;
}

}  // namespace mixsel
