#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "mixsel/dataset.hpp"

namespace mixsel::test {

inline Column column(std::string name, VariableKind kind, std::vector<double> values,
                     std::vector<std::uint8_t> observed = {}) {
  Column c;
  c.name = std::move(name);
  c.kind = kind;
  c.values = std::move(values);
  c.observed = std::move(observed);
  for (std::size_t i = 0; i < c.observed.size(); ++i)
    if (!c.observed[i]) c.values[i] = std::numeric_limits<double>::quiet_NaN();
  return c;
}

inline Dataset continuous(const std::vector<double>& xs) {
  return Dataset({column("x", VariableKind::continuous(), xs)});
}

// Random mixed-type dataset with a planted two-class structure of strength `shift`.
// Columns cycle continuous, integer, categorical(3). Missing cells are MCAR at
// `missing` but every column keeps at least one observed cell.
inline Dataset random_mixed(std::mt19937_64& rng, std::size_t n, std::size_t d, double missing, double shift = 1.0) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  std::vector<int> label(n);
  for (auto& l : label) l = unif(rng) < 0.5 ? 0 : 1;
  std::vector<Column> cols;
  for (std::size_t j = 0; j < d; ++j) {
    Column c;
    c.name = "v" + std::to_string(j + 1);
    c.values.resize(n);
    switch (j % 3) {
      case 0:
        c.kind = VariableKind::continuous();
        for (std::size_t i = 0; i < n; ++i) c.values[i] = (label[i] ? shift : -shift) + normal(rng);
        break;
      case 1: {
        c.kind = VariableKind::integer();
        for (std::size_t i = 0; i < n; ++i) {
          std::poisson_distribution<int> pois(label[i] ? 2.0 + shift : 2.0);
          c.values[i] = pois(rng);
        }
        break;
      }
      default:
        c.kind = VariableKind::categorical(3);
        for (std::size_t i = 0; i < n; ++i) {
          const double u = unif(rng);
          const double p1 = label[i] ? 0.2 : 0.5;
          c.values[i] = u < p1 ? 1.0 : (u < 0.8 ? 2.0 : 3.0);
        }
        break;
    }
    if (missing > 0) {
      c.observed.assign(n, 1);
      std::size_t kept = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (unif(rng) < missing) c.observed[i] = 0;
        kept += c.observed[i];
      }
      if (kept == 0) c.observed[0] = 1;
      for (std::size_t i = 0; i < n; ++i)
        if (!c.observed[i]) c.values[i] = std::numeric_limits<double>::quiet_NaN();
    }
    cols.push_back(std::move(c));
  }
  return Dataset(std::move(cols));
}

// Same cells with an explicit all-true mask on every column.
inline Dataset with_full_mask(const Dataset& data) {
  std::vector<Column> cols = data.columns();
  for (Column& c : cols) c.observed.assign(data.n(), 1);
  return Dataset(std::move(cols));
}

inline HardPartition random_partition(std::mt19937_64& rng, std::size_t n, int g) {
  std::uniform_int_distribution<int> pick(0, g - 1);
  HardPartition z{g, std::vector<int>(n)};
  for (auto& k : z.z) k = pick(rng);
  return z;
}

}  // namespace mixsel::test
