#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace mixsel {

enum class Kind : std::uint8_t { Continuous, Integer, Categorical };

struct VariableKind {
  Kind tag = Kind::Continuous;
  int levels = 0;  // m_j, categorical only

  static VariableKind continuous() { return {Kind::Continuous, 0}; }
  static VariableKind integer() { return {Kind::Integer, 0}; }
  static VariableKind categorical(int levels) { return {Kind::Categorical, levels}; }

  // Number of free parameters of one univariate margin.
  int free_parameters() const;

  bool operator==(const VariableKind&) const = default;
};

std::string to_string(const VariableKind& kind);

// One typed column. Categorical cells hold levels 1..m_j encoded as doubles,
// integer cells hold whole numbers, missing cells hold NaN.
// An empty `observed` vector means the column carries no mask at all.
struct Column {
  std::string name;
  VariableKind kind;
  std::vector<double> values;
  std::vector<std::uint8_t> observed;
  std::vector<std::string> level_names;

  bool has_mask() const { return !observed.empty(); }
  bool is_observed(std::size_t i) const { return observed.empty() || observed[i] != 0; }
};

// Column-major mixed-type observation matrix. Immutable once built; shared
// read-only between workers.
class Dataset {
 public:
  Dataset() = default;
  // Checks shape (equal column lengths, n >= 1, d >= 1) and caches the
  // per-column observed counts. Value-level checks live in validate().
  explicit Dataset(std::vector<Column> columns);

  std::size_t n() const { return n_; }
  std::size_t d() const { return columns_.size(); }

  const Column& column(std::size_t j) const { return columns_[j]; }
  const std::vector<Column>& columns() const { return columns_; }
  const VariableKind& kind(std::size_t j) const { return columns_[j].kind; }

  double value(std::size_t i, std::size_t j) const { return columns_[j].values[i]; }
  bool observed(std::size_t i, std::size_t j) const { return columns_[j].is_observed(i); }

  // n_j
  std::size_t observed_count(std::size_t j) const { return observed_counts_[j]; }
  // True when some column carries an explicit mask (even an all-true one).
  bool has_mask() const;
  std::size_t missing_cells() const;

 private:
  std::vector<Column> columns_;
  std::size_t n_ = 0;
  std::vector<std::size_t> observed_counts_;
};

// Throws Error{AllMissingColumn | OutOfRangeCategorical | NegativeInteger | UnsupportedValue}.
void validate(const Dataset& data);

struct Model {
  int g = 1;
  std::vector<std::uint8_t> omega;  // length d, 1 = relevant

  static Model all_relevant(int g, std::size_t d) { return {g, std::vector<std::uint8_t>(d, 1)}; }
  static Model all_irrelevant(int g, std::size_t d) { return {g, std::vector<std::uint8_t>(d, 0)}; }

  std::size_t relevant_count() const;
  bool operator==(const Model&) const = default;
};

struct GaussianBlock {
  double mu = 0.0;
  double sigma = 1.0;
  bool operator==(const GaussianBlock&) const = default;
};

struct PoissonBlock {
  double lambda = 1.0;
  bool operator==(const PoissonBlock&) const = default;
};

struct CategoricalBlock {
  std::vector<double> probs;
  bool operator==(const CategoricalBlock&) const = default;
};

using Block = std::variant<GaussianBlock, PoissonBlock, CategoricalBlock>;

inline constexpr double kSigmaFloor = 1e-10;
inline constexpr double kLambdaFloor = 1e-10;
inline constexpr double kProbFloor = 1e-10;

// theta = (tau, alpha); alpha stored component-major, alpha[k * d + j].
struct Parameters {
  int g = 0;
  std::size_t d = 0;
  std::vector<double> tau;
  std::vector<Block> alpha;

  Parameters() = default;
  Parameters(int g, std::size_t d) : g(g), d(d), tau(static_cast<std::size_t>(g), 1.0 / g),
                                     alpha(static_cast<std::size_t>(g) * d) {}

  Block& at(int k, std::size_t j) { return alpha[static_cast<std::size_t>(k) * d + j]; }
  const Block& at(int k, std::size_t j) const { return alpha[static_cast<std::size_t>(k) * d + j]; }

  bool operator==(const Parameters&) const = default;
};

// Responsibilities t_ik, stored component-major so each component's weights
// are contiguous: t[k * n + i].
struct FuzzyPartition {
  std::size_t n = 0;
  int g = 0;
  std::vector<double> t;

  FuzzyPartition() = default;
  FuzzyPartition(std::size_t n, int g) : n(n), g(g), t(n * static_cast<std::size_t>(g), 0.0) {}

  double& operator()(std::size_t i, int k) { return t[static_cast<std::size_t>(k) * n + i]; }
  double operator()(std::size_t i, int k) const { return t[static_cast<std::size_t>(k) * n + i]; }
  const double* component(int k) const { return t.data() + static_cast<std::size_t>(k) * n; }

  bool operator==(const FuzzyPartition&) const = default;
};

// Hard labels, 0-based internally (files and reports use 1..g).
struct HardPartition {
  int g = 1;
  std::vector<int> z;

  std::size_t n() const { return z.size(); }
  std::vector<std::size_t> counts() const;
  bool operator==(const HardPartition&) const = default;
};

// Conjugate prior constants. For continuous columns all four of (a, b, c, d)
// are used, integer columns use (a, b), categorical columns use a.
struct VariablePrior {
  double a = 1.0;
  double b = 1.0;
  double c = 0.0;
  double d = 0.01;
};

struct Hyperparameters {
  double u = 0.5;
  std::vector<VariablePrior> variables;

  // Flat defaults: u = 1/2, categorical a = 1/2, continuous (1, 1, observed mean, 0.01),
  // integer a = b = 1.
  static Hyperparameters defaults(const Dataset& data);
};

std::size_t observed_count(const Dataset& data, std::size_t j);
// n_jk: observed cells of column j among rows labelled k.
std::size_t observed_count(const Dataset& data, const HardPartition& z, std::size_t j, int k);

}  // namespace mixsel
