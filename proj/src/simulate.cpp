#include "mixsel/simulate.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "mixsel/error.hpp"

namespace mixsel {

namespace {

Eigen::MatrixXd tridiagonal(std::size_t r, double rho) {
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r));
  for (Eigen::Index j = 0; j + 1 < static_cast<Eigen::Index>(r); ++j) {
    sigma(j, j + 1) = rho;
    sigma(j + 1, j) = rho;
  }
  return sigma;
}

void check_spec(const ScenarioSpec& spec) {
  if (spec.n < 2) throw Error(ErrorCode::InvalidShape, "need n >= 2");
  if (spec.r == 0 || spec.r > spec.d) throw Error(ErrorCode::InvalidShape, "need 1 <= r <= d");
  if (!(spec.target_error > 0.0 && spec.target_error <= 0.5) && !spec.delta)
    throw Error(ErrorCode::InvalidArgument, "target error must lie in (0, 0.5]");
  if (!(spec.missing_rate >= 0.0 && spec.missing_rate < 1.0))
    throw Error(ErrorCode::InvalidArgument, "missing rate must lie in [0, 1)");
  if (spec.family == Family::MixedIndep && (spec.d % 3 != 0 || spec.r % 3 != 0))
    throw Error(ErrorCode::InvalidShape, "mixed family needs d and r divisible by 3");
}

// 1' Sigma_r^{-1} 1
double precision_mass(const ScenarioSpec& spec) {
  const Eigen::LLT<Eigen::MatrixXd> llt(tridiagonal(spec.r, spec.rho));
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::InvalidArgument, "tridiagonal covariance not positive definite");
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(spec.r));
  return ones.dot(llt.solve(ones));
}

double mixed_bayes_error(const ScenarioSpec& spec, double delta) {
  if (delta <= 0.0) return 0.5;
  const double per_type = static_cast<double>(spec.r / 3);
  const double lam1 = 3.0 - delta;
  const double lam2 = 3.0 + delta;
  const double p1 = 0.5 - spec.binary_shift;
  const double p2 = 0.5 + spec.binary_shift;
  // Continuous log-likelihood ratio (class 2 over class 1) ~ N(-+2 delta^2 c, 4 delta^2 c).
  const double cont_mean = 2.0 * delta * delta * per_type;
  const double cont_sd = 2.0 * delta * std::sqrt(per_type);
  const double int_slope = std::log(lam2 / lam1);
  const double int_shift = per_type * (lam2 - lam1);
  const boost::math::normal standard;
  const boost::math::poisson counts1(per_type * lam1);
  const boost::math::poisson counts2(per_type * lam2);
  const auto bins = static_cast<unsigned>(spec.r / 3);
  const boost::math::binomial succ1(bins, p1);
  const boost::math::binomial succ2(bins, p2);
  const double bin_hi = std::log(p2 / p1);
  const double bin_lo = std::log((1.0 - p2) / (1.0 - p1));
  const auto s_max = static_cast<unsigned>(per_type * lam2 + 40.0 * std::sqrt(per_type * lam2) + 60.0);

  double err1 = 0.0;
  double err2 = 0.0;
  for (unsigned s = 0; s <= s_max; ++s) {
    const double ps1 = boost::math::pdf(counts1, s);
    const double ps2 = boost::math::pdf(counts2, s);
    for (unsigned b = 0; b <= bins; ++b) {
      const double discrete = s * int_slope - int_shift + b * bin_hi + (bins - b) * bin_lo;
      const double pb1 = boost::math::pdf(succ1, b);
      const double pb2 = boost::math::pdf(succ2, b);
      // class 1 misclassified when the continuous ratio exceeds -discrete
      err1 += ps1 * pb1 * boost::math::cdf(standard, (discrete - cont_mean) / cont_sd);
      err2 += ps2 * pb2 * boost::math::cdf(standard, (-discrete - cont_mean) / cont_sd);
    }
  }
  return 0.5 * (err1 + err2);
}

std::vector<int> balanced_labels(std::size_t n, std::mt19937_64& rng) {
  std::vector<int> z(n, 0);
  for (std::size_t i = n / 2; i < n; ++i) z[i] = 1;
  std::shuffle(z.begin(), z.end(), rng);
  return z;
}

Column make_column(std::string name, VariableKind kind, std::size_t n) {
  Column c;
  c.name = std::move(name);
  c.kind = kind;
  c.values.assign(n, 0.0);
  return c;
}

}  // namespace

double bayes_error(const ScenarioSpec& spec, double delta) {
  check_spec(spec);
  if (spec.family == Family::ContinuousTridiag) {
    const boost::math::normal standard;
    return boost::math::cdf(standard, -std::abs(delta) * std::sqrt(precision_mass(spec)));
  }
  return mixed_bayes_error(spec, delta);
}

double calibrate_delta(const ScenarioSpec& spec) {
  check_spec(spec);
  const double target = spec.target_error;
  if (target >= 0.5) return 0.0;
  if (spec.family == Family::ContinuousTridiag) {
    const boost::math::normal standard;
    return boost::math::quantile(standard, 1.0 - target) / std::sqrt(precision_mass(spec));
  }
  double lo = 0.0;
  double hi = 3.0 - 1e-9;
  if (mixed_bayes_error(spec, hi) > target)
    throw Error(ErrorCode::NoRoot, "target error " + std::to_string(target) + " unreachable with positive rates");
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mixed_bayes_error(spec, mid) > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

SimulatedData gen_continuous(const ScenarioSpec& spec) {
  check_spec(spec);
  if (spec.family != Family::ContinuousTridiag) throw Error(ErrorCode::InvalidArgument, "not a continuous scenario");
  const double delta = spec.delta ? *spec.delta : calibrate_delta(spec);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;

  SimulatedData out;
  out.delta = delta;
  out.truth = HardPartition{2, balanced_labels(spec.n, rng)};
  out.model = Model::all_irrelevant(2, spec.d);
  std::fill_n(out.model.omega.begin(), spec.r, 1);

  const Eigen::LLT<Eigen::MatrixXd> llt(tridiagonal(spec.r, spec.rho));
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::InvalidArgument, "tridiagonal covariance not positive definite");
  const Eigen::MatrixXd factor = llt.matrixL();

  std::vector<Column> cols;
  for (std::size_t j = 0; j < spec.d; ++j) cols.push_back(make_column("x" + std::to_string(j + 1), VariableKind::continuous(), spec.n));
  const auto r = static_cast<Eigen::Index>(spec.r);
  Eigen::VectorXd eps(r);
  for (std::size_t i = 0; i < spec.n; ++i) {
    for (Eigen::Index j = 0; j < r; ++j) eps(j) = normal(rng);
    const Eigen::VectorXd draw = factor * eps;
    const double mean = out.truth.z[i] == 0 ? -delta : delta;
    for (Eigen::Index j = 0; j < r; ++j) cols[static_cast<std::size_t>(j)].values[i] = mean + draw(j);
    for (std::size_t j = spec.r; j < spec.d; ++j) cols[j].values[i] = normal(rng);
  }
  out.data = Dataset(std::move(cols));
  return out;
}

SimulatedData gen_mixed(const ScenarioSpec& spec) {
  check_spec(spec);
  if (spec.family != Family::MixedIndep) throw Error(ErrorCode::InvalidArgument, "not a mixed scenario");
  const double delta = spec.delta ? *spec.delta : calibrate_delta(spec);
  if (delta >= 3.0) throw Error(ErrorCode::NonPositiveRate, "delta >= 3 gives a nonpositive Poisson rate");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;

  SimulatedData out;
  out.delta = delta;
  out.truth = HardPartition{2, balanced_labels(spec.n, rng)};
  const std::size_t third = spec.d / 3;
  const std::size_t rel = spec.r / 3;
  out.model = Model::all_irrelevant(2, spec.d);

  std::vector<Column> cols;
  for (std::size_t j = 0; j < third; ++j) cols.push_back(make_column("c" + std::to_string(j + 1), VariableKind::continuous(), spec.n));
  for (std::size_t j = 0; j < third; ++j) cols.push_back(make_column("i" + std::to_string(j + 1), VariableKind::integer(), spec.n));
  for (std::size_t j = 0; j < third; ++j) {
    cols.push_back(make_column("b" + std::to_string(j + 1), VariableKind::categorical(2), spec.n));
    cols.back().level_names = {"1", "2"};
  }
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t j = 0; j < rel; ++j) out.model.omega[t * third + j] = 1;

  for (std::size_t i = 0; i < spec.n; ++i) {
    const double sign = out.truth.z[i] == 0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < spec.d; ++j) {
      const bool relevant = out.model.omega[j] != 0;
      switch (cols[j].kind.tag) {
        case Kind::Continuous:
          cols[j].values[i] = (relevant ? sign * delta : 0.0) + normal(rng);
          break;
        case Kind::Integer: {
          std::poisson_distribution<int> pois(relevant ? 3.0 + sign * delta : 3.0);
          cols[j].values[i] = pois(rng);
          break;
        }
        case Kind::Categorical: {
          const double p = relevant ? 0.5 + sign * spec.binary_shift : 0.5;
          cols[j].values[i] = unif(rng) < p ? 2.0 : 1.0;
          break;
        }
      }
    }
  }
  out.data = Dataset(std::move(cols));
  return out;
}

Dataset inject_mcar(const Dataset& data, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorCode::InvalidArgument, "missing rate must lie in [0, 1)");
  if (rate == 0.0) return data;
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution drop(rate);
  std::vector<Column> cols = data.columns();
  for (Column& col : cols) {
    const std::vector<std::uint8_t> before = col.has_mask() ? col.observed : std::vector<std::uint8_t>(data.n(), 1);
    if (std::count(before.begin(), before.end(), 1) == 0) continue;
    for (;;) {
      col.observed = before;
      std::size_t kept = 0;
      for (std::size_t i = 0; i < data.n(); ++i) {
        if (col.observed[i] && drop(rng)) col.observed[i] = 0;
        kept += col.observed[i];
      }
      if (kept > 0) break;
    }
    for (std::size_t i = 0; i < data.n(); ++i)
      if (!col.observed[i]) col.values[i] = std::numeric_limits<double>::quiet_NaN();
  }
  return Dataset(std::move(cols));
}

SimulatedData simulate(const ScenarioSpec& spec) {
  SimulatedData out = spec.family == Family::ContinuousTridiag ? gen_continuous(spec) : gen_mixed(spec);
  if (spec.missing_rate > 0.0) out.data = inject_mcar(out.data, spec.missing_rate, spec.seed ^ 0xA5A5A5A5DEADBEEFull);
  return out;
}

}  // namespace mixsel
