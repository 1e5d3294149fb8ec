#include "mixsel/kernels.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mixsel/densities.hpp"
#include "mixsel/error.hpp"

namespace mixsel::kernels {

namespace {

// Below this many cell evaluations a parallel region costs more than it saves.
constexpr std::size_t kParallelThreshold = 20000;

}  // namespace

int resolve_threads(int requested) {
#ifdef _OPENMP
  if (requested <= 0) return omp_get_max_threads();
  return requested;
#else
  (void)requested;
  return 1;
#endif
}

Workspace::Workspace(const Dataset& data) : data_(&data) {
  const std::size_t n = data.n();
  views_.resize(data.d());
  for (std::size_t j = 0; j < data.d(); ++j) {
    const Column& col = data.column(j);
    ColumnView& v = views_[j];
    v.column = &col;
    v.masked = col.has_mask();
    masked_ = masked_ || v.masked;
    if (v.masked) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!col.observed[i]) continue;
        v.rows.push_back(i);
        v.values.push_back(col.values[i]);
      }
    }
    if (col.kind.tag == Kind::Integer) {
      v.log_factorial.assign(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        if (col.is_observed(i)) v.log_factorial[i] = std::lgamma(col.values[i] + 1.0);
    }
  }
  ones_.assign(n, 1.0);
}

LogDensity LogDensity::from(const Block& block) {
  LogDensity f;
  if (const auto* b = std::get_if<GaussianBlock>(&block)) {
    f.tag = Kind::Continuous;
    f.mu = b->mu;
    f.offset = -kHalfLog2Pi - std::log(b->sigma);
    f.scale = 0.5 / (b->sigma * b->sigma);
  } else if (const auto* b = std::get_if<PoissonBlock>(&block)) {
    f.tag = Kind::Integer;
    f.offset = -b->lambda;
    f.scale = std::log(b->lambda);
  } else {
    const auto& c = std::get<CategoricalBlock>(block);
    f.tag = Kind::Categorical;
    f.log_probs.reserve(c.probs.size());
    for (double p : c.probs) f.log_probs.push_back(std::log(p));
  }
  return f;
}

double estep_reference(const Dataset& data, const Model& model, const Parameters& theta,
                       FuzzyPartition& fuzzy) {
  const std::size_t n = data.n();
  const int g = theta.g;
  fuzzy = FuzzyPartition(n, g);
  double loglik = 0.0;
  for (std::size_t j = 0; j < data.d(); ++j)
    if (!model.omega[j]) loglik += column_loglik(data.column(j), theta.at(0, j));

  std::vector<double> lp(static_cast<std::size_t>(g));
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < g; ++k) {
      double s = std::log(theta.tau[static_cast<std::size_t>(k)]);
      for (std::size_t j = 0; j < data.d(); ++j) {
        if (!model.omega[j] || !data.observed(i, j)) continue;
        s += log_density(data.value(i, j), data.kind(j), theta.at(k, j));
      }
      lp[static_cast<std::size_t>(k)] = s;
    }
    const double top = *std::max_element(lp.begin(), lp.end());
    double total = 0.0;
    for (double v : lp) total += std::exp(v - top);
    for (int k = 0; k < g; ++k) fuzzy(i, k) = std::exp(lp[static_cast<std::size_t>(k)] - top) / total;
    loglik += top + std::log(total);
  }
  return loglik;
}

namespace {

template <bool Masked>
double estep_impl(const Workspace& ws, const Model& model, const Parameters& theta, FuzzyPartition& fuzzy,
                  int threads) {
  const Dataset& data = ws.data();
  const std::size_t n = data.n();
  const std::size_t d = data.d();
  const int g = theta.g;
  const auto gs = static_cast<std::size_t>(g);

  std::vector<std::size_t> relevant;
  std::vector<std::size_t> irrelevant;
  for (std::size_t j = 0; j < d; ++j) (model.omega[j] ? relevant : irrelevant).push_back(j);
  const std::size_t nr = relevant.size();

  std::vector<LogDensity> shared(irrelevant.size());
  for (std::size_t q = 0; q < irrelevant.size(); ++q) shared[q] = LogDensity::from(theta.at(0, irrelevant[q]));
  // table[q * g + k]
  std::vector<LogDensity> table(nr * gs);
  for (std::size_t q = 0; q < nr; ++q)
    for (int k = 0; k < g; ++k) table[q * gs + static_cast<std::size_t>(k)] = LogDensity::from(theta.at(k, relevant[q]));
  std::vector<double> log_tau(gs);
  for (std::size_t k = 0; k < gs; ++k) log_tau[k] = std::log(theta.tau[k]);

  fuzzy = FuzzyPartition(n, g);
  std::vector<double> row_loglik(n);
  const bool parallel = threads > 1 && n * (nr * gs + irrelevant.size()) >= kParallelThreshold;

#pragma omp parallel num_threads(threads) if (parallel)
  {
    std::vector<double> lp(gs);
#pragma omp for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
      double fixed = 0.0;
      for (std::size_t q = 0; q < irrelevant.size(); ++q) {
        const ColumnView& v = ws.view(irrelevant[q]);
        if constexpr (Masked) {
          if (v.masked && !v.column->observed[i]) continue;
        }
        const double lf = v.log_factorial.empty() ? 0.0 : v.log_factorial[i];
        fixed += shared[q](v.column->values[i], lf);
      }
      std::copy(log_tau.begin(), log_tau.end(), lp.begin());
      for (std::size_t q = 0; q < nr; ++q) {
        const ColumnView& v = ws.view(relevant[q]);
        if constexpr (Masked) {
          if (v.masked && !v.column->observed[i]) continue;
        }
        const double x = v.column->values[i];
        const double lf = v.log_factorial.empty() ? 0.0 : v.log_factorial[i];
        const LogDensity* row = &table[q * gs];
        for (std::size_t k = 0; k < gs; ++k) lp[k] += row[k](x, lf);
      }
      const double top = *std::max_element(lp.begin(), lp.end());
      double total = 0.0;
      for (std::size_t k = 0; k < gs; ++k) {
        lp[k] = std::exp(lp[k] - top);
        total += lp[k];
      }
      for (std::size_t k = 0; k < gs; ++k) fuzzy.t[k * n + i] = lp[k] / total;
      row_loglik[i] = fixed + top + std::log(total);
    }
  }

  double loglik = 0.0;
  for (double v : row_loglik) loglik += v;
  return loglik;
}

}  // namespace

double estep(const Workspace& ws, const Model& model, const Parameters& theta, FuzzyPartition& fuzzy,
             int threads) {
  threads = resolve_threads(threads);
  return ws.masked() ? estep_impl<true>(ws, model, theta, fuzzy, threads)
                     : estep_impl<false>(ws, model, theta, fuzzy, threads);
}

namespace {

enum class ColumnStatus : std::uint8_t { Ok, Empty, Collapsed };

template <bool Masked>
MStepOutput mstep_impl(const Workspace& ws, std::span<const std::uint8_t> omega, const FuzzyPartition& fuzzy,
                       std::optional<double> penalty, EmptyComponentPolicy policy, int threads) {
  const Dataset& data = ws.data();
  const std::size_t n = data.n();
  const std::size_t d = data.d();
  const int g = fuzzy.g;
  const auto gs = static_cast<std::size_t>(g);

  MStepOutput out{Parameters(g, d), std::vector<std::uint8_t>(omega.begin(), omega.end()), {}};
  if (penalty) out.delta.assign(d, 0.0);

  std::vector<double> mass(gs, 0.0);
  for (std::size_t k = 0; k < gs; ++k) {
    const double* t = fuzzy.component(static_cast<int>(k));
    for (std::size_t i = 0; i < n; ++i) mass[k] += t[i];
  }
  bool floored = false;
  for (std::size_t k = 0; k < gs; ++k) {
    if (mass[k] < kEmptyComponentMass) {
      if (policy == EmptyComponentPolicy::Restart)
        throw Error(ErrorCode::EmptyComponent, "component " + std::to_string(k + 1));
      floored = true;
    }
    out.theta.tau[k] = mass[k] / static_cast<double>(n);
  }
  if (floored) {
    double norm = 0.0;
    for (double& tau : out.theta.tau) {
      tau = std::max(tau, kProbFloor);
      norm += tau;
    }
    for (double& tau : out.theta.tau) tau /= norm;
  }

  std::vector<ColumnStatus> status(d, ColumnStatus::Ok);
  const bool parallel = threads > 1 && n * d * gs >= kParallelThreshold;

#pragma omp parallel num_threads(threads) if (parallel)
  {
    std::vector<double> gathered;
    std::vector<Block> free_blocks(gs);
#pragma omp for schedule(dynamic, 4)
    for (std::size_t j = 0; j < d; ++j) {
      const ColumnView& v = ws.view(j);
      const VariableKind& kind = v.column->kind;
      const std::span<const double> values = v.observed_values();
      const std::size_t m = values.size();
      const bool want_free = penalty.has_value() || omega[j];

      const Block shared = weighted_mle(values, ws.ones(m), kind);
      // Weights of component k restricted to the observed rows of column j.
      auto weights = [&](std::size_t k) -> std::span<const double> {
        const double* t = fuzzy.component(static_cast<int>(k));
        if constexpr (Masked) {
          if (v.masked) {
            gathered.resize(m);
            for (std::size_t r = 0; r < m; ++r) gathered[r] = t[v.rows[r]];
            return gathered;
          }
        }
        return {t, n};
      };

      bool empty = false;
      if (want_free) {
        for (std::size_t k = 0; k < gs; ++k) {
          try {
            free_blocks[k] = weighted_mle(values, weights(k), kind);
          } catch (const Error&) {
            empty = true;
            free_blocks[k] = shared;
          }
        }
      }
      if (empty && policy == EmptyComponentPolicy::Restart) {
        status[j] = ColumnStatus::Empty;
        continue;
      }

      std::uint8_t relevant = omega[j];
      if (penalty) {
        const LogDensity common = LogDensity::from(shared);
        double gain = 0.0;
        for (std::size_t k = 0; k < gs; ++k) {
          const LogDensity own = LogDensity::from(free_blocks[k]);
          const std::span<const double> w = weights(k);
          for (std::size_t r = 0; r < m; ++r) {
            const double lf = v.log_factorial.empty() ? 0.0 : v.log_factorial[v.row(r)];
            gain += w[r] * (own(values[r], lf) - common(values[r], lf));
          }
        }
        gain -= static_cast<double>(g - 1) * kind.free_parameters() * *penalty;
        out.delta[j] = gain;
        relevant = gain > 0.0 ? 1 : 0;
        out.omega[j] = relevant;
      }
      if (relevant && kind.tag == Kind::Continuous && policy == EmptyComponentPolicy::Restart) {
        // A component shrunk onto one value, or onto a few nearby ones, sits on a
        // likelihood spike rather than on a cluster.
        const double limit = std::max(kSigmaFloor, kCollapseRatio * std::get<GaussianBlock>(shared).sigma);
        for (std::size_t k = 0; k < gs; ++k)
          if (std::get<GaussianBlock>(free_blocks[k]).sigma <= limit) status[j] = ColumnStatus::Collapsed;
        if (status[j] == ColumnStatus::Collapsed) continue;
      }
      for (std::size_t k = 0; k < gs; ++k) out.theta.at(static_cast<int>(k), j) = relevant ? free_blocks[k] : shared;
    }
  }

  for (std::size_t j = 0; j < d; ++j)
    if (status[j] == ColumnStatus::Empty)
      throw Error(ErrorCode::EmptyComponent, "no observed weight in column " + std::to_string(j + 1));
    else if (status[j] == ColumnStatus::Collapsed)
      throw Error(ErrorCode::EmptyComponent, "component collapsed onto a single value in column " +
                                                 std::to_string(j + 1));
  return out;
}

}  // namespace

MStepOutput mstep(const Workspace& ws, std::span<const std::uint8_t> omega, const FuzzyPartition& fuzzy,
                  std::optional<double> penalty, EmptyComponentPolicy policy, int threads) {
  threads = resolve_threads(threads);
  return ws.masked() ? mstep_impl<true>(ws, omega, fuzzy, penalty, policy, threads)
                     : mstep_impl<false>(ws, omega, fuzzy, penalty, policy, threads);
}

}  // namespace mixsel::kernels
