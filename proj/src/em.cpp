#include "mixsel/em.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>

#include "mixsel/criteria.hpp"
#include "mixsel/densities.hpp"
#include "mixsel/error.hpp"

namespace mixsel {

namespace {

constexpr int kMaxRedraws = 10;

std::mt19937_64 start_rng(std::uint64_t seed, int start) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(start), 0x5eedu};
  return std::mt19937_64(seq);
}

// Random theta for fixed omega: g distinct observations as centres for
// continuous/integer columns, jittered global frequencies for categorical ones,
// uniform proportions. With g = 1 the global MLE is returned directly.
Parameters initialize(const kernels::Workspace& ws, int g, std::span<const std::uint8_t> omega,
                      std::mt19937_64& rng) {
  const Dataset& data = ws.data();
  const std::size_t n = data.n();
  Parameters theta(g, data.d());

  std::vector<std::size_t> centres(n);
  std::iota(centres.begin(), centres.end(), std::size_t{0});
  const auto picks = std::min<std::size_t>(static_cast<std::size_t>(g), n);
  for (std::size_t k = 0; k < picks; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, n - 1);
    std::swap(centres[k], centres[pick(rng)]);
  }
  std::uniform_real_distribution<double> jitter(0.5, 1.5);

  for (std::size_t j = 0; j < data.d(); ++j) {
    const kernels::ColumnView& v = ws.view(j);
    const auto values = v.observed_values();
    const Block shared = weighted_mle(values, ws.ones(values.size()), v.column->kind);
    if (!omega[j] || g == 1) {
      for (int k = 0; k < g; ++k) theta.at(k, j) = shared;
      continue;
    }
    std::uniform_int_distribution<std::size_t> any_observed(0, values.size() - 1);
    for (int k = 0; k < g; ++k) {
      const std::size_t row = centres[static_cast<std::size_t>(k) % picks];
      const double centre = v.column->is_observed(row) ? v.column->values[row] : values[any_observed(rng)];
      switch (v.column->kind.tag) {
        case Kind::Continuous:
          theta.at(k, j) = GaussianBlock{centre, std::get<GaussianBlock>(shared).sigma};
          break;
        case Kind::Integer:
          theta.at(k, j) = PoissonBlock{std::max(0.5 * (centre + std::get<PoissonBlock>(shared).lambda), kLambdaFloor)};
          break;
        case Kind::Categorical: {
          std::vector<double> probs = std::get<CategoricalBlock>(shared).probs;
          double norm = 0.0;
          for (double& p : probs) {
            p *= jitter(rng);
            norm += p;
          }
          for (double& p : probs) p /= norm;
          theta.at(k, j) = CategoricalBlock{std::move(probs)};
          break;
        }
      }
    }
  }
  return theta;
}

struct StartSpec {
  int g = 1;
  std::vector<std::uint8_t> omega;  // fixed omega; ignored when penalized
  std::optional<double> penalty;
};

std::vector<VariableKind> kinds_of(const Dataset& data) {
  std::vector<VariableKind> kinds;
  for (const Column& c : data.columns()) kinds.push_back(c.kind);
  return kinds;
}

// Advances one start by EM iterations (penalized when `penalty` is set) until the
// relative objective change drops below `tolerance` or `max_iterations` ran.
// Returns true on convergence.
bool advance(const kernels::Workspace& ws, std::span<const VariableKind> kinds, EmResult& res,
             std::optional<double> penalty, std::optional<double> charge, double tolerance, int max_iterations,
             EmptyComponentPolicy policy, int threads) {
  for (int it = 0; it < max_iterations; ++it) {
    kernels::MStepOutput next = kernels::mstep(ws, res.model.omega, res.fuzzy, penalty, policy, threads);
    res.theta = std::move(next.theta);
    res.model.omega = std::move(next.omega);
    res.loglik = kernels::estep(ws, res.model, res.theta, res.fuzzy, threads);
    const double previous = res.objective;
    res.objective = charge ? res.loglik - static_cast<double>(count_params(res.model, kinds)) * *charge : res.loglik;
    res.trace.push_back(res.objective);
    ++res.n_iterations;
    if (std::abs(res.objective - previous) / (std::abs(previous) + 1.0) < tolerance) return true;
  }
  return false;
}

EmResult run_start(const kernels::Workspace& ws, const StartSpec& spec, const EmConfig& config, int start,
                   int threads) {
  const Dataset& data = ws.data();
  std::mt19937_64 rng = start_rng(config.seed, start);
  std::bernoulli_distribution coin(0.5);
  EmptyComponentPolicy policy = config.empty_component_policy;
  const std::vector<VariableKind> kinds = kinds_of(data);

  for (int redraws = 0;; ++redraws) {
    try {
      EmResult res;
      res.start = start;
      res.redraws = redraws;
      res.degenerate = policy != config.empty_component_policy;
      res.model.g = spec.g;
      res.model.omega = spec.omega;
      if (spec.penalty) {
        res.model.omega.resize(data.d());
        for (auto& w : res.model.omega) w = coin(rng) ? 1 : 0;
      }
      res.theta = initialize(ws, spec.g, res.model.omega, rng);
      res.loglik = kernels::estep(ws, res.model, res.theta, res.fuzzy, threads);
      res.objective = spec.penalty ? res.loglik - static_cast<double>(count_params(res.model, kinds)) * *spec.penalty
                                   : res.loglik;
      res.trace.push_back(res.objective);
      // Penalized starts first settle theta at the drawn omega; nu_m is fixed
      // meanwhile, so the penalized objective still never decreases.
      if (spec.penalty)
        advance(ws, kinds, res, std::nullopt, spec.penalty, config.rel_tolerance, config.warmup_iterations, policy,
                threads);
      res.converged = advance(ws, kinds, res, spec.penalty, spec.penalty, config.rel_tolerance,
                              config.max_iterations, policy, threads);
      return res;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyComponent || policy != EmptyComponentPolicy::Restart) throw;
      if (redraws + 1 >= kMaxRedraws) policy = EmptyComponentPolicy::Floor;
    }
  }
}

EmResult run_starts(const Dataset& data, const StartSpec& spec, const EmConfig& config) {
  if (config.max_iterations < 1 || !(config.rel_tolerance > 0) || config.n_starts < 1)
    throw Error(ErrorCode::InvalidArgument, "EmConfig needs max_iterations >= 1, rel_tolerance > 0, n_starts >= 1");
  if (spec.g < 1) throw Error(ErrorCode::InvalidArgument, "g must be at least 1");
  const kernels::Workspace ws(data);
  const int threads = kernels::resolve_threads(config.threads);
  const int n_starts = config.n_starts;
  const bool across_starts = threads > 1 && n_starts > 1;
  const int inner = across_starts ? 1 : threads;

  std::vector<EmResult> results(static_cast<std::size_t>(n_starts));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(n_starts));
#pragma omp parallel for schedule(dynamic) num_threads(threads) if (across_starts)
  for (int s = 0; s < n_starts; ++s) {
    try {
      results[static_cast<std::size_t>(s)] = run_start(ws, spec, config, s, inner);
    } catch (...) {
      failures[static_cast<std::size_t>(s)] = std::current_exception();
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  // Starts that only finished under the Floor fallback lose to any regular start.
  auto better = [](const EmResult& a, const EmResult& b) {
    if (a.degenerate != b.degenerate) return !a.degenerate;
    return a.objective > b.objective;
  };
  std::size_t best = 0;
  for (std::size_t s = 1; s < results.size(); ++s)
    if (better(results[s], results[best])) best = s;
  EmResult winner = std::move(results[best]);

  // Penalized EM moves omega one coordinate at a time against the current
  // responsibilities, so it can stop where a single flip plus a re-fit does better.
  if (spec.penalty && spec.g > 1 && !winner.degenerate) {
    const std::vector<VariableKind> kinds = kinds_of(data);
    for (int round = 0; round < config.flip_rounds; ++round) {
      bool improved = false;
      for (std::size_t j = 0; j < data.d(); ++j) {
        EmResult cand = winner;
        cand.model.omega[j] ^= 1;
        cand.trace.clear();
        try {
          advance(ws, kinds, cand, std::nullopt, spec.penalty, config.rel_tolerance, config.warmup_iterations,
                  config.empty_component_policy, threads);
          cand.converged = advance(ws, kinds, cand, spec.penalty, spec.penalty, config.rel_tolerance,
                                   config.max_iterations, config.empty_component_policy, threads);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::EmptyComponent) throw;
          continue;
        }
        if (cand.objective > winner.objective + 1e-9 * (std::abs(winner.objective) + 1.0)) {
          ++cand.flips;
          winner = std::move(cand);
          improved = true;
        }
      }
      if (!improved) break;
    }
  }

  if (config.polish_tolerance && *config.polish_tolerance < config.rel_tolerance) {
    const EmptyComponentPolicy policy =
        winner.degenerate ? EmptyComponentPolicy::Floor : config.empty_component_policy;
    EmResult polished = winner;
    try {
      polished.converged = advance(ws, kinds_of(data), polished, spec.penalty, spec.penalty,
                                   *config.polish_tolerance, config.polish_iterations, policy, threads);
      winner = std::move(polished);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyComponent) throw;
    }
  }
  return winner;
}

}  // namespace

FuzzyPartition e_step(const Dataset& data, const Model& model, const Parameters& theta) {
  const kernels::Workspace ws(data);
  FuzzyPartition fuzzy;
  kernels::estep(ws, model, theta, fuzzy, 1);
  return fuzzy;
}

Parameters m_step(const Dataset& data, const Model& model, const FuzzyPartition& fuzzy,
                  EmptyComponentPolicy policy) {
  const kernels::Workspace ws(data);
  return kernels::mstep(ws, model.omega, fuzzy, std::nullopt, policy, 1).theta;
}

double observed_loglik(const Dataset& data, const Model& model, const Parameters& theta) {
  const kernels::Workspace ws(data);
  FuzzyPartition scratch;
  return kernels::estep(ws, model, theta, scratch, 1);
}

PenalizedStep penalized_m_step(const Dataset& data, int g, const FuzzyPartition& fuzzy, double c,
                               EmptyComponentPolicy policy) {
  const kernels::Workspace ws(data);
  const std::vector<std::uint8_t> start(data.d(), 0);
  kernels::MStepOutput out = kernels::mstep(ws, start, fuzzy, c, policy, 1);
  return {Model{g, std::move(out.omega)}, std::move(out.theta), std::move(out.delta)};
}

EmResult run_em(const Dataset& data, const Model& model, const EmConfig& config) {
  if (model.omega.size() != data.d()) throw Error(ErrorCode::LengthMismatch, "omega length differs from d");
  return run_starts(data, StartSpec{model.g, model.omega, std::nullopt}, config);
}

EmResult run_penalized_em(const Dataset& data, int g, double c, const EmConfig& config) {
  if (!(c >= 0)) throw Error(ErrorCode::InvalidArgument, "penalty must be nonnegative");
  return run_starts(data, StartSpec{g, {}, c}, config);
}

EmResult fit_em(const Dataset& data, const Model& model, const EmConfig& config) {
  if (config.penalty_c) return run_penalized_em(data, model.g, *config.penalty_c, config);
  return run_em(data, model, config);
}

}  // namespace mixsel
