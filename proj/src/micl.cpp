#include "mixsel/micl.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <numeric>

#include "mixsel/criteria.hpp"
#include "mixsel/em.hpp"
#include "mixsel/error.hpp"
#include "mixsel/kernels.hpp"

namespace mixsel {

namespace {

const double kLogPi = std::log(std::numbers::pi);

ClassStats empty_stats(const VariableKind& kind) {
  ClassStats s;
  if (kind.tag == Kind::Categorical) s.levels.assign(static_cast<std::size_t>(kind.levels), 0.0);
  return s;
}

double column_constant(const Column& col) {
  if (col.kind.tag != Kind::Integer) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < col.values.size(); ++i)
    if (col.is_observed(i)) total -= std::lgamma(col.values[i] + 1.0);
  return total;
}

void check_partition(const Dataset& data, const HardPartition& z) {
  if (z.n() != data.n()) throw Error(ErrorCode::LengthMismatch, "partition length differs from n");
  if (z.g < 1) throw Error(ErrorCode::InvalidArgument, "partition needs g >= 1");
  for (int k : z.z)
    if (k < 0 || k >= z.g) throw Error(ErrorCode::InvalidArgument, "label outside 1..g");
}

}  // namespace

void ClassStats::add(double x, Kind kind) {
  count += 1.0;
  switch (kind) {
    case Kind::Continuous: {
      const double delta = x - mean;
      mean += delta / count;
      m2 += delta * (x - mean);
      break;
    }
    case Kind::Integer:
      sum += x;
      break;
    case Kind::Categorical:
      levels[static_cast<std::size_t>(x) - 1] += 1.0;
      break;
  }
}

void ClassStats::remove(double x, Kind kind) {
  switch (kind) {
    case Kind::Continuous:
      if (count <= 1.0) {
        mean = 0.0;
        m2 = 0.0;
      } else {
        const double rest = count - 1.0;
        const double reduced = mean - (x - mean) / rest;
        m2 = std::max(0.0, m2 - (x - mean) * (x - reduced));
        mean = reduced;
      }
      break;
    case Kind::Integer:
      sum -= x;
      if (count <= 1.0) sum = 0.0;
      break;
    case Kind::Categorical:
      levels[static_cast<std::size_t>(x) - 1] -= 1.0;
      break;
  }
  count -= 1.0;
}

double class_log_marginal(const VariableKind& kind, const VariablePrior& prior, const ClassStats& s) {
  if (s.count == 0.0) return 0.0;
  const double m = s.count;
  switch (kind.tag) {
    case Kind::Continuous: {
      // Normal-inverse-gamma: sigma^2 ~ IG(a/2, b^2/2), mu | sigma^2 ~ N(c, sigma^2 / d).
      const double a = prior.a;
      const double dev = prior.c - s.mean;
      const double b2 = prior.b * prior.b + s.m2 + dev * dev * (prior.d * m / (prior.d + m));
      return -0.5 * m * kLogPi + 0.5 * (std::log(prior.d) - std::log(prior.d + m)) + std::lgamma(0.5 * (a + m)) -
             std::lgamma(0.5 * a) + a * std::log(prior.b) - 0.5 * (a + m) * std::log(b2);
    }
    case Kind::Integer: {
      // Gamma(a, rate b) prior on the Poisson rate.
      const double shape = prior.a + s.sum;
      return prior.a * std::log(prior.b) - std::lgamma(prior.a) + std::lgamma(shape) - shape * std::log(prior.b + m);
    }
    case Kind::Categorical: {
      const double a = prior.a;
      const double levels = static_cast<double>(kind.levels);
      double total = std::lgamma(levels * a) - levels * std::lgamma(a) - std::lgamma(m + levels * a);
      for (double c : s.levels) total += std::lgamma(c + a);
      return total;
    }
  }
  return 0.0;
}

double log_dirichlet_proportion_term(std::span<const std::size_t> counts, double u) {
  const double g = static_cast<double>(counts.size());
  double n = 0.0;
  double total = std::lgamma(g * u) - g * std::lgamma(u);
  for (std::size_t c : counts) {
    total += std::lgamma(static_cast<double>(c) + u);
    n += static_cast<double>(c);
  }
  return total - std::lgamma(n + g * u);
}

double log_marginal_variable(const Dataset& data, std::size_t j, const HardPartition& z, bool relevant,
                             const Hyperparameters& hyper) {
  check_partition(data, z);
  const Column& col = data.column(j);
  const VariablePrior& prior = hyper.variables.at(j);
  const int classes = relevant ? z.g : 1;
  std::vector<ClassStats> stats(static_cast<std::size_t>(classes), empty_stats(col.kind));
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (!col.is_observed(i)) continue;
    stats[relevant ? static_cast<std::size_t>(z.z[i]) : 0].add(col.values[i], col.kind.tag);
  }
  double total = column_constant(col);
  for (const ClassStats& s : stats) total += class_log_marginal(col.kind, prior, s);
  return total;
}

double log_integrated_complete(const Dataset& data, const HardPartition& z, const Model& model,
                               const Hyperparameters& hyper) {
  check_partition(data, z);
  const std::vector<std::size_t> counts = z.counts();
  double total = log_dirichlet_proportion_term(counts, hyper.u);
  for (std::size_t j = 0; j < data.d(); ++j) total += log_marginal_variable(data, j, z, model.omega[j] != 0, hyper);
  return total;
}

std::vector<std::uint8_t> model_step(const Dataset& data, const HardPartition& z, const Hyperparameters& hyper) {
  std::vector<std::uint8_t> omega(data.d(), 0);
  for (std::size_t j = 0; j < data.d(); ++j)
    omega[j] = log_marginal_variable(data, j, z, true, hyper) > log_marginal_variable(data, j, z, false, hyper);
  return omega;
}

MiclState::MiclState(const Dataset& data, const Hyperparameters& hyper, Model model, HardPartition z)
    : data_(&data), hyper_(&hyper), model_(std::move(model)), z_(std::move(z)) {
  check_partition(data, z_);
  if (z_.g != model_.g) throw Error(ErrorCode::InvalidArgument, "partition and model disagree on g");
  if (model_.omega.size() != data.d()) throw Error(ErrorCode::LengthMismatch, "omega length differs from d");
  const std::size_t d = data.d();
  counts_ = z_.counts();
  stats_.reserve(d * gs());
  class_value_.assign(d * gs(), 0.0);
  shared_value_.assign(d, 0.0);
  column_constant_.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    const Column& col = data.column(j);
    for (std::size_t k = 0; k < gs(); ++k) stats_.push_back(empty_stats(col.kind));
    ClassStats shared = empty_stats(col.kind);
    for (std::size_t i = 0; i < data.n(); ++i) {
      if (!col.is_observed(i)) continue;
      stats(j, z_.z[i]).add(col.values[i], col.kind.tag);
      shared.add(col.values[i], col.kind.tag);
    }
    for (int k = 0; k < model_.g; ++k)
      class_value_[j * gs() + static_cast<std::size_t>(k)] = class_log_marginal(col.kind, hyper.variables[j], stats(j, k));
    shared_value_[j] = class_log_marginal(col.kind, hyper.variables[j], shared);
    column_constant_[j] = column_constant(col);
  }
  refresh_total();
}

void MiclState::refresh_total() {
  double total = log_dirichlet_proportion_term(counts_, hyper_->u);
  for (std::size_t j = 0; j < data_->d(); ++j) total += column_value(j, model_.omega[j] != 0);
  log_icl_ = total;
}

double MiclState::column_value(std::size_t j, bool relevant) const {
  double total = column_constant_[j];
  if (!relevant) return total + shared_value_[j];
  for (std::size_t k = 0; k < gs(); ++k) total += class_value_[j * gs() + k];
  return total;
}

double MiclState::move_gain(std::size_t i, int k) const {
  const int from = z_.z[i];
  if (k == from) return 0.0;
  const double u = hyper_->u;
  double gain = std::log(static_cast<double>(counts_[static_cast<std::size_t>(k)]) + u) -
                std::log(static_cast<double>(counts_[static_cast<std::size_t>(from)]) - 1.0 + u);
  for (std::size_t j = 0; j < data_->d(); ++j) {
    if (!model_.omega[j] || !data_->observed(i, j)) continue;
    const Column& col = data_->column(j);
    const double x = col.values[i];
    const ClassStats& src = stats(j, from);
    const ClassStats& dst = stats(j, k);
    if (col.kind.tag == Kind::Categorical) {
      const double a = hyper_->variables[j].a;
      const double ma = static_cast<double>(col.kind.levels) * a;
      const auto h = static_cast<std::size_t>(x) - 1;
      gain += std::log(dst.levels[h] + a) - std::log(dst.count + ma) - std::log(src.levels[h] - 1.0 + a) +
              std::log(src.count - 1.0 + ma);
      continue;
    }
    ClassStats src_after = src;
    ClassStats dst_after = dst;
    src_after.remove(x, col.kind.tag);
    dst_after.add(x, col.kind.tag);
    const VariablePrior& prior = hyper_->variables[j];
    gain += class_log_marginal(col.kind, prior, src_after) + class_log_marginal(col.kind, prior, dst_after) -
            class_value_[j * gs() + static_cast<std::size_t>(from)] - class_value_[j * gs() + static_cast<std::size_t>(k)];
  }
  return gain;
}

void MiclState::move(std::size_t i, int k) {
  const int from = z_.z[i];
  if (k == from) return;
  z_.z[i] = k;
  --counts_[static_cast<std::size_t>(from)];
  ++counts_[static_cast<std::size_t>(k)];
  for (std::size_t j = 0; j < data_->d(); ++j) {
    if (!data_->observed(i, j)) continue;
    const Column& col = data_->column(j);
    stats(j, from).remove(col.values[i], col.kind.tag);
    stats(j, k).add(col.values[i], col.kind.tag);
    for (int c : {from, k})
      class_value_[j * gs() + static_cast<std::size_t>(c)] = class_log_marginal(col.kind, hyper_->variables[j], stats(j, c));
  }
  refresh_total();
}

std::vector<std::uint8_t> MiclState::best_omega() const {
  std::vector<std::uint8_t> omega(data_->d(), 0);
  for (std::size_t j = 0; j < data_->d(); ++j) omega[j] = column_value(j, true) > column_value(j, false);
  return omega;
}

void MiclState::set_omega(std::vector<std::uint8_t> omega) {
  if (omega.size() != data_->d()) throw Error(ErrorCode::LengthMismatch, "omega length differs from d");
  model_.omega = std::move(omega);
  refresh_total();
}

double MiclState::recompute() const { return log_integrated_complete(*data_, z_, model_, *hyper_); }

double MiclState::stats_drift() const {
  double drift = 0.0;
  for (std::size_t j = 0; j < data_->d(); ++j) {
    const Column& col = data_->column(j);
    std::vector<ClassStats> fresh(gs(), empty_stats(col.kind));
    for (std::size_t i = 0; i < data_->n(); ++i)
      if (col.is_observed(i)) fresh[static_cast<std::size_t>(z_.z[i])].add(col.values[i], col.kind.tag);
    for (int k = 0; k < model_.g; ++k) {
      const ClassStats& a = stats(j, k);
      const ClassStats& b = fresh[static_cast<std::size_t>(k)];
      drift = std::max({drift, std::abs(a.count - b.count), std::abs(a.mean - b.mean), std::abs(a.m2 - b.m2),
                        std::abs(a.sum - b.sum)});
      for (std::size_t h = 0; h < a.levels.size(); ++h) drift = std::max(drift, std::abs(a.levels[h] - b.levels[h]));
    }
  }
  return drift;
}

int partition_step(MiclState& state, std::mt19937_64& rng, int sweep_cap) {
  const std::size_t n = state.partition().n();
  const int g = state.model().g;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  int moves = 0;
  for (int sweep = 0; sweep < sweep_cap; ++sweep) {
    std::shuffle(order.begin(), order.end(), rng);
    int moved = 0;
    for (std::size_t i : order) {
      int best = state.partition().z[i];
      double best_gain = kMoveTolerance;
      for (int k = 0; k < g; ++k) {
        if (k == state.partition().z[i]) continue;
        const double gain = state.move_gain(i, k);
        if (gain > best_gain) {
          best_gain = gain;
          best = k;
        }
      }
      if (best != state.partition().z[i]) {
        state.move(i, best);
        ++moved;
      }
    }
    moves += moved;
    if (moved == 0) break;
  }
  return moves;
}

namespace {

MiclResult run_micl_start(const Dataset& data, int g, const Hyperparameters& hyper, const MiclConfig& config,
                          int start) {
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(start), 0x1c1u};
  std::mt19937_64 rng(seq);
  std::bernoulli_distribution coin(0.5);

  Model initial{g, std::vector<std::uint8_t>(data.d(), 0)};
  for (auto& w : initial.omega) w = coin(rng) ? 1 : 0;
  EmConfig em;
  em.n_starts = config.em_starts;
  em.max_iterations = config.em_max_iterations;
  em.seed = rng();
  em.threads = 1;
  const EmResult fit = run_em(data, initial, em);

  MiclState state(data, hyper, initial, map_partition(fit.fuzzy));
  MiclResult res;
  res.start = start;
  res.trace.push_back(state.log_icl());
  for (int alt = 0; alt < config.max_alternations; ++alt) {
    const int moves = partition_step(state, rng, config.sweep_cap);
    res.trace.push_back(state.log_icl());
    std::vector<std::uint8_t> omega = state.best_omega();
    const bool changed = omega != state.model().omega;
    state.set_omega(std::move(omega));
    res.trace.push_back(state.log_icl());
    if (moves == 0 && !changed) break;
  }
  res.model = state.model();
  res.z = state.partition();
  res.value = state.log_icl();
  return res;
}

}  // namespace

MiclResult run_micl(const Dataset& data, int g, const Hyperparameters& hyper, const MiclConfig& config) {
  if (g < 1) throw Error(ErrorCode::InvalidArgument, "g must be at least 1");
  if (config.n_starts < 1) throw Error(ErrorCode::InvalidArgument, "n_starts must be at least 1");
  const int threads = kernels::resolve_threads(config.threads);
  const int n_starts = config.n_starts;
  std::vector<MiclResult> results(static_cast<std::size_t>(n_starts));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(n_starts));
#pragma omp parallel for schedule(dynamic) num_threads(threads) if (threads > 1 && n_starts > 1)
  for (int s = 0; s < n_starts; ++s) {
    try {
      results[static_cast<std::size_t>(s)] = run_micl_start(data, g, hyper, config, s);
    } catch (...) {
      failures[static_cast<std::size_t>(s)] = std::current_exception();
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  std::size_t best = 0;
  for (std::size_t s = 1; s < results.size(); ++s)
    if (results[s].value > results[best].value) best = s;
  return std::move(results[best]);
}

}  // namespace mixsel
