#include "mixsel/criteria.hpp"

#include <chrono>
#include <cmath>

#include "mixsel/error.hpp"

namespace mixsel {

long count_params(const Model& model, std::span<const VariableKind> kinds) {
  long total = model.g - 1;
  for (std::size_t j = 0; j < kinds.size(); ++j)
    total += static_cast<long>(kinds[j].free_parameters()) * (model.omega[j] ? model.g : 1);
  return total;
}

double bic(double loglik, long n_params, std::size_t n) {
  return loglik - 0.5 * static_cast<double>(n_params) * std::log(static_cast<double>(n));
}

double aic(double loglik, long n_params) { return loglik - static_cast<double>(n_params); }

HardPartition map_partition(const FuzzyPartition& fuzzy) {
  HardPartition z{fuzzy.g, std::vector<int>(fuzzy.n, 0)};
  for (std::size_t i = 0; i < fuzzy.n; ++i) {
    int best = 0;
    for (int k = 1; k < fuzzy.g; ++k)
      if (fuzzy(i, k) > fuzzy(i, best)) best = k;
    z.z[i] = best;
  }
  return z;
}

std::string to_string(Criterion criterion) {
  switch (criterion) {
    case Criterion::Bic: return "bic";
    case Criterion::Aic: return "aic";
    case Criterion::Micl: return "micl";
    case Criterion::BicNoSelect: return "bic-noselect";
    case Criterion::IclNoSelect: return "icl-noselect";
  }
  return "?";
}

Criterion parse_criterion(const std::string& name) {
  for (Criterion c : {Criterion::Bic, Criterion::Aic, Criterion::Micl, Criterion::BicNoSelect, Criterion::IclNoSelect})
    if (to_string(c) == name) return c;
  throw Error(ErrorCode::InvalidArgument, "unknown criterion '" + name + "'");
}

namespace {

std::uint64_t seed_for(std::uint64_t seed, int g) { return seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(g); }

}  // namespace

SelectionReport select_model(const Dataset& data, Criterion criterion, int g_max, const SelectConfig& config) {
  if (g_max < 1) throw Error(ErrorCode::InvalidArgument, "g_max must be at least 1");
  std::vector<VariableKind> kinds;
  for (const Column& c : data.columns()) kinds.push_back(c.kind);
  const Hyperparameters hyper = config.hyper ? *config.hyper : Hyperparameters::defaults(data);
  const std::size_t n = data.n();

  SelectionReport report;
  report.criterion = criterion;
  std::vector<EmResult> fits;

  for (int g = 1; g <= g_max; ++g) {
    const auto started = std::chrono::steady_clock::now();
    SelectionRecord rec;
    EmConfig em = config.em;
    em.seed = seed_for(config.em.seed, g);
    switch (criterion) {
      case Criterion::Bic:
      case Criterion::Aic: {
        const double c = criterion == Criterion::Bic ? 0.5 * std::log(static_cast<double>(n)) : 1.0;
        EmResult fit = run_penalized_em(data, g, c, em);
        rec.model = fit.model;
        rec.loglik = fit.loglik;
        rec.n_params = count_params(fit.model, kinds);
        rec.value = fit.objective;
        rec.theta = fit.theta;
        fits.push_back(std::move(fit));
        break;
      }
      case Criterion::BicNoSelect:
      case Criterion::IclNoSelect: {
        EmResult fit = run_em(data, Model::all_relevant(g, data.d()), em);
        rec.model = fit.model;
        rec.loglik = fit.loglik;
        rec.n_params = count_params(fit.model, kinds);
        rec.value = criterion == Criterion::BicNoSelect
                        ? bic(fit.loglik, rec.n_params, n)
                        : log_integrated_complete(data, map_partition(fit.fuzzy), fit.model, hyper);
        rec.theta = fit.theta;
        fits.push_back(std::move(fit));
        break;
      }
      case Criterion::Micl: {
        MiclConfig mc = config.micl;
        mc.seed = seed_for(config.micl.seed, g);
        MiclResult res = run_micl(data, g, hyper, mc);
        rec.model = res.model;
        rec.value = res.value;
        rec.n_params = count_params(res.model, kinds);
        rec.z_star = res.z;
        break;
      }
    }
    rec.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    report.records.push_back(std::move(rec));
    const auto idx = report.records.size() - 1;
    if (report.records[idx].value > report.records[report.best].value) report.best = idx;
  }

  const SelectionRecord& best = report.records[report.best];
  report.model = best.model;
  if (criterion == Criterion::Micl) {
    EmConfig em = config.em;
    em.seed = seed_for(config.em.seed, 0);
    const EmResult refit = run_em(data, best.model, em);
    report.records[report.best].loglik = refit.loglik;
    report.theta = refit.theta;
    report.fuzzy = refit.fuzzy;
    report.loglik = refit.loglik;
    report.partition = *best.z_star;
  } else {
    const EmResult& fit = fits[report.best];
    report.theta = fit.theta;
    report.fuzzy = fit.fuzzy;
    report.loglik = fit.loglik;
    report.partition = map_partition(fit.fuzzy);
  }
  return report;
}

}  // namespace mixsel
