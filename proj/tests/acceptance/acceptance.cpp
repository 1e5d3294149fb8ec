// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance 4 6        run only criteria 4 and 6
//
// Exit status is 0 only when every requested criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <thread>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "mixsel/criteria.hpp"
#include "mixsel/em.hpp"
#include "mixsel/error.hpp"
#include "mixsel/metrics.hpp"
#include "mixsel/micl.hpp"
#include "mixsel/simulate.hpp"
#include "oracles.hpp"

using namespace mixsel;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<VariableKind> kinds_of(const Dataset& data) {
  std::vector<VariableKind> out;
  for (std::size_t j = 0; j < data.d(); ++j) out.push_back(data.kind(j));
  return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------- 1

Column random_small_column(std::mt19937_64& rng, Kind kind, std::size_t n, bool missing) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  Column c;
  c.name = "x";
  c.values.resize(n);
  switch (kind) {
    case Kind::Continuous: {
      c.kind = VariableKind::continuous();
      const double loc = 4.0 * normal(rng);
      const double scale = std::exp(normal(rng));
      for (auto& v : c.values) v = loc + scale * normal(rng);
      break;
    }
    case Kind::Integer: {
      c.kind = VariableKind::integer();
      std::poisson_distribution<int> pois(std::exp(2.0 * unif(rng)));
      for (auto& v : c.values) v = pois(rng);
      break;
    }
    case Kind::Categorical: {
      const int levels = std::uniform_int_distribution<int>(2, 5)(rng);
      c.kind = VariableKind::categorical(levels);
      std::uniform_int_distribution<int> pick(1, levels);
      for (auto& v : c.values) v = pick(rng);
      break;
    }
  }
  if (missing) {
    c.observed.assign(n, 1);
    for (auto& o : c.observed) o = unif(rng) < 0.3 ? 0 : 1;
    c.observed[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)] = 1;
    for (std::size_t i = 0; i < n; ++i)
      if (!c.observed[i]) c.values[i] = std::numeric_limits<double>::quiet_NaN();
  }
  return c;
}

Outcome criterion1() {
  std::mt19937_64 rng(101);
  int compared = 0;
  int failed = 0;
  double worst = 0.0;
  for (Kind kind : {Kind::Continuous, Kind::Integer, Kind::Categorical}) {
    for (int rep = 0; rep < 200; ++rep) {
      const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 20)(rng);
      for (bool missing : {false, true}) {
        const Dataset data({random_small_column(rng, kind, n, missing)});
        const Hyperparameters hyper = Hyperparameters::defaults(data);
        for (int g = 1; g <= 3; ++g) {
          const HardPartition z = test::random_partition(rng, n, g);
          for (bool relevant : {false, true}) {
            const double value = log_marginal_variable(data, 0, z, relevant, hyper);
            const double ref = oracle::column_marginal(data, 0, z, relevant, hyper.variables[0]);
            const double err = std::abs(value - ref) / std::max(std::abs(ref), 1e-300);
            ++compared;
            if (!(std::abs(value - ref) <= 1e-4 * std::abs(ref) + 1e-9)) ++failed;
            if (std::abs(ref) > 1e-9) worst = std::max(worst, err);
          }
        }
      }
    }
  }
  return {failed == 0, fmt("%d comparisons, %d outside 1e-4 relative, worst relative error %.2e", compared, failed, worst)};
}

// ---------------------------------------------------------------- 2

Outcome criterion2() {
  std::mt19937_64 rng(202);
  int identical = 0;
  const int datasets = 50;
  for (int rep = 0; rep < datasets; ++rep) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(20, 80)(rng);
    const std::size_t d = std::uniform_int_distribution<std::size_t>(2, 7)(rng);
    const Dataset plain = test::random_mixed(rng, n, d, 0.0);
    const Dataset masked = test::with_full_mask(plain);
    const Hyperparameters hyper = Hyperparameters::defaults(plain);
    bool same = Hyperparameters::defaults(masked).variables.size() == hyper.variables.size();

    EmConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(rep);
    cfg.n_starts = 3;
    const int g = 1 + rep % 3;
    Model model{g, std::vector<std::uint8_t>(d)};
    for (auto& w : model.omega) w = rng() & 1;
    const EmResult a = run_em(plain, model, cfg);
    const EmResult b = run_em(masked, model, cfg);
    same = same && a.theta == b.theta && a.fuzzy == b.fuzzy && a.trace == b.trace && a.loglik == b.loglik;
    const EmResult pa = run_penalized_em(plain, g, 0.5 * std::log(static_cast<double>(n)), cfg);
    const EmResult pb = run_penalized_em(masked, g, 0.5 * std::log(static_cast<double>(n)), cfg);
    same = same && pa.theta == pb.theta && pa.model == pb.model && pa.trace == pb.trace;

    const HardPartition z = test::random_partition(rng, n, g);
    for (std::size_t j = 0; j < d; ++j)
      for (bool relevant : {false, true})
        same = same && log_marginal_variable(plain, j, z, relevant, hyper) ==
                           log_marginal_variable(masked, j, z, relevant, hyper);
    MiclConfig mc;
    mc.seed = static_cast<std::uint64_t>(rep);
    mc.n_starts = 2;
    const MiclResult ma = run_micl(plain, g, hyper, mc);
    const MiclResult mb = run_micl(masked, g, hyper, mc);
    same = same && ma.value == mb.value && ma.z == mb.z && ma.model == mb.model;
    identical += same;
  }
  return {identical == datasets,
          fmt("%d of %d datasets bit-identical (EM, penalized EM, marginals, MICL)", identical, datasets)};
}

// ---------------------------------------------------------------- 3

Outcome criterion3() {
  std::mt19937_64 rng(303);
  const int runs = 500;
  int clean = 0;
  double worst = 0.0;
  std::uniform_real_distribution<double> unif;
  for (int run = 0; run < runs; ++run) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(30, 120)(rng);
    const std::size_t d = std::uniform_int_distribution<std::size_t>(2, 8)(rng);
    const Dataset data = test::random_mixed(rng, n, d, 0.2 * unif(rng), 0.5 + unif(rng));
    EmConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(run);
    cfg.n_starts = 1;
    const int g = 1 + static_cast<int>(rng() % 3);
    EmResult r;
    if (run % 2 == 0) {
      Model model{g, std::vector<std::uint8_t>(d)};
      for (auto& w : model.omega) w = rng() & 1;
      r = run_em(data, model, cfg);
    } else {
      r = run_penalized_em(data, g, 0.5 * std::log(static_cast<double>(n)), cfg);
    }
    double drop = 0.0;
    for (std::size_t s = 1; s < r.trace.size(); ++s) drop = std::max(drop, r.trace[s - 1] - r.trace[s]);
    worst = std::max(worst, drop);
    clean += drop <= 1e-8;
  }
  return {clean == runs, fmt("%d of %d runs monotone within 1e-8, largest decrease %.2e", clean, runs, worst)};
}

// ---------------------------------------------------------------- 4

Outcome criterion4() {
  const int instances = 100;
  const std::size_t n = 60;
  const std::size_t d = 6;
  const double c = 0.5 * std::log(static_cast<double>(n));
  int hits = 0;
  double worst = 0.0;
  for (int rep = 0; rep < instances; ++rep) {
    std::mt19937_64 rng(4000 + rep);
    const Dataset data = test::random_mixed(rng, n, d, 0.0, 0.5 + 0.01 * rep);
    const std::vector<VariableKind> kinds = kinds_of(data);
    EmConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(rep);
    cfg.n_starts = 50;
    cfg.polish_tolerance = 1e-12;
    const EmResult pen = run_penalized_em(data, 2, c, cfg);
    double best = -std::numeric_limits<double>::infinity();
    for (unsigned mask = 0; mask < (1u << d); ++mask) {
      Model m{2, std::vector<std::uint8_t>(d)};
      for (std::size_t j = 0; j < d; ++j) m.omega[j] = (mask >> j) & 1;
      const EmResult r = run_em(data, m, cfg);
      best = std::max(best, r.loglik - static_cast<double>(count_params(m, kinds)) * c);
    }
    const double pen_bic = pen.loglik - static_cast<double>(count_params(pen.model, kinds)) * c;
    hits += pen_bic >= best - 1e-6;
    worst = std::max(worst, best - pen_bic);
  }
  return {hits >= 95, fmt("%d of %d instances within 1e-6 of the enumerated best (need 95), largest shortfall %.2e",
                          hits, instances, worst)};
}

// ---------------------------------------------------------------- 5

Outcome criterion5() {
  const int instances = 100;
  int hits = 0;
  int joint_hits = 0;
  int local = 0;
  for (int rep = 0; rep < instances; ++rep) {
    std::mt19937_64 rng(5000 + rep);
    const std::size_t n = 8;
    const std::size_t d = 1 + static_cast<std::size_t>(rep % 3);
    const Dataset data = test::random_mixed(rng, n, d, rep % 4 == 3 ? 0.15 : 0.0, 1.5);
    const Hyperparameters hyper = Hyperparameters::defaults(data);
    MiclConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(rep);
    cfg.n_starts = 20;
    const MiclResult r = run_micl(data, 2, hyper, cfg);

    double best_at_model = -std::numeric_limits<double>::infinity();
    double best_joint = best_at_model;
    oracle::for_each_partition(n, 2, [&](const HardPartition& z) {
      best_at_model = std::max(best_at_model, log_integrated_complete(data, z, r.model, hyper));
      for (unsigned mask = 0; mask < (1u << d); ++mask) {
        Model m{2, std::vector<std::uint8_t>(d)};
        for (std::size_t j = 0; j < d; ++j) m.omega[j] = (mask >> j) & 1;
        best_joint = std::max(best_joint, log_integrated_complete(data, z, m, hyper));
      }
    });
    const double tol = 1e-8 * (1.0 + std::abs(best_at_model));
    if (std::abs(r.value - best_at_model) <= tol) {
      ++hits;
    } else {
      bool is_local = true;
      for (std::size_t i = 0; i < n; ++i) {
        HardPartition nb = r.z;
        nb.z[i] = 1 - nb.z[i];
        if (log_integrated_complete(data, nb, r.model, hyper) > r.value + kMoveTolerance) is_local = false;
      }
      local += is_local;
    }
    joint_hits += std::abs(r.value - best_joint) <= 1e-8 * (1.0 + std::abs(best_joint));
  }
  const bool pass = hits >= 95 && hits + local == instances;
  return {pass, fmt("%d of %d equal the enumerated maximum (need 95), %d of the rest are local maxima; "
                    "%d also maximize jointly over omega",
                    hits, instances, local, joint_hits)};
}

// ---------------------------------------------------------------- 6 to 8

struct Campaign {
  double mean_ari = 0.0;
  double mean_g = 0.0;
  double mean_rel = 0.0;
};

std::vector<Campaign> campaign(ScenarioSpec base, const std::vector<Criterion>& criteria, int replicates,
                               std::uint64_t seed) {
  base.delta = calibrate_delta(base);
  std::vector<Campaign> out(criteria.size());
  for (int rep = 0; rep < replicates; ++rep) {
    ScenarioSpec spec = base;
    spec.seed = mix_seed(seed, static_cast<std::uint64_t>(rep));
    const SimulatedData sim = simulate(spec);
    for (std::size_t c = 0; c < criteria.size(); ++c) {
      SelectConfig cfg;
      cfg.em.seed = mix_seed(spec.seed, 100 + c);
      cfg.micl.seed = mix_seed(spec.seed, 200 + c);
      const SelectionReport report = select_model(sim.data, criteria[c], 3, cfg);
      out[c].mean_ari += ari(report.partition, sim.truth) / replicates;
      out[c].mean_g += static_cast<double>(report.g()) / replicates;
      out[c].mean_rel += static_cast<double>(report.model.relevant_count()) / static_cast<double>(sim.data.d()) / replicates;
    }
  }
  return out;
}

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

Outcome criterion6() {
  ScenarioSpec spec;
  spec.family = Family::ContinuousTridiag;
  spec.rho = 0.0;
  spec.target_error = 0.05;
  spec.d = 10;
  const auto small = campaign(spec, {Criterion::Bic, Criterion::Micl}, 20, 6010);
  spec.d = 100;
  const auto large = campaign(spec, {Criterion::Bic, Criterion::BicNoSelect}, 20, 6100);
  const bool a = within(small[0].mean_ari, 0.78, 0.10) && within(small[1].mean_ari, 0.78, 0.10) &&
                 within(small[0].mean_g, 2.0, 0.2) && within(small[1].mean_g, 2.0, 0.2);
  const bool b = within(large[0].mean_ari, 0.77, 0.10) && large[1].mean_ari <= 0.10 &&
                 within(large[0].mean_rel, 0.06, 0.03);
  return {a && b,
          fmt("d=10: bic ARI %.3f g %.2f, micl ARI %.3f g %.2f (target 0.78/0.78, g 2.00); "
              "d=100: bic ARI %.3f rel %.3f, no selection ARI %.3f (target 0.77, 0.06, 0.00)",
              small[0].mean_ari, small[0].mean_g, small[1].mean_ari, small[1].mean_g, large[0].mean_ari,
              large[0].mean_rel, large[1].mean_ari)};
}

Outcome criterion7() {
  ScenarioSpec spec;
  spec.family = Family::MixedIndep;
  spec.d = 12;
  spec.target_error = 0.05;
  spec.missing_rate = 0.2;
  const auto r = campaign(spec, {Criterion::Bic, Criterion::Micl}, 20, 7012);
  const bool pass = within(r[0].mean_ari, 0.69, 0.10) && within(r[0].mean_g, 2.0, 0.2) &&
                    within(r[0].mean_rel, 0.50, 0.10) && within(r[1].mean_ari, 0.68, 0.10);
  return {pass, fmt("bic ARI %.3f g %.2f rel %.3f (target 0.69, 2.00, 0.50); micl ARI %.3f g %.2f rel %.3f (target 0.68)",
                    r[0].mean_ari, r[0].mean_g, r[0].mean_rel, r[1].mean_ari, r[1].mean_g, r[1].mean_rel)};
}

Outcome criterion8() {
  bool pass = true;
  std::string detail;
  for (std::size_t d : {12u, 24u, 48u}) {
    ScenarioSpec spec;
    spec.family = Family::MixedIndep;
    spec.d = d;
    spec.target_error = 0.10;
    spec.missing_rate = 0.2;
    const auto r = campaign(spec, {Criterion::Bic, Criterion::BicNoSelect}, 20, 8000 + d);
    pass = pass && r[0].mean_ari > r[1].mean_ari;
    detail += fmt("%sd=%zu: selection %.3f vs no selection %.3f", detail.empty() ? "" : "; ", d, r[0].mean_ari,
                  r[1].mean_ari);
  }
  return {pass, detail + " (target d=12: 0.43 vs 0.12)"};
}

// ---------------------------------------------------------------- 9

Outcome criterion9() {
  int failed = 0;
  const std::vector<int> a{1, 1, 2, 2};
  failed += std::abs(ari(a, a) - 1.0) > 1e-12;
  failed += std::abs(ari(a, std::vector<int>{1, 2, 1, 2}) + 0.5) > 1e-12;
  try {
    ari(a, std::vector<int>{1, 2});
    ++failed;
  } catch (const Error& e) {
    failed += e.code() != ErrorCode::LengthMismatch;
  }
  std::mt19937_64 rng(909);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 200)(rng);
    const int ga = std::uniform_int_distribution<int>(1, 5)(rng);
    const int gb = std::uniform_int_distribution<int>(1, 5)(rng);
    const HardPartition x = test::random_partition(rng, n, ga);
    const HardPartition y = test::random_partition(rng, n, gb);
    std::vector<int> perm(static_cast<std::size_t>(ga));
    for (int k = 0; k < ga; ++k) perm[static_cast<std::size_t>(k)] = k;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> relabelled(n);
    for (std::size_t i = 0; i < n; ++i) relabelled[i] = perm[static_cast<std::size_t>(x.z[i])] + 7;
    const double base = ari(x.z, y.z);
    failed += std::abs(ari(relabelled, y.z) - base) > 1e-12;
    failed += std::abs(ari(y.z, x.z) - base) > 1e-12;
  }
  return {failed == 0, fmt("3 examples and 1000 relabelling checks, %d failures", failed)};
}

// ---------------------------------------------------------------- 10

Outcome criterion10() {
  ScenarioSpec spec;
  spec.family = Family::ContinuousTridiag;
  spec.d = 100;
  spec.seed = 1010;
  const SimulatedData sim = simulate(spec);
  SelectConfig cfg;
  cfg.em.seed = 1;
  cfg.micl.seed = 2;
  auto t0 = Clock::now();
  const SelectionReport b = select_model(sim.data, Criterion::Bic, 3, cfg);
  const double bic_s = std::chrono::duration<double>(Clock::now() - t0).count();
  t0 = Clock::now();
  const SelectionReport m = select_model(sim.data, Criterion::Micl, 3, cfg);
  const double micl_s = std::chrono::duration<double>(Clock::now() - t0).count();
  return {bic_s < 60.0 && micl_s < 300.0,
          fmt("bic %.1f s (limit 60, g=%d), micl %.1f s (limit 300, g=%d), %u hardware threads", bic_s, b.g(), micl_s,
              m.g(), std::thread::hardware_concurrency())};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<Outcome()>>> all{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},  {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10}};
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& [id, run] : all) {
    if (!wanted.empty() && !wanted.count(id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    std::printf("criterion %2d: %s  %s [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
