// varsel: clustering with variable selection for mixed-type data.
//
//   varsel cluster data.csv --seed 7 --out run/
//   varsel simulate --family continuous --d 100 --criteria bic,bic-noselect --seed 1 --out sim/
//   varsel ari run/partition.csv truth.csv

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mixsel/criteria.hpp"
#include "mixsel/csv.hpp"
#include "mixsel/error.hpp"
#include "mixsel/metrics.hpp"
#include "mixsel/simulate.hpp"

#ifndef MIXSEL_VERSION
#define MIXSEL_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace mixsel;

namespace {

constexpr int kExitNumerical = 1;
constexpr int kExitUsage = 2;

// Thrown for I/O problems and flag combinations CLI11 cannot check.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string format17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double finite(double x, const char* what) {
  if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, std::string("non-finite ") + what);
  return x;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out = open_out(path);
  out << doc.dump(2) << '\n';
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create " + dir.string() + ": " + ec.message());
}

json omega_json(const Model& m) {
  json a = json::array();
  for (auto w : m.omega) a.push_back(static_cast<int>(w));
  return a;
}

std::string kind_token(const VariableKind& kind) {
  switch (kind.tag) {
    case Kind::Continuous: return "cont";
    case Kind::Integer: return "int";
    case Kind::Categorical: return "cat";
  }
  return "?";
}

json block_json(const Block& block) {
  if (auto g = std::get_if<GaussianBlock>(&block))
    return {{"mu", finite(g->mu, "mean")}, {"sigma", finite(g->sigma, "standard deviation")}};
  if (auto p = std::get_if<PoissonBlock>(&block)) return {{"lambda", finite(p->lambda, "rate")}};
  json probs = json::array();
  for (double q : std::get<CategoricalBlock>(block).probs) probs.push_back(finite(q, "probability"));
  return {{"probs", probs}};
}

// ---------------------------------------------------------------- cluster

struct ClusterArgs {
  std::string data;
  std::string schema;
  std::string criterion = "bic";
  int gmax = 3;
  int starts = 20;
  std::uint64_t seed = 0;
  std::string out;
  int threads = 0;
};

json origins_json(const std::vector<ColumnOrigin>& origins) {
  json cols = json::array();
  for (const ColumnOrigin& o : origins) {
    json c = {{"name", o.name}, {"kind", o.kind}, {"inferred", o.inferred}};
    if (!o.levels.empty()) {
      json levels = json::object();
      for (std::size_t h = 0; h < o.levels.size(); ++h) levels[std::to_string(h + 1)] = o.levels[h];
      c["levels"] = levels;
    }
    cols.push_back(c);
  }
  return cols;
}

int run_cluster(const ClusterArgs& args, const std::string& command_line) {
  const auto t_start = Clock::now();
  std::optional<Schema> schema;
  if (!args.schema.empty()) schema = read_schema_file(args.schema);
  const CsvTable table = read_csv_file(args.data, schema);
  const Dataset& data = table.data;
  const double t_read = seconds_since(t_start);

  const Criterion criterion = parse_criterion(args.criterion);
  SelectConfig cfg;
  cfg.em.seed = args.seed;
  cfg.em.n_starts = args.starts;
  cfg.em.threads = args.threads;
  cfg.micl.seed = mix_seed(args.seed, 1);
  cfg.micl.n_starts = args.starts;
  cfg.micl.threads = args.threads;

  const auto t_fit = Clock::now();
  const SelectionReport report = select_model(data, criterion, args.gmax, cfg);
  const double fit_seconds = seconds_since(t_fit);

  const fs::path dir(args.out);
  make_dir(dir);

  json relevant = json::array();
  for (std::size_t j = 0; j < data.d(); ++j)
    if (report.model.omega[j]) relevant.push_back(data.column(j).name);
  json records = json::array();
  for (const SelectionRecord& r : report.records) {
    json rec = {{"g", r.model.g},
                {"value", finite(r.value, "criterion value")},
                {"n_params", r.n_params},
                {"omega", omega_json(r.model)}};
    if (criterion != Criterion::Micl) rec["loglik"] = finite(r.loglik, "log-likelihood");
    records.push_back(rec);
  }
  const json model = {{"manifest", "manifest.json"},
                      {"criterion", to_string(criterion)},
                      {"n", data.n()},
                      {"d", data.d()},
                      {"g", report.g()},
                      {"value", finite(report.value(), "criterion value")},
                      {"omega", omega_json(report.model)},
                      {"relevant", relevant},
                      {"records", records}};
  write_json(dir / "model.json", model);

  {
    std::ofstream out = open_out(dir / "partition.csv");
    out << "row,label";
    for (int k = 1; k <= report.fuzzy.g; ++k) out << ",t" << k;
    out << '\n';
    for (std::size_t i = 0; i < data.n(); ++i) {
      out << (i + 1) << ',' << (report.partition.z[i] + 1);
      for (int k = 0; k < report.fuzzy.g; ++k) out << ',' << format17(finite(report.fuzzy(i, k), "responsibility"));
      out << '\n';
    }
  }

  json variables = json::array();
  for (std::size_t j = 0; j < data.d(); ++j) {
    json comps = json::array();
    for (int k = 0; k < report.theta.g; ++k) comps.push_back(block_json(report.theta.at(k, j)));
    variables.push_back({{"name", data.column(j).name},
                         {"kind", kind_token(data.kind(j))},
                         {"relevant", report.model.omega[j] != 0},
                         {"components", comps}});
  }
  json tau = json::array();
  for (double t : report.theta.tau) tau.push_back(finite(t, "proportion"));
  const json parameters = {{"manifest", "manifest.json"},
                           {"g", report.theta.g},
                           {"source", criterion == Criterion::Micl ? "em-refit" : "selection-fit"},
                           {"loglik", finite(report.loglik, "log-likelihood")},
                           {"tau", tau},
                           {"variables", variables}};
  write_json(dir / "parameters.json", parameters);

  json per_g = json::array();
  for (const SelectionRecord& r : report.records) per_g.push_back({{"g", r.model.g}, {"seconds", r.runtime_seconds}});
  const json manifest = {
      {"software", "varsel"},
      {"version", MIXSEL_VERSION},
      {"command", "cluster"},
      {"command_line", command_line},
      {"seed", args.seed},
      {"input", {{"data", args.data}, {"schema", args.schema.empty() ? json(nullptr) : json(args.schema)}}},
      {"columns", origins_json(table.origins)},
      {"config",
       {{"criterion", to_string(criterion)},
        {"gmax", args.gmax},
        {"starts", args.starts},
        {"threads", args.threads},
        {"em", {{"max_iterations", cfg.em.max_iterations},
                {"rel_tolerance", cfg.em.rel_tolerance},
                {"warmup_iterations", cfg.em.warmup_iterations},
                {"flip_rounds", cfg.em.flip_rounds},
                {"empty_component_policy", "restart"}}},
        {"micl", {{"seed", cfg.micl.seed},
                  {"em_starts", cfg.micl.em_starts},
                  {"sweep_cap", cfg.micl.sweep_cap},
                  {"max_alternations", cfg.micl.max_alternations}}}}},
      {"outputs", {"model.json", "partition.csv", "parameters.json"}},
      {"seconds", {{"read", t_read}, {"select", fit_seconds}, {"per_g", per_g}, {"total", seconds_since(t_start)}}}};
  write_json(dir / "manifest.json", manifest);

  std::cout << to_string(criterion) << ": g = " << report.g() << ", " << relevant.size() << " of " << data.d()
            << " variables relevant, value = " << format17(report.value()) << '\n';
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string family = "continuous";
  std::size_t n = 200;
  std::size_t d = 10;
  std::size_t r = 6;
  double rho = 0.0;
  double target_error = 0.05;
  double missing = 0.0;
  int replicates = 20;
  std::uint64_t seed = 0;
  std::vector<std::string> criteria{"bic"};
  int gmax = 3;
  int starts = 20;
  std::string out;
  int threads = 0;
};

struct ReplicateRecord {
  int replicate = 0;
  std::uint64_t data_seed = 0;
  Criterion criterion = Criterion::Bic;
  double ari = 0.0;
  int g = 0;
  double relevant_rate = 0.0;
  double value = 0.0;
  double seconds = 0.0;
};

int run_simulate(const SimulateArgs& args, const std::string& command_line) {
  const auto t_start = Clock::now();
  std::vector<Criterion> criteria;
  for (const std::string& c : args.criteria) criteria.push_back(parse_criterion(c));

  ScenarioSpec base;
  base.family = args.family == "mixed" ? Family::MixedIndep : Family::ContinuousTridiag;
  base.n = args.n;
  base.d = args.d;
  base.r = args.r;
  base.rho = args.rho;
  base.target_error = args.target_error;
  base.missing_rate = args.missing;
  const double delta = calibrate_delta(base);
  base.delta = delta;

  const int threads = kernels::resolve_threads(args.threads);
  const int reps = args.replicates;
  const std::size_t per_rep = criteria.size();
  std::vector<ReplicateRecord> records(static_cast<std::size_t>(reps) * per_rep);
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(reps));

#pragma omp parallel for schedule(dynamic) num_threads(threads) if (threads > 1 && reps > 1)
  for (int rep = 0; rep < reps; ++rep) {
    try {
      ScenarioSpec spec = base;
      spec.seed = mix_seed(args.seed, static_cast<std::uint64_t>(rep));
      const SimulatedData sim = simulate(spec);
      for (std::size_t c = 0; c < per_rep; ++c) {
        SelectConfig cfg;
        cfg.em.seed = mix_seed(spec.seed, 100 + c);
        cfg.em.n_starts = args.starts;
        cfg.em.threads = 1;
        cfg.micl.seed = mix_seed(spec.seed, 200 + c);
        cfg.micl.n_starts = args.starts;
        cfg.micl.threads = 1;
        const auto t0 = Clock::now();
        const SelectionReport report = select_model(sim.data, criteria[c], args.gmax, cfg);
        ReplicateRecord& rec = records[static_cast<std::size_t>(rep) * per_rep + c];
        rec.replicate = rep + 1;
        rec.data_seed = spec.seed;
        rec.criterion = criteria[c];
        rec.ari = ari(report.partition, sim.truth);
        rec.g = report.g();
        rec.relevant_rate = static_cast<double>(report.model.relevant_count()) / static_cast<double>(sim.data.d());
        rec.value = report.value();
        rec.seconds = seconds_since(t0);
      }
    } catch (...) {
      failures[static_cast<std::size_t>(rep)] = std::current_exception();
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  const fs::path dir(args.out);
  make_dir(dir);
  {
    std::ofstream out = open_out(dir / "replicates.csv");
    out << "replicate,criterion,data_seed,ari,g,relevant_rate,value\n";
    for (const ReplicateRecord& r : records)
      out << r.replicate << ',' << to_string(r.criterion) << ',' << r.data_seed << ',' << format17(finite(r.ari, "ARI"))
          << ',' << r.g << ',' << format17(r.relevant_rate) << ',' << format17(finite(r.value, "criterion value"))
          << '\n';
  }
  std::ostringstream table;
  table << "criterion,replicates,mean_ari,sd_ari,mean_g,mean_relevant_rate\n";
  for (std::size_t c = 0; c < per_rep; ++c) {
    double s_ari = 0.0, s2_ari = 0.0, s_g = 0.0, s_rel = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
      const ReplicateRecord& r = records[static_cast<std::size_t>(rep) * per_rep + c];
      s_ari += r.ari;
      s2_ari += r.ari * r.ari;
      s_g += r.g;
      s_rel += r.relevant_rate;
    }
    const double m = static_cast<double>(reps);
    const double mean_ari = s_ari / m;
    const double sd_ari = reps > 1 ? std::sqrt(std::max(0.0, (s2_ari - m * mean_ari * mean_ari) / (m - 1.0))) : 0.0;
    table << to_string(criteria[c]) << ',' << reps << ',' << format17(mean_ari) << ',' << format17(sd_ari) << ','
          << format17(s_g / m) << ',' << format17(s_rel / m) << '\n';
  }
  open_out(dir / "summary.csv") << table.str();

  json per_rep_seconds = json::array();
  for (const ReplicateRecord& r : records)
    per_rep_seconds.push_back({{"replicate", r.replicate}, {"criterion", to_string(r.criterion)}, {"seconds", r.seconds}});
  json crit = json::array();
  for (Criterion c : criteria) crit.push_back(to_string(c));
  const json manifest = {
      {"software", "varsel"},
      {"version", MIXSEL_VERSION},
      {"command", "simulate"},
      {"command_line", command_line},
      {"seed", args.seed},
      {"scenario",
       {{"family", args.family},
        {"n", args.n},
        {"d", args.d},
        {"r", args.r},
        {"rho", args.rho},
        {"target_error", args.target_error},
        {"missing_rate", args.missing},
        {"delta", delta},
        {"binary_shift", base.binary_shift}}},
      {"config", {{"criteria", crit}, {"gmax", args.gmax}, {"starts", args.starts}, {"replicates", reps},
                  {"threads", args.threads}}},
      {"outputs", {"replicates.csv", "summary.csv"}},
      {"seconds", {{"per_replicate", per_rep_seconds}, {"total", seconds_since(t_start)}}}};
  write_json(dir / "manifest.json", manifest);

  std::cout << table.str();
  return 0;
}

// ---------------------------------------------------------------- ari

// Labels from a partition file: a `label` column when the header names one,
// otherwise the first column. A header row is detected by a non-numeric first field.
std::vector<int> read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path);
  std::vector<int> labels;
  std::string line;
  std::size_t column = 0;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (first) {
      first = false;
      char* end = nullptr;
      std::strtol(fields[0].c_str(), &end, 10);
      if (end == fields[0].c_str() || *end != '\0') {
        for (std::size_t c = 0; c < fields.size(); ++c)
          if (fields[c] == "label") column = c;
        continue;
      }
    }
    if (column >= fields.size()) throw Error(ErrorCode::Parse, path + ":" + std::to_string(line_no) + ": missing label");
    char* end = nullptr;
    const long v = std::strtol(fields[column].c_str(), &end, 10);
    if (end == fields[column].c_str() || *end != '\0')
      throw Error(ErrorCode::Parse, path + ":" + std::to_string(line_no) + ": label '" + fields[column] + "' is not an integer");
    labels.push_back(static_cast<int>(v));
  }
  return labels;
}

int run_ari(const std::string& a, const std::string& b) {
  const std::vector<int> x = read_labels(a);
  const std::vector<int> y = read_labels(b);
  std::printf("%.6f\n", ari(x, y));
  return 0;
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyComponent:
    case ErrorCode::EmptyWeight:
    case ErrorCode::NoRoot:
    case ErrorCode::NonPositiveRate:
    case ErrorCode::UnsupportedValue:
      return kExitNumerical;
    default:
      return kExitUsage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-based clustering of mixed-type data with variable selection"};
  app.set_version_flag("--version", MIXSEL_VERSION);
  app.require_subcommand(1);

  const std::vector<std::string> criterion_names{"bic", "aic", "micl", "bic-noselect", "icl-noselect"};

  ClusterArgs cl;
  CLI::App* cluster = app.add_subcommand("cluster", "Select g and the relevant variables for one dataset");
  cluster->add_option("data", cl.data, "CSV file with a header row")->required()->check(CLI::ExistingFile);
  cluster->add_option("--schema", cl.schema, "Sidecar schema, one name:kind per line")->check(CLI::ExistingFile);
  cluster->add_option("--criterion", cl.criterion, "Selection criterion")
      ->capture_default_str()
      ->check(CLI::IsMember(criterion_names));
  cluster->add_option("--gmax", cl.gmax, "Largest number of components")->capture_default_str()->check(CLI::PositiveNumber);
  cluster->add_option("--starts", cl.starts, "Random starts per g")->capture_default_str()->check(CLI::PositiveNumber);
  cluster->add_option("--seed", cl.seed, "Random seed")->required();
  cluster->add_option("--out", cl.out, "Output directory")->required();
  cluster->add_option("--threads", cl.threads, "Worker threads (0 = all cores)")->capture_default_str()->check(CLI::NonNegativeNumber);

  SimulateArgs sm;
  CLI::App* simulate_cmd = app.add_subcommand("simulate", "Run a replicated simulation campaign");
  simulate_cmd->add_option("--family", sm.family, "Generative family")
      ->capture_default_str()
      ->check(CLI::IsMember({"continuous", "mixed"}));
  simulate_cmd->add_option("--n", sm.n, "Observations per replicate")->capture_default_str()->check(CLI::Range(2, 100000000));
  simulate_cmd->add_option("--d", sm.d, "Variables")->capture_default_str()->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--r", sm.r, "Discriminative variables")->capture_default_str()->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--rho", sm.rho, "Neighbour correlation (continuous family)")->capture_default_str()->check(CLI::Range(-0.49, 0.49));
  simulate_cmd->add_option("--target-error", sm.target_error, "Bayes misclassification rate")
      ->capture_default_str()
      ->check(CLI::Range(1e-6, 0.5));
  simulate_cmd->add_option("--missing", sm.missing, "MCAR rate")->capture_default_str()->check(CLI::Range(0.0, 0.95));
  simulate_cmd->add_option("--replicates", sm.replicates, "Replicates")->capture_default_str()->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--seed", sm.seed, "Random seed")->required();
  simulate_cmd->add_option("--criteria", sm.criteria, "Comma-separated criteria")
      ->delimiter(',')
      ->capture_default_str()
      ->check(CLI::IsMember(criterion_names));
  simulate_cmd->add_option("--gmax", sm.gmax, "Largest number of components")->capture_default_str()->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--starts", sm.starts, "Random starts per g")->capture_default_str()->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--out", sm.out, "Output directory")->required();
  simulate_cmd->add_option("--threads", sm.threads, "Worker threads (0 = all cores)")->capture_default_str()->check(CLI::NonNegativeNumber);

  std::string ari_a, ari_b;
  CLI::App* ari_cmd = app.add_subcommand("ari", "Adjusted Rand index between two partition files");
  ari_cmd->add_option("a", ari_a, "First partition file")->required();
  ari_cmd->add_option("b", ari_b, "Second partition file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  std::string command_line;
  for (int i = 0; i < argc; ++i) command_line += (i ? " " : "") + std::string(argv[i]);

  try {
    if (*cluster) return run_cluster(cl, command_line);
    if (*simulate_cmd) return run_simulate(sm, command_line);
    return run_ari(ari_a, ari_b);
  } catch (const Error& e) {
    std::cerr << "varsel: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const UsageError& e) {
    std::cerr << "varsel: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "varsel: " << e.what() << '\n';
    return kExitNumerical;
  }
}
