// hierrec: command-line front end for hierarchical forecast reconciliation.
//
//   hierrec simulate   --T 1000 --seed 7 --replicates 3 --out-dir sim/
//   hierrec forecast   --input sim/panel_0.csv --hierarchy sim/hierarchy.json --order 1 --horizon 4 \
//                      --out-forecasts fc.csv --out-residuals res.csv
//   hierrec reconcile  --hierarchy h.json --forecasts fc.csv --residuals res.csv --method pmint --kh h --out rec/
//   hierrec score      --reconciled rec/pmint_h1.json ... --actuals test.csv --seed 1 --out scores.csv
//   hierrec experiment --replicates 200 --T 1000 --kh one --out exp/
//
// Exit codes: 0 success, 2 input/validation error, 3 numerical failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hierrec/basefc.hpp"
#include "hierrec/csv.hpp"
#include "hierrec/errors.hpp"
#include "hierrec/experiment.hpp"
#include "hierrec/hierarchy.hpp"
#include "hierrec/io.hpp"
#include "hierrec/reconcile.hpp"
#include "hierrec/scoring.hpp"
#include "hierrec/synth.hpp"

namespace fs = std::filesystem;
using namespace hierrec;

namespace {

constexpr const char* kVersion = "0.1.0";

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError(path.string() + ": cannot open for writing");
  return out;
}

struct SimulateArgs {
  int T = 1000;
  std::uint64_t seed = 1;
  int replicates = 1;
  std::string out_dir = ".";
};

void cmd_simulate(const SimulateArgs& args) {
  if (args.replicates < 1) throw ValidationError("--replicates must be >= 1");
  const fs::path dir(args.out_dir);
  fs::create_directories(dir);
  open_output(dir / "hierarchy.json") << to_json(synth_hierarchy()) << '\n';
  nlohmann::json manifest;
  manifest["T"] = args.T;
  manifest["seed"] = args.seed;
  manifest["hierarchy"] = "hierarchy.json";
  manifest["replicates"] = nlohmann::json::array();
  for (int r = 0; r < args.replicates; ++r) {
    SynthConfig config;
    config.T = args.T;
    config.seed = derive_seed(args.seed, {static_cast<std::uint64_t>(r)});
    const auto sim = simulate_hierarchy(config);
    const auto file = "panel_" + std::to_string(r) + ".csv";
    auto out = open_output(dir / file);
    write_panel_csv(out, sim.panel);
    manifest["replicates"].push_back({{"replicate", r},
                                      {"file", file},
                                      {"seed", config.seed},
                                      {"phi", std::vector<double>(sim.phi.data(), sim.phi.data() + sim.phi.size())},
                                      {"phi_series", {"AA", "AB", "BA", "BB"}}});
  }
  open_output(dir / "manifest.json") << manifest.dump(2) << '\n';
}

struct ForecastArgs {
  std::string input, hierarchy, out_forecasts, out_residuals;
  int order = 1;
  int horizon = 4;
};

void cmd_forecast(const ForecastArgs& args) {
  const SummingMatrix S(read_hierarchy_file(args.hierarchy));
  const auto panel = read_panel_csv(args.input, S);
  const auto run = forecast_panel(panel, S, args.order, args.horizon);
  for (std::size_t j = 0; j < run.models.size(); ++j) {
    if (run.models[j].degenerate) {
      std::cerr << "warning: series '" << S.names()[j] << "' has a singular design; using the intercept-only model\n";
    }
  }
  auto fc = open_output(args.out_forecasts);
  write_forecasts_csv(fc, run.forecasts);
  auto res = open_output(args.out_residuals);
  write_residuals_csv(res, run.residuals);
}

struct ReconcileArgs {
  std::string hierarchy, forecasts, residuals, out = ".";
  std::string method = "pmint";
  std::string kh = "one";
  int horizon = 0;
};

void cmd_reconcile(const ReconcileArgs& args) {
  const SummingMatrix S(read_hierarchy_file(args.hierarchy));
  const auto [base, residuals] = ingest_base_forecasts(args.forecasts, args.residuals, S);
  const auto kh = parse_kh_mode(args.kh);
  std::vector<Method> methods;
  if (args.method == "all") {
    methods = {Method::kBottomUp, Method::kLinearGaussian, Method::kPMinT};
  } else {
    methods = {parse_method(args.method)};
  }
  const int horizon = args.horizon > 0 ? args.horizon : base.horizon();
  if (horizon > base.horizon()) {
    throw ValidationError(args.forecasts + ": --horizon " + std::to_string(horizon) + " exceeds the forecast horizon " +
                          std::to_string(base.horizon()));
  }
  const auto cov = estimate_covariance(residuals, S.n(), kh);
  const fs::path dir(args.out);
  fs::create_directories(dir);
  for (const auto method : methods) {
    for (int h = 1; h <= horizon; ++h) {
      const auto dist = reconcile(method, base.at(h), cov, S, h, kh);
      open_output(dir / (to_string(method) + "_h" + std::to_string(h) + ".json")) << to_json(dist, S.names()) << '\n';
    }
  }
}

struct ScoreArgs {
  std::vector<std::string> reconciled;
  std::string actuals, out;
  int samples = kDefaultSamples;
  std::uint64_t seed = 1;
};

void cmd_score(const ScoreArgs& args) {
  const auto table = csv::read_file(args.actuals);
  std::vector<ScoreRow> rows;
  for (const auto& path : args.reconciled) {
    const auto named = read_distribution_file(path);
    const auto& dist = named.dist;
    if (table.header.size() != named.names.size()) {
      throw ValidationError(args.actuals + ": has " + std::to_string(table.header.size()) + " columns, " + path +
                            " has " + std::to_string(named.names.size()) + " series");
    }
    if (dist.h < 1 || static_cast<std::size_t>(dist.h) > table.rows.size()) {
      throw ValidationError(args.actuals + ": no row for horizon h=" + std::to_string(dist.h));
    }
    Vector y(static_cast<Eigen::Index>(named.names.size()));
    for (std::size_t k = 0; k < named.names.size(); ++k) {
      const auto it = std::find(table.header.begin(), table.header.end(), named.names[k]);
      if (it == table.header.end()) throw ValidationError(args.actuals + ": missing series '" + named.names[k] + "'");
      y(static_cast<Eigen::Index>(k)) =
          csv::parse_number(table.rows[static_cast<std::size_t>(dist.h - 1)][static_cast<std::size_t>(it - table.header.begin())],
                            args.actuals + " '" + named.names[k] + "'");
    }
    const auto seed =
        derive_seed(args.seed, {static_cast<std::uint64_t>(dist.h), static_cast<std::uint64_t>(dist.method)});
    const auto report = energy_score_gaussian(dist, y, args.samples, seed);
    rows.push_back({dist.method, dist.h, 0, report.energy_score, seed});
  }
  if (args.out.empty()) {
    write_scores_csv(std::cout, rows);
  } else {
    auto out = open_output(args.out);
    write_scores_csv(out, rows);
  }
}

struct ExperimentArgs {
  ExperimentConfig config;
  std::string kh = "one";
  std::string methods = "bu,lg,pmint";
  std::string out = "experiment";
};

void cmd_experiment(ExperimentArgs args) {
  auto& config = args.config;
  if (args.kh == "both") {
    config.kh_modes = {KhMode::kOne, KhMode::kH};
  } else {
    config.kh_modes = {parse_kh_mode(args.kh)};
  }
  config.methods.clear();
  std::stringstream list(args.methods);
  for (std::string item; std::getline(list, item, ',');) {
    if (!item.empty()) config.methods.push_back(parse_method(item));
  }
  const auto result = run_experiment(config);
  const fs::path dir(args.out);
  fs::create_directories(dir);
  for (const auto kh : config.kh_modes) {
    auto out = open_output(dir / ("scores_kh-" + to_string(kh) + ".csv"));
    write_scores_csv(out, score_rows(result, kh));
  }
  auto summary = open_output(dir / "summary.csv");
  write_summary_csv(summary, result);
  write_summary_csv(std::cout, result);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic reconciliation of hierarchical forecasts"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate the 7-series AR(1) benchmark hierarchy");
  simulate->add_option("--T", sim.T, "Series length")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Master seed")->capture_default_str();
  simulate->add_option("--replicates", sim.replicates, "Number of panels")->capture_default_str();
  simulate->add_option("--out-dir,--out", sim.out_dir, "Output directory")->capture_default_str();

  ForecastArgs fc;
  auto* forecast = app.add_subcommand("forecast", "Fit per-series AR(p) base models, write forecasts and residuals");
  forecast->add_option("--input", fc.input, "Panel CSV")->required();
  forecast->add_option("--hierarchy", fc.hierarchy, "Hierarchy JSON")->required();
  forecast->add_option("--order", fc.order, "AR order (0 = mean model)")->capture_default_str()->check(
      CLI::Range(0, kMaxArOrder));
  forecast->add_option("--horizon", fc.horizon, "Forecast horizon H")->capture_default_str()->check(CLI::PositiveNumber);
  forecast->add_option("--out-forecasts", fc.out_forecasts, "Forecast CSV (series,h,mean)")->required();
  forecast->add_option("--out-residuals", fc.out_residuals, "Residual CSV")->required();

  ReconcileArgs rec;
  auto* reconcile_cmd = app.add_subcommand("reconcile", "Reconcile base forecasts into coherent Gaussian distributions");
  reconcile_cmd->add_option("--hierarchy", rec.hierarchy, "Hierarchy JSON")->required();
  reconcile_cmd->add_option("--forecasts", rec.forecasts, "Forecast CSV")->required();
  reconcile_cmd->add_option("--residuals", rec.residuals, "Residual CSV")->required();
  reconcile_cmd->add_option("--method", rec.method, "bu, lg, pmint or all")->capture_default_str();
  reconcile_cmd->add_option("--kh", rec.kh, "one or h")->capture_default_str();
  reconcile_cmd->add_option("--horizon", rec.horizon, "Horizons to reconcile (default: all)");
  reconcile_cmd->add_option("--out", rec.out, "Output directory")->capture_default_str();

  ScoreArgs sc;
  auto* score = app.add_subcommand("score", "Energy score of reconciled distributions against actuals");
  score->add_option("--reconciled", sc.reconciled, "Reconciled JSON files")->required();
  score->add_option("--actuals", sc.actuals, "Actuals CSV, row h holds the observation for horizon h")->required();
  score->add_option("--samples", sc.samples, "Sample count k")->capture_default_str()->check(CLI::PositiveNumber);
  score->add_option("--seed", sc.seed, "Master seed")->capture_default_str();
  score->add_option("--out", sc.out, "Scores CSV (default: stdout)");

  ExperimentArgs ex;
  auto* experiment = app.add_subcommand("experiment", "Run the synthetic simulate/forecast/reconcile/score pipeline");
  experiment->add_option("--replicates", ex.config.replicates, "Replicates")->capture_default_str();
  experiment->add_option("--T", ex.config.T, "Series length (last H points held out)")->capture_default_str();
  experiment->add_option("--horizon", ex.config.horizon, "Max horizon H")->capture_default_str();
  experiment->add_option("--kh", ex.kh, "one, h or both")->capture_default_str();
  experiment->add_option("--methods", ex.methods, "Comma-separated subset of bu,lg,pmint")->capture_default_str();
  experiment->add_option("--order", ex.config.ar_order, "AR order")->capture_default_str()->check(
      CLI::Range(0, kMaxArOrder));
  experiment->add_option("--samples", ex.config.samples, "Samples per energy score")->capture_default_str();
  experiment->add_option("--seed", ex.config.seed, "Master seed")->capture_default_str();
  experiment->add_option("--threads", ex.config.threads, "Worker threads")->capture_default_str();
  experiment->add_option("--out", ex.out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) cmd_simulate(sim);
    if (forecast->parsed()) cmd_forecast(fc);
    if (reconcile_cmd->parsed()) cmd_reconcile(rec);
    if (score->parsed()) cmd_score(sc);
    if (experiment->parsed()) cmd_experiment(ex);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
