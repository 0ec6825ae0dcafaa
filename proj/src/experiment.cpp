#include "hierrec/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <ostream>
#include <thread>

#include "hierrec/basefc.hpp"
#include "hierrec/csv.hpp"
#include "hierrec/errors.hpp"
#include "hierrec/scoring.hpp"
#include "hierrec/synth.hpp"

namespace hierrec {

namespace {

constexpr std::uint64_t kSimulateStream = 1;
constexpr std::uint64_t kScoreStream = 2;

struct ReplicateOutcome {
  std::vector<ExperimentCell> cells;  // kh-major, then h, then method
  double max_relative_incoherence = 0.0;
  std::exception_ptr error;
};

ReplicateOutcome run_replicate(const ExperimentConfig& config, const SummingMatrix& S, int replicate) {
  ReplicateOutcome out;
  SynthConfig synth;
  synth.T = config.T;
  synth.eta_var = config.eta_var;
  synth.seed = derive_seed(config.seed, {kSimulateStream, static_cast<std::uint64_t>(replicate)});
  const auto sim = simulate_hierarchy(synth);

  const auto train_len = static_cast<Eigen::Index>(config.T - config.horizon);
  SeriesPanel train{sim.panel.values.topRows(train_len), sim.panel.names};
  const auto run = forecast_panel(train, S, config.ar_order, config.horizon);
  auto cov = estimate_covariance(run.residuals, S.n(), KhMode::kOne, config.jitter);

  for (const auto kh : config.kh_modes) {
    cov.kh_mode = kh;
    for (int h = 1; h <= config.horizon; ++h) {
      const Vector y_hat = run.forecasts.at(h);
      const Vector actual = sim.panel.values.row(train_len + h - 1).transpose();
      for (const auto method : config.methods) {
        const auto dist = reconcile(method, y_hat, cov, S, h, kh);
        const double norm = std::max(1.0, dist.full_mean.cwiseAbs().maxCoeff());
        const double rel = check_coherence(dist.full_mean, S, 0.0).max_violation / norm;
        if (rel > kPipelineCoherenceTol) {
          throw NumericalError("reconciled mean for " + to_string(method) + " h=" + std::to_string(h) +
                                   " is not coherent",
                               rel);
        }
        out.max_relative_incoherence = std::max(out.max_relative_incoherence, rel);
        const auto seed = derive_seed(config.seed, {kScoreStream, static_cast<std::uint64_t>(replicate),
                                                    static_cast<std::uint64_t>(h), static_cast<std::uint64_t>(method),
                                                    static_cast<std::uint64_t>(kh)});
        const auto report = energy_score_gaussian(dist, actual, config.samples, seed);
        out.cells.push_back({kh, {method, h, replicate, report.energy_score, seed}});
      }
    }
  }
  return out;
}

[[noreturn]] void rethrow_with_replicate(const std::exception_ptr& error, int replicate) {
  const auto prefix = "replicate " + std::to_string(replicate) + ": ";
  try {
    std::rethrow_exception(error);
  } catch (const NumericalError& e) {
    throw NumericalError(prefix + e.what(), e.condition());
  } catch (const ValidationError& e) {
    throw ValidationError(prefix + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(prefix + e.what());
  }
}

}  // namespace

void validate(const ExperimentConfig& config) {
  if (config.replicates < 1) throw ValidationError("experiment: replicates must be >= 1");
  if (config.horizon < 1) throw ValidationError("experiment: horizon must be >= 1");
  if (config.methods.empty()) throw ValidationError("experiment: at least one method is required");
  if (config.kh_modes.empty()) throw ValidationError("experiment: at least one k_h mode is required");
  if (config.samples < 1) throw ValidationError("experiment: samples must be >= 1");
  if (config.threads < 1) throw ValidationError("experiment: threads must be >= 1");
  if (config.T < 10) throw ValidationError("experiment: T must be >= 10");
  if (config.T - config.horizon < config.ar_order + 3) {
    throw ValidationError("experiment: training prefix is too short for the AR order");
  }
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate(config);
  const SummingMatrix S(synth_hierarchy());
  std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(config.replicates));

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next.fetch_add(1); r < config.replicates; r = next.fetch_add(1)) {
      try {
        outcomes[static_cast<std::size_t>(r)] = run_replicate(config, S, r);
      } catch (...) {
        outcomes[static_cast<std::size_t>(r)].error = std::current_exception();
      }
    }
  };
  const int workers = std::min(config.threads, config.replicates);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  }

  ExperimentResult result;
  for (int r = 0; r < config.replicates; ++r) {
    const auto& outcome = outcomes[static_cast<std::size_t>(r)];
    if (outcome.error) rethrow_with_replicate(outcome.error, r);
    result.max_relative_incoherence = std::max(result.max_relative_incoherence, outcome.max_relative_incoherence);
  }
  // regroup kh-major across replicates
  for (const auto kh : config.kh_modes) {
    for (const auto& outcome : outcomes) {
      for (const auto& cell : outcome.cells) {
        if (cell.kh_mode == kh) result.cells.push_back(cell);
      }
    }
    for (const auto method : config.methods) {
      SummaryRow row{kh, method, 0.0, 0};
      double total = 0.0;
      for (const auto& cell : result.cells) {
        if (cell.kh_mode == kh && cell.score.method == method) {
          total += cell.score.energy_score;
          ++row.cells;
        }
      }
      row.mean_energy_score = total / static_cast<double>(row.cells);
      result.summary.push_back(row);
    }
  }
  return result;
}

double summary_mean(const ExperimentResult& result, KhMode mode, Method method) {
  for (const auto& row : result.summary) {
    if (row.kh_mode == mode && row.method == method) return row.mean_energy_score;
  }
  throw ValidationError("summary has no row for " + to_string(method) + " k_h=" + to_string(mode));
}

void write_summary_csv(std::ostream& out, const ExperimentResult& result) {
  out << "kh_mode,method,mean_energy_score,cells\n";
  for (const auto& row : result.summary) {
    out << to_string(row.kh_mode) << ',' << to_string(row.method) << ',' << csv::format_number(row.mean_energy_score)
        << ',' << row.cells << '\n';
  }
}

std::vector<ScoreRow> score_rows(const ExperimentResult& result, KhMode mode) {
  std::vector<ScoreRow> rows;
  for (const auto& cell : result.cells) {
    if (cell.kh_mode == mode) rows.push_back(cell.score);
  }
  return rows;
}

}  // namespace hierrec
