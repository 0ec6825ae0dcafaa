#pragma once

// Synthetic experiment: simulate -> fit AR base models on a training prefix ->
// shrinkage W1 -> reconcile per horizon -> energy score on the held-out tail.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "hierrec/covariance.hpp"
#include "hierrec/io.hpp"
#include "hierrec/reconcile.hpp"

namespace hierrec {

struct ExperimentConfig {
  int replicates = 200;
  int T = 1000;  // simulated length; the last `horizon` points are held out
  int horizon = 4;
  std::vector<KhMode> kh_modes{KhMode::kOne};
  std::vector<Method> methods{Method::kBottomUp, Method::kLinearGaussian, Method::kPMinT};
  int ar_order = 1;
  int samples = kDefaultSamples;
  std::uint64_t seed = 20190916;
  int threads = 1;
  double jitter = kDefaultJitter;
  double eta_var = 10.0;
};

struct ExperimentCell {
  KhMode kh_mode = KhMode::kOne;
  ScoreRow score;
};

struct SummaryRow {
  KhMode kh_mode = KhMode::kOne;
  Method method = Method::kPMinT;
  double mean_energy_score = 0.0;
  std::size_t cells = 0;
};

struct ExperimentResult {
  /// Ordered by kh mode, replicate, h, method (config order).
  std::vector<ExperimentCell> cells;
  /// One row per (kh mode, method), mean over replicates and horizons.
  std::vector<SummaryRow> summary;
  /// Largest coherence violation of any reconciled mean, relative to its max norm.
  double max_relative_incoherence = 0.0;
};

inline constexpr double kPipelineCoherenceTol = 1e-9;

void validate(const ExperimentConfig& config);

ExperimentResult run_experiment(const ExperimentConfig& config);

/// Looks up the summary row; throws if absent.
double summary_mean(const ExperimentResult& result, KhMode mode, Method method);

void write_summary_csv(std::ostream& out, const ExperimentResult& result);
std::vector<ScoreRow> score_rows(const ExperimentResult& result, KhMode mode);

}  // namespace hierrec
