#pragma once

// Independent per-series base forecasts: a least-squares AR(p) fitter, plus
// ingestion of forecasts and residuals produced elsewhere.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "hierrec/covariance.hpp"
#include "hierrec/hierarchy.hpp"
#include "hierrec/types.hpp"

namespace hierrec {

inline constexpr int kMaxArOrder = 5;

struct ARModel {
  int order = 0;
  double intercept = 0.0;
  std::vector<double> coefficients;  // phi_1 .. phi_p
  double sigma2 = 0.0;
  std::size_t fitted_on = 0;
  /// Set when the requested order could not be fitted (singular design) and
  /// the model fell back to intercept-only.
  bool degenerate = false;

  /// c + sum_i phi_i * y[t - i], using the last `order` values of `history`.
  double predict_next(const std::vector<double>& history) const;
};

/// Least squares of y_t on (1, y_{t-1}, ..., y_{t-p}). Requires T >= p + 2.
ARModel fit_ar(const std::vector<double>& series, int order);

/// Iterated plug-in means for h = 1..H following the end of `history`.
std::vector<double> forecast_ar(const ARModel& model, const std::vector<double>& history, int horizon);

/// e_t = y_t - (c + sum phi_i y_{t-i}) for t = p+1..T; length T - p.
std::vector<double> one_step_residuals(const ARModel& model, const std::vector<double>& series);

/// H x m point forecasts in hierarchy order; columns split as [upper | bottom].
struct BaseForecasts {
  Matrix means;
  std::vector<std::string> names;
  std::size_t upper_count = 0;
  long origin = 0;

  int horizon() const noexcept { return static_cast<int>(means.rows()); }
  /// Full vector y_hat for horizon h (1-based).
  Vector at(int h) const;
  Vector upper(int h) const;
  Vector bottom(int h) const;
};

struct ForecastRun {
  BaseForecasts forecasts;
  ResidualMatrix residuals;
  std::vector<ARModel> models;
};

/// Fits one AR(p) model per series (all m of them), forecasts H steps past
/// the end of the panel and collects the aligned one-step residuals.
ForecastRun forecast_panel(const SeriesPanel& panel, const SummingMatrix& S, int order, int horizon);

/// Forecast CSV with columns series,h,mean and residual CSV, reordered to
/// hierarchy order.
std::pair<BaseForecasts, ResidualMatrix> ingest_base_forecasts(std::istream& forecasts, const std::string& forecast_source,
                                                               std::istream& residuals, const std::string& residual_source,
                                                               const SummingMatrix& S);
std::pair<BaseForecasts, ResidualMatrix> ingest_base_forecasts(const std::string& forecast_path,
                                                               const std::string& residual_path, const SummingMatrix& S);

BaseForecasts read_forecasts(std::istream& in, const std::string& source, const SummingMatrix& S);
void write_forecasts_csv(std::ostream& out, const BaseForecasts& fc);

}  // namespace hierrec
