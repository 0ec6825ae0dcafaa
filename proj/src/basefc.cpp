#include "hierrec/basefc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include "hierrec/csv.hpp"
#include "hierrec/errors.hpp"

namespace hierrec {

namespace {

void require_finite(const std::vector<double>& series, const char* who) {
  for (double v : series) {
    if (!std::isfinite(v)) throw ValidationError(std::string(who) + ": series contains a non-finite value");
  }
}

ARModel intercept_only(const std::vector<double>& series) {
  ARModel model;
  model.fitted_on = series.size();
  model.intercept = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(series.size());
  double rss = 0.0;
  for (double v : series) rss += (v - model.intercept) * (v - model.intercept);
  model.sigma2 = series.size() > 1 ? rss / static_cast<double>(series.size() - 1) : 0.0;
  return model;
}

}  // namespace

double ARModel::predict_next(const std::vector<double>& history) const {
  const auto p = static_cast<std::size_t>(order);
  if (history.size() < p) throw ValidationError("AR prediction: history shorter than model order");
  double y = intercept;
  for (std::size_t i = 0; i < p; ++i) y += coefficients[i] * history[history.size() - 1 - i];
  return y;
}

ARModel fit_ar(const std::vector<double>& series, int order) {
  if (order < 0 || order > kMaxArOrder) {
    throw ValidationError("fit_ar: order must be in 0.." + std::to_string(kMaxArOrder));
  }
  const auto p = static_cast<std::size_t>(order);
  const auto T = series.size();
  if (T < p + 2) {
    throw ValidationError("fit_ar: series of length " + std::to_string(T) + " is too short for order " +
                          std::to_string(order));
  }
  require_finite(series, "fit_ar");
  if (p == 0) return intercept_only(series);

  const auto rows = static_cast<Eigen::Index>(T - p);
  const auto cols = static_cast<Eigen::Index>(p + 1);
  Matrix design(rows, cols);
  Vector target(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto t = static_cast<std::size_t>(r) + p;
    design(r, 0) = 1.0;
    for (std::size_t i = 1; i <= p; ++i) design(r, static_cast<Eigen::Index>(i)) = series[t - i];
    target(r) = series[t];
  }
  const Eigen::ColPivHouseholderQR<Matrix> qr(design);
  if (qr.rank() < cols) {
    auto model = intercept_only(series);
    model.degenerate = true;
    return model;
  }
  const Vector beta = qr.solve(target);
  ARModel model;
  model.order = order;
  model.intercept = beta(0);
  model.coefficients.assign(beta.data() + 1, beta.data() + cols);
  model.fitted_on = T;
  const double rss = (target - design * beta).squaredNorm();
  const auto dof = static_cast<long>(rows) - static_cast<long>(cols);
  model.sigma2 = rss / static_cast<double>(std::max(dof, 1L));
  return model;
}

std::vector<double> forecast_ar(const ARModel& model, const std::vector<double>& history, int horizon) {
  if (horizon < 1) throw ValidationError("forecast_ar: horizon must be >= 1");
  if (history.size() < static_cast<std::size_t>(model.order)) {
    throw ValidationError("forecast_ar: history shorter than model order");
  }
  std::vector<double> extended(history.end() - model.order, history.end());
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(horizon));
  for (int h = 0; h < horizon; ++h) {
    const double next = model.predict_next(extended);
    out.push_back(next);
    extended.push_back(next);
  }
  return out;
}

std::vector<double> one_step_residuals(const ARModel& model, const std::vector<double>& series) {
  const auto p = static_cast<std::size_t>(model.order);
  if (series.size() <= p) throw ValidationError("one_step_residuals: series shorter than model order");
  std::vector<double> residuals;
  residuals.reserve(series.size() - p);
  for (std::size_t t = p; t < series.size(); ++t) {
    double fitted = model.intercept;
    for (std::size_t i = 1; i <= p; ++i) fitted += model.coefficients[i - 1] * series[t - i];
    residuals.push_back(series[t] - fitted);
  }
  return residuals;
}

Vector BaseForecasts::at(int h) const {
  if (h < 1 || h > horizon()) throw ValidationError("base forecasts: horizon " + std::to_string(h) + " out of range");
  return means.row(h - 1).transpose();
}

Vector BaseForecasts::upper(int h) const { return at(h).head(static_cast<Eigen::Index>(upper_count)); }

Vector BaseForecasts::bottom(int h) const {
  return at(h).tail(static_cast<Eigen::Index>(names.size() - upper_count));
}

ForecastRun forecast_panel(const SeriesPanel& panel, const SummingMatrix& S, int order, int horizon) {
  const auto m = S.m();
  if (static_cast<std::size_t>(panel.values.cols()) != m) {
    throw ValidationError("forecast_panel: panel has " + std::to_string(panel.values.cols()) + " columns, expected " +
                          std::to_string(m));
  }
  const auto T = panel.T();
  const auto p = static_cast<std::size_t>(std::max(order, 0));
  Matrix means(horizon, static_cast<Eigen::Index>(m));
  Matrix residuals(static_cast<Eigen::Index>(T > p ? T - p : 0), static_cast<Eigen::Index>(m));
  std::vector<ARModel> models;
  models.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    std::vector<double> series(T);
    for (std::size_t t = 0; t < T; ++t) series[t] = panel.values(static_cast<Eigen::Index>(t), col);
    auto model = fit_ar(series, order);
    const auto fc = forecast_ar(model, series, horizon);
    for (int h = 0; h < horizon; ++h) means(h, col) = fc[static_cast<std::size_t>(h)];
    // a degenerate fallback has order 0, keep the rows aligned with the requested order
    const auto res = one_step_residuals(model, series);
    const auto skip = res.size() - (T - p);
    for (std::size_t t = 0; t < T - p; ++t) residuals(static_cast<Eigen::Index>(t), col) = res[t + skip];
    models.push_back(std::move(model));
  }
  BaseForecasts forecasts{std::move(means), S.names(), S.upper_count(), static_cast<long>(T)};
  return {std::move(forecasts), ResidualMatrix(std::move(residuals), S.names()), std::move(models)};
}

BaseForecasts read_forecasts(std::istream& in, const std::string& source, const SummingMatrix& S) {
  const auto table = csv::read(in, source);
  auto column = [&](const std::string& name) {
    const auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end()) throw ValidationError(source + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - table.header.begin());
  };
  const auto series_col = column("series");
  const auto h_col = column("h");
  const auto mean_col = column("mean");

  std::map<std::string, std::map<int, double>> by_series;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto where = source + " row " + std::to_string(r + 1);
    const auto& name = row[series_col];
    if (!S.index_of(name)) throw ValidationError(where + ": unknown series '" + name + "'");
    const double h_value = csv::parse_number(row[h_col], where + " field 'h'");
    if (h_value < 1 || h_value != std::floor(h_value)) {
      throw ValidationError(where + ": field 'h' must be a positive integer");
    }
    const int h = static_cast<int>(h_value);
    const double mean = csv::parse_number(row[mean_col], where + " field 'mean'");
    if (!by_series[name].emplace(h, mean).second) {
      throw ValidationError(where + ": duplicate entry for series '" + name + "' h=" + std::to_string(h));
    }
  }
  int horizon = -1;
  for (const auto& name : S.names()) {
    const auto it = by_series.find(name);
    if (it == by_series.end()) throw ValidationError(source + ": missing series '" + name + "'");
    const int H = static_cast<int>(it->second.size());
    if (it->second.rbegin()->first != H) {
      throw ValidationError(source + ": series '" + name + "' does not cover h = 1.." + std::to_string(H));
    }
    if (horizon < 0) horizon = H;
    if (H != horizon) {
      throw ValidationError(source + ": series '" + name + "' has horizon " + std::to_string(H) + ", expected " +
                            std::to_string(horizon));
    }
  }
  Matrix means(horizon, static_cast<Eigen::Index>(S.m()));
  for (std::size_t j = 0; j < S.m(); ++j) {
    for (const auto& [h, v] : by_series[S.names()[j]]) means(h - 1, static_cast<Eigen::Index>(j)) = v;
  }
  return {std::move(means), S.names(), S.upper_count(), 0};
}

std::pair<BaseForecasts, ResidualMatrix> ingest_base_forecasts(std::istream& forecasts, const std::string& forecast_source,
                                                               std::istream& residuals, const std::string& residual_source,
                                                               const SummingMatrix& S) {
  auto fc = read_forecasts(forecasts, forecast_source, S);
  auto res = read_residuals(residuals, residual_source, S.names());
  return {std::move(fc), std::move(res)};
}

std::pair<BaseForecasts, ResidualMatrix> ingest_base_forecasts(const std::string& forecast_path,
                                                               const std::string& residual_path, const SummingMatrix& S) {
  std::ifstream fc(forecast_path);
  if (!fc) throw ValidationError(forecast_path + ": cannot open file");
  std::ifstream res(residual_path);
  if (!res) throw ValidationError(residual_path + ": cannot open file");
  return ingest_base_forecasts(fc, forecast_path, res, residual_path, S);
}

void write_forecasts_csv(std::ostream& out, const BaseForecasts& fc) {
  out << "series,h,mean\n";
  for (std::size_t j = 0; j < fc.names.size(); ++j) {
    for (int h = 1; h <= fc.horizon(); ++h) {
      out << fc.names[j] << ',' << h << ',' << csv::format_number(fc.means(h - 1, static_cast<Eigen::Index>(j))) << '\n';
    }
  }
}

}  // namespace hierrec
