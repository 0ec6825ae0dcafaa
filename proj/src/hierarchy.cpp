#include "hierrec/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hierrec/csv.hpp"
#include "hierrec/errors.hpp"

namespace hierrec {

namespace {

using json = nlohmann::json;

std::string require_string(const json& value, const std::string& where) {
  if (!value.is_string()) {
    throw ValidationError(where + ": expected a string (weighted aggregation is not supported)");
  }
  return value.get<std::string>();
}

enum class Mark { kUnvisited, kActive, kDone };

// Expands every aggregate into its bottom incidence vector. Detects cycles and
// duplicate contributions.
class Expander {
 public:
  Expander(const HierarchySpec& spec) : spec_(spec) {
    for (std::size_t i = 0; i < spec.bottom_names.size(); ++i) bottom_index_[spec.bottom_names[i]] = i;
    for (std::size_t i = 0; i < spec.aggregates.size(); ++i) aggregate_index_[spec.aggregates[i].name] = i;
    marks_.assign(spec.aggregates.size(), Mark::kUnvisited);
    rows_.resize(spec.aggregates.size());
  }

  const std::vector<int>& expand(std::size_t agg) {
    if (marks_[agg] == Mark::kDone) return rows_[agg];
    const auto& name = spec_.aggregates[agg].name;
    if (marks_[agg] == Mark::kActive) throw ValidationError("hierarchy: cycle through aggregate '" + name + "'");
    marks_[agg] = Mark::kActive;
    std::vector<int> row(spec_.bottom_names.size(), 0);
    for (const auto& child : spec_.aggregates[agg].children) {
      if (auto b = bottom_index_.find(child); b != bottom_index_.end()) {
        row[b->second] += 1;
      } else if (auto a = aggregate_index_.find(child); a != aggregate_index_.end()) {
        const auto& sub = expand(a->second);
        for (std::size_t j = 0; j < row.size(); ++j) row[j] += sub[j];
      } else {
        throw ValidationError("hierarchy: aggregate '" + name + "' references unknown series '" + child + "'");
      }
    }
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] > 1) {
        throw ValidationError("hierarchy: aggregate '" + name + "' counts bottom '" + spec_.bottom_names[j] +
                              "' more than once");
      }
    }
    if (std::all_of(row.begin(), row.end(), [](int v) { return v == 0; })) {
      throw ValidationError("hierarchy: aggregate '" + name + "' expands to no bottom series");
    }
    marks_[agg] = Mark::kDone;
    rows_[agg] = std::move(row);
    return rows_[agg];
  }

 private:
  const HierarchySpec& spec_;
  std::map<std::string, std::size_t> bottom_index_;
  std::map<std::string, std::size_t> aggregate_index_;
  std::vector<Mark> marks_;
  std::vector<std::vector<int>> rows_;
};

void validate(const HierarchySpec& spec) {
  if (spec.bottom_names.empty()) throw ValidationError("hierarchy: bottom list is empty");
  std::set<std::string> seen;
  auto claim = [&](const std::string& name) {
    if (name.empty()) throw ValidationError("hierarchy: empty series name");
    if (!seen.insert(name).second) throw ValidationError("hierarchy: duplicate series name '" + name + "'");
  };
  for (const auto& b : spec.bottom_names) claim(b);
  for (const auto& a : spec.aggregates) claim(a.name);
  Expander expander(spec);
  for (std::size_t i = 0; i < spec.aggregates.size(); ++i) expander.expand(i);
}

}  // namespace

HierarchySpec parse_hierarchy(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("hierarchy: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("hierarchy: top level must be an object");
  if (!doc.contains("bottom") || !doc["bottom"].is_array()) {
    throw ValidationError("hierarchy: missing array field 'bottom'");
  }
  HierarchySpec spec;
  for (const auto& b : doc["bottom"]) spec.bottom_names.push_back(require_string(b, "hierarchy.bottom"));
  if (doc.contains("aggregates")) {
    const auto& aggs = doc["aggregates"];
    if (!aggs.is_array()) throw ValidationError("hierarchy: 'aggregates' must be an array");
    for (const auto& agg : aggs) {
      if (!agg.is_object() || !agg.contains("name") || !agg.contains("children")) {
        throw ValidationError("hierarchy: each aggregate needs 'name' and 'children'");
      }
      if (agg.contains("weights")) throw ValidationError("hierarchy: weighted aggregation is not supported");
      AggregateSpec a;
      a.name = require_string(agg["name"], "hierarchy.aggregates.name");
      if (!agg["children"].is_array()) {
        throw ValidationError("hierarchy: children of '" + a.name + "' must be an array");
      }
      for (const auto& c : agg["children"]) a.children.push_back(require_string(c, "hierarchy.aggregates." + a.name));
      spec.aggregates.push_back(std::move(a));
    }
  }
  validate(spec);
  return spec;
}

HierarchySpec read_hierarchy_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_hierarchy(buf.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::string to_json(const HierarchySpec& spec) {
  json doc;
  doc["bottom"] = spec.bottom_names;
  doc["aggregates"] = json::array();
  for (const auto& a : spec.aggregates) doc["aggregates"].push_back({{"name", a.name}, {"children", a.children}});
  return doc.dump(2);
}

SummingMatrix::SummingMatrix(const HierarchySpec& spec) {
  validate(spec);
  n_ = spec.bottom_names.size();
  const auto upper = spec.aggregates.size();
  Expander expander(spec);
  a_ = Matrix::Zero(static_cast<Eigen::Index>(upper), static_cast<Eigen::Index>(n_));
  for (std::size_t i = 0; i < upper; ++i) {
    const auto& row = expander.expand(i);
    for (std::size_t j = 0; j < n_; ++j) a_(i, j) = row[j];
    names_.push_back(spec.aggregates[i].name);
  }
  for (const auto& b : spec.bottom_names) names_.push_back(b);
  s_.resize(static_cast<Eigen::Index>(upper + n_), static_cast<Eigen::Index>(n_));
  s_.topRows(a_.rows()) = a_;
  s_.bottomRows(static_cast<Eigen::Index>(n_)).setIdentity();
}

std::vector<std::string> SummingMatrix::bottom_names() const {
  return {names_.begin() + static_cast<std::ptrdiff_t>(upper_count()), names_.end()};
}

std::optional<std::size_t> SummingMatrix::index_of(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

namespace {

// Sum of the bottoms that make up upper series `u`, added in bottom order so
// that aggregation and the coherence check agree bit for bit.
double upper_sum(const Matrix& A, Eigen::Index u, const double* bottom, Eigen::Index stride) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    if (A(u, j) != 0.0) total += bottom[j * stride];
  }
  return total;
}

}  // namespace

SeriesPanel aggregate_bottom(const Matrix& bottom, const SummingMatrix& S) {
  if (bottom.cols() != static_cast<Eigen::Index>(S.n())) {
    throw ValidationError("aggregate_bottom: panel has " + std::to_string(bottom.cols()) + " columns, hierarchy has " +
                          std::to_string(S.n()) + " bottom series");
  }
  const auto upper = static_cast<Eigen::Index>(S.upper_count());
  SeriesPanel panel;
  panel.values.resize(bottom.rows(), static_cast<Eigen::Index>(S.m()));
  panel.values.rightCols(bottom.cols()) = bottom;
  for (Eigen::Index t = 0; t < bottom.rows(); ++t) {
    for (Eigen::Index u = 0; u < upper; ++u) {
      panel.values(t, u) = upper_sum(S.A(), u, &bottom(t, 0), bottom.outerStride());
    }
  }
  panel.names = S.names();
  return panel;
}

CoherenceReport check_coherence(const Matrix& values, const SummingMatrix& S, double tol) {
  if (values.cols() != static_cast<Eigen::Index>(S.m())) {
    throw ValidationError("check_coherence: expected " + std::to_string(S.m()) + " columns, got " +
                          std::to_string(values.cols()));
  }
  CoherenceReport report;
  const auto upper = static_cast<Eigen::Index>(S.upper_count());
  for (Eigen::Index t = 0; t < values.rows(); ++t) {
    for (Eigen::Index u = 0; u < upper; ++u) {
      const double implied = upper_sum(S.A(), u, &values(t, upper), values.outerStride());
      report.max_violation = std::max(report.max_violation, std::abs(values(t, u) - implied));
    }
  }
  report.coherent = report.max_violation <= tol;
  return report;
}

CoherenceReport check_coherence(const SeriesPanel& panel, const SummingMatrix& S, double tol) {
  return check_coherence(panel.values, S, tol);
}

CoherenceReport check_coherence(const Vector& y, const SummingMatrix& S, double tol) {
  return check_coherence(Matrix(y.transpose()), S, tol);
}

SeriesPanel read_panel(std::istream& in, const std::string& source, const SummingMatrix& S) {
  const auto table = csv::read(in, source);
  const auto& header = table.header;
  std::set<std::string> unique(header.begin(), header.end());
  if (unique.size() != header.size()) throw ValidationError(source + ": duplicate column name in header");

  const bool bottoms_only = header.size() == S.n() && header.size() != S.m();
  const auto expected = bottoms_only ? S.bottom_names() : S.names();
  if (header.size() != expected.size()) {
    throw ValidationError(source + ": header has " + std::to_string(header.size()) + " columns, expected " +
                          std::to_string(S.m()) + " (all series) or " + std::to_string(S.n()) + " (bottoms)");
  }
  // column position in the file for each expected name
  std::vector<std::size_t> position(expected.size());
  for (std::size_t k = 0; k < expected.size(); ++k) {
    const auto it = std::find(header.begin(), header.end(), expected[k]);
    if (it == header.end()) throw ValidationError(source + ": missing series '" + expected[k] + "'");
    position[k] = static_cast<std::size_t>(it - header.begin());
  }
  Matrix values(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(expected.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t k = 0; k < expected.size(); ++k) {
      values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
          csv::parse_number(table.rows[r][position[k]], source + " row " + std::to_string(r + 1) + " '" + expected[k] + "'");
    }
  }
  if (bottoms_only) return aggregate_bottom(values, S);

  const auto report = check_coherence(values, S, kIngestCoherenceTol);
  if (!report.coherent) {
    std::ostringstream os;
    os << source << ": observations are not coherent with the hierarchy (max violation " << report.max_violation << ")";
    throw ValidationError(os.str());
  }
  return {std::move(values), S.names()};
}

SeriesPanel read_panel_csv(const std::string& path, const SummingMatrix& S) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open file");
  return read_panel(in, path, S);
}

void write_panel_csv(std::ostream& out, const SeriesPanel& panel) {
  for (std::size_t k = 0; k < panel.names.size(); ++k) out << (k ? "," : "") << panel.names[k];
  out << '\n';
  for (Eigen::Index r = 0; r < panel.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < panel.values.cols(); ++c) out << (c ? "," : "") << csv::format_number(panel.values(r, c));
    out << '\n';
  }
}

}  // namespace hierrec
