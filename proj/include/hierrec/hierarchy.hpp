#pragma once

// Hierarchy structure: specification documents, the summing matrix S = [A; I],
// bottom-up aggregation and coherence checks.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hierrec/types.hpp"

namespace hierrec {

struct AggregateSpec {
  std::string name;
  std::vector<std::string> children;  // bottoms or other aggregates
};

/// Validated hierarchy (or grouped structure) description.
struct HierarchySpec {
  std::vector<std::string> bottom_names;
  std::vector<AggregateSpec> aggregates;
};

/// Parses and validates a JSON hierarchy document:
///   {"bottom": [...], "aggregates": [{"name": ..., "children": [...]}, ...]}
/// Children may reference bottoms or aggregates declared anywhere in the document.
/// Throws ValidationError on duplicate names, unknown children, cycles, empty
/// expansions, or a bottom reached twice from the same aggregate.
HierarchySpec parse_hierarchy(std::string_view text);
HierarchySpec read_hierarchy_file(const std::string& path);
std::string to_json(const HierarchySpec& spec);

/// S is m x n with rows ordered aggregates first, then bottoms; the trailing
/// n x n block is the identity.
class SummingMatrix {
 public:
  explicit SummingMatrix(const HierarchySpec& spec);

  const Matrix& S() const noexcept { return s_; }
  /// Upper (m - n) x n block.
  const Matrix& A() const noexcept { return a_; }
  std::size_t m() const noexcept { return names_.size(); }
  std::size_t n() const noexcept { return n_; }
  std::size_t upper_count() const noexcept { return m() - n_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::vector<std::string> bottom_names() const;
  std::optional<std::size_t> index_of(std::string_view name) const;

 private:
  Matrix s_;
  Matrix a_;
  std::size_t n_ = 0;
  std::vector<std::string> names_;
};

inline SummingMatrix build_summing_matrix(const HierarchySpec& spec) { return SummingMatrix(spec); }

/// T x m observations in SummingMatrix order.
struct SeriesPanel {
  Matrix values;
  std::vector<std::string> names;

  std::size_t T() const noexcept { return static_cast<std::size_t>(values.rows()); }
};

/// Each output row is y_t = S b_t.
SeriesPanel aggregate_bottom(const Matrix& bottom, const SummingMatrix& S);

struct CoherenceReport {
  bool coherent = false;
  double max_violation = 0.0;
};

/// Checks max over rows and upper series of |u - A b| <= tol.
CoherenceReport check_coherence(const Matrix& values, const SummingMatrix& S, double tol);
CoherenceReport check_coherence(const SeriesPanel& panel, const SummingMatrix& S, double tol);
CoherenceReport check_coherence(const Vector& y, const SummingMatrix& S, double tol);

inline constexpr double kIngestCoherenceTol = 1e-8;

/// Reads a panel CSV whose header is a permutation of all hierarchy names
/// (validated as coherent within kIngestCoherenceTol) or of the bottoms only
/// (aggregated here). Columns are reordered to hierarchy order.
SeriesPanel read_panel_csv(const std::string& path, const SummingMatrix& S);
SeriesPanel read_panel(std::istream& in, const std::string& source, const SummingMatrix& S);
void write_panel_csv(std::ostream& out, const SeriesPanel& panel);

}  // namespace hierrec
