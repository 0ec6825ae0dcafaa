#pragma once

// File formats for reconciled distributions and score tables.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hierrec/reconcile.hpp"
#include "hierrec/scoring.hpp"

namespace hierrec {

/// {method, h, kh_mode, names, mean, covariance (row-major m*m), bottom_mean,
///  bottom_covariance (row-major n*n), shrink_lambda}
std::string to_json(const ReconciledDistribution& dist, const std::vector<std::string>& names);

struct NamedDistribution {
  ReconciledDistribution dist;
  std::vector<std::string> names;
};

NamedDistribution distribution_from_json(const std::string& text, const std::string& source);
NamedDistribution read_distribution_file(const std::string& path);

/// One row of the scores table: method,h,replicate,energy_score,seed.
struct ScoreRow {
  Method method = Method::kPMinT;
  int h = 1;
  int replicate = 0;
  double energy_score = 0.0;
  std::uint64_t seed = 0;
};

void write_scores_csv(std::ostream& out, const std::vector<ScoreRow>& rows);

}  // namespace hierrec
