#include "hierrec/io.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "hierrec/csv.hpp"
#include "hierrec/errors.hpp"

namespace hierrec {

namespace {

using json = nlohmann::json;

std::vector<double> row_major(const Matrix& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  }
  return out;
}

Matrix from_row_major(const std::vector<double>& values, Eigen::Index dim, const std::string& where) {
  if (static_cast<Eigen::Index>(values.size()) != dim * dim) {
    throw ValidationError(where + ": expected " + std::to_string(dim * dim) + " entries");
  }
  Matrix m(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) m(r, c) = values[static_cast<std::size_t>(r * dim + c)];
  }
  return m;
}

template <typename T>
T field(const json& doc, const char* key, const std::string& source) {
  if (!doc.contains(key)) throw ValidationError(source + ": missing field '" + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(source + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

std::string to_json(const ReconciledDistribution& dist, const std::vector<std::string>& names) {
  json doc;
  doc["method"] = to_string(dist.method);
  doc["h"] = dist.h;
  doc["kh_mode"] = to_string(dist.kh_mode);
  doc["names"] = names;
  doc["mean"] = std::vector<double>(dist.full_mean.data(), dist.full_mean.data() + dist.full_mean.size());
  doc["covariance"] = row_major(dist.full_cov);
  doc["bottom_mean"] = std::vector<double>(dist.bottom_mean.data(), dist.bottom_mean.data() + dist.bottom_mean.size());
  doc["bottom_covariance"] = row_major(dist.bottom_cov);
  doc["shrink_lambda"] = dist.shrink_lambda;
  return doc.dump(2);
}

NamedDistribution distribution_from_json(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(source + ": malformed JSON: " + e.what());
  }
  NamedDistribution out;
  auto& d = out.dist;
  d.method = parse_method(field<std::string>(doc, "method", source));
  d.h = field<int>(doc, "h", source);
  d.kh_mode = parse_kh_mode(field<std::string>(doc, "kh_mode", source));
  out.names = field<std::vector<std::string>>(doc, "names", source);
  const auto mean = field<std::vector<double>>(doc, "mean", source);
  const auto bottom_mean = field<std::vector<double>>(doc, "bottom_mean", source);
  const auto m = static_cast<Eigen::Index>(out.names.size());
  if (static_cast<Eigen::Index>(mean.size()) != m) throw ValidationError(source + ": 'mean' length differs from 'names'");
  d.full_mean = Eigen::Map<const Vector>(mean.data(), m);
  d.full_cov = from_row_major(field<std::vector<double>>(doc, "covariance", source), m, source + " 'covariance'");
  const auto n = static_cast<Eigen::Index>(bottom_mean.size());
  d.bottom_mean = Eigen::Map<const Vector>(bottom_mean.data(), n);
  d.bottom_cov =
      from_row_major(field<std::vector<double>>(doc, "bottom_covariance", source), n, source + " 'bottom_covariance'");
  d.shrink_lambda = field<double>(doc, "shrink_lambda", source);
  return out;
}

NamedDistribution read_distribution_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return distribution_from_json(buf.str(), path);
}

void write_scores_csv(std::ostream& out, const std::vector<ScoreRow>& rows) {
  out << "method,h,replicate,energy_score,seed\n";
  for (const auto& r : rows) {
    out << to_string(r.method) << ',' << r.h << ',' << r.replicate << ',' << csv::format_number(r.energy_score) << ','
        << r.seed << '\n';
  }
}

}  // namespace hierrec
