#include "hierrec/synth.hpp"

#include <cmath>
#include <random>

#include "hierrec/errors.hpp"

namespace hierrec {

Matrix SynthConfig::default_sigma() {
  Matrix sigma(4, 4);
  sigma << 5, 3, 2, 1,  //
      3, 5, 2, 1,       //
      2, 2, 5, 3,       //
      1, 1, 3, 5;
  return sigma;
}

Vector SynthConfig::default_signs() {
  Vector signs(4);
  signs << 1, -1, 1, -1;
  return signs;
}

HierarchySpec synth_hierarchy() {
  return {{"AA", "AB", "BA", "BB"}, {{"Total", {"A", "B"}}, {"A", {"AA", "AB"}}, {"B", {"BA", "BB"}}}};
}

SynthResult simulate_hierarchy(const SynthConfig& config) {
  if (config.T < 10) throw ValidationError("simulate: T must be >= 10");
  if (!(config.eta_var >= 0.0)) throw ValidationError("simulate: eta variance must be nonnegative");
  if (config.sigma.rows() != 4 || config.sigma.cols() != 4 || config.noise_signs.size() != 4) {
    throw ValidationError("simulate: sigma must be 4 x 4 and signs of length 4");
  }
  if (config.burn_in < 0) throw ValidationError("simulate: burn-in must be nonnegative");
  const Eigen::LLT<Matrix> llt(config.sigma);
  if (llt.info() != Eigen::Success || (config.sigma - config.sigma.transpose()).cwiseAbs().maxCoeff() > 0.0) {
    throw ValidationError("simulate: innovation covariance is not symmetric positive definite");
  }
  const Matrix L = llt.matrixL();

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  SynthResult result;
  result.phi.resize(4);
  for (Eigen::Index i = 0; i < 4; ++i) {
    double phi = uniform(rng);
    while (phi <= -1.0) phi = uniform(rng);
    result.phi(i) = phi;
  }

  const double eta_sd = std::sqrt(config.eta_var);
  Matrix bottom(config.T, 4);
  result.eta.resize(config.T);
  result.latent.resize(config.T, 4);
  Vector z = Vector::Zero(4);
  Vector w(4);
  for (int t = -config.burn_in; t < config.T; ++t) {
    for (Eigen::Index i = 0; i < 4; ++i) w(i) = normal(rng);
    z = result.phi.cwiseProduct(z) + L * w;
    const double eta = eta_sd * normal(rng);
    if (t < 0) continue;
    result.latent.row(t) = z.transpose();
    result.eta(t) = eta;
    bottom.row(t) = (z + eta * config.noise_signs).transpose();
  }
  result.panel = aggregate_bottom(bottom, SummingMatrix(synth_hierarchy()));
  return result;
}

}  // namespace hierrec
