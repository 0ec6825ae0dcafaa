#pragma once

// Synthetic benchmark: four correlated AR(1) bottom series under
// Total = A + B, A = AA + AB, B = BA + BB, with an observation noise eta_t that
// enters AA and BA with sign + and AB and BB with sign -, so it cancels in A,
// B and Total.

#include <cstdint>

#include "hierrec/hierarchy.hpp"
#include "hierrec/types.hpp"

namespace hierrec {

struct SynthConfig {
  int T = 1000;
  std::uint64_t seed = 1;
  Matrix sigma = default_sigma();
  double eta_var = 10.0;
  Vector noise_signs = default_signs();
  int burn_in = 100;

  static Matrix default_sigma();
  static Vector default_signs();
};

struct SynthResult {
  SeriesPanel panel;  // T x 7, order Total, A, B, AA, AB, BA, BB
  Vector phi;         // AR(1) coefficients of AA, AB, BA, BB
  Vector eta;         // the scalar noise sequence, length T
  Matrix latent;      // noise-free bottom component z_t, T x 4
};

HierarchySpec synth_hierarchy();

SynthResult simulate_hierarchy(const SynthConfig& config);

}  // namespace hierrec
