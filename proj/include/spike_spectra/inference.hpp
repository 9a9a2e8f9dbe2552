#pragma once
//
// Statistical front door: detect outlier eigenvalues beyond the bulk edge,
// debias them through the inverse spike map, and attach plug-in confidence
// intervals from the fluctuation theory.

#include <vector>

#include "spike_spectra/scalar_theory.hpp"

namespace spikes {

struct SpikeEstimate {
  int index = 0;             // 1-based position in the sorted eigenvalue list
  double mu_observed = 0.0;
  double d_hat = 0.0;        // invert_theta(mu)
  bool supercritical = true;
  double se = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double alpha = 0.05;
};

// Indices (1-based) of eigenvalues with mu >= lambda_plus + c N^{-2/3}
// (boundary included). Input must be sorted descending.
std::vector<int> detect_spikes(const std::vector<double>& eigenvalues, int M, int N,
                               double edge_margin_c = 4.0);

// Delta-method interval: d_hat = invert_theta(mu),
// se = sqrt(V11(d_hat)/N) / theta'(d_hat), CI = d_hat -+ z_{alpha/2} se.
// V11 uses the supplied kappa4 and the s4(v_i) assumption (0 by default:
// delocalized prior). Throws std::domain_error for subcritical mu.
SpikeEstimate estimate_spike(double mu, int M, int N, double kappa4 = 0.0,
                             double s4_assumption = 0.0, double alpha = 0.05);

struct DebiasedOverlap {
  double value = 0.0;   // clamped to [0, 1]
  bool clamped = false;
};

// observed / ((d^2-y)/(d(d+y))), clamped into [0, 1] with a warning flag.
DebiasedOverlap debias_overlap(double overlap_sq_observed, double d_hat, double y);

}  // namespace spikes
