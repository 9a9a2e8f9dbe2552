#include "spike_spectra/inference.hpp"

#include <cmath>
#include <stdexcept>

#include "spike_spectra/stats.hpp"

namespace spikes {

std::vector<int> detect_spikes(const std::vector<double>& eigenvalues, int M, int N,
                               double edge_margin_c) {
  if (eigenvalues.empty()) throw std::invalid_argument("detect_spikes: no eigenvalues");
  for (std::size_t k = 1; k < eigenvalues.size(); ++k) {
    if (eigenvalues[k] > eigenvalues[k - 1]) {
      throw std::invalid_argument("detect_spikes: eigenvalues must be sorted descending");
    }
  }
  const double y = static_cast<double>(M) / N;
  const double threshold =
      mp_edges(y).lambda_plus + edge_margin_c * std::pow(N, -2.0 / 3.0);
  std::vector<int> out;
  for (std::size_t k = 0; k < eigenvalues.size(); ++k) {
    if (eigenvalues[k] >= threshold) out.push_back(static_cast<int>(k) + 1);
  }
  return out;
}

SpikeEstimate estimate_spike(double mu, int M, int N, double kappa4,
                             double s4_assumption, double alpha) {
  const double y = static_cast<double>(M) / N;
  const double d = invert_theta(mu, y);  // throws for subcritical mu

  const double d2y = d * d - y;
  const double amp = (1.0 + d) * (1.0 + d) * d2y * d2y / std::pow(d, 4);
  const double v11 = amp * (2.0 * d * d / d2y + kappa4 * s4_assumption);
  const double slope = theta_map_prime(d, y);

  SpikeEstimate est;
  est.mu_observed = mu;
  est.d_hat = d;
  est.supercritical = true;
  est.alpha = alpha;
  est.se = std::sqrt(v11 / N) / slope;
  const double z = norm_quantile(1.0 - alpha / 2.0);
  est.ci_lower = d - z * est.se;
  est.ci_upper = d + z * est.se;
  return est;
}

DebiasedOverlap debias_overlap(double overlap_sq_observed, double d_hat, double y) {
  if (!(d_hat > std::sqrt(y))) {
    throw std::domain_error("debias_overlap: requires a supercritical d_hat");
  }
  const double factor = (d_hat * d_hat - y) / (d_hat * (d_hat + y));
  DebiasedOverlap out;
  out.value = overlap_sq_observed / factor;
  if (out.value < 0.0) {
    out.value = 0.0;
    out.clamped = true;
  } else if (out.value > 1.0) {
    out.value = 1.0;
    out.clamped = true;
  }
  return out;
}

}  // namespace spikes
