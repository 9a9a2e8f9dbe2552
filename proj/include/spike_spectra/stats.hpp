#pragma once
//
// Small statistics toolbox: normal CDF/quantile, Kolmogorov distribution,
// and a two-sided KS test against an arbitrary continuous CDF.

#include <functional>
#include <vector>

namespace spikes {

double norm_cdf(double x);

// Inverse standard normal CDF, full double precision for p in (0, 1).
double norm_quantile(double p);

// CDF of scale * chi^2_1 at x (zero for x <= 0).
double chi2_1_scaled_cdf(double x, double scale);

// Kolmogorov tail Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

struct KsResult {
  double statistic;
  double p_value;
};

// Two-sided KS statistic of the sample against `cdf`, with the asymptotic
// p-value Q(sqrt(n) * D). Throws on samples smaller than two or with zero
// spread (degenerate).
KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);

}  // namespace spikes
