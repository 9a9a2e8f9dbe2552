#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "spike_spectra/ensemble.hpp"
#include "spike_spectra/inference.hpp"
#include "test_util.hpp"

using namespace spikes;
using test_util::basis;

TEST_SUITE("inference") {

TEST_CASE("detect_spikes thresholding") {
  const int M = 250, N = 500;  // y = 0.5, lambda_plus ~ 2.9142
  CHECK(detect_spikes({4.5, 2.9, 2.8, 2.0}, M, N) == std::vector<int>{1});
  CHECK(detect_spikes({2.8, 2.0, 1.0}, M, N).empty());

  const double boundary = mp_edges(0.5).lambda_plus + 4.0 * std::pow(N, -2.0 / 3.0);
  CHECK(detect_spikes({boundary}, M, N) == std::vector<int>{1});  // inclusive
  CHECK(detect_spikes({boundary - 1e-9}, M, N).empty());

  CHECK_THROWS_AS(detect_spikes({}, M, N), std::invalid_argument);
  CHECK_THROWS_AS(detect_spikes({1.0, 2.0}, M, N), std::invalid_argument);
}

TEST_CASE("estimate_spike arithmetic") {
  const int N = 400;
  const SpikeEstimate est = estimate_spike(4.5, N, N, 0.0);
  CHECK(est.d_hat == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(est.se == doctest::Approx(std::sqrt(13.5 / N) / 0.75).epsilon(1e-12));
  CHECK(est.ci_lower < est.d_hat);
  CHECK(est.ci_upper > est.d_hat);
  CHECK(est.ci_upper - est.d_hat == doctest::Approx(1.959963984540054 * est.se).epsilon(1e-12));

  CHECK_THROWS_AS(estimate_spike(mp_edges(1.0).lambda_plus, N, N, 0.0), std::domain_error);
  CHECK_THROWS_AS(estimate_spike(2.0, N, N, 0.0), std::domain_error);

  // the kappa4 and s4 plug-ins move the width the way V(1,1) says
  const SpikeEstimate wider = estimate_spike(4.5, N, N, 1.0, 1.0);
  CHECK(wider.se > est.se);
}

TEST_CASE("estimate_spike is monotone in mu") {
  const int N = 500, M = 250;
  double prev = 0.0;
  for (double mu = 3.2; mu < 8.0; mu += 0.1) {
    const double d = estimate_spike(mu, M, N).d_hat;
    CHECK(d > prev);
    prev = d;
  }
}

TEST_CASE("debias_overlap") {
  CHECK(debias_overlap(0.5, 2.0, 1.0).value == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_FALSE(debias_overlap(0.5, 2.0, 1.0).clamped);
  CHECK(debias_overlap(0.0, 2.0, 1.0).value == 0.0);

  const DebiasedOverlap over = debias_overlap(0.7, 2.0, 1.0);
  CHECK(over.value == 1.0);
  CHECK(over.clamped);

  CHECK_THROWS_AS(debias_overlap(0.5, 0.9, 1.0), std::domain_error);
}

TEST_CASE("coverage and consistency at reduced desk scale") {
  // 95% CI coverage of the true d, plus the sqrt-rate shrink of |d_hat - d|
  const double d_true = 2.0;
  auto run = [&](int M, int N, int R, std::vector<double>& abs_err) {
    SpikeModel m(M, N, {{d_true, basis(M, 0)}});
    int covered = 0;
    for (int t = 0; t < R; ++t) {
      const Eigen::MatrixXd X =
          sample_X(M, N, EntryLaw::gaussian(), {606, static_cast<std::uint64_t>(t)});
      const Eigen::MatrixXd Q = build_Q(m, X);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q, Eigen::EigenvaluesOnly);
      const double mu1 = es.eigenvalues()(M - 1);
      const SpikeEstimate est = estimate_spike(mu1, M, N, 0.0);
      abs_err.push_back(std::abs(est.d_hat - d_true));
      if (est.ci_lower <= d_true && d_true <= est.ci_upper) ++covered;
    }
    return static_cast<double>(covered) / R;
  };

  std::vector<double> err_small, err_large;
  const double cov_small = run(125, 250, 80, err_small);
  const double cov_large = run(500, 1000, 80, err_large);
  CHECK(cov_small >= 0.85);
  CHECK(cov_large >= 0.85);

  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const double ratio = median(err_small) / median(err_large);
  CHECK(ratio > 1.4);   // sqrt(4)-rate corridor, downscaled trial budget
  CHECK(ratio < 2.9);
}

}  // TEST_SUITE inference
