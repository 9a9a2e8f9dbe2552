#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "spike_spectra/ensemble.hpp"
#include "spike_spectra/predictor.hpp"
#include "test_util.hpp"

using namespace spikes;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using test_util::basis;

namespace {

double nearest_rank_percentile(std::vector<double> xs, double p) {
  std::sort(xs.begin(), xs.end());
  const std::size_t k = static_cast<std::size_t>(std::ceil(p * xs.size()));
  return xs[std::min(k, xs.size()) - 1];
}

}  // namespace

TEST_SUITE("rng") {

TEST_CASE("philox 4x32-10 known answers") {
  std::uint32_t out[4];
  {
    const std::uint32_t ctr[4] = {0, 0, 0, 0}, key[2] = {0, 0};
    Philox::raw_block(ctr, key, out);
    CHECK(out[0] == 0x6627e8d5u);
    CHECK(out[1] == 0xe169c58du);
    CHECK(out[2] == 0xbc57ac4cu);
    CHECK(out[3] == 0x9b00dbd8u);
  }
  {
    const std::uint32_t ctr[4] = {0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu};
    const std::uint32_t key[2] = {0xffffffffu, 0xffffffffu};
    Philox::raw_block(ctr, key, out);
    CHECK(out[0] == 0x408f276du);
    CHECK(out[1] == 0x41c83b0eu);
    CHECK(out[2] == 0xa20bc7c6u);
    CHECK(out[3] == 0x6d5451fdu);
  }
  {
    const std::uint32_t ctr[4] = {0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u};
    const std::uint32_t key[2] = {0xa4093822u, 0x299f31d0u};
    Philox::raw_block(ctr, key, out);
    CHECK(out[0] == 0xd16cfe09u);
    CHECK(out[1] == 0x94fdccebu);
    CHECK(out[2] == 0x5001e420u);
    CHECK(out[3] == 0x24126ea1u);
  }
}

TEST_CASE("stream properties") {
  Philox a({123, 5}), b({123, 5}), c({123, 6});
  bool same = true, differ = false;
  for (int i = 0; i < 64; ++i) {
    const auto va = a.next_u64();
    same = same && (va == b.next_u64());
    differ = differ || (va != c.next_u64());
  }
  CHECK(same);
  CHECK(differ);

  Philox g({99, 0});
  for (int i = 0; i < 1000; ++i) {
    const double u = g.next_open01();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

}  // TEST_SUITE rng

TEST_SUITE("ensemble") {

TEST_CASE("sample_X moments and determinism") {
  const int M = 500, N = 500;
  const EntryLaw law = EntryLaw::gaussian();
  const MatrixXd X = sample_X(M, N, law, {42, 0});

  const double mean = X.mean();
  CHECK(std::abs(mean) < 5.0 / std::sqrt(static_cast<double>(N)) /
                             std::sqrt(static_cast<double>(M) * N));

  const double var = N * X.array().square().mean();
  CHECK(std::abs(var - 1.0) < 5.0 * std::sqrt(2.0 / (static_cast<double>(M) * N)));

  const MatrixXd X2 = sample_X(M, N, law, {42, 0});
  CHECK((X - X2).cwiseAbs().maxCoeff() == 0.0);  // bit-identical re-run

  const MatrixXd X3 = sample_X(M, N, law, {42, 1});
  CHECK((X - X3).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("build_Q structure") {
  const int M = 60, N = 90;
  SpikeModel null_model(M, N, {});
  const MatrixXd X = sample_X(M, N, EntryLaw::gaussian(), {7, 3});
  const MatrixXd Q0 = build_Q(null_model, X);
  CHECK((Q0 - X * X.transpose()).cwiseAbs().maxCoeff() < 1e-14);

  SpikeModel m(M, N, {{2.0, basis(M, 0)}, {1.2, basis(M, 1)}});
  const MatrixXd Q = build_Q(m, X);
  CHECK((Q - Q.transpose()).cwiseAbs().maxCoeff() < 1e-12 * Q.norm());

  const MatrixXd H = X * X.transpose();
  double want_trace = H.trace();
  for (int i = 0; i < m.r(); ++i) want_trace += m.d(i) * m.v(i).dot(H * m.v(i));
  CHECK(Q.trace() == doctest::Approx(want_trace).epsilon(1e-10));

  CHECK_THROWS_AS(build_Q(m, MatrixXd::Zero(M, N + 1)), std::invalid_argument);
}

TEST_CASE("top_spectrum on explicit matrices") {
  SUBCASE("diagonal") {
    MatrixXd Q = Eigen::Vector3d(3.0, 2.0, 1.0).asDiagonal();
    const Spectrum sp = top_spectrum(Q, 3);
    CHECK(sp.values[0] == doctest::Approx(3.0));
    CHECK(sp.values[1] == doctest::Approx(2.0));
    CHECK(sp.values[2] == doctest::Approx(1.0));
    for (int j = 0; j < 3; ++j) CHECK(sp.vectors.col(j)(j) == doctest::Approx(1.0));
  }
  SUBCASE("rank one") {
    Philox gen({5, 0});
    const VectorXd v = test_util::random_unit(12, gen);
    const MatrixXd Q = 5.0 * v * v.transpose();
    const Spectrum sp = top_spectrum(Q, 3);
    CHECK(sp.values[0] == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(std::abs(sp.values[1]) < 1e-12);
    CHECK(std::abs(std::abs(sp.vectors.col(0).dot(v)) - 1.0) < 1e-12);
  }
  SUBCASE("full spectrum reconstructs a random symmetric matrix") {
    Philox gen({6, 0});
    MatrixXd A(50, 50);
    for (int j = 0; j < 50; ++j)
      for (int i = 0; i < 50; ++i) A(i, j) = gen.next_open01() - 0.5;
    const MatrixXd Q = 0.5 * (A + A.transpose());
    const Spectrum sp = top_spectrum(Q, 50);
    const MatrixXd back = sp.vectors *
                          sp.values.asDiagonal() * sp.vectors.transpose();
    CHECK((back - Q).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("observe_trial basics") {
  const int M = 250, N = 500;
  SpikeModel m(M, N, {{2.0, basis(M, 0)}});
  const std::vector<Direction> dirs = {decompose_direction(m, basis(M, 0)),
                                       decompose_direction(m, basis(M, 3))};

  const TrialObservation obs = observe_trial(m, dirs, EntryLaw::gaussian(), {2026, 17});
  CHECK(obs.mu.size() == 2);
  CHECK(std::abs(obs.upsilon_hat) < 50.0);  // ~6 predicted sigmas of headroom
  CHECK(obs.directions[0].theta_valid);
  CHECK_FALSE(obs.directions[0].lambda_valid);
  CHECK(obs.directions[1].lambda_valid);
  CHECK_FALSE(obs.directions[1].theta_valid);

  // determinism of the whole pipeline
  const TrialObservation obs2 = observe_trial(m, dirs, EntryLaw::gaussian(), {2026, 17});
  CHECK(obs.upsilon_hat == obs2.upsilon_hat);
  CHECK(obs.directions[0].theta_hat == obs2.directions[0].theta_hat);
  CHECK(obs.directions[1].lambda_sq_hat == obs2.directions[1].lambda_sq_hat);
  CHECK(obs.mu[1] == obs2.mu[1]);
}

TEST_CASE("noise-free surrogate recovers the population spectrum") {
  const int M = 40, N = 60;
  SpikeModel m(M, N, {{2.0, basis(M, 0)}});
  MatrixXd X = MatrixXd::Zero(M, N);
  for (int i = 0; i < M; ++i) X(i, i) = 1.0;  // X X^T = I exactly
  const MatrixXd Q = build_Q(m, X);
  const Spectrum sp = top_spectrum(Q, 2, &m);
  CHECK(sp.values[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(sp.values[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("desk-scale envelopes over 200 seeded trials") {
  const int M = 250, N = 500;
  const double d = 2.0;
  SpikeModel m(M, N, {{d, basis(M, 0)}});
  const std::vector<Direction> dirs = {decompose_direction(m, basis(M, 0))};
  const double theta = theta_map(d, m.y());
  const double lim = first_order(m, dirs[0], 0).overlap_limit;
  const double lp = mp_edges(m.y()).lambda_plus;

  const int R = 200;
  std::vector<double> e_out, e_edge, ovl;
  int sign_ok = 0;
  for (int t = 0; t < R; ++t) {
    const TrialObservation obs =
        observe_trial(m, dirs, EntryLaw::gaussian(), {12, static_cast<std::uint64_t>(t)});
    e_out.push_back(std::abs(obs.mu[0] - theta));
    e_edge.push_back(std::abs(obs.mu[1] - lp));
    ovl.push_back(obs.directions[0].overlap * obs.directions[0].overlap);
    if (obs.directions[0].overlap >= 0.0) ++sign_ok;
  }
  CHECK(nearest_rank_percentile(e_out, 0.99) <= 10.0 / std::sqrt(static_cast<double>(N)));
  CHECK(nearest_rank_percentile(e_edge, 0.99) <= 10.0 * std::pow(N, -2.0 / 3.0));
  CHECK(sign_ok == R);  // overlap limit 0.7 >> 0.1, convention must hold everywhere

  const double mean_ovl =
      std::accumulate(ovl.begin(), ovl.end(), 0.0) / R;
  const double v22 = covariance_theorem(m, dirs[0], 0, 0.0).total()(1, 1);
  const double gate = 5.0 * std::sqrt(v22 / R) / std::sqrt(static_cast<double>(N)) + 30.0 / N;
  CHECK(std::abs(mean_ovl - lim) < gate);
}

}  // TEST_SUITE ensemble
