#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "spike_spectra/ensemble.hpp"
#include "spike_spectra/predictor.hpp"
#include "spike_spectra/resolvent.hpp"
#include "test_util.hpp"

using namespace spikes;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using test_util::basis;

TEST_SUITE("resolvent") {

TEST_CASE("identity ensemble gives the closed-form resolvent") {
  const int M = 12, N = 20;
  MatrixXd X = MatrixXd::Zero(M, N);
  for (int i = 0; i < M; ++i) X(i, i) = 1.0;
  const double z = 4.5;
  const ResolventFactor fac(X, z);
  const MatrixXd G = fac.apply(MatrixXd::Identity(M, M));
  CHECK((G - MatrixXd::Identity(M, M) / (1.0 - z)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("chi statistics: symmetry and scale envelopes") {
  const int M = 250, N = 500;
  SpikeModel m(M, N, {{2.0, basis(M, 0)}, {1.2, basis(M, 1)}});
  const Direction dir = decompose_direction(m, basis(M, 5));
  const double z = theta_map(2.0, m.y());

  int within = 0;
  const int seeds = 100;
  for (int s = 0; s < seeds; ++s) {
    const MatrixXd X = sample_X(M, N, EntryLaw::gaussian(), {91, static_cast<std::uint64_t>(s)});
    const ChiStats cs = chi_stats(X, m, dir, z);
    CHECK(std::abs(cs.chi(0, 1) - cs.chi(1, 0)) < 1e-12);
    if (std::abs(cs.chi(0, 0)) < 20.0 / std::sqrt(static_cast<double>(N))) ++within;
  }
  CHECK(within >= 99);
}

TEST_CASE("normalized trace matches m1 to the 1/N scale") {
  const int M = 250, N = 500;
  const double z = theta_map(2.0, 0.5);
  int within = 0;
  for (int s = 0; s < 20; ++s) {
    const MatrixXd X = sample_X(M, N, EntryLaw::gaussian(), {137, static_cast<std::uint64_t>(s)});
    MatrixXd H = MatrixXd::Zero(M, M);
    H.selfadjointView<Eigen::Lower>().rankUpdate(X);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(MatrixXd(H.selfadjointView<Eigen::Lower>()),
                                               Eigen::EigenvaluesOnly);
    double tr = 0.0;
    for (int q = 0; q < M; ++q) tr += 1.0 / (es.eigenvalues()(q) - z);
    const double m1N = tr / M;
    if (std::abs(m1N - mp_m(z, 0.5, 1)) < 20.0 / N) ++within;
  }
  CHECK(within == 20);
}

TEST_CASE("representation formulas on synthetic chi") {
  const int M = 30;
  SpikeModel m(M, 2 * M, {{2.0, basis(M, 0)}});
  const Direction dir = decompose_direction(m, basis(M, 0));

  ChiStats zero;
  zero.z = theta_map(2.0, m.y());
  zero.chi = MatrixXd::Zero(1, 1);
  zero.chi_u = VectorXd::Zero(1);
  zero.chi_prime = VectorXd::Zero(1);

  CHECK(rep_eigenvalue(zero, m, 0) == doctest::Approx(theta_map(2.0, m.y())).epsilon(1e-15));
  CHECK(rep_overlap(zero, m, dir, 0) ==
        doctest::Approx(first_order(m, dir, 0).overlap_limit).epsilon(1e-15));
}

TEST_CASE("overlap representation reduces to a nonnegative quadratic for perpendicular w") {
  const int M = 80, N = 160;
  SpikeModel m(M, N, {{2.0, basis(M, 0)}});
  const Direction dir = decompose_direction(m, basis(M, 9));
  for (int s = 0; s < 5; ++s) {
    const MatrixXd X = sample_X(M, N, EntryLaw::gaussian(), {777, static_cast<std::uint64_t>(s)});
    CHECK(rep_overlap(X, m, dir, 0) >= 0.0);
  }
}

TEST_CASE("representation error scales at desk size") {
  const int M = 250, N = 500;
  SpikeModel m(M, N, {{2.0, basis(M, 0)}});
  const Direction dir = decompose_direction(m, basis(M, 0));
  for (int s = 0; s < 5; ++s) {
    const TrialSeed seed{4242, static_cast<std::uint64_t>(s)};
    const MatrixXd X = sample_X(M, N, EntryLaw::gaussian(), seed);
    const MatrixXd Q = build_Q(m, X);
    const Spectrum sp = top_spectrum(Q, 2, &m);
    CHECK(std::abs(sp.values[0] - rep_eigenvalue(X, m, 0)) < 100.0 / N);
    const double ov = dir.w.dot(sp.vectors.col(0));
    CHECK(std::abs(ov * ov - rep_overlap(X, m, dir, 0)) <
          100.0 / N + 100.0 * std::pow(N, -1.5));
  }
}

TEST_CASE("contour projector on a diagonal matrix") {
  const int M = 10;
  SpikeModel m(M, M, {{2.0, basis(M, 0)}});
  const Direction w = decompose_direction(m, basis(M, 0));
  VectorXd diag = VectorXd::Ones(M);
  diag[0] = 4.5;  // theta(2) at y = 1
  const MatrixXd Q = diag.asDiagonal();
  const double val = contour_overlap(Q, m, w, 0);
  CHECK(val == doctest::Approx(1.0).epsilon(1e-10));

  // a direction with partial weight on the outlier coordinate
  VectorXd mix = VectorXd::Zero(M);
  mix[0] = std::sqrt(0.3);
  mix[4] = std::sqrt(0.7);
  const double val2 = contour_overlap(Q, m, decompose_direction(m, mix), 0);
  CHECK(val2 == doctest::Approx(0.3).epsilon(1e-10));
}

TEST_CASE("contour oracle equals the eigensolver and self-converges") {
  const int M = 250, N = 500;
  // generous separation margin so the default radius beats the N^{-1/2}
  // outlier fluctuation scale
  SpikeModel m(M, N, {{2.0, basis(M, 0)}}, 1.2);
  Philox pg({31415, 0});
  const VectorXd wraw = test_util::random_unit(M, pg);
  const Direction dir = decompose_direction(m, wraw);

  for (int s = 0; s < 5; ++s) {
    const MatrixXd X = sample_X(M, N, EntryLaw::gaussian(), {321, static_cast<std::uint64_t>(s)});
    const MatrixXd Q = build_Q(m, X);
    const Spectrum sp = top_spectrum(Q, 1, &m);
    const double direct = std::pow(dir.w.dot(sp.vectors.col(0)), 2);
    ContourSpec spec;
    spec.nodes = 256;
    const double quad = contour_overlap(Q, m, dir, 0, spec);
    CHECK(std::abs(quad - direct) < 1e-8);

    ContourSpec half = spec;
    half.nodes = 128;
    CHECK(std::abs(contour_overlap(Q, m, dir, 0, half) - quad) < 1e-10);
  }
}

TEST_CASE("contour guards") {
  const int M = 10;
  SpikeModel m(M, M, {{2.0, basis(M, 0)}}, 0.5);
  const Direction w = decompose_direction(m, basis(M, 0));

  SUBCASE("enclosed count != 1") {
    VectorXd diag = VectorXd::Ones(M);
    diag[0] = 4.5;
    diag[1] = 4.4;  // preimage 1.863, inside a radius-0.2 disc around d=2
    const MatrixXd Q = diag.asDiagonal();
    ContourSpec spec;
    spec.radius = 0.2;
    CHECK_THROWS_AS(contour_overlap(Q, m, w, 0, spec), std::runtime_error);
  }
  SUBCASE("eigenvalue on the contour") {
    VectorXd diag = VectorXd::Ones(M);
    diag[0] = 4.5;
    diag[1] = theta_map(2.2, 1.0);  // exactly on the radius-0.2 contour image
    const MatrixXd Q = diag.asDiagonal();
    ContourSpec spec;
    spec.radius = 0.2;
    CHECK_THROWS_AS(contour_overlap(Q, m, w, 0, spec), std::runtime_error);
  }
  SUBCASE("radius validation") {
    const MatrixXd Q = MatrixXd::Identity(M, M);
    ContourSpec spec;
    spec.radius = 10.0;
    CHECK_THROWS_AS(contour_overlap(Q, m, w, 0, spec), std::invalid_argument);
    spec.radius = 0.1;
    spec.nodes = 16;
    CHECK_THROWS_AS(contour_overlap(Q, m, w, 0, spec), std::invalid_argument);
  }
}

TEST_CASE("operator identities") {
  const int M = 60, N = 100;
  const MatrixXd X = sample_X(M, N, EntryLaw::gaussian(), {55, 0});
  const std::complex<double> z(theta_map(2.0, 0.6), 0.5);
  const IdentityResiduals ir = resolvent_identities(X, z);
  CHECK(ir.g1_recursion < 1e-9);
  CHECK(ir.g2_recursion < 1e-9);
  CHECK(ir.g1_square_vs_fd < 1e-5);

  // 1x1 case: the operator identities reduce to scalar arithmetic (the
  // finite-difference entry keeps its O(h^2) truncation floor)
  MatrixXd x1(1, 1);
  x1(0, 0) = 0.7;
  const IdentityResiduals tiny = resolvent_identities(x1, {2.0, 0.3});
  CHECK(tiny.g1_recursion < 1e-13);
  CHECK(tiny.g2_recursion < 1e-13);
  CHECK(tiny.g1_square_vs_fd < 1e-5);
}

}  // TEST_SUITE resolvent
