#pragma once
//
// Direct resolvent computations on H = X X^T serving as oracles that are
// independent of the eigensolver path: the centered quadratic forms
// chi(z) = v^T (G1(z) - m1(z)) v, the representation of the outlier
// eigenvalue and overlap through chi at z = theta(d_i), a contour-integral
// spectral projector, and the operator identities relating G1, G2 and X.
//
// All quadratic forms go through factored linear solves; no resolvent is
// ever formed densely.

#include <Eigen/Dense>
#include <complex>
#include <cstdint>

#include "spike_spectra/model.hpp"

namespace spikes {

// Factorization of (X X^T - z I) for real z beyond the spectrum.
class ResolventFactor {
 public:
  ResolventFactor(const Eigen::MatrixXd& X, double z);

  // G1(z) b, residual-checked to 1e-10 per column.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& b) const;
  double z() const { return z_; }

 private:
  Eigen::MatrixXd H_shifted_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
  double z_;
};

struct ChiStats {
  Eigen::MatrixXd chi;        // chi_{ij} = v_i^T (G1 - m1) v_j
  Eigen::VectorXd chi_u;      // chi_{u i} = u^T (G1 - m1) v_i
  Eigen::VectorXd chi_prime;  // chi'_{ii} = v_i^T G1^2 v_i - m1'
  double z = 0.0;
};

ChiStats chi_stats(const Eigen::MatrixXd& X, const SpikeModel& model,
                   const Direction& dir, double z);

// theta(d_i) - (d_i^2 - y) theta(d_i) chi_ii(theta(d_i)).
double rep_eigenvalue(const Eigen::MatrixXd& X, const SpikeModel& model, int i);
double rep_eigenvalue(const ChiStats& chi, const SpikeModel& model, int i);

// First-order limit - wtilde_i l_i^T chi + chi^T A_i chi with the
// deterministic vector l_i and matrix A_i of the quadratic representation.
double rep_overlap(const Eigen::MatrixXd& X, const SpikeModel& model,
                   const Direction& dir, int i);
double rep_overlap(const ChiStats& chi, const SpikeModel& model,
                   const Direction& dir, int i);

struct ContourSpec {
  double radius = 0.0;           // 0: min(delta/2, (d_i - sqrt(y))/2, half-gap)
  int nodes = 256;               // quadrature nodes, >= 64
  double min_eig_distance = 1e-6;
};

// -(1/2 pi i) contour integral of w^T (Q - z)^{-1} w over theta(Gamma_i),
// evaluated by the periodic trapezoid rule after a one-time tridiagonal
// reduction of Q. Errors: an eigenvalue on/near the contour, or an enclosed
// eigenvalue count different from one.
double contour_overlap(const Eigen::MatrixXd& Q, const SpikeModel& model,
                       const Direction& dir, int i, const ContourSpec& spec = {});

struct IdentityResiduals {
  double g1_recursion;      // max |u^T (G1^l XX^T - G1^{l-1} - z G1^l) v|, l = 1,2
  double g2_recursion;      // max |u^T (X^T G1^l X - G2^{l-1} - z G2^l) v|, l = 1,2
  double g1_square_vs_fd;   // relative error of G1^2 against the z-derivative
  double max_residual() const;
};

IdentityResiduals resolvent_identities(const Eigen::MatrixXd& X, std::complex<double> z,
                                       std::uint64_t probe_seed = 1);

}  // namespace spikes
