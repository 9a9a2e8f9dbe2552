#pragma once
//
// Deterministic predictions for a supercritical spike i:
//
//   mu_i      ~ theta(d_i) + Upsilon_i / sqrt(N)
//   <w,xi_i>^2 ~ (d_i^2-y)/(d_i(d_i+y)) <w,v_i>^2 + <w,v_i> Theta_i / sqrt(N)
//                + Lambda_i^2 / N
//
// with (Upsilon, Theta, Lambda) jointly Gaussian. The 3x3 covariance is
// evaluated along two deliberately independent routes that serve as each
// other's oracle:
//
//   * covariance_theorem: closed rational forms in (d, y) together with
//     componentwise power sums of the shorthand vectors varsigma_i, vhat_i;
//   * covariance_greens: the (r+2)x(r+2) matrix V_i = M_i + kappa4 K_i of
//     the resolvent statistics chi_i at z = theta(d_i), contracted with the
//     coefficient vectors expressing (Upsilon, Theta, Lambda) in chi_i.
//
// kappa4 enters only as a scalar multiplier on the separately stored
// kurtosis part; the covariance is free of kappa3.

#include <Eigen/Dense>

#include "spike_spectra/model.hpp"

namespace spikes {

// Componentwise power sums.
double s_sum(const Eigen::VectorXd& a, int k);
double s_sum(const Eigen::VectorXd& a, int k, const Eigen::VectorXd& b, int l);
double s_sum(const Eigen::VectorXd& a, int k, const Eigen::VectorXd& b, int l,
             const Eigen::VectorXd& c, int t);

// varsigma_i (perpendicular to v_i; zero when w = v_i) and vhat_i
// (parallel to v_i; zero when w is perpendicular to v_i).
struct ShorthandVectors {
  Eigen::VectorXd varsigma;
  Eigen::VectorXd vhat;
};

ShorthandVectors shorthand_vectors(const SpikeModel& model, const Direction& dir, int i);

struct FirstOrder {
  double theta;          // outlier eigenvalue limit
  double overlap_limit;  // (d^2-y)/(d(d+y)) <w,v_i>^2
};

FirstOrder first_order(const SpikeModel& model, const Direction& dir, int i);

// 3x3 covariance of (Upsilon, Theta, Lambda), Gaussian and kurtosis parts
// kept separate.
struct FluctuationCovariance {
  Eigen::Matrix3d gaussian;
  Eigen::Matrix3d kurtosis;  // multiplies kappa4
  double kappa4 = 0.0;
  Eigen::Matrix3d total() const { return gaussian + kappa4 * kurtosis; }
};

FluctuationCovariance covariance_theorem(const SpikeModel& model, const Direction& dir,
                                         int i, double kappa4);

// Covariance of the scaled resolvent statistics
// chi_i = sqrt(N) (chi_{i1}, .., chi_{ir}, chi_{u i}, chi_{ii}') at theta(d_i).
struct GreensCovariance {
  Eigen::MatrixXd Mi;  // Gaussian part
  Eigen::MatrixXd Ki;  // kurtosis part
  double z = 0.0;      // evaluation point theta(d_i)
  double kappa4 = 0.0;
  Eigen::MatrixXd total() const { return Mi + kappa4 * Ki; }
  double quadratic_form(const Eigen::VectorXd& c) const {
    return c.dot(total() * c);
  }
};

GreensCovariance covariance_greens(const SpikeModel& model, const Direction& dir,
                                   int i, double kappa4);

// Linear maps from chi_i to (Upsilon, Theta, Lambda).
struct CoefficientMap {
  Eigen::VectorXd c_upsilon;
  Eigen::VectorXd c_theta;
  Eigen::VectorXd c_lambda;
};

CoefficientMap coefficient_map(const SpikeModel& model, const Direction& dir, int i);

// The 3x3 covariance assembled from the Greens route.
Eigen::Matrix3d greens_mapped_covariance(const GreensCovariance& gc,
                                         const CoefficientMap& cm);

// Everything the predict interface emits, including the cross-check.
struct PredictionSummary {
  double theta;
  double overlap_limit;
  Eigen::Matrix3d v_theorem;
  Eigen::Matrix3d v_greens_mapped;
  double consistency_max_abs_diff;
};

PredictionSummary predict_summary(const SpikeModel& model, const Direction& dir,
                                  int i, double kappa4);

}  // namespace spikes
