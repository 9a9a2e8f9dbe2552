#include "spike_spectra/predictor.hpp"

#include <cmath>
#include <stdexcept>

namespace spikes {

namespace {

void check_spike_index(const SpikeModel& model, int i) {
  if (i < 0 || i >= model.r0()) {
    throw std::invalid_argument("predictor: spike index must be supercritical (i < r0)");
  }
}

}  // namespace

double s_sum(const Eigen::VectorXd& a, int k) {
  return a.array().pow(k).sum();
}

double s_sum(const Eigen::VectorXd& a, int k, const Eigen::VectorXd& b, int l) {
  return (a.array().pow(k) * b.array().pow(l)).sum();
}

double s_sum(const Eigen::VectorXd& a, int k, const Eigen::VectorXd& b, int l,
             const Eigen::VectorXd& c, int t) {
  return (a.array().pow(k) * b.array().pow(l) * c.array().pow(t)).sum();
}

ShorthandVectors shorthand_vectors(const SpikeModel& model, const Direction& dir, int i) {
  check_spike_index(model, i);
  const double d = model.d(i);
  const double y = model.y();

  ShorthandVectors sv;
  sv.varsigma = dir.u;
  for (int j = 0; j < model.r(); ++j) {
    if (j == i) continue;
    sv.varsigma += dir.coeffs[j] * d * std::sqrt(model.d(j) + 1.0) /
                   (d - model.d(j)) * model.v(j);
  }
  sv.varsigma *= 2.0 * std::sqrt(1.0 + d) * (d * d - y) / (d * d * (d + y));

  const double hat = dir.coeffs[i] * y * (1.0 + d) / (d * d * (d + y)) *
                     (1.0 + d * (d + 1.0) / (d + y));
  sv.vhat = hat * model.v(i);
  return sv;
}

FirstOrder first_order(const SpikeModel& model, const Direction& dir, int i) {
  check_spike_index(model, i);
  const double d = model.d(i);
  const double y = model.y();
  const double c = dir.coeffs[i];
  return {theta_map(d, y), (d * d - y) / (d * (d + y)) * c * c};
}

FluctuationCovariance covariance_theorem(const SpikeModel& model, const Direction& dir,
                                         int i, double kappa4) {
  check_spike_index(model, i);
  const double d = model.d(i);
  const double y = model.y();
  const double wvi = dir.coeffs[i];
  const Eigen::VectorXd& vi = model.v(i);
  const auto [varsigma, vhat] = shorthand_vectors(model, dir, i);
  const Eigen::VectorXd h = vhat + varsigma;

  const double d2y = d * d - y;
  const double dy = d + y;

  FluctuationCovariance out;
  out.kappa4 = kappa4;
  Eigen::Matrix3d& G = out.gaussian;
  Eigen::Matrix3d& K = out.kurtosis;
  G.setZero();
  K.setZero();

  const double amp = (1.0 + d) * (1.0 + d) * d2y * d2y / std::pow(d, 4);
  G(0, 0) = amp * 2.0 * d * d / d2y;
  K(0, 0) = amp * s_sum(vi, 4);

  G(0, 1) = wvi * 2.0 * y * std::pow(1.0 + d, 3) / (d * dy * dy);
  K(0, 1) = (1.0 + d) * d2y / (d * d) * s_sum(h, 1, vi, 3);

  // Lambda rows: the Gaussian part of the (1,3) entry vanishes identically,
  // and the (2,3) entry carries the sign of the Lambda_i definition.
  K(0, 2) = -(d + 1.0) / (2.0 * d) * std::sqrt(dy * d2y / d) * s_sum(varsigma, 1, vi, 3);

  G(1, 1) = d * d / d2y * h.squaredNorm() +
            wvi * (d * y + d + 2.0 * y) / (dy * dy) * s_sum(vhat, 1, vi, 1) +
            wvi * wvi * y * (1.0 + d) * d2y / (d * d * dy * dy * dy);
  K(1, 1) = s_sum(h, 2, vi, 2);

  const double lam_amp = 0.5 * std::sqrt(d * dy / d2y);
  G(1, 2) = -lam_amp * d * d / d2y * varsigma.squaredNorm();
  K(1, 2) = -lam_amp * (s_sum(varsigma, 2, vi, 2) + s_sum(varsigma, 1, vhat, 1, vi, 2));

  G(2, 2) = d * dy / (4.0 * d2y) * d * d / d2y * varsigma.squaredNorm();
  K(2, 2) = d * dy / (4.0 * d2y) * s_sum(varsigma, 2, vi, 2);

  G(1, 0) = G(0, 1); G(2, 0) = G(0, 2); G(2, 1) = G(1, 2);
  K(1, 0) = K(0, 1); K(2, 0) = K(0, 2); K(2, 1) = K(1, 2);
  return out;
}

GreensCovariance covariance_greens(const SpikeModel& model, const Direction& dir,
                                   int i, double kappa4) {
  check_spike_index(model, i);
  const int r = model.r();
  const int n = r + 2;
  const double d = model.d(i);
  const double y = model.y();
  const Eigen::VectorXd& vi = model.v(i);
  const Eigen::VectorXd& u = dir.u;

  const ThetaFacts tf = theta_facts(d, y);
  const double z = theta_map(d, y);

  // (m1^2 (z m1)')' at z = theta(d), composed from the m-derivatives.
  const double m1 = mp_m(z, y, 1);
  const double m1p = mp_m_derivative(z, y, 1, 1);
  const double m1pp = mp_m_derivative(z, y, 1, 2);
  const double zm1p = m1 + z * m1p;
  const double zm1pp = 2.0 * m1p + z * m1pp;
  const double a1_prime = 2.0 * m1 * m1p * zm1p + m1 * m1 * zm1pp;

  GreensCovariance gc;
  gc.z = z;
  gc.kappa4 = kappa4;
  gc.Mi = Eigen::MatrixXd::Zero(n, n);
  gc.Ki = Eigen::MatrixXd::Zero(n, n);

  for (int j = 0; j < r; ++j) gc.Mi(j, j) = (j == i) ? 2.0 * tf.a1 : tf.a1;
  gc.Mi(r, r) = tf.a1 * u.squaredNorm();
  gc.Mi(r + 1, r + 1) = 2.0 * tf.a2;
  gc.Mi(i, r + 1) = a1_prime;
  gc.Mi(r + 1, i) = a1_prime;

  const double a3sq = tf.a3 * tf.a3;
  const double a3a4 = tf.a3 * tf.a4;  // (1/2) ((z m2 m1^2)^2)'
  for (int j = 0; j < r; ++j) {
    for (int k = j; k < r; ++k) {
      const double val = s_sum(model.v(j), 1, model.v(k), 1, vi, 2) * a3sq;
      gc.Ki(j, k) = val;
      gc.Ki(k, j) = val;
    }
    gc.Ki(j, r) = s_sum(model.v(j), 1, u, 1, vi, 2) * a3sq;
    gc.Ki(r, j) = gc.Ki(j, r);
    gc.Ki(j, r + 1) = s_sum(model.v(j), 1, vi, 3) * a3a4;
    gc.Ki(r + 1, j) = gc.Ki(j, r + 1);
  }
  gc.Ki(r, r) = s_sum(u, 2, vi, 2) * a3sq;
  gc.Ki(r + 1, r + 1) = s_sum(vi, 4) * tf.a4 * tf.a4;
  gc.Ki(r, r + 1) = s_sum(u, 1, vi, 3) * a3a4;
  gc.Ki(r + 1, r) = gc.Ki(r, r + 1);
  return gc;
}

CoefficientMap coefficient_map(const SpikeModel& model, const Direction& dir, int i) {
  check_spike_index(model, i);
  const int r = model.r();
  const int n = r + 2;
  const double d = model.d(i);
  const double y = model.y();
  const double f = f_of(d, y);
  const double g = g_of(d, y);
  const double root1d = std::sqrt(1.0 + d);

  CoefficientMap cm;
  cm.c_upsilon = Eigen::VectorXd::Zero(n);
  cm.c_theta = Eigen::VectorXd::Zero(n);
  cm.c_lambda = Eigen::VectorXd::Zero(n);

  cm.c_upsilon[i] = -(d * d - y) * theta_map(d, y);

  cm.c_theta[i] = -2.0 * d * (1.0 + d) * root1d * dir.wtilde[i];
  for (int j = 0; j < r; ++j) {
    if (j == i) continue;
    cm.c_theta[j] = -2.0 * f / root1d * nu_of(d, model.d(j)) * dir.wtilde[j];
    cm.c_lambda[j] = std::sqrt(g) * nu_of(d, model.d(j)) * dir.wtilde[j];
  }
  cm.c_theta[r] = -2.0 * f / root1d;
  cm.c_theta[r + 1] = -f * f / root1d * dir.wtilde[i];
  cm.c_lambda[r] = std::sqrt(g);
  return cm;
}

Eigen::Matrix3d greens_mapped_covariance(const GreensCovariance& gc,
                                         const CoefficientMap& cm) {
  const Eigen::MatrixXd V = gc.total();
  const Eigen::VectorXd* c[3] = {&cm.c_upsilon, &cm.c_theta, &cm.c_lambda};
  Eigen::Matrix3d out;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) out(a, b) = c[a]->dot(V * (*c[b]));
  }
  return out;
}

PredictionSummary predict_summary(const SpikeModel& model, const Direction& dir,
                                  int i, double kappa4) {
  PredictionSummary ps;
  const FirstOrder fo = first_order(model, dir, i);
  ps.theta = fo.theta;
  ps.overlap_limit = fo.overlap_limit;
  ps.v_theorem = covariance_theorem(model, dir, i, kappa4).total();
  ps.v_greens_mapped = greens_mapped_covariance(covariance_greens(model, dir, i, kappa4),
                                                coefficient_map(model, dir, i));
  ps.consistency_max_abs_diff = (ps.v_theorem - ps.v_greens_mapped).cwiseAbs().maxCoeff();
  return ps;
}

}  // namespace spikes
