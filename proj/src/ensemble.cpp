#include "spike_spectra/ensemble.hpp"

#include <cmath>
#include <stdexcept>

#include "spike_spectra/predictor.hpp"

namespace spikes {

namespace {
constexpr double kThetaCoeffTol = 1e-8;  // below this, <w,v_i> counts as zero
}

Eigen::MatrixXd sample_X(int M, int N, const EntryLaw& law, TrialSeed seed) {
  if (M <= 0 || N <= 0) throw std::invalid_argument("sample_X: bad dimensions");
  Philox gen(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(N));
  Eigen::MatrixXd X(M, N);
  for (int j = 0; j < N; ++j) {
    for (int i = 0; i < M; ++i) X(i, j) = law.sample(gen) * scale;
  }
  return X;
}

Eigen::MatrixXd build_Q(const SpikeModel& model, const Eigen::MatrixXd& X) {
  if (X.rows() != model.M() || X.cols() != model.N()) {
    throw std::invalid_argument("build_Q: shape mismatch");
  }
  Eigen::MatrixXd Xt = X;
  model.apply_sigma_sqrt(Xt);
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(model.M(), model.M());
  Q.selfadjointView<Eigen::Lower>().rankUpdate(Xt);
  return Q.selfadjointView<Eigen::Lower>();
}

Spectrum top_spectrum(const Eigen::MatrixXd& Q, int k, const SpikeModel* model) {
  const int M = static_cast<int>(Q.rows());
  if (k <= 0 || k > M) throw std::invalid_argument("top_spectrum: k out of range");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("top_spectrum: eigensolver failed to converge");
  }
  const double qnorm = std::max(std::abs(es.eigenvalues()(0)),
                                std::abs(es.eigenvalues()(M - 1)));

  Spectrum sp;
  sp.values.resize(k);
  sp.vectors.resize(M, k);
  const int matched = model ? std::min(k, model->r0()) : 0;
  for (int j = 0; j < k; ++j) {
    sp.values[j] = es.eigenvalues()(M - 1 - j);
    Eigen::VectorXd xi = es.eigenvectors().col(M - 1 - j);
    double orient = 0.0;
    if (j < matched) {
      orient = model->v(j).dot(xi);
    } else {
      for (int c = 0; c < M; ++c) {
        if (std::abs(xi[c]) > 1e-12) {
          orient = xi[c];
          break;
        }
      }
    }
    if (orient < 0.0) xi = -xi;
    const double resid = (Q * xi - sp.values[j] * xi).norm();
    if (resid > 1e-8 * std::max(qnorm, 1.0)) {
      throw std::runtime_error("top_spectrum: eigenpair residual too large");
    }
    sp.vectors.col(j) = xi;
  }
  return sp;
}

TrialObservation observe_trial(const SpikeModel& model,
                               const std::vector<Direction>& directions,
                               const EntryLaw& law, TrialSeed seed,
                               int spike_index) {
  if (model.r0() < 1) throw std::invalid_argument("observe_trial: model has no supercritical spike");
  if (spike_index < 0 || spike_index >= model.r0()) {
    throw std::invalid_argument("observe_trial: spike index out of range");
  }
  const Eigen::MatrixXd X = sample_X(model.M(), model.N(), law, seed);
  const Eigen::MatrixXd Q = build_Q(model, X);
  const int k = model.r0() + 1;
  const Spectrum sp = top_spectrum(Q, k, &model);

  const double rootN = std::sqrt(static_cast<double>(model.N()));

  TrialObservation obs;
  obs.mu = sp.values;
  obs.upsilon_hat =
      rootN * (sp.values[spike_index] - theta_map(model.d(spike_index), model.y()));

  obs.directions.reserve(directions.size());
  for (const Direction& dir : directions) {
    DirectionObservation dob;
    const Eigen::VectorXd xi = sp.vectors.col(spike_index);
    dob.overlap = dir.w.dot(xi);
    const double wvi = dir.coeffs[spike_index];
    if (std::abs(wvi) >= kThetaCoeffTol) {
      dob.theta_valid = true;
      const double limit = first_order(model, dir, spike_index).overlap_limit;
      dob.theta_hat = rootN * (dob.overlap * dob.overlap - limit) / wvi;
    } else {
      dob.lambda_valid = true;
      dob.lambda_sq_hat = model.N() * dob.overlap * dob.overlap;
      dob.lambda_signed_hat = rootN * dob.overlap;
    }
    obs.directions.push_back(dob);
  }
  return obs;
}

}  // namespace spikes
