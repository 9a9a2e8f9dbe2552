#include "spike_spectra/model.hpp"

#include <cmath>
#include <stdexcept>

#include "spike_spectra/stats.hpp"

namespace spikes {

namespace {
constexpr double kOrthoTol = 1e-10;
}

SpikeModel::SpikeModel(int M, int N, std::vector<Spike> spikes, double delta)
    : M_(M), N_(N), delta_(delta) {
  if (M <= 0 || N <= 0) throw std::invalid_argument("SpikeModel: M, N must be positive");
  y_ = static_cast<double>(M) / N;
  check_aspect_ratio(y_);
  if (!(delta > 0.0)) throw std::invalid_argument("SpikeModel: delta must be positive");

  for (const Spike& s : spikes) {
    if (s.v.size() != M) throw std::invalid_argument("SpikeModel: direction length != M");
    if (!(s.d > 0.0)) throw std::invalid_argument("SpikeModel: spike strengths must be positive");
    d_.push_back(s.d);
    v_.push_back(s.v);
  }
  for (std::size_t i = 1; i < d_.size(); ++i) {
    if (!(d_[i - 1] > d_[i])) {
      throw std::invalid_argument("SpikeModel: spike strengths must be strictly decreasing");
    }
  }
  for (std::size_t i = 0; i < v_.size(); ++i) {
    for (std::size_t j = i; j < v_.size(); ++j) {
      const double dot = v_[i].dot(v_[j]);
      const double want = (i == j) ? 1.0 : 0.0;
      if (std::abs(dot - want) > kOrthoTol) {
        throw std::invalid_argument("SpikeModel: spike directions not orthonormal");
      }
    }
  }

  const double sy = std::sqrt(y_);
  r0_ = 0;
  while (r0_ < r() && d_[r0_] >= sy + delta_) ++r0_;
  for (int i = 0; i < r0_; ++i) {
    for (int j = 0; j < r0_; ++j) {
      if (i != j && std::abs(d_[i] - d_[j]) < delta_) {
        throw std::invalid_argument("SpikeModel: supercritical spikes violate the separation margin");
      }
    }
  }
}

void SpikeModel::apply_sigma_sqrt(Eigen::Ref<Eigen::MatrixXd> A) const {
  for (int i = 0; i < r(); ++i) {
    const double c = std::sqrt(1.0 + d_[i]) - 1.0;
    A.noalias() += (c * v_[i]) * (v_[i].transpose() * A);
  }
}

Eigen::MatrixXd SpikeModel::sigma() const {
  Eigen::MatrixXd S = Eigen::MatrixXd::Identity(M_, M_);
  for (int i = 0; i < r(); ++i) S.noalias() += d_[i] * v_[i] * v_[i].transpose();
  return S;
}

Direction decompose_direction(const SpikeModel& model, const Eigen::VectorXd& w) {
  if (w.size() != model.M()) {
    throw std::invalid_argument("decompose_direction: direction length != M");
  }
  if (std::abs(w.norm() - 1.0) > kOrthoTol) {
    throw std::invalid_argument("decompose_direction: w must be a unit vector");
  }
  Direction dir;
  dir.w = w;
  dir.coeffs.resize(model.r());
  dir.wtilde.resize(model.r());
  dir.u = w;
  for (int j = 0; j < model.r(); ++j) {
    dir.coeffs[j] = w.dot(model.v(j));
    dir.wtilde[j] = dir.coeffs[j] / std::sqrt(1.0 + model.d(j));
    dir.u.noalias() -= dir.coeffs[j] * model.v(j);
  }
  // reconstruction residual
  Eigen::VectorXd back = dir.u;
  for (int j = 0; j < model.r(); ++j) back.noalias() += dir.coeffs[j] * model.v(j);
  if ((back - w).norm() > kOrthoTol) {
    throw std::runtime_error("decompose_direction: reconstruction residual too large");
  }
  return dir;
}

EntryLaw EntryLaw::gaussian() {
  EntryLaw law;
  law.kind_ = Kind::gaussian;
  return law;
}

EntryLaw EntryLaw::rademacher() {
  EntryLaw law;
  law.kind_ = Kind::rademacher;
  law.kappa3_ = 0.0;
  law.kappa4_ = -2.0;
  law.atoms_ = {-1.0, 1.0};
  law.probs_ = {0.5, 0.5};
  law.cumprob_ = {0.5, 1.0};
  return law;
}

EntryLaw EntryLaw::three_point(double kappa3, double kappa4) {
  // Atoms (-a, 0, b), probabilities (p, 1-p-q, q). The moment system gives
  // b - a = kappa3, a b = kappa4 + 3 - kappa3^2, p = t/a, q = t/b with
  // t = 1/(a+b); p + q = 1/(a b) requires a b >= 1.
  const double ab = kappa4 + 3.0 - kappa3 * kappa3;
  if (!(ab >= 1.0)) {
    throw std::domain_error("EntryLaw::three_point: infeasible cumulant pair (kappa4 < kappa3^2 - 2)");
  }
  const double root = std::sqrt(kappa3 * kappa3 + 4.0 * ab);
  const double b = 0.5 * (kappa3 + root);
  const double a = 0.5 * (-kappa3 + root);
  const double t = 1.0 / (a + b);
  const double p = t / a;
  const double q = t / b;
  const double p0 = 1.0 - p - q;
  if (!(p > 0.0 && q > 0.0 && p0 >= -1e-15)) {
    throw std::domain_error("EntryLaw::three_point: probabilities outside [0, 1]");
  }
  EntryLaw law;
  law.kind_ = Kind::three_point;
  law.kappa3_ = kappa3;
  law.kappa4_ = kappa4;
  law.atoms_ = {-a, 0.0, b};
  law.probs_ = {p, std::max(p0, 0.0), q};
  law.cumprob_ = {p, p + std::max(p0, 0.0), 1.0};
  return law;
}

EntryLaw EntryLaw::make(const std::string& kind, double kappa3, double kappa4) {
  if (kind == "gaussian") {
    if (kappa3 != 0.0 || kappa4 != 0.0) {
      throw std::domain_error("EntryLaw: gaussian has (kappa3, kappa4) = (0, 0)");
    }
    return gaussian();
  }
  if (kind == "rademacher") {
    if (kappa3 != 0.0 || kappa4 != -2.0) {
      throw std::domain_error("EntryLaw: rademacher has (kappa3, kappa4) = (0, -2)");
    }
    return rademacher();
  }
  if (kind == "three_point") return three_point(kappa3, kappa4);
  throw std::invalid_argument("EntryLaw: unknown kind '" + kind + "'");
}

double EntryLaw::moment(double k_order) const {
  const int k = static_cast<int>(k_order);
  if (kind_ == Kind::gaussian) {
    if (k % 2 == 1) return 0.0;
    double m = 1.0;  // double factorial (k-1)!!
    for (int j = k - 1; j > 1; j -= 2) m *= j;
    return m;
  }
  double m = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) m += probs_[i] * std::pow(atoms_[i], k);
  return m;
}

double EntryLaw::quantile(double u) const {
  if (kind_ == Kind::gaussian) return norm_quantile(u);
  for (std::size_t i = 0; i + 1 < cumprob_.size(); ++i) {
    if (u < cumprob_[i]) return atoms_[i];
  }
  return atoms_.back();
}

}  // namespace spikes
