#pragma once
//
// The spiked population model Sigma = I + sum_i d_i v_i v_i^T, directions of
// projection with their orthogonal decomposition, and scalar entry laws with
// prescribed third and fourth cumulants.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "spike_spectra/rng.hpp"
#include "spike_spectra/scalar_theory.hpp"

namespace spikes {

struct Spike {
  double d;
  Eigen::VectorXd v;
};

class SpikeModel {
 public:
  // Validates dimensions, ordering d_1 > ... > d_r > 0, orthonormality of the
  // v_i (tolerance 1e-10, inputs are rejected rather than re-orthogonalized),
  // and the supercritical margin: the leading r0 spikes satisfy
  // d_i >= sqrt(y) + delta with pairwise gaps >= delta.
  SpikeModel(int M, int N, std::vector<Spike> spikes, double delta = 0.1);

  int M() const { return M_; }
  int N() const { return N_; }
  double y() const { return y_; }
  double delta() const { return delta_; }
  int r() const { return static_cast<int>(d_.size()); }
  int r0() const { return r0_; }
  double d(int i) const { return d_.at(i); }
  const Eigen::VectorXd& v(int i) const { return v_.at(i); }

  // Applies Sigma^{1/2} = I + sum_i (sqrt(1+d_i)-1) v_i v_i^T to the columns
  // of A in place (exact in the spike basis, O(r M k) cost).
  void apply_sigma_sqrt(Eigen::Ref<Eigen::MatrixXd> A) const;

  // Dense Sigma, for tests and small problems.
  Eigen::MatrixXd sigma() const;

 private:
  int M_, N_;
  double y_, delta_;
  int r0_;
  std::vector<double> d_;
  std::vector<Eigen::VectorXd> v_;
};

// Orthogonal decomposition of a unit direction w against the spike basis:
// w = sum_j <w, v_j> v_j + u with u perpendicular to every v_j, and the
// transformed coordinates wtilde_j = <w, v_j> / sqrt(1 + d_j).
struct Direction {
  Eigen::VectorXd w;
  Eigen::VectorXd coeffs;   // <w, v_j>, j = 1..r
  Eigen::VectorXd u;        // residual, perpendicular to the spike span
  Eigen::VectorXd wtilde;   // coeffs_j / sqrt(1 + d_j)
};

Direction decompose_direction(const SpikeModel& model, const Eigen::VectorXd& w);

// Scalar law with mean 0, variance 1 and declared cumulants (kappa3, kappa4).
class EntryLaw {
 public:
  enum class Kind { gaussian, rademacher, three_point };

  static EntryLaw gaussian();
  static EntryLaw rademacher();
  // Three atoms (-a, 0, b) solving the moment system m1=0, m2=1, m3=kappa3,
  // m4=kappa4+3. Feasible iff kappa4 >= kappa3^2 - 2 with probabilities in
  // [0, 1]; throws std::domain_error otherwise.
  static EntryLaw three_point(double kappa3, double kappa4);

  // kind by name plus requested cumulants; gaussian/rademacher reject
  // cumulants that do not match their fixed values.
  static EntryLaw make(const std::string& kind, double kappa3, double kappa4);

  Kind kind() const { return kind_; }
  double kappa3() const { return kappa3_; }
  double kappa4() const { return kappa4_; }
  const std::vector<double>& atoms() const { return atoms_; }
  const std::vector<double>& probs() const { return probs_; }

  // Exact raw moment of order k (k <= 8), analytic.
  double moment(double k_order) const;

  // Quantile transform of u in (0, 1); all laws sample through this map so
  // that paired runs with a shared uniform stream stay coupled.
  double quantile(double u) const;

  double sample(Philox& gen) const { return quantile(gen.next_open01()); }

 private:
  Kind kind_ = Kind::gaussian;
  double kappa3_ = 0.0, kappa4_ = 0.0;
  std::vector<double> atoms_;   // ascending
  std::vector<double> probs_;   // matching atoms
  std::vector<double> cumprob_; // cumulative, for the quantile map
};

}  // namespace spikes
