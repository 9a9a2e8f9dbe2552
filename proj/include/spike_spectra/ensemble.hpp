#pragma once
//
// Sampling of the random matrix ensemble Q = Sigma^{1/2} X X^T Sigma^{1/2},
// top eigenpair extraction, and conversion into the standardized trial
// observables. Every trial is a pure function of (master_seed, trial_index).

#include <Eigen/Dense>
#include <vector>

#include "spike_spectra/model.hpp"
#include "spike_spectra/rng.hpp"

namespace spikes {

// M x N matrix with i.i.d. entries distributed as law / sqrt(N), filled in a
// fixed column-major order from the trial's counter-based stream.
Eigen::MatrixXd sample_X(int M, int N, const EntryLaw& law, TrialSeed seed);

// Q = Sigma^{1/2} X X^T Sigma^{1/2}; the square root is applied to X as a
// rank-r update, never formed densely.
Eigen::MatrixXd build_Q(const SpikeModel& model, const Eigen::MatrixXd& X);

struct Spectrum {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns matching values
};

// Top-k eigenpairs of symmetric Q. Signs: <v_i, xi_i> >= 0 for indices
// matched against the model's supercritical spikes, first nonzero component
// positive otherwise. Each pair is residual-checked to 1e-8 * ||Q||.
Spectrum top_spectrum(const Eigen::MatrixXd& Q, int k,
                      const SpikeModel* model = nullptr);

// Observables of one direction for the target spike. Validity of the Theta
// and Lambda channels is a static property of the direction: Theta requires
// <w, v_i> away from zero, the Lambda proxies require w perpendicular to v_i.
struct DirectionObservation {
  double overlap = 0.0;          // <w, xi_i> under the sign convention
  bool theta_valid = false;
  double theta_hat = 0.0;        // sqrt(N) (overlap^2 - limit) / <w, v_i>
  bool lambda_valid = false;
  double lambda_sq_hat = 0.0;    // N overlap^2
  double lambda_signed_hat = 0.0;  // sqrt(N) overlap
};

struct TrialObservation {
  Eigen::VectorXd mu;            // mu_1 .. mu_{r0+1}
  double upsilon_hat = 0.0;      // sqrt(N) (mu_i - theta(d_i))
  std::vector<DirectionObservation> directions;
};

// Runs one full trial: sample, build, decompose, standardize.
TrialObservation observe_trial(const SpikeModel& model,
                               const std::vector<Direction>& directions,
                               const EntryLaw& law, TrialSeed seed,
                               int spike_index = 0);

}  // namespace spikes
