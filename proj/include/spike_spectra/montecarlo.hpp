#pragma once
//
// Experiment runner: R independent trials, deterministic accumulation over a
// fixed binary merge tree (bit-identical results for any worker count), and
// a report comparing empirical moments and distributions against the
// predictor.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "spike_spectra/ensemble.hpp"
#include "spike_spectra/model.hpp"

namespace spikes {

struct ToleranceProfile {
  double var_upsilon_rel = 0.05;
  double var_theta_rel = 0.10;
  double cov_rel = 0.10;
  double var_lambda_rel = 0.10;
  double ks_p_min = 0.001;
  double mean_sigma = 4.0;   // standard errors
  double mean_bias_c = 3.0;  // + c sqrt(V)/sqrt(N) finite-size allowance
};

struct SpikeSpec {
  double d = 0.0;
  std::string v_token;      // "e_k" (1-based) or empty for an explicit vector
  Eigen::VectorXd v;        // used when v_token is empty
};

struct DirectionSpec {
  std::string token;        // "v_k" (1-based), "uniform", "perp", or empty
  Eigen::VectorXd w;        // used when token is empty
};

struct ExperimentConfig {
  int M = 0;
  int N = 0;
  double delta = 0.1;
  std::vector<SpikeSpec> spikes;
  std::vector<DirectionSpec> directions;
  std::string law_kind = "gaussian";
  double kappa3 = 0.0;
  double kappa4 = 0.0;
  int trials = 0;
  std::uint64_t master_seed = 1;
  int spike_index = 0;      // 0-based target spike
  int workers = 0;          // 0: hardware concurrency
  ToleranceProfile tol;
  double predicted_variance_scale = 1.0;  // negative-control hook, normally 1
  std::string report_path;
  std::string trial_csv_path;
};

// Resolves tokens ("e_k", "v_k", "uniform", "perp") into concrete vectors.
SpikeModel build_model(const ExperimentConfig& config);
std::vector<Direction> build_directions(const ExperimentConfig& config,
                                        const SpikeModel& model);

// Throws std::invalid_argument when the config violates the run contract
// (trials >= 100, N >= 200, valid spike index, known law, ...).
void validate_config(const ExperimentConfig& config);

// Streaming moments of a fixed-dimension observable vector over a range of
// trial indices. Merging is only defined for disjoint ranges; the runner
// always merges along a fixed binary tree, which pins the floating-point
// summation order independently of scheduling.
class MomentAccumulator {
 public:
  MomentAccumulator() = default;
  MomentAccumulator(int dim, std::size_t sample_cap);

  static MomentAccumulator leaf(std::uint64_t trial_index, const Eigen::VectorXd& x,
                                std::size_t sample_cap);

  void merge_with(const MomentAccumulator& other);

  std::uint64_t count() const { return count_; }
  std::uint64_t lo() const { return lo_; }
  std::uint64_t hi() const { return hi_; }
  int dim() const { return dim_; }
  bool empty() const { return count_ == 0; }

  Eigen::VectorXd mean() const;
  Eigen::MatrixXd covariance() const;  // unbiased; symmetric PSD up to rounding
  const std::vector<std::vector<double>>& samples() const { return samples_; }

 private:
  int dim_ = 0;
  std::size_t cap_ = 0;
  std::uint64_t lo_ = 0, hi_ = 0;
  std::uint64_t count_ = 0;
  Eigen::VectorXd sum_;
  Eigen::MatrixXd sum_outer_;
  std::vector<std::vector<double>> samples_;  // per marginal, trial order, capped
};

MomentAccumulator merge(const MomentAccumulator& a, const MomentAccumulator& b);

struct TrialRecord {
  std::uint64_t index = 0;
  Eigen::VectorXd mu;
  double upsilon_hat = 0.0;
  std::vector<DirectionObservation> directions;
};

// Standardized per-marginal sample set retained for table emission.
struct MarginalSamples {
  std::string direction;
  std::string observable;
  std::vector<double> standardized;
};

struct ExperimentResult {
  bool pass = false;
  std::string report_json;  // deterministic apart from the runtime field
  std::vector<TrialRecord> trials;
  std::vector<MarginalSamples> marginals;
  int mu_count = 0;  // r0 + 1
};

ExperimentResult run_experiment(const ExperimentConfig& config);

// Per-trial CSV dump (the simulate interface).
void write_trials_csv(const std::string& path, const ExperimentResult& result);

// 64-bit FNV-1a, used for config provenance hashes.
std::uint64_t fnv1a64(const std::string& text);

// Provenance hash over the semantic config fields (model, directions, law,
// trials, seed, tolerances); output paths and worker hints excluded.
std::uint64_t config_hash(const ExperimentConfig& config);

}  // namespace spikes
