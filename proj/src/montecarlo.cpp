#include "spike_spectra/montecarlo.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <stdexcept>
#include <thread>

#include "spike_spectra/predictor.hpp"
#include "spike_spectra/stats.hpp"

namespace spikes {

using nlohmann::json;

namespace {

constexpr std::size_t kSampleCap = 1u << 21;
constexpr const char* kVersion = "0.1.0";

Eigen::VectorXd basis_vector(int M, int k) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(M);
  e[k] = 1.0;
  return e;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

SpikeModel build_model(const ExperimentConfig& config) {
  std::vector<Spike> spikes;
  for (const SpikeSpec& s : config.spikes) {
    if (!s.v_token.empty()) {
      if (s.v_token.size() < 3 || s.v_token.substr(0, 2) != "e_") {
        throw std::invalid_argument("spike vector token must be e_<k>");
      }
      const int k = std::stoi(s.v_token.substr(2));
      if (k < 1 || k > config.M) throw std::invalid_argument("spike token index out of range");
      spikes.push_back({s.d, basis_vector(config.M, k - 1)});
    } else {
      spikes.push_back({s.d, s.v});
    }
  }
  return SpikeModel(config.M, config.N, std::move(spikes), config.delta);
}

std::vector<Direction> build_directions(const ExperimentConfig& config,
                                        const SpikeModel& model) {
  std::vector<Direction> out;
  for (const DirectionSpec& ds : config.directions) {
    Eigen::VectorXd w;
    if (ds.token.empty()) {
      w = ds.w;
    } else if (ds.token == "uniform") {
      w = Eigen::VectorXd::Constant(model.M(), 1.0 / std::sqrt(double(model.M())));
    } else if (ds.token == "perp") {
      // first coordinate vector with a dominant residual, orthogonalized
      // exactly against the spike span
      w.setZero();
      for (int k = 0; k < model.M(); ++k) {
        Eigen::VectorXd cand = basis_vector(model.M(), k);
        for (int j = 0; j < model.r(); ++j) cand -= model.v(j).dot(cand) * model.v(j);
        if (cand.norm() >= 0.5) {
          w = cand.normalized();
          break;
        }
      }
      if (w.size() == 0 || w.norm() == 0.0) {
        throw std::invalid_argument("perp direction: no residual basis vector found");
      }
    } else if (ds.token.size() > 2 && ds.token.substr(0, 2) == "v_") {
      const int k = std::stoi(ds.token.substr(2));
      if (k < 1 || k > model.r()) throw std::invalid_argument("direction token v_<k> out of range");
      w = model.v(k - 1);
    } else {
      throw std::invalid_argument("unknown direction token '" + ds.token + "'");
    }
    out.push_back(decompose_direction(model, w));
  }
  return out;
}

void validate_config(const ExperimentConfig& config) {
  if (config.trials < 100) {
    throw std::invalid_argument("config: trials must be >= 100 for distributional tests");
  }
  if (config.N < 200) throw std::invalid_argument("config: N must be >= 200");
  if (config.spikes.empty()) throw std::invalid_argument("config: need at least one spike");
  if (config.directions.empty()) throw std::invalid_argument("config: need at least one direction");
  if (static_cast<std::size_t>(config.trials) > kSampleCap) {
    throw std::invalid_argument("config: trials exceed the reservoir capacity");
  }
  if (!(config.predicted_variance_scale > 0.0)) {
    throw std::invalid_argument("config: predicted_variance_scale must be positive");
  }
  EntryLaw::make(config.law_kind, config.kappa3, config.kappa4);  // feasibility
  const SpikeModel model = build_model(config);
  if (model.r0() < 1) throw std::invalid_argument("config: no supercritical spike");
  if (config.spike_index < 0 || config.spike_index >= model.r0()) {
    throw std::invalid_argument("config: spike_index out of the supercritical range");
  }
  build_directions(config, model);
}

MomentAccumulator::MomentAccumulator(int dim, std::size_t sample_cap)
    : dim_(dim),
      cap_(sample_cap),
      sum_(Eigen::VectorXd::Zero(dim)),
      sum_outer_(Eigen::MatrixXd::Zero(dim, dim)),
      samples_(dim) {}

MomentAccumulator MomentAccumulator::leaf(std::uint64_t trial_index,
                                          const Eigen::VectorXd& x,
                                          std::size_t sample_cap) {
  MomentAccumulator acc(static_cast<int>(x.size()), sample_cap);
  acc.lo_ = trial_index;
  acc.hi_ = trial_index + 1;
  acc.count_ = 1;
  acc.sum_ = x;
  acc.sum_outer_ = x * x.transpose();
  for (int j = 0; j < x.size(); ++j) acc.samples_[j].push_back(x[j]);
  return acc;
}

void MomentAccumulator::merge_with(const MomentAccumulator& other) {
  if (other.empty()) return;
  if (empty()) {
    *this = other;
    return;
  }
  if (dim_ != other.dim_) throw std::invalid_argument("merge: dimension mismatch");
  if (lo_ < other.hi_ && other.lo_ < hi_) {
    throw std::invalid_argument("merge: overlapping trial index ranges");
  }
  const bool this_first = lo_ <= other.lo_;
  count_ += other.count_;
  sum_ += other.sum_;
  sum_outer_ += other.sum_outer_;
  for (int j = 0; j < dim_; ++j) {
    auto& mine = samples_[j];
    const auto& theirs = other.samples_[j];
    if (this_first) {
      mine.insert(mine.end(), theirs.begin(), theirs.end());
    } else {
      mine.insert(mine.begin(), theirs.begin(), theirs.end());
    }
    if (mine.size() > cap_) mine.resize(cap_);
  }
  lo_ = std::min(lo_, other.lo_);
  hi_ = std::max(hi_, other.hi_);
}

MomentAccumulator merge(const MomentAccumulator& a, const MomentAccumulator& b) {
  MomentAccumulator out = a;
  out.merge_with(b);
  return out;
}

Eigen::VectorXd MomentAccumulator::mean() const {
  if (count_ == 0) throw std::runtime_error("MomentAccumulator: empty");
  return sum_ / static_cast<double>(count_);
}

Eigen::MatrixXd MomentAccumulator::covariance() const {
  if (count_ < 2) throw std::runtime_error("MomentAccumulator: need two samples");
  const double n = static_cast<double>(count_);
  const Eigen::VectorXd m = mean();
  Eigen::MatrixXd cov = (sum_outer_ - n * m * m.transpose()) / (n - 1.0);
  return 0.5 * (cov + cov.transpose());
}

namespace {

struct DirectionLayout {
  std::string name;
  bool has_theta = false;   // otherwise the lambda channels
  std::vector<std::string> observables;  // per slot
};

Eigen::VectorXd observation_vector(const TrialRecord& rec, int d, bool has_theta) {
  const DirectionObservation& dob = rec.directions[d];
  if (has_theta) {
    Eigen::VectorXd x(2);
    x << rec.upsilon_hat, dob.theta_hat;
    return x;
  }
  Eigen::VectorXd x(3);
  x << rec.upsilon_hat, dob.lambda_signed_hat, dob.lambda_sq_hat;
  return x;
}

// fixed binary reduction over [lo, hi) of per-trial leaves
MomentAccumulator reduce_tree(const std::vector<TrialRecord>& recs,
                              const std::vector<bool>& ok, int d, bool has_theta,
                              std::uint64_t lo, std::uint64_t hi) {
  if (hi - lo == 1) {
    if (!ok[lo]) return MomentAccumulator(has_theta ? 2 : 3, kSampleCap);
    return MomentAccumulator::leaf(lo, observation_vector(recs[lo], d, has_theta),
                                   kSampleCap);
  }
  const std::uint64_t mid = lo + (hi - lo) / 2;
  MomentAccumulator left = reduce_tree(recs, ok, d, has_theta, lo, mid);
  left.merge_with(reduce_tree(recs, ok, d, has_theta, mid, hi));
  return left;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

struct Check {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool pass = false;
  bool gating = true;
};

json check_json(const Check& c) {
  return json{{"name", c.name}, {"value", c.value}, {"bound", c.bound},
              {"pass", c.pass}, {"gating", c.gating}};
}

double se_of_variance(const std::vector<double>& xs, double mean, double var) {
  double m4 = 0.0;
  for (double x : xs) m4 += std::pow(x - mean, 4);
  m4 /= xs.size();
  return std::sqrt(std::max(m4 - var * var, 0.0) / xs.size());
}

double se_of_covariance(const std::vector<double>& xs, const std::vector<double>& ys,
                        double mx, double my, double cov) {
  double m22 = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    m22 += (xs[i] - mx) * (xs[i] - mx) * (ys[i] - my) * (ys[i] - my);
  }
  m22 /= xs.size();
  return std::sqrt(std::max(m22 - cov * cov, 0.0) / xs.size());
}

std::string canonical_config_string(const ExperimentConfig& c);

std::string canonical_config_string(const ExperimentConfig& c) {
  json j;
  j["M"] = c.M;
  j["N"] = c.N;
  j["delta"] = c.delta;
  json spikes = json::array();
  for (const auto& s : c.spikes) {
    json sj{{"d", s.d}};
    if (!s.v_token.empty()) {
      sj["v"] = s.v_token;
    } else {
      sj["v"] = std::vector<double>(s.v.data(), s.v.data() + s.v.size());
    }
    spikes.push_back(sj);
  }
  j["spikes"] = spikes;
  json dirs = json::array();
  for (const auto& d : c.directions) {
    if (!d.token.empty()) {
      dirs.push_back(d.token);
    } else {
      dirs.push_back(std::vector<double>(d.w.data(), d.w.data() + d.w.size()));
    }
  }
  j["directions"] = dirs;
  j["law"] = {{"kind", c.law_kind}, {"kappa3", c.kappa3}, {"kappa4", c.kappa4}};
  j["trials"] = c.trials;
  j["master_seed"] = c.master_seed;
  j["spike_index"] = c.spike_index;
  j["predicted_variance_scale"] = c.predicted_variance_scale;
  j["tolerances"] = {{"var_upsilon_rel", c.tol.var_upsilon_rel},
                     {"var_theta_rel", c.tol.var_theta_rel},
                     {"cov_rel", c.tol.cov_rel},
                     {"var_lambda_rel", c.tol.var_lambda_rel},
                     {"ks_p_min", c.tol.ks_p_min},
                     {"mean_sigma", c.tol.mean_sigma},
                     {"mean_bias_c", c.tol.mean_bias_c}};
  return j.dump();
}

}  // namespace

std::uint64_t config_hash(const ExperimentConfig& config) {
  return fnv1a64(canonical_config_string(config));
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  const auto t_start = std::chrono::steady_clock::now();

  const SpikeModel model = build_model(config);
  const std::vector<Direction> directions = build_directions(config, model);
  const EntryLaw law = EntryLaw::make(config.law_kind, config.kappa3, config.kappa4);
  const int i = config.spike_index;
  const int R = config.trials;
  const double N = model.N();
  const double scale = config.predicted_variance_scale;

  // predictor values, computed once
  std::vector<PredictionSummary> preds;
  preds.reserve(directions.size());
  for (const Direction& dir : directions) {
    preds.push_back(predict_summary(model, dir, i, law.kappa4()));
  }

  // trials
  std::vector<TrialRecord> recs(R);
  std::vector<std::string> errors(R);
  std::atomic<int> next{0};
  const int workers = config.workers > 0
                          ? config.workers
                          : std::max(1u, std::thread::hardware_concurrency());
  auto work = [&]() {
    for (;;) {
      const int t = next.fetch_add(1);
      if (t >= R) break;
      try {
        const TrialObservation obs = observe_trial(
            model, directions, law, {config.master_seed, static_cast<std::uint64_t>(t)}, i);
        recs[t].index = t;
        recs[t].mu = obs.mu;
        recs[t].upsilon_hat = obs.upsilon_hat;
        recs[t].directions = obs.directions;
      } catch (const std::exception& e) {
        errors[t] = e.what();
      }
    }
  };
  {
    std::vector<std::thread> pool;
    for (int wkr = 0; wkr < workers; ++wkr) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  std::vector<bool> ok(R, true);
  int failed = 0;
  std::string first_error;
  for (int t = 0; t < R; ++t) {
    if (!errors[t].empty()) {
      ok[t] = false;
      if (failed == 0) first_error = errors[t];
      ++failed;
    }
  }
  if (failed > R / 100) {
    throw std::runtime_error("run_experiment: " + std::to_string(failed) + "/" +
                             std::to_string(R) + " trials failed; first: " + first_error);
  }

  // report assembly
  ExperimentResult result;
  result.mu_count = model.r0() + 1;
  json report;
  report["provenance"] = {
      {"config_hash", config_hash(config)},
      {"master_seed", config.master_seed},
      {"version", kVersion}};
  report["trials"] = R;
  report["failed_trials"] = failed;
  report["model"] = {{"M", model.M()}, {"N", model.N()}, {"y", model.y()},
                     {"r", model.r()}, {"r0", model.r0()}, {"spike_index", i},
                     {"d", model.d(i)}};
  report["law"] = {{"kind", config.law_kind}, {"kappa3", law.kappa3()},
                   {"kappa4", law.kappa4()}};

  bool all_pass = true;
  json dir_reports = json::array();
  for (std::size_t d = 0; d < directions.size(); ++d) {
    const bool has_theta = std::abs(directions[d].coeffs[i]) >= 1e-8;
    const std::string dname = "dir" + std::to_string(d);
    const MomentAccumulator acc =
        reduce_tree(recs, ok, static_cast<int>(d), has_theta, 0, R);
    const Eigen::VectorXd mean = acc.mean();
    const Eigen::MatrixXd cov = acc.covariance();
    const auto& samples = acc.samples();
    const double n = static_cast<double>(acc.count());

    const Eigen::Matrix3d V = scale * preds[d].v_theorem;
    const double v11 = V(0, 0), v22 = V(1, 1), v12 = V(0, 1), v33 = V(2, 2),
                 v13 = V(0, 2);

    std::vector<Check> checks;
    std::vector<std::string> names;
    if (has_theta) {
      names = {"upsilon", "theta"};
    } else {
      names = {"upsilon", "lambda_signed", "lambda_sq"};
    }

    // mean gates: |mean| <= sigma * SE + c sqrt(V)/sqrt(N)
    for (std::size_t k = 0; k < names.size(); ++k) {
      if (names[k] == "lambda_sq") continue;  // mean is V33 itself, covered below
      const double pred_var = names[k] == "upsilon" ? v11 : (names[k] == "theta" ? v22 : v33);
      const double se = std::sqrt(cov(k, k) / n);
      Check c;
      c.name = dname + ".mean_" + names[k];
      c.value = std::abs(mean[k]);
      c.bound = config.tol.mean_sigma * se +
                config.tol.mean_bias_c * std::sqrt(std::max(pred_var, 0.0) / N);
      c.pass = c.value <= c.bound;
      checks.push_back(c);
    }

    // variance and covariance gates against the predictor
    {
      Check c;
      c.name = dname + ".var_upsilon_rel";
      c.value = std::abs(cov(0, 0) / v11 - 1.0);
      c.bound = config.tol.var_upsilon_rel;
      c.pass = c.value <= c.bound;
      checks.push_back(c);
    }
    if (has_theta) {
      Check c;
      c.name = dname + ".var_theta_rel";
      c.value = std::abs(cov(1, 1) / v22 - 1.0);
      c.bound = config.tol.var_theta_rel;
      c.pass = c.value <= c.bound;
      checks.push_back(c);
      if (std::abs(v12) > 1e-12) {
        Check c2;
        c2.name = dname + ".cov_upsilon_theta_rel";
        c2.value = std::abs(cov(0, 1) - v12) / std::abs(v12);
        c2.bound = config.tol.cov_rel;
        c2.pass = c2.value <= c2.bound;
        checks.push_back(c2);
      }
    } else {
      Check c;
      c.name = dname + ".var_lambda_rel";
      c.value = std::abs(cov(1, 1) / v33 - 1.0);
      c.bound = config.tol.var_lambda_rel;
      c.pass = c.value <= c.bound;
      checks.push_back(c);
      // |corr(Upsilon, Lambda_signed)| against the prediction, informational
      Check c3;
      c3.name = dname + ".corr_upsilon_lambda_abs_diff";
      const double corr_emp = cov(0, 1) / std::sqrt(cov(0, 0) * cov(1, 1));
      const double corr_pred = v13 / std::sqrt(v11 * v33);
      c3.value = std::abs(std::abs(corr_emp) - std::abs(corr_pred));
      c3.bound = 5.0 / std::sqrt(n) + config.tol.mean_bias_c / std::sqrt(N);
      c3.pass = c3.value <= c3.bound;
      c3.gating = false;
      checks.push_back(c3);
    }

    // KS gates: shape against the predicted scale (empirical centering; the
    // mean is gated separately with its finite-size allowance)
    json ks_report = json::object();
    for (std::size_t k = 0; k < names.size(); ++k) {
      if (names[k] == "lambda_sq") {
        std::vector<double> xs = samples[k];
        const KsResult ks = ks_test(xs, [&](double x) { return chi2_1_scaled_cdf(x, v33); });
        ks_report["lambda_sq_chi2"] = {{"statistic", ks.statistic}, {"p_value", ks.p_value}};
        Check c;
        c.name = dname + ".ks_lambda_sq";
        c.value = ks.p_value;
        c.bound = config.tol.ks_p_min;
        c.pass = c.value > c.bound;
        checks.push_back(c);
        continue;
      }
      if (names[k] == "lambda_signed") continue;  // shape covered through lambda_sq
      const double pred_sd =
          std::sqrt(names[k] == "upsilon" ? v11 : v22);
      std::vector<double> xs = samples[k];
      const double mu_emp = mean[k];
      for (double& x : xs) x = (x - mu_emp) / pred_sd;
      const KsResult ks = ks_test(xs, norm_cdf);
      ks_report[names[k] + "_normal"] = {{"statistic", ks.statistic}, {"p_value", ks.p_value}};
      Check c;
      c.name = dname + ".ks_" + names[k];
      c.value = ks.p_value;
      c.bound = config.tol.ks_p_min;
      c.pass = c.value > c.bound;
      checks.push_back(c);

      MarginalSamples ms;
      ms.direction = dname;
      ms.observable = names[k];
      ms.standardized = xs;
      result.marginals.push_back(std::move(ms));
    }

    json jchecks = json::array();
    for (const Check& c : checks) {
      jchecks.push_back(check_json(c));
      if (c.gating && !c.pass) all_pass = false;
    }

    // standard errors and z-scores for the moment table
    json se_mean = json::array(), zvals = json::array();
    for (std::size_t k = 0; k < names.size(); ++k) {
      se_mean.push_back(std::sqrt(cov(k, k) / n));
    }
    const double se_var_u = se_of_variance(samples[0], mean[0], cov(0, 0));
    zvals.push_back((cov(0, 0) - v11) / std::max(se_var_u, 1e-300));
    if (has_theta) {
      const double se_var_t = se_of_variance(samples[1], mean[1], cov(1, 1));
      zvals.push_back((cov(1, 1) - v22) / std::max(se_var_t, 1e-300));
      const double se_c = se_of_covariance(samples[0], samples[1], mean[0], mean[1], cov(0, 1));
      zvals.push_back((cov(0, 1) - v12) / std::max(se_c, 1e-300));
    } else {
      const double se_var_l = se_of_variance(samples[1], mean[1], cov(1, 1));
      zvals.push_back((cov(1, 1) - v33) / std::max(se_var_l, 1e-300));
    }

    json dj;
    dj["name"] = dname;
    dj["observables"] = names;
    dj["count"] = acc.count();
    dj["mean"] = std::vector<double>(mean.data(), mean.data() + mean.size());
    dj["mean_se"] = se_mean;
    dj["cov"] = matrix_json(cov);
    dj["variance_z_scores"] = zvals;
    dj["predicted"] = {
        {"theta", preds[d].theta},
        {"overlap_limit", preds[d].overlap_limit},
        {"V_theorem", matrix_json(scale * preds[d].v_theorem)},
        {"V_greens_mapped", matrix_json(scale * preds[d].v_greens_mapped)},
        {"consistency_max_abs_diff", preds[d].consistency_max_abs_diff}};
    dj["ks"] = ks_report;
    dj["checks"] = jchecks;
    dir_reports.push_back(dj);
  }

  report["directions"] = dir_reports;
  report["verdict"] = all_pass ? "pass" : "fail";
  const auto t_end = std::chrono::steady_clock::now();
  report["runtime_seconds"] =
      std::chrono::duration<double>(t_end - t_start).count();

  result.pass = all_pass;
  result.report_json = report.dump(2) + "\n";
  result.trials = std::move(recs);

  if (!config.report_path.empty()) {
    std::ofstream out(config.report_path);
    if (!out) throw std::runtime_error("cannot write report to " + config.report_path);
    out << result.report_json;
  }
  if (!config.trial_csv_path.empty()) write_trials_csv(config.trial_csv_path, result);
  return result;
}

void write_trials_csv(const std::string& path, const ExperimentResult& result) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trial CSV to " + path);
  out << "trial_index";
  for (int k = 0; k < result.mu_count; ++k) out << ",mu_" << (k + 1);
  std::size_t ndir = 0;
  for (const TrialRecord& tr : result.trials) {
    if (tr.mu.size() == result.mu_count) {  // first successful trial
      ndir = tr.directions.size();
      break;
    }
  }
  for (std::size_t d = 0; d < ndir; ++d) out << ",overlap_dir" << d;
  out << ",Upsilon_hat";
  for (std::size_t d = 0; d < ndir; ++d) {
    out << ",Theta_hat_dir" << d << ",Lambda_sq_hat_dir" << d
        << ",Lambda_signed_hat_dir" << d;
  }
  out << "\n";
  out.precision(17);
  for (const TrialRecord& tr : result.trials) {
    if (tr.mu.size() != result.mu_count) continue;  // failed trial
    out << tr.index;
    for (int k = 0; k < result.mu_count; ++k) out << "," << tr.mu[k];
    for (const DirectionObservation& dob : tr.directions) out << "," << dob.overlap;
    out << "," << tr.upsilon_hat;
    for (const DirectionObservation& dob : tr.directions) {
      out << ",";
      if (dob.theta_valid) out << dob.theta_hat;
      else out << "NA";
      out << ",";
      if (dob.lambda_valid) out << dob.lambda_sq_hat;
      else out << "NA";
      out << ",";
      if (dob.lambda_valid) out << dob.lambda_signed_hat;
      else out << "NA";
    }
    out << "\n";
  }
}

}  // namespace spikes
