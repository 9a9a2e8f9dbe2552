#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "spike_spectra/json_io.hpp"
#include "spike_spectra/montecarlo.hpp"
#include "spike_spectra/stats.hpp"

using namespace spikes;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.M = 100;
  c.N = 200;
  c.spikes = {{2.0, "e_1", {}}};
  c.directions = {{"v_1", {}}, {"perp", {}}};
  c.trials = 120;
  c.master_seed = 3;
  // wide gates: this config checks machinery, not statistics
  c.tol.var_upsilon_rel = 0.5;
  c.tol.var_theta_rel = 0.5;
  c.tol.cov_rel = 1.0;
  c.tol.var_lambda_rel = 0.5;
  c.tol.ks_p_min = 1e-6;
  return c;
}

std::string strip_runtime(std::string s) {
  nlohmann::json j = nlohmann::json::parse(s);
  j.erase("runtime_seconds");
  return j.dump(2);
}

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("normal quantile and cdf round trip") {
  for (double p : {1e-9, 1e-4, 0.025, 0.3, 0.5, 0.7, 0.975, 1.0 - 1e-4}) {
    CHECK(norm_cdf(norm_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK(norm_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK_THROWS_AS(norm_quantile(0.0), std::domain_error);
}

TEST_CASE("ks test calibration") {
  // self-test: draws from the hypothesized law keep p above the gate
  int pass = 0;
  const int reps = 30;
  for (int rep = 0; rep < reps; ++rep) {
    Philox gen({404, static_cast<std::uint64_t>(rep)});
    std::vector<double> xs(100000);
    for (double& x : xs) x = norm_quantile(gen.next_open01());
    if (ks_test(xs, norm_cdf).p_value > 0.001) ++pass;
  }
  CHECK(pass >= reps - 1);

  // power: a uniform sample is decisively rejected
  Philox gen({405, 0});
  std::vector<double> us(100000);
  for (double& u : us) u = gen.next_open01();
  CHECK(ks_test(us, norm_cdf).p_value < 1e-6);

  // degenerate sample
  std::vector<double> flat(200, 1.0);
  CHECK_THROWS_AS(ks_test(flat, norm_cdf), std::invalid_argument);
}

TEST_CASE("scaled chi-square cdf") {
  CHECK(chi2_1_scaled_cdf(0.0, 1.0) == 0.0);
  CHECK(chi2_1_scaled_cdf(1.0, 1.0) == doctest::Approx(0.6826894921370859).epsilon(1e-12));
  // scale acts linearly in the argument
  CHECK(chi2_1_scaled_cdf(3.0, 1.5) == doctest::Approx(chi2_1_scaled_cdf(2.0, 1.0)).epsilon(1e-13));
}

}  // TEST_SUITE stats

TEST_SUITE("montecarlo") {

TEST_CASE("accumulator merge semantics") {
  const std::size_t cap = 1024;
  auto leaf = [&](std::uint64_t t, double v) {
    Eigen::VectorXd x(1);
    x << v;
    return MomentAccumulator::leaf(t, x, cap);
  };

  SUBCASE("merge with empty is the identity") {
    MomentAccumulator a = leaf(0, 1.5);
    const MomentAccumulator b = merge(a, MomentAccumulator(1, cap));
    CHECK(b.count() == 1);
    CHECK(b.mean()[0] == 1.5);
  }
  SUBCASE("mean of 1..4 via a two-way split is exact") {
    MomentAccumulator left = merge(leaf(0, 1.0), leaf(1, 2.0));
    MomentAccumulator right = merge(leaf(2, 3.0), leaf(3, 4.0));
    const MomentAccumulator all = merge(left, right);
    CHECK(all.mean()[0] == 2.5);
    CHECK(all.count() == 4);
    CHECK(all.samples()[0] == std::vector<double>{1.0, 2.0, 3.0, 4.0});
  }
  SUBCASE("overlapping ranges are rejected") {
    MomentAccumulator a = merge(leaf(0, 1.0), leaf(1, 2.0));
    CHECK_THROWS_AS(merge(a, leaf(1, 5.0)), std::invalid_argument);
  }
  SUBCASE("order of disjoint blocks does not matter") {
    MomentAccumulator fwd = merge(merge(leaf(0, 1.0), leaf(1, 2.0)), leaf(2, 7.0));
    MomentAccumulator rev = merge(leaf(2, 7.0), merge(leaf(0, 1.0), leaf(1, 2.0)));
    CHECK(fwd.mean()[0] == rev.mean()[0]);
    CHECK(fwd.samples()[0] == rev.samples()[0]);
  }
}

TEST_CASE("config validation") {
  ExperimentConfig c = small_config();
  CHECK_NOTHROW(validate_config(c));

  SUBCASE("too few trials") {
    c.trials = 10;
    CHECK_THROWS_AS(validate_config(c), std::invalid_argument);
  }
  SUBCASE("N below the minimum") {
    c.N = 150;
    CHECK_THROWS_AS(validate_config(c), std::invalid_argument);
  }
  SUBCASE("subcritical target") {
    c.spikes = {{0.2, "e_1", {}}};
    CHECK_THROWS_AS(validate_config(c), std::invalid_argument);
  }
  SUBCASE("unknown law") {
    c.law_kind = "cauchy";
    CHECK_THROWS_AS(validate_config(c), std::invalid_argument);
  }
}

TEST_CASE("experiment determinism across worker counts") {
  ExperimentConfig c = small_config();
  c.workers = 1;
  const ExperimentResult r1 = run_experiment(c);
  c.workers = 4;
  const ExperimentResult r4 = run_experiment(c);
  CHECK(strip_runtime(r1.report_json) == strip_runtime(r4.report_json));
  CHECK(r1.pass == r4.pass);
}

TEST_CASE("negative control: tampered predicted variance fails the gates") {
  ExperimentConfig c = small_config();
  c.trials = 400;
  c.tol.var_upsilon_rel = 0.25;
  c.tol.var_theta_rel = 0.3;
  c.tol.cov_rel = 0.6;
  c.tol.var_lambda_rel = 0.4;
  const ExperimentResult honest = run_experiment(c);
  CHECK(honest.pass);

  c.predicted_variance_scale = 2.0;
  const ExperimentResult tampered = run_experiment(c);
  CHECK_FALSE(tampered.pass);
}

TEST_CASE("reported standard errors shrink like 1/sqrt(R)") {
  ExperimentConfig c = small_config();
  c.trials = 200;
  const ExperimentResult rs = run_experiment(c);
  c.trials = 800;
  const ExperimentResult rl = run_experiment(c);
  const auto js = nlohmann::json::parse(rs.report_json);
  const auto jl = nlohmann::json::parse(rl.report_json);
  const double se_s = js["directions"][0]["mean_se"][0].get<double>();
  const double se_l = jl["directions"][0]["mean_se"][0].get<double>();
  CHECK(se_s / se_l == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("trial csv layout") {
  ExperimentConfig c = small_config();
  c.trial_csv_path = "test_trials.csv";
  const ExperimentResult r = run_experiment(c);
  std::ifstream in("test_trials.csv");
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header.find("trial_index,mu_1,mu_2") == 0);
  CHECK(header.find("Theta_hat_dir0") != std::string::npos);
  CHECK(header.find("Lambda_sq_hat_dir1") != std::string::npos);
  int lines = 0;
  std::string line, last;
  while (std::getline(in, line)) {
    if (!line.empty()) {
      ++lines;
      last = line;
    }
  }
  CHECK(lines == c.trials);
  // the perp direction reports Lambda columns and NA for Theta
  CHECK(last.find("NA") != std::string::npos);
  std::remove("test_trials.csv");
}

TEST_CASE("config json round trip") {
  const std::string text = R"({
    "model": {"M": 100, "N": 200, "delta": 0.1,
              "spikes": [{"d": 2.0, "v": "e_1"}, {"d": 1.1, "v": "e_2"}]},
    "directions": [{"w": "v_1"}, {"w": "uniform"}, {"w": "perp"}],
    "law": {"kind": "rademacher", "kappa3": 0.0, "kappa4": -2.0},
    "trials": 150,
    "master_seed": 9,
    "spike_index": 1
  })";
  const ExperimentConfig c = parse_config_json(text);
  CHECK(c.M == 100);
  CHECK(c.spikes.size() == 2);
  CHECK(c.spikes[1].v_token == "e_2");
  CHECK(c.directions.size() == 3);
  CHECK(c.law_kind == "rademacher");
  CHECK(c.kappa4 == -2.0);
  CHECK(c.spike_index == 0);  // files are 1-based
  CHECK_NOTHROW(validate_config(c));

  const SpikeModel m = build_model(c);
  const auto dirs = build_directions(c, m);
  CHECK(dirs[0].coeffs[0] == doctest::Approx(1.0));
  CHECK(std::abs(dirs[2].coeffs[0]) < 1e-14);
  CHECK(std::abs(dirs[2].coeffs[1]) < 1e-14);
  CHECK(dirs[2].w.norm() == doctest::Approx(1.0).epsilon(1e-14));
}

}  // TEST_SUITE montecarlo
