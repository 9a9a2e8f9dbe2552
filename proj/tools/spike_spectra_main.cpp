// Command-line front end: predict / simulate / verify / estimate / identities.
// Exit codes: 0 success (or verification pass), 1 verification failure,
// 2 usage or configuration error.

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <string>
#include <vector>

#include "spike_spectra/ensemble.hpp"
#include "spike_spectra/inference.hpp"
#include "spike_spectra/json_io.hpp"
#include "spike_spectra/montecarlo.hpp"
#include "spike_spectra/predictor.hpp"
#include "spike_spectra/resolvent.hpp"
#include "spike_spectra/stats.hpp"

using nlohmann::json;
using namespace spikes;

namespace {

json matrix_json(const Eigen::Matrix3d& m) {
  json rows = json::array();
  for (int i = 0; i < 3; ++i) {
    json row = json::array();
    for (int j = 0; j < 3; ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

void emit(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << j.dump(2) << "\n";
  }
}

void log_provenance(const std::string& what, std::uint64_t hash, std::uint64_t seed) {
  std::cerr << "[spike_spectra] " << what << " config_hash=" << hash
            << " seed=" << seed << "\n";
}

std::string resolve_direction_token(const std::string& w, int spike_index) {
  if (w == "vi") return "v_" + std::to_string(spike_index + 1);
  return w;
}

ExperimentConfig shorthand_config(double d, double y, int M, int N,
                                  const std::string& w, double kappa3,
                                  double kappa4, int trials,
                                  std::uint64_t seed) {
  ExperimentConfig c;
  if (M <= 0 && N <= 0) M = 200;
  if (M > 0 && N <= 0) {
    if (!(y > 0.0)) throw std::invalid_argument("need --y or both --M and --N");
    N = static_cast<int>(std::lround(M / y));
  } else if (N > 0 && M <= 0) {
    if (!(y > 0.0)) throw std::invalid_argument("need --y or both --M and --N");
    M = static_cast<int>(std::lround(N * y));
  }
  c.M = M;
  c.N = N;
  c.spikes = {{d, "e_1", {}}};
  if (!w.empty()) {
    DirectionSpec ds;
    if (w.rfind("file:", 0) == 0) {
      const Eigen::MatrixXd mat = load_matrix_file(w.substr(5));
      Eigen::VectorXd v = mat.reshaped();
      ds.w = v.normalized();
    } else {
      ds.token = resolve_direction_token(w, 0);
    }
    c.directions = {ds};
  }
  if (kappa4 < kappa3 * kappa3 - 2.0 - 1e-12) {
    throw std::invalid_argument("infeasible cumulant pair (kappa4 < kappa3^2 - 2)");
  }
  if (kappa3 == 0.0 && kappa4 == 0.0) {
    c.law_kind = "gaussian";
  } else if (kappa3 == 0.0 && kappa4 == -2.0) {
    c.law_kind = "rademacher";
  } else {
    c.law_kind = "three_point";
  }
  c.kappa3 = kappa3;
  c.kappa4 = kappa4;
  c.trials = trials;
  c.master_seed = seed;
  return c;
}

int cmd_predict(double d, double y, int M, int N, const std::string& w,
                double kappa4, const std::string& out_path) {
  ExperimentConfig c = shorthand_config(d, y, M, N, w.empty() ? "vi" : w, 0.0,
                                        kappa4, 1000, 1);
  const SpikeModel model = build_model(c);
  if (model.r0() < 1) {
    std::cerr << "error: subcritical spike (d <= sqrt(y) + delta)\n";
    return 2;
  }
  const std::vector<Direction> dirs = build_directions(c, model);
  const PredictionSummary ps = predict_summary(model, dirs[0], 0, kappa4);
  json j;
  j["theta"] = ps.theta;
  j["overlap_limit"] = ps.overlap_limit;
  j["V_theorem"] = matrix_json(ps.v_theorem);
  j["V_greens_mapped"] = matrix_json(ps.v_greens_mapped);
  j["consistency_max_abs_diff"] = ps.consistency_max_abs_diff;
  emit(j, out_path);
  return 0;
}

// Histogram and QQ tables for the standardized marginals of a finished run.
void emit_plot_tables(const ExperimentResult& result, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (const MarginalSamples& ms : result.marginals) {
    if (ms.standardized.empty()) {
      std::cerr << "[spike_spectra] marginal " << ms.direction << "." << ms.observable
                << " empty; table omitted\n";
      continue;
    }
    std::vector<double> xs = ms.standardized;
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    const std::string base = dir + "/" + ms.direction + "_" + ms.observable;

    {
      const int bins = 50;
      const double lo = xs.front(), hi = xs.back();
      const double width = (hi - lo) / bins;
      std::vector<int> counts(bins, 0);
      for (double x : xs) {
        int b = width > 0.0 ? static_cast<int>((x - lo) / width) : 0;
        if (b >= bins) b = bins - 1;
        ++counts[b];
      }
      std::ofstream out(base + "_hist.csv");
      out.precision(12);
      out << "bin_lo,bin_hi,count,normal_overlay\n";
      for (int b = 0; b < bins; ++b) {
        const double center = lo + (b + 0.5) * width;
        const double overlay =
            n * width * std::exp(-0.5 * center * center) / std::sqrt(2.0 * M_PI);
        out << lo + b * width << "," << lo + (b + 1) * width << "," << counts[b]
            << "," << overlay << "\n";
      }
    }
    {
      std::ofstream out(base + "_qq.csv");
      out.precision(12);
      out << "p,empirical_quantile,normal_quantile\n";
      for (std::size_t k = 1; k <= n; ++k) {
        const double p = (k - 0.5) / n;
        out << p << "," << xs[k - 1] << "," << norm_quantile(p) << "\n";
      }
    }
  }
}

int cmd_estimate(const std::string& eig_path, const std::string& matrix_path,
                 int M, int N, bool y_from_shape, double kappa4, double s4,
                 double alpha, double edge_margin, const std::string& out_path) {
  std::vector<double> eigenvalues;
  if (!matrix_path.empty()) {
    const Eigen::MatrixXd A = load_matrix_file(matrix_path);
    M = static_cast<int>(A.rows());
    N = static_cast<int>(A.cols());
    if (!y_from_shape) {
      std::cerr << "note: matrix input always derives y = M/N from the shape\n";
    }
    const Eigen::MatrixXd Q = A * A.transpose() / static_cast<double>(N);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q, Eigen::EigenvaluesOnly);
    for (int k = M - 1; k >= 0; --k) eigenvalues.push_back(es.eigenvalues()(k));
  } else if (!eig_path.empty()) {
    if (M <= 0 || N <= 0) {
      throw std::invalid_argument("eigenvalue input requires --M and --N");
    }
    eigenvalues = load_eigenvalues_csv(eig_path);
    std::sort(eigenvalues.rbegin(), eigenvalues.rend());
  } else {
    throw std::invalid_argument("estimate needs --in <eigenvalues.csv> or --matrix <file>");
  }

  const std::vector<int> flagged = detect_spikes(eigenvalues, M, N, edge_margin);
  json out = json::array();
  for (int idx : flagged) {
    const SpikeEstimate est =
        estimate_spike(eigenvalues[idx - 1], M, N, kappa4, s4, alpha);
    out.push_back(json{{"index", idx},
                       {"mu_observed", est.mu_observed},
                       {"d_hat", est.d_hat},
                       {"supercritical", est.supercritical},
                       {"se", est.se},
                       {"ci_lower", est.ci_lower},
                       {"ci_upper", est.ci_upper},
                       {"alpha", est.alpha}});
  }
  emit(json{{"M", M}, {"N", N}, {"flagged", flagged}, {"estimates", out}}, out_path);
  return 0;
}

int cmd_identities(std::uint64_t seed, const std::string& out_path) {
  json residuals;
  double worst_scalar = 0.0;
  // scalar battery: self-consistency, transform identities, spike-map identity
  for (double y : {0.5, 1.0, 2.0}) {
    const double tau = 0.1;
    const EdgePair e = mp_edges(y);
    double r_sc = 0.0, r_id = 0.0;
    for (int ie = 0; ie < 20; ++ie) {
      const double E = e.lambda_plus + tau + (1.0 / tau - e.lambda_plus - tau) * ie / 19.0;
      for (int ih = 0; ih < 20; ++ih) {
        const double eta = std::pow(10.0, -3.0 + 4.0 * ih / 19.0);
        const std::complex<double> z(E, eta);
        const auto m1 = mp_m(z, y, 1);
        const auto m2 = mp_m(z, y, 2);
        r_sc = std::max(r_sc, std::abs(z * y * m1 * m1 + (z - (1.0 - y)) * m1 + 1.0));
        r_sc = std::max(r_sc, std::abs(z * m2 * m2 + (z + (1.0 - y)) * m2 + 1.0));
        const auto m1p = mp_m_derivative(z, y, 1, 1);
        const auto m2p = mp_m_derivative(z, y, 2, 1);
        r_id = std::max(r_id, std::abs(m1 + 1.0 / (z * (1.0 + m2))));
        r_id = std::max(r_id, std::abs(1.0 + z * m1 - (1.0 + z * m2) / y));
        r_id = std::max(r_id, std::abs(m1 * ((m2 + z * m2p) + 1.0) - m1p / m1));
      }
    }
    double r_loc = 0.0;
    for (double d : {1.1 * std::sqrt(y), 2.0, 5.0, 50.0}) {
      const double z = theta_map(d, y);
      r_loc = std::max(r_loc, std::abs(1.0 + 1.0 / d + z * mp_m(z, y, 1)));
    }
    const std::string tag = "y=" + std::to_string(y);
    residuals["self_consistency[" + tag + "]"] = r_sc;
    residuals["transform_identities[" + tag + "]"] = r_id;
    residuals["spike_map_identity[" + tag + "]"] = r_loc;
    worst_scalar = std::max({worst_scalar, r_sc, r_id, r_loc});
  }

  // resolvent battery on a sampled ensemble
  const Eigen::MatrixXd X = sample_X(120, 200, EntryLaw::gaussian(), {seed, 0});
  const IdentityResiduals ir =
      resolvent_identities(X, {theta_map(2.0, 0.6), 0.5}, seed);
  residuals["g1_recursion"] = ir.g1_recursion;
  residuals["g2_recursion"] = ir.g2_recursion;
  residuals["g1_square_vs_fd"] = ir.g1_square_vs_fd;

  const bool ok = worst_scalar < 1e-10 && ir.g1_recursion < 1e-9 &&
                  ir.g2_recursion < 1e-9 && ir.g1_square_vs_fd < 1e-5;
  residuals["verdict"] = ok ? "pass" : "fail";
  emit(residuals, out_path);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spiked covariance fluctuation toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_path, w_token, tables_dir;
  std::string eig_path, matrix_path;
  double d = 0.0, y = 0.0, kappa3 = 0.0, kappa4 = 0.0, alpha = 0.05, s4 = 0.0;
  double edge_margin = 4.0;
  int M = 0, N = 0, trials = 0, workers = -1;
  std::uint64_t seed = 0;
  bool seed_given = false, y_from_shape = false;

  auto add_model_flags = [&](CLI::App* cmd) {
    cmd->add_option("--d", d, "spike strength");
    cmd->add_option("--y", y, "aspect ratio M/N");
    cmd->add_option("--M", M, "dimension");
    cmd->add_option("--N", N, "sample count");
    cmd->add_option("--w", w_token, "direction: vi|perp|uniform|file:<path>");
    cmd->add_option("--kappa3", kappa3, "third cumulant");
    cmd->add_option("--kappa4", kappa4, "fourth cumulant");
  };

  CLI::App* predict = app.add_subcommand("predict", "closed-form predictions");
  add_model_flags(predict);
  predict->add_option("--out", out_path, "output JSON path (default stdout)");

  CLI::App* simulate = app.add_subcommand("simulate", "run trials, dump per-trial CSV");
  add_model_flags(simulate);
  simulate->add_option("--config", config_path, "experiment config JSON");
  simulate->add_option("--trials", trials, "trial count");
  simulate->add_option("--seed", seed, "master seed")->each([&](const std::string&) {
    seed_given = true;
  });
  simulate->add_option("--workers", workers, "worker threads (0: hardware)");
  simulate->add_option("--out", out_path, "CSV output path");

  CLI::App* verify = app.add_subcommand("verify", "Monte Carlo verification run");
  verify->add_option("--config", config_path, "experiment config JSON")->required();
  verify->add_option("--seed", seed, "master seed override")->each([&](const std::string&) {
    seed_given = true;
  });
  verify->add_option("--workers", workers, "worker threads (0: hardware)");
  verify->add_option("--out", out_path, "report path override");
  verify->add_option("--tables", tables_dir, "emit histogram/QQ tables into this directory");

  CLI::App* estimate = app.add_subcommand("estimate", "debias observed spectra");
  estimate->add_option("--in", eig_path, "eigenvalue CSV (one per line)");
  estimate->add_option("--matrix", matrix_path, "raw data matrix (rows = variables)");
  estimate->add_option("--M", M, "dimension (with --in)");
  estimate->add_option("--N", N, "sample count (with --in)");
  estimate->add_flag("--y-from-shape", y_from_shape, "derive y from the matrix shape");
  estimate->add_option("--kappa4", kappa4, "fourth cumulant plug-in");
  estimate->add_option("--s4", s4, "s4(v_i) plug-in (default 0: delocalized)");
  estimate->add_option("--alpha", alpha, "CI level");
  estimate->add_option("--edge-margin", edge_margin, "edge margin constant c");
  estimate->add_option("--out", out_path, "output JSON path (default stdout)");

  CLI::App* identities = app.add_subcommand("identities", "run the identity battery");
  identities->add_option("--seed", seed, "probe seed")->each([&](const std::string&) {
    seed_given = true;
  });
  identities->add_option("--out", out_path, "output JSON path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (predict->parsed()) {
      if (!(d > 0.0)) throw std::invalid_argument("predict requires --d");
      return cmd_predict(d, y, M, N, w_token, kappa4, out_path);
    }

    if (simulate->parsed() || verify->parsed()) {
      ExperimentConfig c;
      if (!config_path.empty()) {
        c = load_config_file(config_path);
      } else {
        if (!(d > 0.0)) throw std::invalid_argument("simulate requires --config or --d");
        c = shorthand_config(d, y, M, N, w_token.empty() ? "vi" : w_token, kappa3,
                             kappa4, trials > 0 ? trials : 1000, 1);
      }
      if (trials > 0 && simulate->parsed()) c.trials = trials;
      if (seed_given) c.master_seed = seed;
      if (workers >= 0) {
        c.workers = workers;
      } else if (const char* env = std::getenv("SPIKE_SPECTRA_WORKERS")) {
        c.workers = std::atoi(env);
      }
      if (simulate->parsed()) {
        if (!out_path.empty()) c.trial_csv_path = out_path;
        if (c.trial_csv_path.empty()) c.trial_csv_path = "trials.csv";
        c.report_path.clear();
      } else if (!out_path.empty()) {
        c.report_path = out_path;
      }

      validate_config(c);
      log_provenance(simulate->parsed() ? "simulate" : "verify", config_hash(c),
                     c.master_seed);
      const ExperimentResult result = run_experiment(c);
      if (simulate->parsed()) {
        std::cerr << "[spike_spectra] wrote " << c.trial_csv_path << "\n";
        return 0;
      }
      if (c.report_path.empty()) std::cout << result.report_json;
      if (!tables_dir.empty()) emit_plot_tables(result, tables_dir);
      return result.pass ? 0 : 1;
    }

    if (estimate->parsed()) {
      return cmd_estimate(eig_path, matrix_path, M, N, y_from_shape, kappa4, s4,
                          alpha, edge_margin, out_path);
    }

    if (identities->parsed()) {
      return cmd_identities(seed_given ? seed : 1, out_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
