#include "spike_spectra/json_io.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

namespace spikes {

using nlohmann::json;

namespace {

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(arr.size());
  for (std::size_t k = 0; k < arr.size(); ++k) v[k] = arr[k].get<double>();
  return v;
}

}  // namespace

ExperimentConfig parse_config_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: JSON parse error: ") + e.what());
  }
  ExperimentConfig c;
  const json& m = j.at("model");
  c.M = m.at("M").get<int>();
  c.N = m.at("N").get<int>();
  c.delta = m.value("delta", 0.1);
  for (const json& s : m.at("spikes")) {
    SpikeSpec sp;
    sp.d = s.at("d").get<double>();
    const json& v = s.at("v");
    if (v.is_string()) {
      sp.v_token = v.get<std::string>();
    } else {
      sp.v = vector_from_json(v);
    }
    c.spikes.push_back(std::move(sp));
  }
  for (const json& d : j.at("directions")) {
    DirectionSpec ds;
    const json& w = d.is_object() ? d.at("w") : d;
    if (w.is_string()) {
      ds.token = w.get<std::string>();
    } else {
      ds.w = vector_from_json(w);
    }
    c.directions.push_back(std::move(ds));
  }
  if (j.contains("law")) {
    const json& l = j.at("law");
    c.law_kind = l.value("kind", "gaussian");
    c.kappa3 = l.value("kappa3", 0.0);
    c.kappa4 = l.value("kappa4", c.law_kind == "rademacher" ? -2.0 : 0.0);
  }
  c.trials = j.value("trials", 0);
  c.master_seed = j.value("master_seed", std::uint64_t{1});
  c.spike_index = j.value("spike_index", 1) - 1;  // 1-based in files
  c.workers = j.value("workers", 0);
  c.predicted_variance_scale = j.value("predicted_variance_scale", 1.0);
  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    c.tol.var_upsilon_rel = t.value("var_upsilon_rel", c.tol.var_upsilon_rel);
    c.tol.var_theta_rel = t.value("var_theta_rel", c.tol.var_theta_rel);
    c.tol.cov_rel = t.value("cov_rel", c.tol.cov_rel);
    c.tol.var_lambda_rel = t.value("var_lambda_rel", c.tol.var_lambda_rel);
    c.tol.ks_p_min = t.value("ks_p_min", c.tol.ks_p_min);
    c.tol.mean_sigma = t.value("mean_sigma", c.tol.mean_sigma);
    c.tol.mean_bias_c = t.value("mean_bias_c", c.tol.mean_bias_c);
  }
  c.report_path = j.value("report_path", std::string{});
  c.trial_csv_path = j.value("trial_csv_path", std::string{});
  return c;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_json(ss.str());
}

std::vector<double> load_eigenvalues_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open eigenvalue file " + path);
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double x;
    while (ls >> x) out.push_back(x);
  }
  if (out.empty()) throw std::invalid_argument("eigenvalue file " + path + " is empty");
  return out;
}

Eigen::MatrixXd load_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open matrix file " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::vector<double> row;
    double x;
    while (ls >> x) row.push_back(x);
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("matrix file " + path + " is empty");
  const std::size_t cols = rows[0].size();
  for (const auto& r : rows) {
    if (r.size() != cols) throw std::invalid_argument("matrix file " + path + ": ragged rows");
  }
  Eigen::MatrixXd A(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) A(i, j) = rows[i][j];
  }
  return A;
}

}  // namespace spikes
