#pragma once
//
// JSON bindings for the experiment configuration and small file helpers.
// Schema (all vectors may be given inline as arrays of doubles):
//
//   {
//     "model": {"M": 250, "N": 500, "delta": 0.1,
//               "spikes": [{"d": 2.0, "v": "e_1"}]},
//     "directions": [{"w": "v_1"}, {"w": "perp"}, {"w": [..]}],
//     "law": {"kind": "gaussian", "kappa3": 0.0, "kappa4": 0.0},
//     "trials": 4000, "master_seed": 12, "spike_index": 1,
//     "workers": 0, "predicted_variance_scale": 1.0,
//     "tolerances": {"var_upsilon_rel": 0.05, ...},
//     "report_path": "...", "trial_csv_path": "..."
//   }
//
// spike_index is 1-based in files, 0-based in the structs.

#include <string>
#include <vector>

#include "spike_spectra/montecarlo.hpp"

namespace spikes {

ExperimentConfig parse_config_json(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

// One eigenvalue per line (comments with '#' allowed).
std::vector<double> load_eigenvalues_csv(const std::string& path);

// Whitespace- or comma-separated numeric matrix; rows are variables.
Eigen::MatrixXd load_matrix_file(const std::string& path);

}  // namespace spikes
