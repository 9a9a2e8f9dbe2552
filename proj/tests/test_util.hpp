#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "spike_spectra/model.hpp"
#include "spike_spectra/rng.hpp"
#include "spike_spectra/stats.hpp"

namespace test_util {

inline Eigen::VectorXd basis(int M, int k) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(M);
  e[k] = 1.0;
  return e;
}

inline Eigen::VectorXd random_gaussian_vector(int M, spikes::Philox& gen) {
  Eigen::VectorXd v(M);
  for (int i = 0; i < M; ++i) v[i] = spikes::norm_quantile(gen.next_open01());
  return v;
}

inline Eigen::VectorXd random_unit(int M, spikes::Philox& gen) {
  Eigen::VectorXd v = random_gaussian_vector(M, gen);
  v.normalize();
  return v;
}

// Gram-Schmidt orthonormal frame of r random vectors.
inline std::vector<Eigen::VectorXd> random_orthonormal(int M, int r, spikes::Philox& gen) {
  std::vector<Eigen::VectorXd> out;
  for (int k = 0; k < r; ++k) {
    Eigen::VectorXd v = random_gaussian_vector(M, gen);
    for (const auto& u : out) v -= u.dot(v) * u;
    v.normalize();
    out.push_back(v);
  }
  return out;
}

}  // namespace test_util
