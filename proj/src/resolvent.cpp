#include "spike_spectra/resolvent.hpp"

#include <cmath>
#include <stdexcept>

#include "spike_spectra/predictor.hpp"
#include "spike_spectra/stats.hpp"

namespace spikes {

using Complex = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

ResolventFactor::ResolventFactor(const MatrixXd& X, double z) : z_(z) {
  const int M = static_cast<int>(X.rows());
  H_shifted_ = MatrixXd::Zero(M, M);
  H_shifted_.selfadjointView<Eigen::Lower>().rankUpdate(X);
  H_shifted_ = H_shifted_.selfadjointView<Eigen::Lower>();
  H_shifted_.diagonal().array() -= z;
  ldlt_.compute(H_shifted_);
  if (ldlt_.info() != Eigen::Success) {
    throw std::runtime_error("ResolventFactor: factorization failed");
  }
}

MatrixXd ResolventFactor::apply(const MatrixXd& b) const {
  MatrixXd x = ldlt_.solve(b);
  for (int j = 0; j < b.cols(); ++j) {
    const double resid = (H_shifted_ * x.col(j) - b.col(j)).norm();
    if (!(resid <= 1e-10 * std::max(1.0, b.col(j).norm()))) {
      throw std::runtime_error("ResolventFactor: near-singular solve (rigidity event failed)");
    }
  }
  return x;
}

ChiStats chi_stats(const MatrixXd& X, const SpikeModel& model,
                   const Direction& dir, double z) {
  const int r = model.r();
  const ResolventFactor fac(X, z);
  const double m1 = mp_m(z, model.y(), 1);
  const double m1p = mp_m_derivative(z, model.y(), 1, 1);

  MatrixXd rhs(model.M(), r + 1);
  for (int j = 0; j < r; ++j) rhs.col(j) = model.v(j);
  rhs.col(r) = dir.u;
  const MatrixXd sol = fac.apply(rhs);

  ChiStats out;
  out.z = z;
  out.chi.resize(r, r);
  out.chi_u.resize(r);
  out.chi_prime.resize(r);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) {
      out.chi(i, j) = model.v(i).dot(sol.col(j)) - (i == j ? m1 : 0.0);
    }
    out.chi_u[i] = dir.u.dot(sol.col(i)) - m1 * dir.u.dot(model.v(i));
    // v_i^T G1^2 v_i = ||G1 v_i||^2 for real z and symmetric H
    out.chi_prime[i] = sol.col(i).squaredNorm() - m1p;
  }
  return out;
}

double rep_eigenvalue(const ChiStats& chi, const SpikeModel& model, int i) {
  const double d = model.d(i);
  const double y = model.y();
  const double th = theta_map(d, y);
  return th - (d * d - y) * th * chi.chi(i, i);
}

double rep_eigenvalue(const MatrixXd& X, const SpikeModel& model, int i) {
  if (i < 0 || i >= model.r0()) throw std::invalid_argument("rep_eigenvalue: i out of range");
  const Direction trivial = decompose_direction(model, model.v(0));
  return rep_eigenvalue(chi_stats(X, model, trivial, theta_map(model.d(i), model.y())),
                        model, i);
}

double rep_overlap(const ChiStats& chi, const SpikeModel& model,
                   const Direction& dir, int i) {
  const int r = model.r();
  const double d = model.d(i);
  const double y = model.y();
  const double f = f_of(d, y);
  const double g = g_of(d, y);

  // chi-vector (chi_{i1}, .., chi_{ir}, chi_{u i}, chi'_{ii})
  VectorXd c(r + 2);
  for (int j = 0; j < r; ++j) c[j] = chi.chi(i, j);
  c[r] = chi.chi_u[i];
  c[r + 1] = chi.chi_prime[i];

  VectorXd l = VectorXd::Zero(r + 2);
  l[i] = 2.0 * d * (d + 1.0) * (d + 1.0) * dir.wtilde[i];
  for (int j = 0; j < r; ++j) {
    if (j != i) l[j] = 2.0 * f * nu_of(d, model.d(j)) * dir.wtilde[j];
  }
  l[r] = 2.0 * f;
  l[r + 1] = f * f * dir.wtilde[i];

  MatrixXd A = MatrixXd::Zero(r + 2, r + 2);
  for (int j = 0; j < r; ++j) {
    if (j == i) continue;
    for (int k = 0; k < r; ++k) {
      if (k == i) continue;
      A(j, k) = g * nu_of(d, model.d(j)) * nu_of(d, model.d(k)) *
                dir.wtilde[j] * dir.wtilde[k];
    }
    A(j, r) = g * nu_of(d, model.d(j)) * dir.wtilde[j];
    A(r, j) = A(j, r);
  }
  A(r, r) = g;

  const double limit = (d * d - y) / (d * (d + y)) * dir.coeffs[i] * dir.coeffs[i];
  return limit - dir.wtilde[i] * l.dot(c) + c.dot(A * c);
}

double rep_overlap(const MatrixXd& X, const SpikeModel& model,
                   const Direction& dir, int i) {
  if (i < 0 || i >= model.r0()) throw std::invalid_argument("rep_overlap: i out of range");
  return rep_overlap(chi_stats(X, model, dir, theta_map(model.d(i), model.y())),
                     model, dir, i);
}

namespace {

// LU with partial pivoting for a complex tridiagonal system; the factor
// carries two superdiagonals from row swaps.
VectorXcd solve_tridiagonal(VectorXcd diag, VectorXcd sub, VectorXcd sup,
                            VectorXcd rhs) {
  const int n = static_cast<int>(diag.size());
  VectorXcd sup2 = VectorXcd::Zero(n);
  for (int k = 0; k < n - 1; ++k) {
    if (std::abs(sub[k]) > std::abs(diag[k])) {
      std::swap(diag[k], sub[k]);
      std::swap(sup[k], diag[k + 1]);
      if (k + 1 < n - 1) std::swap(sup2[k], sup[k + 1]);
      std::swap(rhs[k], rhs[k + 1]);
    }
    const Complex m = sub[k] / diag[k];
    diag[k + 1] -= m * sup[k];
    if (k + 1 < n - 1) sup[k + 1] -= m * sup2[k];
    rhs[k + 1] -= m * rhs[k];
  }
  VectorXcd x(n);
  for (int k = n - 1; k >= 0; --k) {
    Complex acc = rhs[k];
    if (k + 1 < n) acc -= sup[k] * x[k + 1];
    if (k + 2 < n) acc -= sup2[k] * x[k + 2];
    x[k] = acc / diag[k];
  }
  return x;
}

}  // namespace

double contour_overlap(const MatrixXd& Q, const SpikeModel& model,
                       const Direction& dir, int i, const ContourSpec& spec) {
  if (i < 0 || i >= model.r0()) throw std::invalid_argument("contour_overlap: i out of range");
  const double d = model.d(i);
  const double y = model.y();
  const double sy = std::sqrt(y);

  double rho_max = std::min(model.delta() / 2.0, (d - sy) / 2.0);
  for (int j = 0; j < model.r0(); ++j) {
    if (j != i) rho_max = std::min(rho_max, std::abs(d - model.d(j)) / 2.0);
  }
  const double rho = spec.radius > 0.0 ? spec.radius : rho_max;
  if (!(rho > 0.0 && rho <= rho_max)) {
    throw std::invalid_argument("contour_overlap: radius outside the admissible range");
  }
  if (spec.nodes < 64) throw std::invalid_argument("contour_overlap: need at least 64 nodes");

  // One-time orthogonal reduction Q = H T H^T; each node costs O(M).
  Eigen::Tridiagonalization<MatrixXd> tri(Q);
  const VectorXd t_diag = tri.diagonal();
  const VectorXd t_sub = tri.subDiagonal();
  const VectorXd h = tri.matrixQ().adjoint() * dir.w;

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig;
  eig.computeFromTridiagonal(t_diag, t_sub, Eigen::EigenvaluesOnly);
  const VectorXd evs = eig.eigenvalues();

  // quadrature nodes on theta(Gamma_i)
  const int n_nodes = spec.nodes;
  std::vector<Complex> znode(n_nodes), weight(n_nodes);
  for (int k = 0; k < n_nodes; ++k) {
    const double t = 2.0 * M_PI * k / n_nodes;
    const Complex e(std::cos(t), std::sin(t));
    const Complex dk = Complex(d, 0.0) + rho * e;
    znode[k] = 1.0 + dk + y + y / dk;
    weight[k] = (1.0 - y / (dk * dk)) * rho * e;  // theta'(d_k) rho e^{it}
  }

  // guards: every eigenvalue keeps its distance from the contour, and the
  // contour encloses exactly one eigenvalue (preimage inside Gamma_i)
  const double lambda_plus = mp_edges(y).lambda_plus;
  int enclosed = 0;
  for (int q = 0; q < evs.size(); ++q) {
    double dist = 1e300;
    for (const Complex& zk : znode) dist = std::min(dist, std::abs(Complex(evs[q], 0) - zk));
    if (dist <= spec.min_eig_distance) {
      throw std::runtime_error("contour_overlap: eigenvalue on the contour");
    }
    if (evs[q] > lambda_plus && std::abs(invert_theta(evs[q], y) - d) < rho) ++enclosed;
  }
  if (enclosed != 1) {
    throw std::runtime_error("contour_overlap: enclosed eigenvalue count != 1");
  }

  const int n = static_cast<int>(Q.rows());
  VectorXcd cdiag(n), csub(t_sub.size());
  for (int q = 0; q < t_sub.size(); ++q) csub[q] = t_sub[q];
  Complex acc(0.0, 0.0);
  for (int k = 0; k < n_nodes; ++k) {
    for (int q = 0; q < n; ++q) cdiag[q] = Complex(t_diag[q], 0.0) - znode[k];
    const VectorXcd x = solve_tridiagonal(cdiag, csub, csub, h.cast<Complex>());
    const Complex form = h.cast<Complex>().dot(x);  // h real: plain inner product
    acc += form * weight[k];
  }
  // -(1/2 pi i) * (2 pi i / n) sum f(z_k) theta' rho e^{it} = -(1/n) sum ...
  return -(acc / static_cast<double>(n_nodes)).real();
}

namespace {

MatrixXcd shifted_gram(const MatrixXd& X, Complex z, bool left) {
  const MatrixXd G = left ? MatrixXd(X * X.transpose()) : MatrixXd(X.transpose() * X);
  MatrixXcd A = G.cast<Complex>();
  A.diagonal().array() -= z;
  return A;
}

}  // namespace

double IdentityResiduals::max_residual() const {
  return std::max({g1_recursion, g2_recursion, g1_square_vs_fd});
}

IdentityResiduals resolvent_identities(const MatrixXd& X, Complex z,
                                       std::uint64_t probe_seed) {
  const int M = static_cast<int>(X.rows());
  const int N = static_cast<int>(X.cols());
  const MatrixXd H = X * X.transpose();

  const Eigen::PartialPivLU<MatrixXcd> lu1(shifted_gram(X, z, true));
  const Eigen::PartialPivLU<MatrixXcd> lu2(shifted_gram(X, z, false));

  Philox gen({probe_seed, 0});
  auto random_unit_m = [&](int dim) {
    VectorXd v(dim);
    for (int q = 0; q < dim; ++q) v[q] = norm_quantile(gen.next_open01());
    v.normalize();
    return v;
  };

  IdentityResiduals out{0.0, 0.0, 0.0};
  for (int pair = 0; pair < 20; ++pair) {
    const VectorXd um = random_unit_m(M);
    const VectorXd vm = random_unit_m(M);
    const VectorXd un = random_unit_m(N);
    const VectorXd vn = random_unit_m(N);

    const VectorXcd g1v = lu1.solve(vm.cast<Complex>());
    const VectorXcd g1g1v = lu1.solve(g1v);
    const VectorXcd g2v = lu2.solve(vn.cast<Complex>());
    const VectorXcd g2g2v = lu2.solve(g2v);

    // G1^l X X^T = G1^{l-1} + z G1^l
    const Complex r11 = um.cast<Complex>().dot(H.cast<Complex>() * g1v) -
                        um.cast<Complex>().dot(vm.cast<Complex>()) -
                        z * um.cast<Complex>().dot(g1v);
    const Complex r12 = um.cast<Complex>().dot(H.cast<Complex>() * g1g1v) -
                        um.cast<Complex>().dot(g1v) -
                        z * um.cast<Complex>().dot(g1g1v);
    out.g1_recursion = std::max({out.g1_recursion, std::abs(r11), std::abs(r12)});

    // X^T G1^l X = G2^{l-1} + z G2^l
    const VectorXcd xg1xv = X.transpose().cast<Complex>() *
                            lu1.solve(MatrixXcd((X * vn).cast<Complex>()));
    const Complex r21 = un.cast<Complex>().dot(xg1xv) -
                        un.cast<Complex>().dot(vn.cast<Complex>()) -
                        z * un.cast<Complex>().dot(g2v);
    const VectorXcd xg12xv = X.transpose().cast<Complex>() *
                             lu1.solve(lu1.solve(MatrixXcd((X * vn).cast<Complex>())));
    const Complex r22 = un.cast<Complex>().dot(xg12xv) -
                        un.cast<Complex>().dot(g2v) -
                        z * un.cast<Complex>().dot(g2g2v);
    out.g2_recursion = std::max({out.g2_recursion, std::abs(r21), std::abs(r22)});
  }

  // G1^2 = d G1 / dz by central difference on a fixed probe pair
  {
    const VectorXd um = random_unit_m(M);
    const VectorXd vm = random_unit_m(M);
    const double hstep = 1e-5;
    const Eigen::PartialPivLU<MatrixXcd> lup(shifted_gram(X, z + hstep, true));
    const Eigen::PartialPivLU<MatrixXcd> lum(shifted_gram(X, z - hstep, true));
    const Complex sq = um.cast<Complex>().dot(lu1.solve(lu1.solve(vm.cast<Complex>())));
    const Complex fd = (um.cast<Complex>().dot(lup.solve(vm.cast<Complex>())) -
                        um.cast<Complex>().dot(lum.solve(vm.cast<Complex>()))) /
                       (2.0 * hstep);
    out.g1_square_vs_fd = std::abs(sq - fd) / std::abs(sq);
  }
  return out;
}

}  // namespace spikes
