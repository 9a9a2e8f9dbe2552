#include "spike_spectra/scalar_theory.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace spikes {

namespace {

// Coefficients of the defining quadratic A(z) m^2 + B(z) m + 1 = 0.
// Both A and B are affine in z, so A'' = B'' = 0 below.
template <typename Z>
void quadratic_coeffs(Z z, double y, int a, Z& A, Z& B, double& Ap, double& Bp) {
  if (a == 1) {
    A = z * y;
    B = z - (1.0 - y);
    Ap = y;
  } else if (a == 2) {
    A = z;
    B = z + (1.0 - y);
    Ap = 1.0;
  } else {
    throw std::invalid_argument("mp_m: law index must be 1 or 2");
  }
  Bp = 1.0;
}

}  // namespace

void check_aspect_ratio(double y, const AspectRatioBounds& bounds) {
  if (!(y > bounds.tau1 && y < bounds.tau2)) {
    throw std::domain_error("aspect ratio y=" + std::to_string(y) +
                            " outside (" + std::to_string(bounds.tau1) + ", " +
                            std::to_string(bounds.tau2) + ")");
  }
}

EdgePair mp_edges(double y) {
  check_aspect_ratio(y);
  const double s = std::sqrt(y);
  return {(1.0 - s) * (1.0 - s), (1.0 + s) * (1.0 + s)};
}

double mp_density(double x, double y, int a) {
  const EdgePair e = mp_edges(y);
  if (x <= e.lambda_minus || x >= e.lambda_plus) return 0.0;
  const double root = std::sqrt((e.lambda_plus - x) * (x - e.lambda_minus));
  const double denom = (a == 1) ? 2.0 * M_PI * x * y : 2.0 * M_PI * x;
  return root / denom;
}

double mp_m(double z, double y, int a) {
  check_aspect_ratio(y);
  const EdgePair e = mp_edges(y);
  if (!(z > e.lambda_plus)) {
    throw std::domain_error("mp_m: real z must exceed lambda_plus");
  }
  double A, B, Ap, Bp;
  quadratic_coeffs(z, y, a, A, B, Ap, Bp);
  const double disc = B * B - 4.0 * A;
  if (!(disc > 0.0)) {
    throw std::domain_error("mp_m: branch selection failed (z too close to the bulk)");
  }
  // Stable root pair: q/A is the large-magnitude root, 1/q the Stieltjes one.
  const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
  const double m = 1.0 / q;
  if (!(m < 0.0)) {
    throw std::domain_error("mp_m: Stieltjes branch not negative; invalid z");
  }
  return m;
}

Complex mp_m(Complex z, double y, int a) {
  check_aspect_ratio(y);
  if (z.imag() == 0.0) return Complex(mp_m(z.real(), y, a), 0.0);
  if (z.imag() < 0.0) {
    throw std::domain_error("mp_m: complex z must lie in the upper half plane");
  }
  Complex A, B;
  double Ap, Bp;
  quadratic_coeffs(z, y, a, A, B, Ap, Bp);
  const Complex disc = B * B - 4.0 * A;
  Complex s = std::sqrt(disc);
  // Orient the root so that B and s do not cancel.
  if (std::real(std::conj(B) * s) < 0.0) s = -s;
  const Complex q = -0.5 * (B + s);
  const Complex r1 = q / A;
  const Complex r2 = 1.0 / q;
  if (r1.imag() > 0.0 && r2.imag() > 0.0) {
    throw std::domain_error("mp_m: both roots in C+; invalid z");
  }
  if (r1.imag() > 0.0) return r1;
  if (r2.imag() > 0.0) return r2;
  throw std::domain_error("mp_m: no root in C+; invalid z");
}

namespace {

// Implicit differentiation of A m^2 + B m + 1 = 0 with affine A, B:
//   m'   = -(A' m^2 + B' m) / D,                      D = 2 A m + B
//   m''  = -(4 A' m m' + 2 B' m' + 2 A m'^2) / D
//   m''' = -3 (2 A' m'^2 + m'' (2 A' m + B' + 2 A m')) / D
template <typename Z>
void derivative_chain(Z m, Z A, Z B, double Ap, double Bp, Z out[4]) {
  const Z D = 2.0 * A * m + B;
  out[0] = m;
  out[1] = -(Ap * m * m + Bp * m) / D;
  out[2] = -(4.0 * Ap * m * out[1] + 2.0 * Bp * out[1] + 2.0 * A * out[1] * out[1]) / D;
  out[3] = -3.0 * (2.0 * Ap * out[1] * out[1] +
                   out[2] * (2.0 * Ap * m + Bp + 2.0 * A * out[1])) / D;
}

}  // namespace

double mp_m_derivative(double z, double y, int a, int k) {
  if (k < 0 || k > 3) throw std::invalid_argument("mp_m_derivative: order must be 0..3");
  const double m = mp_m(z, y, a);
  double A, B, Ap, Bp;
  quadratic_coeffs(z, y, a, A, B, Ap, Bp);
  double out[4];
  derivative_chain(m, A, B, Ap, Bp, out);
  return out[k];
}

Complex mp_m_derivative(Complex z, double y, int a, int k) {
  if (k < 0 || k > 3) throw std::invalid_argument("mp_m_derivative: order must be 0..3");
  if (z.imag() == 0.0) return Complex(mp_m_derivative(z.real(), y, a, k), 0.0);
  const Complex m = mp_m(z, y, a);
  Complex A, B;
  double Ap, Bp;
  quadratic_coeffs(z, y, a, A, B, Ap, Bp);
  Complex out[4];
  derivative_chain(m, A, B, Ap, Bp, out);
  return out[k];
}

double theta_map(double d, double y) {
  if (!(d > 0.0)) throw std::domain_error("theta_map: d must be positive");
  return 1.0 + d + y + y / d;
}

double theta_map_prime(double d, double y) {
  if (!(d > 0.0)) throw std::domain_error("theta_map_prime: d must be positive");
  return 1.0 - y / (d * d);
}

double invert_theta(double mu, double y) {
  check_aspect_ratio(y);
  const double sy = std::sqrt(y);
  const double lambda_plus = (1.0 + sy) * (1.0 + sy);
  if (!(mu > lambda_plus)) {
    throw std::domain_error("invert_theta: mu <= lambda_plus (subcritical or edge)");
  }
  // Root of d^2 - (mu-1-y) d + y = 0 with d > sqrt(y). The discriminant
  // t^2 - 4y is evaluated in factorized form to keep accuracy near the edge.
  const double t = mu - 1.0 - y;
  const double disc = (mu - lambda_plus) * (t + 2.0 * sy);
  return 0.5 * (t + std::sqrt(disc));
}

double f_of(double d, double y) {
  if (!(d > std::sqrt(y))) throw std::domain_error("f_of: requires d > sqrt(y)");
  return (d + 1.0) * (d * d - y) / d;
}

double g_of(double d, double y) {
  if (!(d > std::sqrt(y))) throw std::domain_error("g_of: requires d > sqrt(y)");
  return (d + 1.0) * (d + y) * (d * d - y) / d;
}

double nu_of(double d_i, double d_j) {
  if (d_i == d_j) throw std::domain_error("nu_of: spike separation violated (d_i == d_j)");
  return d_i * (d_j + 1.0) / (d_i - d_j);
}

ThetaFacts theta_facts(double d, double y) {
  if (!(d > std::sqrt(y))) {
    throw std::domain_error("theta_facts: subcritical input d <= sqrt(y)");
  }
  const double dy = d + y;
  const double d2y = d * d - y;
  ThetaFacts tf;
  tf.a1 = 1.0 / (dy * dy * d2y);
  tf.a2 = std::pow(d, 4) *
          (4.0 * std::pow(d, 4) + 4.0 * std::pow(d, 3) * y - 3.0 * d * d * y +
           d * d * y * y + y * y + y * y * y) /
          (std::pow(dy, 4) * std::pow(d2y, 5));
  tf.a3 = -1.0 / (d * dy);
  tf.a4 = (2.0 * d + y) / (dy * dy * d2y);
  return tf;
}

}  // namespace spikes
