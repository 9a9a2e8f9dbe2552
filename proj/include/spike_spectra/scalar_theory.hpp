#pragma once
//
// Scalar Marchenko-Pastur theory and the spike map.
//
// Two MP laws appear: the spectrum of XX^T normalized by M (index a=1) and
// of X^T X normalized by N (index a=2), with y = M/N. Their Stieltjes
// transforms m_1, m_2 solve the quadratics
//
//   z y m_1^2 + (z - (1-y)) m_1 + 1 = 0,
//   z   m_2^2 + (z + (1-y)) m_2 + 1 = 0,
//
// and are pinned down by the Herglotz property: Im m > 0 on the upper half
// plane, and m real, negative, increasing on the real axis right of the bulk
// edge lambda_plus = (1+sqrt(y))^2.
//
// A population spike of strength d > sqrt(y) produces an outlier sample
// eigenvalue near theta(d) = 1 + d + y + y/d. Everything downstream
// (predictors, resolvent oracles) evaluates m-functions and a handful of
// rational combinations of them at z = theta(d).

#include <complex>

namespace spikes {

using Complex = std::complex<double>;

// y = M/N must stay inside fixed bounds (tau1, tau2).
struct AspectRatioBounds {
  double tau1 = 0.05;
  double tau2 = 20.0;
};

// Throws std::domain_error when y is outside the configured bounds.
void check_aspect_ratio(double y, const AspectRatioBounds& bounds = {});

struct EdgePair {
  double lambda_minus;
  double lambda_plus;
};

// Bulk support endpoints (1 -+ sqrt(y))^2.
EdgePair mp_edges(double y);

// MP density of law a at x (zero outside the bulk; atoms not included).
double mp_density(double x, double y, int a);

// Stieltjes transform m_a(z), a in {1,2}. Complex overload requires
// Im z > 0 or real z > lambda_plus; the real overload requires
// z > lambda_plus and uses real arithmetic throughout.
Complex mp_m(Complex z, double y, int a);
double mp_m(double z, double y, int a);

// k-th z-derivative of m_a, k <= 3 (k = 0 reduces to mp_m). Closed forms by
// implicit differentiation of the defining quadratic.
Complex mp_m_derivative(Complex z, double y, int a, int k);
double mp_m_derivative(double z, double y, int a, int k);

// Spike-to-outlier map theta(d) = 1 + d + y + y/d and its derivative.
double theta_map(double d, double y);
double theta_map_prime(double d, double y);

// Inverse of theta on d > sqrt(y). Throws std::domain_error for
// mu <= lambda_plus (no supercritical spike explains mu).
double invert_theta(double mu, double y);

// f(d) = (d+1)(d^2-y)/d,  g(d) = (d+1)(d+y)(d^2-y)/d.
double f_of(double d, double y);
double g_of(double d, double y);

// nu_i(d_j) = d_i (d_j + 1) / (d_i - d_j). Throws when d_i == d_j.
double nu_of(double d_i, double d_j);

// Rational evaluations at z = theta(d), d > sqrt(y):
//   a1 = m1^2 (z m1)'
//   a2 = m1 m1' (z m1)'' + (m1')^2 (z m1)' + (1/6) m1^2 (z m1)'''
//   a3 = z m2 m1^2
//   a4 = (z m2 m1^2)'
struct ThetaFacts {
  double a1;
  double a2;
  double a3;
  double a4;
};

ThetaFacts theta_facts(double d, double y);

}  // namespace spikes
