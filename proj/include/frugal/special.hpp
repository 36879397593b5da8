#pragma once

// Scalar special functions backing the distribution families and the test
// statistics. Everything is self-contained (no libm special functions), so
// sampled datasets and p-values are reproducible across platforms.
namespace frugal::special {

double lgamma_pos(double x);  // log Gamma, x > 0
double digamma(double x);     // x > 0
double trigamma(double x);    // x > 0

// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double reg_inc_gamma(double a, double x);
// Inverse of P(a, .): returns x with P(a, x) = p, p in [0, 1).
double inv_reg_inc_gamma(double a, double p);

// Regularized incomplete beta I_x(a, b).
double reg_inc_beta(double a, double b, double x);

// Student-t CDF with nu degrees of freedom.
double student_t_cdf(double t, double nu);

// Survival function of the Kolmogorov limit distribution: P(K > t).
double kolmogorov_sf(double t);

// CDF of the limiting Cramer-von Mises distribution (of n*omega^2).
double cvm_limit_cdf(double x);

// Modified Bessel K of order 1/4 (used by cvm_limit_cdf; exposed for tests).
double bessel_k_quarter(double z);

}  // namespace frugal::special
