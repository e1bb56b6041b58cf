#pragma once

#include <cstddef>

// Special functions and distribution primitives used throughout the library.
// All functions are pure; errors are reported via rses::DomainError or
// rses::NumericalError (see errors.hpp).

namespace rses::sf {

// Regularized lower incomplete gamma P(shape, x) = P(G <= x), G ~ Gamma(shape, 1).
double regularized_lower_gamma(double shape, double x);

// CDF of a Gamma(shape, rate) variable at x.
double gamma_cdf(double shape, double rate, double x);

// Regularized incomplete beta I_x(a, b), the Beta(a, b) CDF at x.
double regularized_incomplete_beta(double a, double b, double x);

// Beta prime CDF: P(X <= x) = I_{x/(1+x)}(a, b) for X ~ BetaPrime(a, b).
double beta_prime_cdf(double a, double b, double x);

// Inverse of beta_prime_cdf in x; q strictly inside (0, 1).
double beta_prime_quantile(double a, double b, double q);

// Standard normal CDF and its inverse (mutual inverses to ~1e-12).
double normal_cdf(double x);
double normal_quantile(double q);

// Binomial point mass C(n,k) p^k (1-p)^(n-k), evaluated in log space.
double binomial_pmf(std::size_t n, double p, std::size_t k);

}  // namespace rses::sf
