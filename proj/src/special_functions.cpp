#include "rses/special_functions.hpp"

#include <cmath>
#include <limits>

#include "rses/errors.hpp"

namespace rses::sf {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 20000;
const double kFpMin = std::numeric_limits<double>::min() / kEps;

// Series expansion of P(a,x); converges fast for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < kMaxIter; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps) {
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
  }
  throw NumericalError("incomplete gamma series did not converge");
}

// Continued fraction for Q(a,x) via modified Lentz; for x >= a + 1.
double gamma_q_cf(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kFpMin;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -static_cast<double>(i) * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = b + an / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) {
      return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
  }
  throw NumericalError("incomplete gamma continued fraction did not converge");
}

// Continued fraction for the incomplete beta (modified Lentz).
double beta_cf(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw NumericalError("incomplete beta continued fraction did not converge");
}

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

}  // namespace

double regularized_lower_gamma(double shape, double x) {
  if (!(shape > 0.0)) throw DomainError("regularized_lower_gamma: shape must be positive");
  if (!(x >= 0.0)) throw DomainError("regularized_lower_gamma: x must be nonnegative");
  if (x == 0.0) return 0.0;
  if (x < shape + 1.0) return clamp01(gamma_p_series(shape, x));
  // For x >= shape + 1 the upper tail is bounded by its leading factor
  // x^shape e^-x / Gamma(shape); once that underflows, the CDF is 1 to
  // double precision. Also covers x = infinity.
  if (std::isinf(x) || shape * std::log(x) - x - std::lgamma(shape) < -745.0) return 1.0;
  return clamp01(1.0 - gamma_q_cf(shape, x));
}

double gamma_cdf(double shape, double rate, double x) {
  if (!(rate > 0.0)) throw DomainError("gamma_cdf: rate must be positive");
  if (!(x >= 0.0)) throw DomainError("gamma_cdf: x must be nonnegative");
  return regularized_lower_gamma(shape, rate * x);
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("regularized_incomplete_beta: shapes must be positive");
  if (!(x >= 0.0) || !(x <= 1.0)) throw DomainError("regularized_incomplete_beta: x must lie in [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double front =
      std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x));
  // The continued fraction converges fast only for x below the mean; use the
  // symmetry I_x(a,b) = 1 - I_{1-x}(b,a) on the other side.
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return clamp01(front * beta_cf(a, b, x) / a);
  }
  return clamp01(1.0 - front * beta_cf(b, a, 1.0 - x) / b);
}

double beta_prime_cdf(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("beta_prime_cdf: shapes must be positive");
  if (!(x >= 0.0)) throw DomainError("beta_prime_cdf: x must be nonnegative");
  if (std::isinf(x)) return 1.0;
  return regularized_incomplete_beta(a, b, x / (1.0 + x));
}

double beta_prime_quantile(double a, double b, double q) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("beta_prime_quantile: shapes must be positive");
  if (!(q > 0.0) || !(q < 1.0)) throw DomainError("beta_prime_quantile: q must lie in (0,1)");
  // Solve I_w(a,b) = q for w in (0,1), then map back through x = w/(1-w).
  // Safeguarded Newton: bisection step whenever Newton leaves the bracket.
  double lo = 0.0, hi = 1.0;
  double w = a / (a + b);  // distribution mean as the starting point
  const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  for (int i = 0; i < 200; ++i) {
    const double f = regularized_incomplete_beta(a, b, w) - q;
    if (f > 0.0) {
      hi = w;
    } else {
      lo = w;
    }
    double step_to;
    const double logpdf = (a - 1.0) * std::log(w) + (b - 1.0) * std::log1p(-w) - log_beta;
    const double pdf = std::exp(logpdf);
    if (pdf > 0.0 && std::isfinite(pdf)) {
      step_to = w - f / pdf;
    } else {
      step_to = 0.5 * (lo + hi);
    }
    if (!(step_to > lo) || !(step_to < hi)) step_to = 0.5 * (lo + hi);
    if (std::fabs(step_to - w) < 1e-16 * std::max(1.0, std::fabs(w))) {
      w = step_to;
      break;
    }
    w = step_to;
  }
  if (w >= 1.0) return std::numeric_limits<double>::infinity();
  return w / (1.0 - w);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double q) {
  if (!(q > 0.0) || !(q < 1.0)) throw DomainError("normal_quantile: q must lie in (0,1)");
  // Safeguarded Newton on the CDF; the density stays positive on the bracket.
  double lo = -40.0, hi = 40.0;
  double x = 0.0;
  const double inv_sqrt_2pi = 0.3989422804014326779;
  for (int i = 0; i < 200; ++i) {
    const double f = normal_cdf(x) - q;
    if (f > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
    double step_to = pdf > 0.0 ? x - f / pdf : 0.5 * (lo + hi);
    if (!(step_to > lo) || !(step_to < hi)) step_to = 0.5 * (lo + hi);
    if (std::fabs(step_to - x) < 1e-15 * std::max(1.0, std::fabs(x))) return step_to;
    x = step_to;
  }
  return x;
}

double binomial_pmf(std::size_t n, double p, std::size_t k) {
  if (k > n) throw DomainError("binomial_pmf: k must not exceed n");
  if (!(p >= 0.0) || !(p <= 1.0)) throw DomainError("binomial_pmf: p must lie in [0,1]");
  if (p == 0.0) return k == 0 ? 1.0 : 0.0;
  if (p == 1.0) return k == n ? 1.0 : 0.0;
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  const double log_pmf = std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0) +
                         kd * std::log(p) + (nd - kd) * std::log1p(-p);
  return std::exp(log_pmf);
}

}  // namespace rses::sf
