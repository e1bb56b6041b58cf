#include "rses/estimation.hpp"

#include <cmath>
#include <limits>

#include "rses/errors.hpp"
#include "rses/special_functions.hpp"

namespace rses {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Compensated accumulator; keeps large-n means reproducible to full precision.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

double z_for(double level) {
  if (!(level > 0.0) || !(level < 1.0)) throw DomainError("confidence level must lie in (0,1)");
  return sf::normal_quantile(0.5 + level / 2.0);
}

}  // namespace

MleResult fit_mle_all(const Dataset& data) {
  if (data.empty()) throw DomainError("fit_mle: no records");
  KahanSum s1, s0;
  std::size_t k = 0;
  for (const SubjectRecord& rec : data) {
    if (!(rec.time > 0.0)) throw DomainError("fit_mle: survival times must be positive");
    if (rec.responder) {
      ++k;
      s1.add(rec.time);
    } else {
      s0.add(rec.time);
    }
  }
  MleResult out;
  out.n = data.size();
  out.k = k;
  out.p_hat = static_cast<double>(k) / static_cast<double>(out.n);
  if (k >= 1) out.theta1_hat = -std::log(s1.sum / static_cast<double>(k));
  if (k <= out.n - 1) out.theta0_hat = -std::log(s0.sum / static_cast<double>(out.n - k));
  return out;
}

MleResult fit_mle(const Dataset& data, Group group) {
  Dataset filtered;
  for (const SubjectRecord& rec : data) {
    if (rec.group == group) filtered.push_back(rec);
  }
  if (filtered.empty()) throw DomainError("fit_mle: no records for requested group");
  return fit_mle_all(filtered);
}

ConfidenceInterval ci_p(const MleResult& fit, double level) {
  const double z = z_for(level);
  const double half = z * std::sqrt(fit.p_hat * (1.0 - fit.p_hat) / static_cast<double>(fit.n));
  // Deliberately not clipped to [0,1]; clipping would change coverage.
  return {fit.p_hat - half, fit.p_hat + half, level};
}

ConfidenceInterval ci_theta1(const MleResult& fit, double level) {
  const double z = z_for(level);
  if (!fit.theta1_hat) return {-kInf, kInf, level};
  const double half = z * std::sqrt(1.0 / (static_cast<double>(fit.n) * fit.p_hat));
  return {*fit.theta1_hat - half, *fit.theta1_hat + half, level};
}

ConfidenceInterval ci_theta0(const MleResult& fit, double level) {
  const double z = z_for(level);
  if (!fit.theta0_hat) return {-kInf, kInf, level};
  const double half = z * std::sqrt(1.0 / (static_cast<double>(fit.n) * (1.0 - fit.p_hat)));
  return {*fit.theta0_hat - half, *fit.theta0_hat + half, level};
}

double coverage_p(std::size_t n, double p0, double level) {
  if (n == 0) throw DomainError("coverage_p: n must be at least 1");
  if (!(p0 >= 0.0) || !(p0 <= 1.0)) throw DomainError("coverage_p: p0 must lie in [0,1]");
  const double z = z_for(level);
  const double nd = static_cast<double>(n);
  double cover = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double p_hat = static_cast<double>(k) / nd;
    const double half = z * std::sqrt(p_hat * (1.0 - p_hat) / nd);
    if (std::fabs(p0 - p_hat) <= half) cover += sf::binomial_pmf(n, p0, k);
  }
  return cover;
}

double coverage_theta1(std::size_t n, double p0, double level) {
  if (n == 0) throw DomainError("coverage_theta1: n must be at least 1");
  if (!(p0 >= 0.0) || !(p0 <= 1.0)) throw DomainError("coverage_theta1: p0 must lie in [0,1]");
  const double z = z_for(level);
  // k = 0 yields the unbounded interval, which counts as covering.
  double cover = sf::binomial_pmf(n, p0, 0);
  for (std::size_t k = 1; k <= n; ++k) {
    const double kd = static_cast<double>(k);
    // Conditionally on k, lambda1 * (mean responder time) ~ Gamma(k, k).
    const double upper = sf::gamma_cdf(kd, kd, std::exp(z / std::sqrt(kd)));
    const double lower = sf::gamma_cdf(kd, kd, std::exp(-z / std::sqrt(kd)));
    cover += sf::binomial_pmf(n, p0, k) * (upper - lower);
  }
  return cover;
}

double coverage_theta0(std::size_t n, double p0, double level) {
  // The non-responder interval mirrors the responder one under p0 -> 1 - p0.
  return coverage_theta1(n, 1.0 - p0, level);
}

}  // namespace rses
