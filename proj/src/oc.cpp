#include "rses/oc.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

#include "rses/errors.hpp"
#include "rses/special_functions.hpp"

namespace rses {
namespace {

std::size_t checked_group_size(std::size_t n) {
  if (n < 1) throw DomainError("group sizes must be at least 1");
  return n;
}

// Group sizes above which cells with negligible binomial mass are skipped.
constexpr std::size_t kTruncationThresholdN = 500;
constexpr double kTruncationMass = 1e-14;

struct RowSums {
  double response = 0.0;
  double theta = 0.0;
  double truncated = 0.0;
  std::size_t cells = 0;
};

struct KahanSum {
  double sum = 0.0, comp = 0.0;
  void add(double v) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

// P(|thetahatE - thetahatC| <= halfwidth) given stratum counts a (E) and
// b (C), where ratio_ce is the control/experimental hazard ratio of the
// stratum. With an empty stratum the estimate does not exist and the test
// accepts, so the probability is 1.
double theta_accept_prob(std::size_t a, std::size_t b, double ratio_ce, double halfwidth) {
  if (a == 0 || b == 0) return 1.0;
  const double fa = static_cast<double>(a);
  const double fb = static_cast<double>(b);
  const double rho = ratio_ce * (fb / fa);
  return sf::beta_prime_cdf(fb, fa, rho * std::exp(halfwidth)) -
         sf::beta_prime_cdf(fb, fa, rho * std::exp(-halfwidth));
}

void validate_request(const OcRequest& request) {
  request.model.validate();
  if (request.nE < 1 || request.nC < 1) throw DomainError("group sizes must be at least 1");
  if (!(request.alpha > 0.0 && request.alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
}

// Shared enumeration skeleton: `cell` maps (kE, kC, mass) to per-row sums.
// Rows are processed independently and combined in fixed order, so results
// do not depend on the thread count.
template <typename CellFn>
OcResult enumerate_cells(const OcRequest& request, CellFn&& cell, bool parallel) {
  const std::size_t nE = request.nE, nC = request.nC;
  const double pE = request.model.experimental.p;
  const double pC = request.model.control.p;

  std::vector<double> fE(nE + 1), fC(nC + 1);
  for (std::size_t k = 0; k <= nE; ++k) fE[k] = sf::binomial_pmf(nE, pE, k);
  for (std::size_t k = 0; k <= nC; ++k) fC[k] = sf::binomial_pmf(nC, pC, k);

  const bool truncate = nE > kTruncationThresholdN || nC > kTruncationThresholdN;
  std::vector<RowSums> rows(nE + 1);

  (void)parallel;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
  for (std::size_t kE = 0; kE <= nE; ++kE) {
    RowSums row;
    KahanSum response, theta, truncated;
    for (std::size_t kC = 0; kC <= nC; ++kC) {
      const double mass = fE[kE] * fC[kC];
      if (truncate && mass < kTruncationMass) {
        truncated.add(mass);
        continue;
      }
      ++row.cells;
      cell(kE, kC, mass, response, theta);
    }
    row.response = response.sum;
    row.theta = theta.sum;
    row.truncated = truncated.sum;
    rows[kE] = row;
  }

  KahanSum response, theta, truncated;
  std::size_t cells = 0;
  for (const RowSums& row : rows) {
    response.add(row.response);
    theta.add(row.theta);
    truncated.add(row.truncated);
    cells += row.cells;
  }

  OcResult result;
  result.response_contribution = response.sum;
  result.theta_contribution = theta.sum;
  result.rejection_probability = response.sum + theta.sum;
  result.enumeration_size = cells;
  result.truncated_mass = truncated.sum;
  return result;
}

}  // namespace

OcContext::OcContext(std::size_t nE, std::size_t nC, double alpha, bool parallel)
    : nE_(checked_group_size(nE)),
      nC_(checked_group_size(nC)),
      alpha_(alpha),
      alpha_local_(local_level(alpha)),
      table_(ZpooledTable::compute(nE, nC, 1000, parallel)),
      crit_(nE * nC) {
  (void)parallel;
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(dynamic) if (parallel)
#endif
  for (std::size_t a = 1; a <= nE_; ++a)
    for (std::size_t b = 1; b <= nC_; ++b)
      crit_[(a - 1) * nC_ + (b - 1)] = conditional_critical_value(a, b, alpha_local_);
}

OcResult exact_power_exact_test(const OcRequest& request, const OcContext& ctx, bool parallel) {
  validate_request(request);
  if (ctx.nE() != request.nE || ctx.nC() != request.nC || ctx.alpha() != request.alpha)
    throw DomainError("operating characteristic context does not match the request");

  const std::size_t nE = request.nE, nC = request.nC;
  const double alpha_local = ctx.alpha_local();
  const double ratio1 = request.model.control.lambda1 / request.model.experimental.lambda1;
  const double ratio0 = request.model.control.lambda0 / request.model.experimental.lambda0;

  return enumerate_cells(
      request,
      [&](std::size_t kE, std::size_t kC, double mass, KahanSum& response, KahanSum& theta) {
        if (ctx.zpooled().p_value(kE, kC) <= alpha_local) {
          response.add(mass);
          return;
        }
        double u1 = 1.0, u0 = 1.0;
        if (kE >= 1 && kC >= 1) u1 = theta_accept_prob(kE, kC, ratio1, ctx.critical_value(kE, kC));
        const std::size_t aE = nE - kE, aC = nC - kC;
        if (aE >= 1 && aC >= 1) u0 = theta_accept_prob(aE, aC, ratio0, ctx.critical_value(aE, aC));
        theta.add(mass * (1.0 - u1 * u0));
      },
      parallel);
}

OcResult exact_power_exact_test(const OcRequest& request, bool parallel) {
  validate_request(request);
  OcContext ctx(request.nE, request.nC, request.alpha, parallel);
  return exact_power_exact_test(request, ctx, parallel);
}

OcResult exact_power_approx_test(const OcRequest& request, bool parallel) {
  validate_request(request);

  const std::size_t nE = request.nE, nC = request.nC;
  const double alpha_local = local_level(request.alpha);
  const double z = sf::normal_quantile(1.0 - alpha_local / 2.0);
  const double inv_n = 1.0 / static_cast<double>(nE) + 1.0 / static_cast<double>(nC);
  const double ratio1 = request.model.control.lambda1 / request.model.experimental.lambda1;
  const double ratio0 = request.model.control.lambda0 / request.model.experimental.lambda0;

  return enumerate_cells(
      request,
      [&](std::size_t kE, std::size_t kC, double mass, KahanSum& response, KahanSum& theta) {
        if (std::abs(pooled_z_statistic(kE, nE, kC, nC)) > z) {
          response.add(mass);
          return;
        }
        const double pooled = static_cast<double>(kE + kC) / static_cast<double>(nE + nC);
        double u1 = 1.0, u0 = 1.0;
        // Degenerate strata are checked before the thresholds: when the
        // pooled share is 0 or 1 the corresponding threshold is infinite but
        // the stratum is then empty in both groups.
        if (kE >= 1 && kC >= 1)
          u1 = theta_accept_prob(kE, kC, ratio1, z * std::sqrt(inv_n / pooled));
        const std::size_t aE = nE - kE, aC = nC - kC;
        if (aE >= 1 && aC >= 1)
          u0 = theta_accept_prob(aE, aC, ratio0, z * std::sqrt(inv_n / (1.0 - pooled)));
        theta.add(mass * (1.0 - u1 * u0));
      },
      parallel);
}

OcResult exact_power(const OcRequest& request, bool parallel) {
  if (request.test == TestMethod::exact) return exact_power_exact_test(request, parallel);
  return exact_power_approx_test(request, parallel);
}

OcResult type1_error(const RsesParams& null_params, std::size_t nE, std::size_t nC, double alpha,
                     TestMethod test, bool parallel) {
  OcRequest request{TwoGroupModel{null_params, null_params}, nE, nC, alpha, test};
  return exact_power(request, parallel);
}

}  // namespace rses
