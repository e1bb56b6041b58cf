#include "rses/design.hpp"

#include <cmath>
#include <cstddef>
#include <limits>

#include "rses/errors.hpp"
#include "rses/inference.hpp"
#include "rses/oc.hpp"
#include "rses/special_functions.hpp"

namespace rses {
namespace {

constexpr double kMaxGroupSize = 1e7;

// Per-hypothesis index into DesignSpec::local_levels.
enum Hypothesis : std::size_t { kResponse = 0, kTheta1 = 1, kTheta0 = 2 };

double hypothesis_level(const DesignSpec& spec, std::size_t which) {
  if (spec.local_levels) return (*spec.local_levels)[which];
  return local_level(spec.alpha);
}

double hypothesis_z(const DesignSpec& spec, std::size_t which) {
  return sf::normal_quantile(1.0 - hypothesis_level(spec, which) / 2.0);
}

void check_nc(double nC) {
  if (!(nC > 0.0) || !std::isfinite(nC)) throw DomainError("nC must be positive");
}

double pooled_response(const DesignSpec& spec, double nE, double nC) {
  const double pooled =
      (nE * spec.model_alt.experimental.p + nC * spec.model_alt.control.p) / (nE + nC);
  if (!(pooled > 0.0 && pooled < 1.0))
    throw DomainError("degenerate planning alternative: pooled response probability is 0 or 1");
  return pooled;
}

// Acceptance probability of a Wald test with null scale `null_sd`,
// alternative scale `alt_sd` and absolute effect `effect`.
double wald_accept(double z, double null_sd, double alt_sd, double effect) {
  if (alt_sd == 0.0) return effect > z * null_sd ? 0.0 : 1.0;
  return sf::normal_cdf((z * null_sd - effect) / alt_sd);
}

std::size_t scaled_group(double ratio, std::size_t nC) {
  const double x = ratio * static_cast<double>(nC);
  const double nearest = std::nearbyint(x);
  const double up = std::abs(x - nearest) <= 1e-9 * std::max(1.0, x) ? nearest : std::ceil(x);
  return up < 1.0 ? 1 : static_cast<std::size_t>(up);
}

bool has_effect(const TwoGroupModel& m) {
  return m.experimental.p != m.control.p || m.experimental.lambda1 != m.control.lambda1 ||
         m.experimental.lambda0 != m.control.lambda0;
}

double exact_power_at(const DesignSpec& spec, std::size_t nC, bool parallel) {
  OcRequest request{spec.model_alt, scaled_group(spec.ratio, nC), nC, spec.alpha,
                    TestMethod::exact};
  return exact_power_exact_test(request, parallel).rejection_probability;
}

}  // namespace

void DesignSpec::validate() const {
  model_alt.validate();
  if (!(ratio > 0.0) || !std::isfinite(ratio)) throw DomainError("allocation ratio must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  if (!(beta > 0.0 && beta < 1.0)) throw DomainError("beta must lie in (0, 1)");
  if (local_levels) {
    double complement = 1.0;
    for (double level : *local_levels) {
      if (!(level > 0.0 && level < 1.0)) throw DomainError("local levels must lie in (0, 1)");
      complement *= 1.0 - level;
    }
    if (std::abs(complement - (1.0 - alpha)) > 1e-9)
      throw DomainError("local level complements must multiply to 1 - alpha");
  }
}

double accept_prob_p(const DesignSpec& spec, double nC) {
  spec.validate();
  check_nc(nC);
  const double nE = spec.ratio * nC;
  const double pE = spec.model_alt.experimental.p;
  const double pC = spec.model_alt.control.p;
  const double pooled = pooled_response(spec, nE, nC);
  const double inv_n = 1.0 / nE + 1.0 / nC;
  const double null_sd = std::sqrt(pooled * (1.0 - pooled) * inv_n);
  const double alt_sd = std::sqrt(pE * (1.0 - pE) / nE + pC * (1.0 - pC) / nC);
  return wald_accept(hypothesis_z(spec, kResponse), null_sd, alt_sd, std::abs(pE - pC));
}

double accept_prob_theta1(const DesignSpec& spec, double nC) {
  spec.validate();
  check_nc(nC);
  const double pE = spec.model_alt.experimental.p;
  const double pC = spec.model_alt.control.p;
  // A stratum that never occurs in one group can never yield a rejection.
  if (pE == 0.0 || pC == 0.0) return 1.0;
  const double nE = spec.ratio * nC;
  const double pooled = pooled_response(spec, nE, nC);
  const double inv_n = 1.0 / nE + 1.0 / nC;
  const double null_sd = std::sqrt(inv_n / pooled);
  const double alt_sd = std::sqrt(1.0 / (nE * pE) + 1.0 / (nC * pC));
  const double effect =
      std::abs(std::log(spec.model_alt.experimental.lambda1 / spec.model_alt.control.lambda1));
  return wald_accept(hypothesis_z(spec, kTheta1), null_sd, alt_sd, effect);
}

double accept_prob_theta0(const DesignSpec& spec, double nC) {
  spec.validate();
  check_nc(nC);
  const double qE = 1.0 - spec.model_alt.experimental.p;
  const double qC = 1.0 - spec.model_alt.control.p;
  if (qE == 0.0 || qC == 0.0) return 1.0;
  const double nE = spec.ratio * nC;
  const double pooled = pooled_response(spec, nE, nC);
  const double inv_n = 1.0 / nE + 1.0 / nC;
  const double null_sd = std::sqrt(inv_n / (1.0 - pooled));
  const double alt_sd = std::sqrt(1.0 / (nE * qE) + 1.0 / (nC * qC));
  const double effect =
      std::abs(std::log(spec.model_alt.experimental.lambda0 / spec.model_alt.control.lambda0));
  return wald_accept(hypothesis_z(spec, kTheta0), null_sd, alt_sd, effect);
}

DesignResult approx_sample_size(const DesignSpec& spec, bool parallel) {
  spec.validate();
  if (!has_effect(spec.model_alt)) throw DomainError("undefined design: the alternative has no effect");

  std::size_t evaluations = 0;
  const auto excess = [&](double nC) {
    ++evaluations;
    return accept_prob_p(spec, nC) * accept_prob_theta1(spec, nC) * accept_prob_theta0(spec, nC) -
           spec.beta;
  };

  double candidate = 2.0;
  if (excess(2.0) > 0.0) {
    double lo = 2.0, hi = 4.0;
    while (excess(hi) > 0.0) {
      lo = hi;
      hi *= 2.0;
      if (hi > kMaxGroupSize)
        throw NumericalError("approximate sample size exceeds the supported range");
    }
    while (hi - lo >= 0.25) {
      const double mid = 0.5 * (lo + hi);
      (excess(mid) <= 0.0 ? hi : lo) = mid;
    }
    candidate = std::ceil(hi);
  }

  std::size_t nC = static_cast<std::size_t>(candidate);
  while (excess(static_cast<double>(nC)) > 0.0) {
    ++nC;
    if (static_cast<double>(nC) > kMaxGroupSize)
      throw NumericalError("approximate sample size exceeds the supported range");
  }
  while (nC > 1 && excess(static_cast<double>(nC - 1)) <= 0.0) --nC;

  DesignResult result;
  result.nC = nC;
  result.nE = scaled_group(spec.ratio, nC);
  result.achieved_power = exact_power_at(spec, nC, parallel);
  result.method = DesignMethod::approximate;
  result.iterations = evaluations;
  return result;
}

DesignResult exact_sample_size(const DesignSpec& spec, bool parallel) {
  const DesignResult start = approx_sample_size(spec, parallel);
  const double target = 1.0 - spec.beta;
  const std::size_t cap = 10 * start.nC;

  std::size_t iterations = 1;  // power at the starting point is known
  std::size_t nC = start.nC;
  double power = start.achieved_power;

  if (power < target) {
    while (power < target) {
      ++nC;
      if (nC > cap) throw NumericalError("exact sample size scan did not converge");
      power = exact_power_at(spec, nC, parallel);
      ++iterations;
    }
  } else {
    while (nC > 1) {
      const double below = exact_power_at(spec, nC - 1, parallel);
      ++iterations;
      if (below < target) break;
      --nC;
      power = below;
    }
  }

  DesignResult result;
  result.nC = nC;
  result.nE = scaled_group(spec.ratio, nC);
  result.achieved_power = power;
  result.method = DesignMethod::exact_iterative;
  result.iterations = iterations;
  return result;
}

const char* to_string(DesignMethod method) {
  return method == DesignMethod::approximate ? "approximate" : "exact-iterative";
}

}  // namespace rses
