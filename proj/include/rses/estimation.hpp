#pragma once

#include <cstddef>
#include <optional>

#include "rses/model.hpp"

namespace rses {

// Maximum likelihood fit of one group. The log-hazard estimates exist only
// when the corresponding stratum is nonempty (k >= 1 for theta1, k <= n-1
// for theta0); absent estimates are reported as empty optionals.
struct MleResult {
  std::size_t n = 0;
  std::size_t k = 0;  // responder count
  double p_hat = 0.0;
  std::optional<double> theta1_hat;  // -log(mean responder time)
  std::optional<double> theta0_hat;  // -log(mean non-responder time)
};

// Normal-approximation interval; endpoints may be infinite. An interval with
// both endpoints infinite encodes the "no information" convention used when
// a stratum is empty.
struct ConfidenceInterval {
  double lower;
  double upper;
  double level;
};

// Fits the records of `data` belonging to `group`; throws DomainError if none.
MleResult fit_mle(const Dataset& data, Group group);

// Internal summary used by the tests as well: fits every record of `data`
// regardless of group tag.
MleResult fit_mle_all(const Dataset& data);

ConfidenceInterval ci_p(const MleResult& fit, double level);
ConfidenceInterval ci_theta1(const MleResult& fit, double level);
ConfidenceInterval ci_theta0(const MleResult& fit, double level);

// Exact coverage probabilities of the three intervals under (n, p0), obtained
// by summing over the responder count. Unbounded intervals count as covering.
double coverage_p(std::size_t n, double p0, double level);
double coverage_theta1(std::size_t n, double p0, double level);
double coverage_theta0(std::size_t n, double p0, double level);

}  // namespace rses
