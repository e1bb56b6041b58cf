#pragma once

#include <cstddef>
#include <vector>

#include "rses/inference.hpp"
#include "rses/model.hpp"

namespace rses {

// Request for one exact operating characteristic: the rejection probability
// of the chosen test under `model` at the given group sizes and level.
struct OcRequest {
  TwoGroupModel model;
  std::size_t nE, nC;
  double alpha;
  TestMethod test;
};

struct OcResult {
  double rejection_probability;
  // Split of the total: mass rejected through the response test versus mass
  // rejected through the log-hazard tests outside the response region.
  double response_contribution;
  double theta_contribution;
  std::size_t enumeration_size;  // number of (kE, kC) cells visited
  double truncated_mass;         // pmf mass skipped for very large group sizes
};

// Reusable tables for a fixed (nE, nC, alpha): the Z-pooled rejection region
// and the conditional critical values. Building these dominates the cost of
// an exact-test power evaluation; power curves over many models share one
// context. Read-only after construction and safe to share across threads.
class OcContext {
 public:
  OcContext(std::size_t nE, std::size_t nC, double alpha, bool parallel = true);

  std::size_t nE() const { return nE_; }
  std::size_t nC() const { return nC_; }
  double alpha() const { return alpha_; }
  double alpha_local() const { return alpha_local_; }
  const ZpooledTable& zpooled() const { return table_; }
  // Critical value of the conditional log-hazard test; counts are 1-based.
  double critical_value(std::size_t a, std::size_t b) const { return crit_[(a - 1) * nC_ + (b - 1)]; }

 private:
  std::size_t nE_, nC_;
  double alpha_, alpha_local_;
  ZpooledTable table_;
  std::vector<double> crit_;
};

// Exact rejection probability of the exact test by enumeration over the
// responder counts. The overload without a context builds one internally.
OcResult exact_power_exact_test(const OcRequest& request, const OcContext& ctx, bool parallel = true);
OcResult exact_power_exact_test(const OcRequest& request, bool parallel = true);

// Exact rejection probability of the approximate test. Its response region
// and log-hazard thresholds are closed-form, so no context is needed.
OcResult exact_power_approx_test(const OcRequest& request, bool parallel = true);

// Convenience dispatcher honouring request.test.
OcResult exact_power(const OcRequest& request, bool parallel = true);

// Type I error: power at the shared null configuration.
OcResult type1_error(const RsesParams& null_params, std::size_t nE, std::size_t nC, double alpha,
                     TestMethod test, bool parallel = true);

}  // namespace rses
