#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "rses/estimation.hpp"
#include "rses/model.hpp"

namespace rses {

enum class TestMethod { approximate, exact };

// Joint outcome of the three local tests. The global hypothesis is rejected
// exactly when at least one local hypothesis is.
struct TestOutcome {
  TestMethod method;
  double local_level;  // alpha_local = 1 - cbrt(1 - alpha)
  // Approximate test: Wald statistics (0 in the degenerate cases).
  double stat_p = 0.0;
  double stat_theta1 = 0.0;
  double stat_theta0 = 0.0;
  // Exact test: local p-values (1 in the degenerate cases).
  double p_value_p = 1.0;
  double p_value_theta1 = 1.0;
  double p_value_theta0 = 1.0;
  bool reject_p = false;
  bool reject_theta1 = false;
  bool reject_theta0 = false;
  bool reject_global = false;
};

struct ResponseTable {
  std::size_t kE, nE, kC, nC;
};

// Per-hypothesis level that makes three independent local tests globally
// level alpha: 1 - (1-alpha)^(1/3).
double local_level(double alpha);

// Pooled-variance z statistic of the two-sample response comparison;
// 0 when the pooled estimate is degenerate.
double pooled_z_statistic(std::size_t kE, std::size_t nE, std::size_t kC, std::size_t nC);

// P-values of the Z-pooled exact unconditional test for every response table
// with fixed group sizes. Outcomes are ordered by |T|; the tail probability
// is maximized over the nuisance response probability on a uniform grid of
// `grid` points followed by local refinement down to a 1e-6 step.
class ZpooledTable {
 public:
  static ZpooledTable compute(std::size_t nE, std::size_t nC, int grid = 1000, bool parallel = true);

  double p_value(std::size_t kE, std::size_t kC) const { return pvalue_[kE * (nC_ + 1) + kC]; }
  std::size_t nE() const { return nE_; }
  std::size_t nC() const { return nC_; }

 private:
  std::size_t nE_ = 0, nC_ = 0;
  std::vector<double> pvalue_;
};

// Single-table convenience wrapper around ZpooledTable.
std::pair<double, bool> zpooled_exact_response_test(const ResponseTable& table, double alpha_local);

// Conditional p-value of the responder log-hazard comparison given the
// responder counts, where d is the difference of the log-hazard estimates.
// Empty strata give p-value 1. The non-responder test uses the same function
// with non-responder counts.
double conditional_theta_pvalue(std::size_t kE, std::size_t kC, double d);

// Critical value c > 0 with conditional_theta_pvalue(kE, kC, c) = alpha_local.
double conditional_critical_value(std::size_t kE, std::size_t kC, double alpha_local);

// Wald-type test of the three local hypotheses at level alpha.
TestOutcome approx_test(const Dataset& dataE, const Dataset& dataC, double alpha);

// Exact test: Z-pooled unconditional response test plus the two conditional
// log-hazard tests. The overload with a precomputed table avoids rebuilding
// the Z-pooled p-values when many datasets share the group sizes.
TestOutcome exact_test(const Dataset& dataE, const Dataset& dataC, double alpha);
TestOutcome exact_test(const Dataset& dataE, const Dataset& dataC, double alpha, const ZpooledTable& table);

}  // namespace rses
