#include "rses/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rses/errors.hpp"
#include "rses/special_functions.hpp"

namespace rses {

namespace {

constexpr double kTieTolerance = 1e-12;  // |T| values this close share a tail

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
}

std::vector<double> binomial_pmf_table(std::size_t n, double p) {
  std::vector<double> pmf(n + 1);
  for (std::size_t k = 0; k <= n; ++k) pmf[k] = sf::binomial_pmf(n, p, k);
  return pmf;
}

}  // namespace

double local_level(double alpha) {
  check_alpha(alpha);
  return 1.0 - std::cbrt(1.0 - alpha);
}

double pooled_z_statistic(std::size_t kE, std::size_t nE, std::size_t kC, std::size_t nC) {
  if (kE > nE || kC > nC || nE == 0 || nC == 0) throw DomainError("pooled_z_statistic: invalid table");
  const double pooled = static_cast<double>(kE + kC) / static_cast<double>(nE + nC);
  if (pooled <= 0.0 || pooled >= 1.0) return 0.0;
  const double pe = static_cast<double>(kE) / static_cast<double>(nE);
  const double pc = static_cast<double>(kC) / static_cast<double>(nC);
  const double inv = 1.0 / static_cast<double>(nE) + 1.0 / static_cast<double>(nC);
  return (pe - pc) / std::sqrt(pooled * (1.0 - pooled) * inv);
}

ZpooledTable ZpooledTable::compute(std::size_t nE, std::size_t nC, int grid, bool parallel) {
  if (nE == 0 || nC == 0) throw DomainError("ZpooledTable: group sizes must be positive");
  if (grid < 2) throw DomainError("ZpooledTable: grid too small");
  (void)parallel;

  const std::size_t cells = (nE + 1) * (nC + 1);
  std::vector<double> abs_t(cells);
  for (std::size_t kE = 0; kE <= nE; ++kE) {
    for (std::size_t kC = 0; kC <= nC; ++kC) {
      abs_t[kE * (nC + 1) + kC] = std::fabs(pooled_z_statistic(kE, nE, kC, nC));
    }
  }

  // Cells sorted by decreasing |T|; ties broken by index so the order is
  // deterministic. Cells within kTieTolerance of each other share a rank and
  // therefore a tail probability.
  std::vector<std::uint32_t> order(cells);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return abs_t[a] > abs_t[b]; });

  std::vector<std::uint32_t> rank_of_sorted(cells);
  std::size_t nrank = 0;
  for (std::size_t i = 0; i < cells; ++i) {
    if (i > 0 && abs_t[order[i - 1]] - abs_t[order[i]] > kTieTolerance) ++nrank;
    rank_of_sorted[i] = static_cast<std::uint32_t>(nrank);
  }
  ++nrank;
  std::vector<std::uint32_t> last_index(nrank);
  for (std::size_t i = 0; i < cells; ++i) last_index[rank_of_sorted[i]] = static_cast<std::uint32_t>(i);

  std::vector<double> sup(nrank, -1.0);
  std::vector<double> arg(nrank, 0.5);

  // Tail probabilities for one nuisance value: a single pass over the sorted
  // cells accumulates the running tail mass; entries at rank boundaries are
  // the tail probabilities of the corresponding critical values.
  auto tails_at = [&](double p, std::vector<double>& out) {
    const std::vector<double> fE = binomial_pmf_table(nE, p);
    const std::vector<double> fC = binomial_pmf_table(nC, p);
    double running = 0.0;
    double carry = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
      const std::uint32_t cell = order[i];
      const double mass = fE[cell / (nC + 1)] * fC[cell % (nC + 1)];
      const double y = mass - carry;
      const double t = running + y;
      carry = (t - running) - y;
      running = t;
      out[i] = running;
    }
  };

  // Candidates are evaluated in blocks; the fold over the block is sequential
  // in candidate order, so results do not depend on the thread schedule.
  auto fold_candidates = [&](const std::vector<double>& ps) {
    constexpr std::size_t kBlock = 16;
    std::vector<std::vector<double>> buf(std::min(kBlock, ps.size()), std::vector<double>(cells));
    for (std::size_t start = 0; start < ps.size(); start += kBlock) {
      const std::size_t m = std::min(kBlock, ps.size() - start);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
      for (std::size_t j = 0; j < m; ++j) {  // NOLINT: OpenMP needs a signed-safe plain loop
        tails_at(ps[start + j], buf[j]);
      }
      for (std::size_t j = 0; j < m; ++j) {
        const double p = ps[start + j];
        const std::vector<double>& cum = buf[j];
        for (std::size_t r = 0; r < nrank; ++r) {
          const double s = cum[last_index[r]];
          if (s > sup[r] || (s == sup[r] && p < arg[r])) {
            sup[r] = s;
            arg[r] = p;
          }
        }
      }
    }
  };

  std::vector<double> ps(grid);
  for (int i = 1; i <= grid; ++i) ps[i - 1] = static_cast<double>(i) / (grid + 1);
  fold_candidates(ps);

  double h = 1.0 / (grid + 1);
  for (int pass = 0; pass < 3; ++pass) {
    h /= 10.0;
    std::vector<double> base(arg);
    std::sort(base.begin(), base.end());
    base.erase(std::unique(base.begin(), base.end()), base.end());
    std::vector<double> cand;
    cand.reserve(base.size() * 19);
    for (double b : base) {
      for (int j = -9; j <= 9; ++j) {
        const double p = b + j * h;
        if (p > 0.0 && p < 1.0) cand.push_back(p);
      }
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    fold_candidates(cand);
  }

  ZpooledTable table;
  table.nE_ = nE;
  table.nC_ = nC;
  table.pvalue_.resize(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    table.pvalue_[order[i]] = std::min(1.0, sup[rank_of_sorted[i]]);
  }
  return table;
}

std::pair<double, bool> zpooled_exact_response_test(const ResponseTable& table, double alpha_local) {
  check_alpha(alpha_local);
  if (table.kE > table.nE || table.kC > table.nC || table.nE == 0 || table.nC == 0) {
    throw DomainError("zpooled_exact_response_test: invalid table");
  }
  const ZpooledTable tab = ZpooledTable::compute(table.nE, table.nC);
  const double pv = tab.p_value(table.kE, table.kC);
  return {pv, pv <= alpha_local};
}

double conditional_theta_pvalue(std::size_t kE, std::size_t kC, double d) {
  if (kE == 0 || kC == 0) return 1.0;
  const double a = static_cast<double>(kC);
  const double b = static_cast<double>(kE);
  const double ratio = a / b;
  const double ad = std::fabs(d);
  // The scaled hazard-rate ratio follows a beta prime law with shapes
  // (kC, kE) given the responder counts; both tails at log-distance |d|.
  const double upper = sf::beta_prime_cdf(a, b, ratio * std::exp(ad));
  const double lower = sf::beta_prime_cdf(a, b, ratio * std::exp(-ad));
  return std::clamp(1.0 - upper + lower, 0.0, 1.0);
}

double conditional_critical_value(std::size_t kE, std::size_t kC, double alpha_local) {
  check_alpha(alpha_local);
  if (kE == 0 || kC == 0) throw DomainError("conditional_critical_value: counts must be positive");
  // conditional_theta_pvalue(kE, kC, c) equals 1 at c = 0 and decreases
  // strictly to 0, so the root is unique; bracket then bisect.
  double lo = 0.0;
  double hi = 1.0;
  while (conditional_theta_pvalue(kE, kC, hi) > alpha_local) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e4) throw NumericalError("conditional_critical_value: bracketing failed");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-13 * std::max(1.0, lo); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (conditional_theta_pvalue(kE, kC, mid) <= alpha_local) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

struct GroupSummary {
  std::size_t n, k;
  std::optional<double> theta1, theta0;
};

GroupSummary summarize(const Dataset& data, const char* which) {
  if (data.empty()) throw DomainError(std::string("test: empty dataset for group ") + which);
  const MleResult fit = fit_mle_all(data);
  return {fit.n, fit.k, fit.theta1_hat, fit.theta0_hat};
}

}  // namespace

TestOutcome approx_test(const Dataset& dataE, const Dataset& dataC, double alpha) {
  check_alpha(alpha);
  const GroupSummary e = summarize(dataE, "E");
  const GroupSummary c = summarize(dataC, "C");
  TestOutcome out;
  out.method = TestMethod::approximate;
  out.local_level = local_level(alpha);
  const double z = sf::normal_quantile(1.0 - out.local_level / 2.0);
  const double inv = 1.0 / static_cast<double>(e.n) + 1.0 / static_cast<double>(c.n);
  const double pooled = static_cast<double>(e.k + c.k) / static_cast<double>(e.n + c.n);

  out.stat_p = pooled_z_statistic(e.k, e.n, c.k, c.n);
  // Degenerate strata force the corresponding statistic to 0: no responders
  // (or no non-responders) on either side leave nothing to compare.
  if (e.k >= 1 && c.k >= 1) {
    out.stat_theta1 = (*e.theta1 - *c.theta1) / std::sqrt(inv / pooled);
  }
  if (e.k <= e.n - 1 && c.k <= c.n - 1) {
    out.stat_theta0 = (*e.theta0 - *c.theta0) / std::sqrt(inv / (1.0 - pooled));
  }
  out.reject_p = std::fabs(out.stat_p) > z;
  out.reject_theta1 = std::fabs(out.stat_theta1) > z;
  out.reject_theta0 = std::fabs(out.stat_theta0) > z;
  out.reject_global = out.reject_p || out.reject_theta1 || out.reject_theta0;
  return out;
}

TestOutcome exact_test(const Dataset& dataE, const Dataset& dataC, double alpha, const ZpooledTable& table) {
  check_alpha(alpha);
  const GroupSummary e = summarize(dataE, "E");
  const GroupSummary c = summarize(dataC, "C");
  if (table.nE() != e.n || table.nC() != c.n) throw DomainError("exact_test: table sizes do not match data");
  TestOutcome out;
  out.method = TestMethod::exact;
  out.local_level = local_level(alpha);
  out.p_value_p = table.p_value(e.k, c.k);
  if (e.k >= 1 && c.k >= 1) {
    out.p_value_theta1 = conditional_theta_pvalue(e.k, c.k, *e.theta1 - *c.theta1);
  }
  if (e.k <= e.n - 1 && c.k <= c.n - 1) {
    out.p_value_theta0 = conditional_theta_pvalue(e.n - e.k, c.n - c.k, *e.theta0 - *c.theta0);
  }
  out.reject_p = out.p_value_p <= out.local_level;
  out.reject_theta1 = out.p_value_theta1 <= out.local_level;
  out.reject_theta0 = out.p_value_theta0 <= out.local_level;
  out.reject_global = out.reject_p || out.reject_theta1 || out.reject_theta0;
  return out;
}

TestOutcome exact_test(const Dataset& dataE, const Dataset& dataC, double alpha) {
  if (dataE.empty() || dataC.empty()) throw DomainError("test: empty dataset");
  const ZpooledTable table = ZpooledTable::compute(dataE.size(), dataC.size());
  return exact_test(dataE, dataC, alpha, table);
}

}  // namespace rses
