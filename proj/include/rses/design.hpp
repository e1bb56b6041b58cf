#pragma once

#include <array>
#include <cstddef>
#include <optional>

#include "rses/model.hpp"

namespace rses {

// Planning input for sample-size calculation. `model_alt` holds the
// alternative the trial should detect; `ratio` is the allocation nE/nC.
// `local_levels`, when set, overrides the equal error split with custom
// per-hypothesis levels (response, responder log-hazard, non-responder
// log-hazard) whose complements must multiply to 1 - alpha. They steer the
// approximate formulas only: the exact test always splits alpha equally, so
// `achieved_power` is unaffected by the override.
struct DesignSpec {
  TwoGroupModel model_alt;
  double ratio = 1.0;
  double alpha = 0.05;
  double beta = 0.2;
  std::optional<std::array<double, 3>> local_levels;

  void validate() const;  // throws DomainError on violation
};

enum class DesignMethod { approximate, exact_iterative };

struct DesignResult {
  std::size_t nE, nC;
  double achieved_power;  // exact power of the exact test at (nE, nC)
  DesignMethod method;
  std::size_t iterations;  // objective / power evaluations used
};

// Planning probabilities of falsely accepting each local null hypothesis at
// real-valued control group size nC (with nE = ratio * nC). These are the
// normal-approximation expressions the approximate sample size solves.
double accept_prob_p(const DesignSpec& spec, double nC);
double accept_prob_theta1(const DesignSpec& spec, double nC);
double accept_prob_theta0(const DesignSpec& spec, double nC);

// Smallest integer nC whose acceptance-probability product is at most beta.
// The continuous product is bracketed and bisected, then the integer
// solution is pinned by a local scan.
DesignResult approx_sample_size(const DesignSpec& spec, bool parallel = true);

// Iterative exact calculation: starts at the approximate solution and walks
// nC until the exact power of the exact test first reaches 1 - beta.
DesignResult exact_sample_size(const DesignSpec& spec, bool parallel = true);

const char* to_string(DesignMethod method);

}  // namespace rses
