#include "rses/model.hpp"

#include <algorithm>
#include <cmath>

#include "rses/errors.hpp"

namespace rses {

namespace {

bool rel_equal(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

// k-th moment of the hazard mixture; S has derivative S^(k)(0) = (-1)^k m_k.
double hazard_moment(const RsesParams& g, int k) {
  return g.p * std::pow(g.lambda1, k) + (1.0 - g.p) * std::pow(g.lambda0, k);
}

// Tail behaviour is governed by the smallest hazard carrying positive mass.
struct TailProfile {
  double lambda_min;
  double weight;      // mass on lambda_min
  double lambda_max;  // remaining hazard (equals lambda_min for one-point mixtures)
};

TailProfile tail_profile(const RsesParams& g) {
  if (g.p <= 0.0) return {g.lambda0, 1.0, g.lambda0};
  if (g.p >= 1.0) return {g.lambda1, 1.0, g.lambda1};
  if (g.lambda1 < g.lambda0) return {g.lambda1, g.p, g.lambda0};
  if (g.lambda0 < g.lambda1) return {g.lambda0, 1.0 - g.p, g.lambda1};
  return {g.lambda0, 1.0, g.lambda0};
}

// +1 if E's curve dominates for large t, -1 if C's does, 0 if the tails tie.
int tail_sign(const RsesParams& e, const RsesParams& c, double tol) {
  const TailProfile te = tail_profile(e);
  const TailProfile tc = tail_profile(c);
  if (!rel_equal(te.lambda_min, tc.lambda_min, tol)) {
    return te.lambda_min < tc.lambda_min ? 1 : -1;
  }
  if (!rel_equal(te.weight, tc.weight, tol)) {
    return te.weight > tc.weight ? 1 : -1;
  }
  // Leading tail terms tie; the slower remaining exponential wins.
  if (!rel_equal(te.lambda_max, tc.lambda_max, tol)) {
    return te.lambda_max < tc.lambda_max ? 1 : -1;
  }
  return 0;
}

}  // namespace

void RsesParams::validate() const {
  if (!(p >= 0.0) || !(p <= 1.0)) throw DomainError("RsesParams: p must lie in [0,1]");
  if (!(lambda1 > 0.0)) throw DomainError("RsesParams: lambda1 must be positive");
  if (!(lambda0 > 0.0)) throw DomainError("RsesParams: lambda0 must be positive");
}

void TwoGroupModel::validate() const {
  experimental.validate();
  control.validate();
}

double survival(const RsesParams& params, double t) {
  if (!(t >= 0.0)) throw DomainError("survival: t must be nonnegative");
  return params.p * std::exp(-params.lambda1 * t) + (1.0 - params.p) * std::exp(-params.lambda0 * t);
}

double joint_density(const RsesParams& params, int x, double t) {
  if (!(t >= 0.0)) throw DomainError("joint_density: t must be nonnegative");
  if (x != 0 && x != 1) throw DomainError("joint_density: x must be 0 or 1");
  if (x == 1) return params.p * params.lambda1 * std::exp(-params.lambda1 * t);
  return (1.0 - params.p) * params.lambda0 * std::exp(-params.lambda0 * t);
}

CurveRelation classify_relation(const TwoGroupModel& model, double tolerance) {
  model.validate();
  const RsesParams& e = model.experimental;
  const RsesParams& c = model.control;
  const double tol = tolerance;

  // Equality condition 1: parameter triples agree componentwise.
  if (rel_equal(e.p, c.p, tol) && rel_equal(e.lambda1, c.lambda1, tol) && rel_equal(e.lambda0, c.lambda0, tol)) {
    return CurveRelation::CompletelyEqual;
  }
  // Condition 2: no responders anywhere; only lambda0 matters.
  if (e.p <= tol && c.p <= tol && rel_equal(e.lambda0, c.lambda0, tol)) {
    return CurveRelation::CompletelyEqual;
  }
  // Condition 3: everyone responds; only lambda1 matters.
  if (e.p >= 1.0 - tol && c.p >= 1.0 - tol && rel_equal(e.lambda1, c.lambda1, tol)) {
    return CurveRelation::CompletelyEqual;
  }
  // Condition 4: all four hazards agree; the mixing probabilities drop out.
  if (rel_equal(e.lambda1, e.lambda0, tol) && rel_equal(c.lambda1, c.lambda0, tol) &&
      rel_equal(e.lambda1, c.lambda1, tol)) {
    return CurveRelation::CompletelyEqual;
  }

  // First differing derivative at 0 via the moment sequence; three moments
  // pin down a two-point mixture, so full agreement means equal curves.
  int early = 0;
  for (int k = 1; k <= 3; ++k) {
    const double me = hazard_moment(e, k);
    const double mc = hazard_moment(c, k);
    if (!rel_equal(me, mc, tol)) {
      const double diff = (k % 2 == 0 ? 1.0 : -1.0) * (me - mc);
      early = diff > 0.0 ? 1 : -1;
      break;
    }
  }
  if (early == 0) return CurveRelation::CompletelyEqual;

  const int tail = tail_sign(e, c, tol);
  if (tail != 0 && tail == early) return CurveRelation::UniformlyDifferent;
  return CurveRelation::Crossing;
}

const char* to_string(CurveRelation relation) {
  switch (relation) {
    case CurveRelation::CompletelyEqual: return "CompletelyEqual";
    case CurveRelation::UniformlyDifferent: return "UniformlyDifferent";
    case CurveRelation::Crossing: return "Crossing";
  }
  return "?";
}

Dataset sample(const RsesParams& params, std::size_t n, RngStream& stream, Group group) {
  params.validate();
  if (n == 0) throw DomainError("sample: n must be at least 1");
  Dataset data;
  data.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool responder = stream.bernoulli(params.p);
    const double rate = responder ? params.lambda1 : params.lambda0;
    data.push_back({group, responder, stream.exponential(rate)});
  }
  return data;
}

}  // namespace rses
