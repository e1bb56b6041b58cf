#pragma once

#include <cstdint>
#include <vector>

#include "rses/rng.hpp"

namespace rses {

enum class Group : std::uint8_t { E, C };

// One group's parameter triple: response probability and the two stratum hazards.
struct RsesParams {
  double p;
  double lambda1;  // responder hazard
  double lambda0;  // non-responder hazard

  void validate() const;  // throws DomainError on violation
};

struct TwoGroupModel {
  RsesParams experimental;
  RsesParams control;

  void validate() const;
};

// Relation between the two groups' marginal survival curves.
enum class CurveRelation { CompletelyEqual, UniformlyDifferent, Crossing };

struct SubjectRecord {
  Group group;
  bool responder;
  double time;  // > 0
};

using Dataset = std::vector<SubjectRecord>;

// S(t) = p exp(-lambda1 t) + (1-p) exp(-lambda0 t).
double survival(const RsesParams& params, double t);

// f(x,t) = x p lambda1 exp(-lambda1 t) + (1-x)(1-p) lambda0 exp(-lambda0 t).
double joint_density(const RsesParams& params, int x, double t);

// Classifies the survival-curve relation via the equality conditions, the
// moment sequence at 0 (first three moments determine a two-point mixture),
// and tail dominance through the smallest hazard.
CurveRelation classify_relation(const TwoGroupModel& model, double tolerance = 1e-9);

const char* to_string(CurveRelation relation);

// Draws n subjects: responder flag first, then the conditional exponential
// time, consuming exactly two variates per subject in that order.
Dataset sample(const RsesParams& params, std::size_t n, RngStream& stream, Group group = Group::E);

}  // namespace rses
