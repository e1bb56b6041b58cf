#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <utility>

#include "rses/model.hpp"

namespace testutil {

// Relative closeness with an absolute floor of 1, matching the scale of the
// probabilities and log-hazards under test.
inline bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// Composite Simpson quadrature; n panels (even).
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int n) {
  const double h = (hi - lo) / n;
  double sum = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) sum += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

inline rses::Dataset make_data(rses::Group group,
                               std::initializer_list<std::pair<int, double>> rows) {
  rses::Dataset data;
  for (const auto& [responder, time] : rows)
    data.push_back(rses::SubjectRecord{group, responder != 0, time});
  return data;
}

inline rses::RsesParams params(double p, double lambda1, double lambda0) {
  return rses::RsesParams{p, lambda1, lambda0};
}

inline rses::TwoGroupModel model(rses::RsesParams experimental, rses::RsesParams control) {
  return rses::TwoGroupModel{experimental, control};
}

}  // namespace testutil

#define CHECK_REL(a, b, tol)                                                                  \
  do {                                                                                        \
    const double check_rel_a = (a), check_rel_b = (b);                                        \
    CHECK_MESSAGE(testutil::rel_close(check_rel_a, check_rel_b, (tol)),                       \
                  #a " = ", check_rel_a, " vs " #b " = ", check_rel_b);                       \
  } while (0)
