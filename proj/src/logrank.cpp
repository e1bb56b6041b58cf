#include "rses/logrank.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "rses/errors.hpp"
#include "rses/inference.hpp"
#include "rses/rng.hpp"
#include "rses/special_functions.hpp"

namespace rses {
namespace {

struct LogrankParts {
  double num = 0.0;  // sum of O - E terms
  double var = 0.0;  // sum of hypergeometric variances
};

LogrankParts logrank_parts(std::vector<std::pair<double, bool>> subjects) {
  LogrankParts parts;
  for (const RiskTableRow& row : build_risk_table(std::move(subjects))) {
    const double y = static_cast<double>(row.at_risk_total);
    const double yE = static_cast<double>(row.at_risk_E);
    const double d = static_cast<double>(row.events_total);
    const double dE = static_cast<double>(row.events_E);
    const double share = yE / y;
    parts.num += dE - d * share;
    if (row.at_risk_total > 1) parts.var += d * share * (1.0 - share) * (y - d) / (y - 1.0);
  }
  return parts;
}

std::vector<std::pair<double, bool>> to_subjects(const Dataset& data) {
  std::vector<std::pair<double, bool>> subjects;
  subjects.reserve(data.size());
  for (const SubjectRecord& record : data) subjects.emplace_back(record.time, record.group == Group::E);
  return subjects;
}

std::optional<double> statistic_from_parts(const LogrankParts& parts) {
  if (!(parts.var > 0.0)) return std::nullopt;
  return parts.num / std::sqrt(parts.var);
}

}  // namespace

std::vector<RiskTableRow> build_risk_table(std::vector<std::pair<double, bool>> subjects) {
  std::sort(subjects.begin(), subjects.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<RiskTableRow> table;
  std::size_t at_risk = subjects.size();
  std::size_t at_risk_E = 0;
  for (const auto& subject : subjects) at_risk_E += subject.second ? 1 : 0;

  std::size_t i = 0;
  while (i < subjects.size()) {
    std::size_t j = i;
    std::size_t events_E = 0;
    while (j < subjects.size() && subjects[j].first == subjects[i].first) {
      events_E += subjects[j].second ? 1 : 0;
      ++j;
    }
    table.push_back(RiskTableRow{subjects[i].first, at_risk, at_risk_E, j - i, events_E});
    at_risk -= j - i;
    at_risk_E -= events_E;
    i = j;
  }
  return table;
}

std::optional<double> logrank_statistic(const Dataset& data) {
  return statistic_from_parts(logrank_parts(to_subjects(data)));
}

std::optional<double> stratified_logrank_statistic(const Dataset& data) {
  std::vector<std::pair<double, bool>> responders, non_responders;
  for (const SubjectRecord& record : data)
    (record.responder ? responders : non_responders).emplace_back(record.time, record.group == Group::E);

  const LogrankParts parts1 = logrank_parts(std::move(responders));
  const LogrankParts parts0 = logrank_parts(std::move(non_responders));
  return statistic_from_parts(LogrankParts{parts1.num + parts0.num, parts1.var + parts0.var});
}

SimulationReport simulate_rejection_rate(const TwoGroupModel& model, std::size_t nE, std::size_t nC,
                                         double alpha, SimTest test, std::size_t runs,
                                         std::uint64_t seed, bool parallel) {
  model.validate();
  if (nE < 1 || nC < 1) throw DomainError("group sizes must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  if (runs < 1) throw DomainError("runs must be at least 1");

  // The Z-pooled region depends only on the group sizes; one table serves
  // all runs read-only.
  ZpooledTable table;
  if (test == SimTest::exact_rses) table = ZpooledTable::compute(nE, nC, 1000, parallel);
  const double z = sf::normal_quantile(1.0 - alpha / 2.0);

  long long rejections = 0;
  (void)parallel;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : rejections) if (parallel)
#endif
  for (std::size_t run = 0; run < runs; ++run) {
    RngStream stream(seed, run);
    Dataset dataE = sample(model.experimental, nE, stream, Group::E);
    Dataset dataC = sample(model.control, nC, stream, Group::C);

    bool reject = false;
    switch (test) {
      case SimTest::logrank:
      case SimTest::stratified_logrank: {
        Dataset all = dataE;
        all.insert(all.end(), dataC.begin(), dataC.end());
        const std::optional<double> stat = test == SimTest::logrank
                                               ? logrank_statistic(all)
                                               : stratified_logrank_statistic(all);
        reject = stat.has_value() && std::abs(*stat) > z;
        break;
      }
      case SimTest::approx_rses:
        reject = approx_test(dataE, dataC, alpha).reject_global;
        break;
      case SimTest::exact_rses:
        reject = exact_test(dataE, dataC, alpha, table).reject_global;
        break;
    }
    rejections += reject ? 1 : 0;
  }

  SimulationReport report;
  report.test = test;
  report.runs = runs;
  report.rejections = static_cast<std::size_t>(rejections);
  report.rate = static_cast<double>(rejections) / static_cast<double>(runs);
  report.standard_error = std::sqrt(report.rate * (1.0 - report.rate) / static_cast<double>(runs));
  report.seed = seed;
  return report;
}

const char* to_string(SimTest test) {
  switch (test) {
    case SimTest::logrank: return "logrank";
    case SimTest::stratified_logrank: return "stratified-logrank";
    case SimTest::approx_rses: return "approx-rses";
    case SimTest::exact_rses: return "exact-rses";
  }
  return "unknown";
}

}  // namespace rses
