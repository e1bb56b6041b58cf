#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "rses/model.hpp"

namespace rses {

struct RiskTableRow {
  double event_time;
  std::size_t at_risk_total;   // Y
  std::size_t at_risk_E;       // Y_E
  std::size_t events_total;    // d
  std::size_t events_E;        // d_E
};

// Subjects as (event time, belongs to group E). Exact ties share a row.
std::vector<RiskTableRow> build_risk_table(std::vector<std::pair<double, bool>> subjects);

// Two-sample logrank statistic (O - E) / sqrt(V) with hypergeometric
// variance and no censoring. Degenerate data (V = 0) yields no value and is
// treated as a non-rejection by the simulation harness.
std::optional<double> logrank_statistic(const Dataset& data);

// Logrank stratified by responder status: sums O - E and V across the two
// strata. Strata that are empty or contain only one group contribute zero.
std::optional<double> stratified_logrank_statistic(const Dataset& data);

enum class SimTest { logrank, stratified_logrank, approx_rses, exact_rses };

struct SimulationReport {
  SimTest test;
  std::size_t runs;
  std::size_t rejections;
  double rate;
  double standard_error;
  std::uint64_t seed;
};

// Monte Carlo rejection rate of the chosen test under `model`. Each run uses
// the substream (seed, run index) and draws group E before group C, so the
// result is bit-reproducible for a fixed seed regardless of the thread
// count. The logrank tests are single tests at full level alpha; the RSES
// tests split alpha across their three local hypotheses internally.
SimulationReport simulate_rejection_rate(const TwoGroupModel& model, std::size_t nE, std::size_t nC,
                                         double alpha, SimTest test, std::size_t runs,
                                         std::uint64_t seed, bool parallel = true);

const char* to_string(SimTest test);

}  // namespace rses
