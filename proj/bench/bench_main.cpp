// Times the OpenMP kernels against their serial reference paths and checks
// that both produce identical results.

#include <chrono>
#include <cstdio>
#include <functional>
#include <memory>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "rses/inference.hpp"
#include "rses/logrank.hpp"
#include "rses/model.hpp"
#include "rses/oc.hpp"

using namespace rses;

namespace {

double time_of(const std::function<void()>& work) {
  const auto start = std::chrono::steady_clock::now();
  work();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void report(const char* kernel, double serial, double parallel, bool equal) {
  std::printf("%-28s %9.3f s %9.3f s %7.2fx   results %s\n", kernel, serial, parallel,
              serial / parallel, equal ? "identical" : "DIFFER");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial vs OpenMP timings for the heavy kernels"};
  std::size_t n = 60;
  std::size_t runs = 20000;
  app.add_option("--n", n, "Per-group sample size for the table kernels");
  app.add_option("--runs", runs, "Monte Carlo runs for the simulation kernel");
  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (built without OpenMP)\n");
#endif
  std::printf("%-28s %11s %11s %8s\n", "kernel", "serial", "parallel", "speedup");

  const double alpha = 0.05;
  const TwoGroupModel model{{0.26, 0.2, 0.5}, {0.13, 0.4, 1.0}};

  {
    ZpooledTable serial_table, parallel_table;
    const double ts = time_of([&] { serial_table = ZpooledTable::compute(n, n, 1000, false); });
    const double tp = time_of([&] { parallel_table = ZpooledTable::compute(n, n, 1000, true); });
    bool equal = true;
    for (std::size_t a = 0; a <= n && equal; ++a)
      for (std::size_t b = 0; b <= n && equal; ++b)
        equal = serial_table.p_value(a, b) == parallel_table.p_value(a, b);
    report("z-pooled p-value table", ts, tp, equal);
  }

  {
    std::unique_ptr<OcContext> serial_ctx, parallel_ctx;
    const double ts = time_of([&] { serial_ctx = std::make_unique<OcContext>(n, n, alpha, false); });
    const double tp = time_of([&] { parallel_ctx = std::make_unique<OcContext>(n, n, alpha, true); });
    bool equal = true;
    for (std::size_t a = 1; a <= n && equal; ++a)
      for (std::size_t b = 1; b <= n && equal; ++b)
        equal = serial_ctx->critical_value(a, b) == parallel_ctx->critical_value(a, b);
    report("critical-value tables", ts, tp, equal);

    const OcRequest request{model, n, n, alpha, TestMethod::exact};
    OcResult serial_power, parallel_power;
    const double es = time_of([&] { serial_power = exact_power_exact_test(request, *serial_ctx, false); });
    const double ep = time_of([&] { parallel_power = exact_power_exact_test(request, *parallel_ctx, true); });
    report("power enumeration", es, ep,
           serial_power.rejection_probability == parallel_power.rejection_probability);
  }

  {
    SimulationReport serial_report{}, parallel_report{};
    const double ts = time_of([&] {
      serial_report = simulate_rejection_rate(model, 50, 50, alpha, SimTest::logrank, runs, 1, false);
    });
    const double tp = time_of([&] {
      parallel_report = simulate_rejection_rate(model, 50, 50, alpha, SimTest::logrank, runs, 1, true);
    });
    report("logrank simulation", ts, tp, serial_report.rejections == parallel_report.rejections);
  }

  return 0;
}
