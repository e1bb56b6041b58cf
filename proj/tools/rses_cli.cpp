// Command-line front end: estimation, testing, exact operating
// characteristics, sample size, simulation, survival curves and coverage
// tables. All randomness is seed-driven; repeated invocations with the same
// flags produce byte-identical output.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "rses/design.hpp"
#include "rses/errors.hpp"
#include "rses/estimation.hpp"
#include "rses/inference.hpp"
#include "rses/io.hpp"
#include "rses/logrank.hpp"
#include "rses/model.hpp"
#include "rses/oc.hpp"
#include "rses/version.hpp"

namespace {

using nlohmann::json;
using namespace rses;

struct CommonOptions {
  std::string format = "text";
  std::string output = "-";
};

json json_number(double value) {
  if (std::isfinite(value)) return value;
  return value > 0 ? "inf" : "-inf";
}

void emit_json(const json& envelope) { std::cout << envelope.dump(2) << "\n"; }

void with_output(const std::string& path, const std::function<void(std::ostream&)>& body) {
  if (path == "-") {
    body(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  body(out);
  out.flush();
  if (!out) throw IoError("write failure on '" + path + "'");
}

double config_number(const json& config, const char* key, double fallback) {
  const auto it = config.find(key);
  if (it == config.end()) return fallback;
  if (!it->is_number()) throw DomainError(std::string("config key '") + key + "' must be a number");
  return it->get<double>();
}

std::size_t config_count(const json& config, const char* key, std::size_t minimum) {
  const auto it = config.find(key);
  if (it == config.end()) throw DomainError(std::string("config key '") + key + "' is required");
  if (!it->is_number_integer() || it->get<long long>() < static_cast<long long>(minimum))
    throw DomainError(std::string("config key '") + key + "' must be an integer >= " +
                      std::to_string(minimum));
  return it->get<std::size_t>();
}

// ---------------------------------------------------------------- fit ----

json ci_json(const ConfidenceInterval& ci) {
  return json{{"lower", json_number(ci.lower)}, {"upper", json_number(ci.upper)}, {"level", ci.level}};
}

std::string ci_text(const ConfidenceInterval& ci) {
  return "[" + io::format_double(ci.lower) + ", " + io::format_double(ci.upper) + "]";
}

void report_group_fit(std::ostream& out, const char* label, const MleResult& fit, double level) {
  out << "group " << label << ": n=" << fit.n << " k=" << fit.k << "\n";
  out << "  p_hat   " << io::format_double(fit.p_hat) << "  CI " << ci_text(ci_p(fit, level)) << "\n";
  out << "  theta1  " << (fit.theta1_hat ? io::format_double(*fit.theta1_hat) : std::string("absent"))
      << "  CI " << ci_text(ci_theta1(fit, level)) << "\n";
  out << "  theta0  " << (fit.theta0_hat ? io::format_double(*fit.theta0_hat) : std::string("absent"))
      << "  CI " << ci_text(ci_theta0(fit, level)) << "\n";
}

json group_fit_json(const MleResult& fit, double level) {
  json node{{"n", fit.n}, {"k", fit.k}, {"p_hat", fit.p_hat}};
  node["theta1_hat"] = fit.theta1_hat ? json(*fit.theta1_hat) : json(nullptr);
  node["theta0_hat"] = fit.theta0_hat ? json(*fit.theta0_hat) : json(nullptr);
  node["ci_p"] = ci_json(ci_p(fit, level));
  node["ci_theta1"] = ci_json(ci_theta1(fit, level));
  node["ci_theta0"] = ci_json(ci_theta0(fit, level));
  return node;
}

void cmd_fit(const std::string& input, double level, const CommonOptions& options) {
  const Dataset data = io::read_dataset(input);
  bool haveE = false, haveC = false;
  for (const SubjectRecord& record : data) (record.group == Group::E ? haveE : haveC) = true;
  if (!haveE) throw DomainError("no data for group E");
  if (!haveC) throw DomainError("no data for group C");
  const MleResult fitE = fit_mle(data, Group::E);
  const MleResult fitC = fit_mle(data, Group::C);

  if (options.format == "json") {
    json envelope = io::result_envelope("fit", json{{"input", input}, {"level", level}});
    envelope["results"] = json{{"E", group_fit_json(fitE, level)}, {"C", group_fit_json(fitC, level)}};
    emit_json(envelope);
    return;
  }
  std::cout << "level " << io::format_double(level) << "\n";
  report_group_fit(std::cout, "E", fitE, level);
  report_group_fit(std::cout, "C", fitC, level);
}

// --------------------------------------------------------------- test ----

void cmd_test(const std::string& input, const std::string& method, double alpha,
              const CommonOptions& options) {
  const TestMethod test = io::parse_test_method(method);
  const Dataset data = io::read_dataset(input);
  Dataset dataE, dataC;
  for (const SubjectRecord& record : data)
    (record.group == Group::E ? dataE : dataC).push_back(record);
  if (dataE.empty()) throw DomainError("no data for group E");
  if (dataC.empty()) throw DomainError("no data for group C");

  const TestOutcome outcome = test == TestMethod::approximate ? approx_test(dataE, dataC, alpha)
                                                              : exact_test(dataE, dataC, alpha);

  if (options.format == "json") {
    json envelope = io::result_envelope(
        "test", json{{"input", input}, {"method", io::to_string(test)}, {"alpha", alpha}});
    json results{{"local_level", outcome.local_level},
                 {"reject_p", outcome.reject_p},
                 {"reject_theta1", outcome.reject_theta1},
                 {"reject_theta0", outcome.reject_theta0},
                 {"reject_global", outcome.reject_global}};
    if (test == TestMethod::approximate) {
      results["stat_p"] = outcome.stat_p;
      results["stat_theta1"] = outcome.stat_theta1;
      results["stat_theta0"] = outcome.stat_theta0;
    } else {
      results["p_value_p"] = outcome.p_value_p;
      results["p_value_theta1"] = outcome.p_value_theta1;
      results["p_value_theta0"] = outcome.p_value_theta0;
    }
    envelope["results"] = results;
    emit_json(envelope);
    return;
  }

  std::cout << "method " << io::to_string(test) << "\n";
  std::cout << "alpha " << io::format_double(alpha) << "\n";
  std::cout << "local_level " << io::format_double(outcome.local_level) << "\n";
  if (test == TestMethod::approximate) {
    std::cout << "stat_p " << io::format_double(outcome.stat_p) << " reject "
              << (outcome.reject_p ? "yes" : "no") << "\n";
    std::cout << "stat_theta1 " << io::format_double(outcome.stat_theta1) << " reject "
              << (outcome.reject_theta1 ? "yes" : "no") << "\n";
    std::cout << "stat_theta0 " << io::format_double(outcome.stat_theta0) << " reject "
              << (outcome.reject_theta0 ? "yes" : "no") << "\n";
  } else {
    std::cout << "p_value_p " << io::format_double(outcome.p_value_p) << " reject "
              << (outcome.reject_p ? "yes" : "no") << "\n";
    std::cout << "p_value_theta1 " << io::format_double(outcome.p_value_theta1) << " reject "
              << (outcome.reject_theta1 ? "yes" : "no") << "\n";
    std::cout << "p_value_theta0 " << io::format_double(outcome.p_value_theta0) << " reject "
              << (outcome.reject_theta0 ? "yes" : "no") << "\n";
  }
  std::cout << "global " << (outcome.reject_global ? "reject" : "accept") << "\n";
}

// ----------------------------------------------------------------- oc ----

void cmd_oc(const std::string& config_path, const std::string& test_flag,
            const std::vector<std::size_t>& grid_flag, const CommonOptions& options) {
  const json config = io::load_config(config_path);
  const TwoGroupModel model = io::parse_model(config.at("model"));
  const double alpha = config_number(config, "alpha", 0.05);

  std::string test_name = test_flag;
  if (test_name.empty()) test_name = config.value("test", "exact");
  const TestMethod test = io::parse_test_method(test_name);

  std::vector<std::size_t> sizes = grid_flag;
  if (sizes.empty() && config.contains("sizes"))
    sizes = config.at("sizes").get<std::vector<std::size_t>>();
  if (sizes.empty()) throw DomainError("no sample sizes given: use --grid or config key 'sizes'");
  for (std::size_t n : sizes)
    if (n < 1) throw DomainError("sample sizes must be at least 1");

  std::vector<OcResult> rows;
  rows.reserve(sizes.size());
  for (std::size_t n : sizes) rows.push_back(exact_power(OcRequest{model, n, n, alpha, test}));

  const auto write_rows = [&](std::ostream& out) {
    io::write_csv_row(out, {"n", "rate"});
    for (std::size_t i = 0; i < sizes.size(); ++i)
      io::write_csv_row(out, {std::to_string(sizes[i]), io::format_double(rows[i].rejection_probability)});
  };

  if (options.format == "json") {
    json envelope = io::result_envelope(
        "oc", json{{"config", config}, {"test", io::to_string(test)}, {"alpha", alpha}});
    json cells = json::array();
    for (std::size_t i = 0; i < sizes.size(); ++i)
      cells.push_back(json{{"n", sizes[i]},
                           {"rate", rows[i].rejection_probability},
                           {"response_contribution", rows[i].response_contribution},
                           {"theta_contribution", rows[i].theta_contribution},
                           {"truncated_mass", rows[i].truncated_mass}});
    envelope["results"] = cells;
    if (options.output != "-") with_output(options.output, write_rows);
    emit_json(envelope);
    return;
  }
  with_output(options.output, write_rows);
}

// --------------------------------------------------------- samplesize ----

DesignSpec parse_design_spec(const json& config) {
  DesignSpec spec;
  spec.model_alt = io::parse_model(config.at("model_alt"));
  spec.ratio = config_number(config, "ratio", 1.0);
  spec.alpha = config_number(config, "alpha", 0.05);
  spec.beta = config_number(config, "beta", 0.2);
  if (config.contains("local_levels")) {
    const auto& levels = config.at("local_levels");
    if (!levels.is_array() || levels.size() != 3)
      throw DomainError("config key 'local_levels' must be an array of 3 numbers");
    spec.local_levels = std::array<double, 3>{levels[0].get<double>(), levels[1].get<double>(),
                                              levels[2].get<double>()};
  }
  spec.validate();
  return spec;
}

void cmd_samplesize(const std::string& config_path, const std::string& method,
                    const CommonOptions& options) {
  const json config = io::load_config(config_path);
  const DesignSpec spec = parse_design_spec(config);
  const DesignResult result =
      method == "exact" ? exact_sample_size(spec) : approx_sample_size(spec);

  if (options.format == "json") {
    json envelope =
        io::result_envelope("samplesize", json{{"config", config}, {"method", method}});
    envelope["results"] = json{{"nC", result.nC},
                               {"nE", result.nE},
                               {"achieved_power", result.achieved_power},
                               {"method", to_string(result.method)},
                               {"iterations", result.iterations}};
    emit_json(envelope);
    return;
  }
  std::cout << "method " << to_string(result.method) << "\n";
  std::cout << "nC " << result.nC << "\n";
  std::cout << "nE " << result.nE << "\n";
  std::cout << "achieved_power " << io::format_double(result.achieved_power) << "\n";
  std::cout << "iterations " << result.iterations << "\n";
}

// ------------------------------------------------------------ simulate ----

void cmd_simulate(const std::string& config_path, const std::string& emit_data,
                  const CommonOptions& options) {
  const json config = io::load_config(config_path);
  const TwoGroupModel model = io::parse_model(config.at("model"));
  std::size_t nE = 0, nC = 0;
  if (config.contains("n")) {
    nE = nC = config_count(config, "n", 1);
  } else {
    nE = config_count(config, "nE", 1);
    nC = config_count(config, "nC", 1);
  }
  const double alpha = config_number(config, "alpha", 0.05);
  if (!config.contains("test")) throw DomainError("config key 'test' is required");
  const SimTest test = io::parse_sim_test(config.at("test").get<std::string>());
  const std::size_t runs = config_count(config, "runs", 1);
  std::uint64_t seed = 1;
  if (config.contains("seed")) seed = config.at("seed").get<std::uint64_t>();

  if (!emit_data.empty()) {
    RngStream stream(seed, 0);
    Dataset data = sample(model.experimental, nE, stream, Group::E);
    const Dataset dataC = sample(model.control, nC, stream, Group::C);
    data.insert(data.end(), dataC.begin(), dataC.end());
    with_output(emit_data, [&](std::ostream& out) { io::write_dataset(out, data); });
  }

  const SimulationReport report = simulate_rejection_rate(model, nE, nC, alpha, test, runs, seed);

  const auto write_rows = [&](std::ostream& out) {
    io::write_csv_row(out, {"test", "runs", "rejections", "rate", "standard_error", "seed"});
    io::write_csv_row(out, {to_string(report.test), std::to_string(report.runs),
                            std::to_string(report.rejections), io::format_double(report.rate),
                            io::format_double(report.standard_error), std::to_string(report.seed)});
  };

  if (options.format == "json") {
    json envelope = io::result_envelope("simulate", json{{"config", config}});
    envelope["results"] = json{{"test", to_string(report.test)},
                               {"runs", report.runs},
                               {"rejections", report.rejections},
                               {"rate", report.rate},
                               {"standard_error", report.standard_error}};
    envelope["provenance"] = json{{"seed", report.seed}, {"runs", report.runs}};
    if (options.output != "-") with_output(options.output, write_rows);
    emit_json(envelope);
    return;
  }
  with_output(options.output, write_rows);
}

// -------------------------------------------------------------- curves ----

void cmd_curves(const std::string& config_path, double tmax, std::size_t points,
                const CommonOptions& options) {
  const json config = io::load_config(config_path);
  const TwoGroupModel model = io::parse_model(config.at("model"));
  if (!(tmax > 0.0) || !std::isfinite(tmax)) throw DomainError("--tmax must be positive");
  if (points < 2) throw DomainError("--points must be at least 2");

  const CurveRelation relation = classify_relation(model);
  const auto write_rows = [&](std::ostream& out) {
    io::write_csv_row(out, {"t", "S_E", "S_C"});
    for (std::size_t i = 0; i < points; ++i) {
      const double t = tmax * static_cast<double>(i) / static_cast<double>(points - 1);
      io::write_csv_row(out, {io::format_double(t), io::format_double(survival(model.experimental, t)),
                              io::format_double(survival(model.control, t))});
    }
  };

  if (options.format == "json") {
    json envelope = io::result_envelope(
        "curves", json{{"config", config}, {"tmax", tmax}, {"points", points}});
    envelope["results"] = json{{"relation", to_string(relation)}};
    if (options.output != "-") with_output(options.output, write_rows);
    emit_json(envelope);
    return;
  }
  std::cerr << "relation: " << to_string(relation) << "\n";
  with_output(options.output, write_rows);
}

// ------------------------------------------------------------ coverage ----

void cmd_coverage(const std::vector<std::size_t>& n_grid, const std::vector<double>& p_grid,
                  double level, const CommonOptions& options) {
  if (n_grid.empty() || p_grid.empty()) throw DomainError("--n-grid and --p-grid must be nonempty");
  for (std::size_t n : n_grid)
    if (n < 1) throw DomainError("--n-grid entries must be at least 1");
  for (double p : p_grid)
    if (!(p > 0.0 && p < 1.0)) throw DomainError("--p-grid entries must lie in (0, 1)");

  const auto write_rows = [&](std::ostream& out) {
    io::write_csv_row(out, {"n", "p", "coverage_p", "coverage_theta1", "coverage_theta0"});
    for (std::size_t n : n_grid)
      for (double p : p_grid)
        io::write_csv_row(out, {std::to_string(n), io::format_double(p),
                                io::format_double(coverage_p(n, p, level)),
                                io::format_double(coverage_theta1(n, p, level)),
                                io::format_double(coverage_theta0(n, p, level))});
  };

  if (options.format == "json") {
    json envelope = io::result_envelope(
        "coverage", json{{"level", level}, {"n_grid", n_grid}, {"p_grid", p_grid}});
    json cells = json::array();
    for (std::size_t n : n_grid)
      for (double p : p_grid)
        cells.push_back(json{{"n", n},
                             {"p", p},
                             {"coverage_p", coverage_p(n, p, level)},
                             {"coverage_theta1", coverage_theta1(n, p, level)},
                             {"coverage_theta0", coverage_theta0(n, p, level)}});
    envelope["results"] = cells;
    if (options.output != "-") with_output(options.output, write_rows);
    emit_json(envelope);
    return;
  }
  with_output(options.output, write_rows);
}

void add_common(CLI::App* cmd, CommonOptions& options) {
  cmd->add_option("--format", options.format, "Output format")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  cmd->add_option("--output", options.output, "Output file for CSV results ('-' for stdout)")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  try {
    if (const std::optional<int> threads = rses::io::thread_override()) {
#ifdef _OPENMP
      omp_set_num_threads(*threads);
#endif
    }

    CLI::App app{"Responder-stratified exponential survival: estimation, testing, design"};
    app.set_version_flag("--version", rses::kVersion);
    app.require_subcommand(1);

    CommonOptions fit_opt, test_opt, oc_opt, ss_opt, sim_opt, curves_opt, cov_opt;

    std::string fit_input;
    double fit_level = 0.95;
    CLI::App* fit = app.add_subcommand("fit", "Maximum likelihood fit with confidence intervals");
    fit->add_option("input", fit_input, "Input CSV (group,response,time)")->required();
    fit->add_option("--level", fit_level, "Confidence level")->capture_default_str();
    add_common(fit, fit_opt);

    std::string test_input, test_method = "exact";
    double test_alpha = 0.05;
    CLI::App* test = app.add_subcommand("test", "Two-group test of the three local hypotheses");
    test->add_option("input", test_input, "Input CSV (group,response,time)")->required();
    test->add_option("--method", test_method, "approx or exact")->capture_default_str();
    test->add_option("--alpha", test_alpha, "Global significance level")->capture_default_str();
    add_common(test, test_opt);

    std::string oc_config, oc_test;
    std::vector<std::size_t> oc_grid;
    CLI::App* oc = app.add_subcommand("oc", "Exact rejection probabilities over a size grid");
    oc->add_option("--config", oc_config, "Scenario config JSON")->required();
    oc->add_option("--test", oc_test, "approx or exact (overrides config)");
    oc->add_option("--grid", oc_grid, "Per-group sample sizes (overrides config)");
    add_common(oc, oc_opt);

    std::string ss_config, ss_method = "approx";
    CLI::App* ss = app.add_subcommand("samplesize", "Approximate or exact sample size");
    ss->add_option("--config", ss_config, "Design config JSON")->required();
    ss->add_option("--method", ss_method, "approx or exact")
        ->check(CLI::IsMember({"approx", "exact"}))
        ->capture_default_str();
    add_common(ss, ss_opt);

    std::string sim_config, sim_emit;
    CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo rejection rate of a chosen test");
    sim->add_option("--config", sim_config, "Simulation config JSON")->required();
    sim->add_option("--emit-data", sim_emit, "Write the first generated dataset to this CSV");
    add_common(sim, sim_opt);

    std::string curves_config;
    double curves_tmax = 10.0;
    std::size_t curves_points = 101;
    CLI::App* curves = app.add_subcommand("curves", "Survival-curve grid and relation tag");
    curves->add_option("--config", curves_config, "Model config JSON")->required();
    curves->add_option("--tmax", curves_tmax, "Grid endpoint")->capture_default_str();
    curves->add_option("--points", curves_points, "Grid size")->capture_default_str();
    add_common(curves, curves_opt);

    std::vector<std::size_t> cov_n;
    std::vector<double> cov_p;
    double cov_level = 0.95;
    CLI::App* coverage = app.add_subcommand("coverage", "Exact coverage of the approximate intervals");
    coverage->add_option("--n-grid", cov_n, "Group sizes")->required();
    coverage->add_option("--p-grid", cov_p, "Response probabilities")->required();
    coverage->add_option("--level", cov_level, "Confidence level")->capture_default_str();
    add_common(coverage, cov_opt);

    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      std::cerr << "usage error: " << e.what() << "\n";
      return 2;
    }

    if (fit->parsed()) cmd_fit(fit_input, fit_level, fit_opt);
    if (test->parsed()) cmd_test(test_input, test_method, test_alpha, test_opt);
    if (oc->parsed()) cmd_oc(oc_config, oc_test, oc_grid, oc_opt);
    if (ss->parsed()) cmd_samplesize(ss_config, ss_method, ss_opt);
    if (sim->parsed()) cmd_simulate(sim_config, sim_emit, sim_opt);
    if (curves->parsed()) cmd_curves(curves_config, curves_tmax, curves_points, curves_opt);
    if (coverage->parsed()) cmd_coverage(cov_n, cov_p, cov_level, cov_opt);
    return 0;
  } catch (const rses::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const rses::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const rses::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
