#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "rses/design.hpp"
#include "rses/estimation.hpp"
#include "rses/inference.hpp"
#include "rses/io.hpp"
#include "rses/logrank.hpp"
#include "rses/model.hpp"
#include "rses/oc.hpp"
#include "rses/rng.hpp"
#include "rses/version.hpp"
#include "test_helpers.hpp"

#ifndef RSES_CLI_PATH
#error "RSES_CLI_PATH must point at the built binary"
#endif

using namespace rses;
using nlohmann::json;

namespace {

struct CliResult {
  int exit_code;
  std::string out, err;
};

std::filesystem::path scratch_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "rses_cli_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string scratch_path(const std::string& name) { return (scratch_dir() / name).string(); }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void spit(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  out << contents;
}

CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  static int counter = 0;
  const std::string out_path = scratch_path("stdout_" + std::to_string(counter));
  const std::string err_path = scratch_path("stderr_" + std::to_string(counter));
  ++counter;
  std::string command = env_prefix.empty() ? "" : env_prefix + " ";
  command += std::string(RSES_CLI_PATH) + " " + args + " >" + out_path + " 2>" + err_path;
  const int status = std::system(command.c_str());
  REQUIRE(WIFEXITED(status));
  CliResult result{WEXITSTATUS(status), slurp(out_path), slurp(err_path)};
  std::filesystem::remove(out_path);
  std::filesystem::remove(err_path);
  return result;
}

const std::string& mixed_dataset_path() {
  static const std::string path = [] {
    const std::string p = scratch_path("mixed.csv");
    spit(p,
         "group,response,time\n"
         "E,1,2\n"
         "E,0,1\n"
         "E,1,0.5\n"
         "C,1,0.5\n"
         "C,0,1.5\n"
         "C,0,2.5\n");
    return p;
  }();
  return path;
}

Dataset mixed_dataset() {
  Dataset data;
  data.push_back({Group::E, true, 2.0});
  data.push_back({Group::E, false, 1.0});
  data.push_back({Group::E, true, 0.5});
  data.push_back({Group::C, true, 0.5});
  data.push_back({Group::C, false, 1.5});
  data.push_back({Group::C, false, 2.5});
  return data;
}

std::string write_config(const std::string& name, const json& config) {
  const std::string path = scratch_path(name);
  spit(path, config.dump(2));
  return path;
}

json model_config_node(double pE, double l1E, double l0E, double pC, double l1C, double l0C) {
  return json{{"experimental", {{"p", pE}, {"lambda1", l1E}, {"lambda0", l0E}}},
              {"control", {{"p", pC}, {"lambda1", l1C}, {"lambda0", l0C}}}};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("fit: text report and JSON agree with the library") {
  const CliResult text = run_cli("fit " + mixed_dataset_path());
  CHECK(text.exit_code == 0);
  CHECK(text.out.find("group E: n=3 k=2") != std::string::npos);
  CHECK(text.out.find("group C: n=3 k=1") != std::string::npos);
  CHECK(text.out.find("level 0.95") != std::string::npos);

  const CliResult out = run_cli("fit " + mixed_dataset_path() + " --format json --level 0.9");
  CHECK(out.exit_code == 0);
  const json envelope = json::parse(out.out);
  CHECK(envelope.at("tool") == "rses");
  CHECK(envelope.at("command") == "fit");
  CHECK(envelope.at("inputs").at("level") == 0.9);

  const Dataset data = mixed_dataset();
  const MleResult fitE = fit_mle(data, Group::E);
  const json& nodeE = envelope.at("results").at("E");
  CHECK(nodeE.at("n") == 3);
  CHECK(nodeE.at("k") == 2);
  CHECK(nodeE.at("p_hat").get<double>() == fitE.p_hat);
  CHECK(nodeE.at("theta1_hat").get<double>() == *fitE.theta1_hat);
  const ConfidenceInterval ciE = ci_theta1(fitE, 0.9);
  CHECK(nodeE.at("ci_theta1").at("lower").get<double>() == ciE.lower);
  CHECK(nodeE.at("ci_theta1").at("upper").get<double>() == ciE.upper);
  CHECK(nodeE.at("ci_theta1").at("level") == 0.9);
}

TEST_CASE("fit: unbounded intervals serialize as signed infinity strings") {
  const std::string path = scratch_path("all_resp.csv");
  spit(path, "group,response,time\nE,1,1\nE,1,2\nC,1,0.5\nC,0,1\n");
  const CliResult out = run_cli("fit " + path + " --format json");
  CHECK(out.exit_code == 0);
  const json envelope = json::parse(out.out);
  // Group E has no non-responders: theta0 is absent and its interval is the
  // whole real line.
  CHECK(envelope.at("results").at("E").at("theta0_hat").is_null());
  CHECK(envelope.at("results").at("E").at("ci_theta0").at("lower") == "-inf");
  CHECK(envelope.at("results").at("E").at("ci_theta0").at("upper") == "inf");
}

TEST_CASE("fit: error paths carry exit codes and line numbers") {
  const std::string one_group = scratch_path("one_group.csv");
  spit(one_group, "group,response,time\nE,1,1\n");
  const CliResult missing = run_cli("fit " + one_group);
  CHECK(missing.exit_code == 2);
  CHECK(missing.err.find("no data for group C") != std::string::npos);

  const std::string bad_time = scratch_path("bad_time.csv");
  spit(bad_time, "group,response,time\nE,1,1\nC,0,-3\n");
  const CliResult bad = run_cli("fit " + bad_time);
  CHECK(bad.exit_code == 2);
  CHECK(bad.err.find(":3:") != std::string::npos);

  CHECK(run_cli("fit /nonexistent/rses/in.csv").exit_code == 4);
}

TEST_CASE("test: identical groups accept globally and match the library") {
  const std::string path = scratch_path("same.csv");
  spit(path,
       "group,response,time\n"
       "E,1,1\nE,0,2\nE,0,3\nC,1,1\nC,0,2\nC,0,3\n");
  const CliResult text = run_cli("test " + path + " --method exact");
  CHECK(text.exit_code == 0);
  CHECK(text.out.find("p_value_p 1 reject no") != std::string::npos);
  CHECK(text.out.find("global accept") != std::string::npos);

  Dataset dataE, dataC;
  dataE.push_back({Group::E, true, 1.0});
  dataE.push_back({Group::E, false, 2.0});
  dataE.push_back({Group::E, false, 3.0});
  dataC.push_back({Group::C, true, 1.0});
  dataC.push_back({Group::C, false, 2.0});
  dataC.push_back({Group::C, false, 3.0});
  const TestOutcome outcome = exact_test(dataE, dataC, 0.05);

  const json envelope = json::parse(run_cli("test " + path + " --format json").out);
  const json& results = envelope.at("results");
  CHECK(results.at("p_value_p").get<double>() == outcome.p_value_p);
  CHECK(results.at("p_value_theta1").get<double>() == outcome.p_value_theta1);
  CHECK(results.at("p_value_theta0").get<double>() == outcome.p_value_theta0);
  CHECK(results.at("reject_global") == false);
  CHECK(results.at("local_level").get<double>() == outcome.local_level);

  const json approx = json::parse(run_cli("test " + path + " --method approx --format json").out);
  const TestOutcome wald = approx_test(dataE, dataC, 0.05);
  CHECK(approx.at("results").at("stat_p").get<double>() == wald.stat_p);
  CHECK(approx.at("results").at("stat_theta1").get<double>() == wald.stat_theta1);

  CHECK(run_cli("test " + path + " --alpha 1.5").exit_code == 2);
  CHECK(run_cli("test " + path + " --method wald").exit_code == 2);
}

TEST_CASE("oc: CSV and JSON match the library; reruns are byte identical") {
  json config{{"schema_version", 1},
              {"model", model_config_node(0.26, 0.4, 1.0, 0.13, 0.4, 1.0)},
              {"alpha", 0.05},
              {"test", "exact"},
              {"sizes", {7}}};
  const std::string path = write_config("oc_small.json", config);

  const OcResult want = exact_power(
      OcRequest{TwoGroupModel{{0.26, 0.4, 1.0}, {0.13, 0.4, 1.0}}, 7, 7, 0.05, TestMethod::exact});

  const CliResult csv = run_cli("oc --config " + path);
  CHECK(csv.exit_code == 0);
  CHECK(csv.out == "n,rate\r\n7," + io::format_double(want.rejection_probability) + "\r\n");

  const CliResult again = run_cli("oc --config " + path);
  CHECK(again.out == csv.out);

  const std::string side_csv = scratch_path("oc_rows.csv");
  const CliResult with_json =
      run_cli("oc --config " + path + " --format json --output " + side_csv);
  CHECK(with_json.exit_code == 0);
  const json envelope = json::parse(with_json.out);
  const json& cell = envelope.at("results").at(0);
  CHECK(cell.at("n") == 7);
  CHECK(cell.at("rate").get<double>() == want.rejection_probability);
  CHECK(cell.at("response_contribution").get<double>() == want.response_contribution);
  CHECK(cell.at("theta_contribution").get<double>() == want.theta_contribution);
  CHECK(slurp(side_csv) == csv.out);
  std::filesystem::remove(side_csv);

  // Flag overrides: grid instead of config sizes, approx instead of exact.
  const OcResult approx = exact_power(OcRequest{
      TwoGroupModel{{0.26, 0.4, 1.0}, {0.13, 0.4, 1.0}}, 7, 7, 0.05, TestMethod::approximate});
  const CliResult flagged = run_cli("oc --config " + path + " --grid 7 --test approx");
  CHECK(flagged.out == "n,rate\r\n7," + io::format_double(approx.rejection_probability) + "\r\n");
}

TEST_CASE("oc: config files with CRLF line endings parse") {
  const std::string path = scratch_path("oc_crlf.json");
  spit(path,
       "{\r\n\"schema_version\": 1,\r\n"
       "\"model\": {\"experimental\": {\"p\": 0.5, \"lambda1\": 1.0, \"lambda0\": 1.0},\r\n"
       "\"control\": {\"p\": 0.5, \"lambda1\": 1.0, \"lambda0\": 1.0}},\r\n"
       "\"test\": \"approx\", \"sizes\": [5]\r\n}\r\n");
  CHECK(run_cli("oc --config " + path).exit_code == 0);
}

TEST_CASE("samplesize: results match the library and errors are typed") {
  json config{{"schema_version", 1},
              {"model_alt", model_config_node(0.8, 0.142 / 3, 0.142, 0.13, 0.142, 0.142)},
              {"ratio", 1.0},
              {"alpha", 0.05},
              {"beta", 0.2}};
  const std::string path = write_config("ss_small.json", config);

  const CliResult text = run_cli("samplesize --config " + path);
  CHECK(text.exit_code == 0);
  CHECK(text.out.find("method approximate") != std::string::npos);
  CHECK(text.out.find("nC 9") != std::string::npos);
  CHECK(text.out.find("nE 9") != std::string::npos);

  DesignSpec spec;
  spec.model_alt = TwoGroupModel{{0.8, 0.142 / 3, 0.142}, {0.13, 0.142, 0.142}};
  const DesignResult want = approx_sample_size(spec);
  const json envelope = json::parse(run_cli("samplesize --config " + path + " --format json").out);
  CHECK(envelope.at("results").at("nC") == want.nC);
  CHECK(envelope.at("results").at("achieved_power").get<double>() == want.achieved_power);
  CHECK(envelope.at("results").at("method") == "approximate");

  const DesignResult exact_want = exact_sample_size(spec);
  const json exact_env =
      json::parse(run_cli("samplesize --config " + path + " --method exact --format json").out);
  CHECK(exact_env.at("results").at("nC") == exact_want.nC);
  CHECK(exact_env.at("results").at("method") == "exact-iterative");

  json no_effect{{"schema_version", 1},
                 {"model_alt", model_config_node(0.3, 0.5, 1.0, 0.3, 0.5, 1.0)}};
  const CliResult degenerate =
      run_cli("samplesize --config " + write_config("ss_none.json", no_effect));
  CHECK(degenerate.exit_code == 2);
  CHECK(degenerate.err.find("undefined design") != std::string::npos);

  CHECK(run_cli("samplesize --config " + path + " --method brute").exit_code == 2);
}

TEST_CASE("simulate: deterministic output, emitted data reproduces the stream") {
  json config{{"schema_version", 1},
              {"model", model_config_node(0.3, 2.0, 0.5, 0.3, 2.0, 0.5)},
              {"n", 12},
              {"alpha", 0.05},
              {"test", "approx-rses"},
              {"runs", 50},
              {"seed", 5}};
  const std::string path = write_config("sim_small.json", config);

  const CliResult a = run_cli("simulate --config " + path);
  const CliResult b = run_cli("simulate --config " + path);
  CHECK(a.exit_code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find("test,runs,rejections,rate,standard_error,seed") != std::string::npos);
  CHECK(a.out.find("approx-rses,50,") != std::string::npos);

  const TwoGroupModel m{{0.3, 2.0, 0.5}, {0.3, 2.0, 0.5}};
  const SimulationReport want =
      simulate_rejection_rate(m, 12, 12, 0.05, SimTest::approx_rses, 50, 5);
  const json envelope = json::parse(run_cli("simulate --config " + path + " --format json").out);
  CHECK(envelope.at("results").at("rejections") == want.rejections);
  CHECK(envelope.at("provenance").at("seed") == 5);
  CHECK(envelope.at("provenance").at("runs") == 50);

  // --emit-data writes the run-0 dataset: experimental drawn first, then
  // control, from the same stream.
  const std::string emitted = scratch_path("sim_data.csv");
  CHECK(run_cli("simulate --config " + path + " --emit-data " + emitted).exit_code == 0);
  RngStream stream(5, 0);
  Dataset expected = sample(m.experimental, 12, stream, Group::E);
  const Dataset dataC = sample(m.control, 12, stream, Group::C);
  expected.insert(expected.end(), dataC.begin(), dataC.end());
  std::ostringstream expected_text;
  io::write_dataset(expected_text, expected);
  CHECK(slurp(emitted) == expected_text.str());
  std::filesystem::remove(emitted);
}

TEST_CASE("simulate: emitted samples are statistically faithful") {
  json config{{"schema_version", 1},
              {"model", model_config_node(0.3, 2.0, 0.5, 0.6, 1.0, 0.25)},
              {"n", 20000},
              {"alpha", 0.05},
              {"test", "logrank"},
              {"runs", 1},
              {"seed", 11}};
  const std::string path = write_config("sim_big.json", config);
  const std::string emitted = scratch_path("sim_big.csv");
  CHECK(run_cli("simulate --config " + path + " --emit-data " + emitted).exit_code == 0);

  const Dataset data = io::read_dataset(emitted);
  std::filesystem::remove(emitted);
  REQUIRE(data.size() == 40000);
  const MleResult fitE = fit_mle(data, Group::E);
  const MleResult fitC = fit_mle(data, Group::C);
  const double se_pE = std::sqrt(0.3 * 0.7 / 20000.0);
  CHECK(std::abs(fitE.p_hat - 0.3) <= 3.0 * se_pE);
  CHECK(std::abs(fitC.p_hat - 0.6) <= 3.0 * std::sqrt(0.6 * 0.4 / 20000.0));
  // theta = log lambda; the estimator variance is 1/k.
  CHECK(std::abs(*fitE.theta1_hat - std::log(2.0)) <=
        3.0 / std::sqrt(static_cast<double>(fitE.k)));
  CHECK(std::abs(*fitC.theta0_hat - std::log(0.25)) <=
        3.0 / std::sqrt(static_cast<double>(fitC.n - fitC.k)));
}

TEST_CASE("curves: grid endpoints and relation tags") {
  json crossing{{"schema_version", 1},
                {"model", model_config_node(0.5, 0.05, 3.0, 0.5, 0.1, 1.0)}};
  const std::string path = write_config("curves_cross.json", crossing);

  const CliResult text = run_cli("curves --config " + path + " --tmax 2 --points 3");
  CHECK(text.exit_code == 0);
  CHECK(text.err.find("relation: Crossing") != std::string::npos);
  const TwoGroupModel m{{0.5, 0.05, 3.0}, {0.5, 0.1, 1.0}};
  const std::string want_mid = "1," + io::format_double(survival(m.experimental, 1.0)) + "," +
                               io::format_double(survival(m.control, 1.0));
  CHECK(text.out.find("t,S_E,S_C\r\n0,1,1\r\n") == 0);
  CHECK(text.out.find(want_mid) != std::string::npos);

  const json envelope =
      json::parse(run_cli("curves --config " + path + " --format json --points 2").out);
  CHECK(envelope.at("results").at("relation") == "Crossing");

  json equal{{"schema_version", 1},
             {"model", model_config_node(0.5, 1.0, 2.0, 0.5, 1.0, 2.0)}};
  const CliResult same =
      run_cli("curves --config " + write_config("curves_eq.json", equal));
  CHECK(same.err.find("relation: CompletelyEqual") != std::string::npos);

  CHECK(run_cli("curves --config " + path + " --points 1").exit_code == 2);
  CHECK(run_cli("curves --config " + path + " --tmax 0").exit_code == 2);
}

TEST_CASE("coverage: rows match the library") {
  const CliResult out = run_cli("coverage --n-grid 5 --p-grid 0.5 --level 0.9");
  CHECK(out.exit_code == 0);
  const std::string want = "5,0.5," + io::format_double(coverage_p(5, 0.5, 0.9)) + "," +
                           io::format_double(coverage_theta1(5, 0.5, 0.9)) + "," +
                           io::format_double(coverage_theta0(5, 0.5, 0.9));
  CHECK(out.out.find("n,p,coverage_p,coverage_theta1,coverage_theta0") != std::string::npos);
  CHECK(out.out.find(want) != std::string::npos);

  CHECK(run_cli("coverage --n-grid 5 --p-grid 1.5").exit_code == 2);
}

TEST_CASE("global flags and failure modes") {
  const CliResult version = run_cli("--version");
  CHECK(version.exit_code == 0);
  CHECK(version.out.find(kVersion) != std::string::npos);

  CHECK(run_cli("frobnicate").exit_code == 2);
  CHECK(run_cli("").exit_code == 2);

  const CliResult bad_env = run_cli("fit " + mixed_dataset_path(), "RSES_THREADS=abc");
  CHECK(bad_env.exit_code == 2);
  CHECK(bad_env.err.find("RSES_THREADS") != std::string::npos);
  CHECK(run_cli("fit " + mixed_dataset_path(), "RSES_THREADS=2").exit_code == 0);
}

}  // TEST_SUITE
