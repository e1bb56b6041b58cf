#include "rses/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "rses/errors.hpp"
#include "rses/version.hpp"

namespace rses::io {
namespace {

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

[[noreturn]] void row_error(const std::string& path, std::size_t line_no, const std::string& what) {
  throw DomainError(path + ":" + std::to_string(line_no) + ": " + what);
}

double parse_time(const std::string& field, const std::string& path, std::size_t line_no) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) row_error(path, line_no, "cannot parse time '" + field + "'");
  if (!(value > 0.0) || !std::isfinite(value)) row_error(path, line_no, "time must be positive and finite");
  return value;
}

const nlohmann::json& require(const nlohmann::json& node, const char* key, const std::string& where) {
  const auto it = node.find(key);
  if (it == node.end()) throw DomainError(where + ": missing key '" + key + "'");
  return *it;
}

double require_number(const nlohmann::json& node, const char* key, const std::string& where) {
  const nlohmann::json& value = require(node, key, where);
  if (!value.is_number()) throw DomainError(where + ": key '" + std::string(key) + "' must be a number");
  return value.get<double>();
}

}  // namespace

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");

  std::string line;
  if (!std::getline(in, line)) throw DomainError(path + ":1: empty file, expected header group,response,time");
  if (strip_cr(line) != "group,response,time")
    throw DomainError(path + ":1: expected header group,response,time");

  Dataset data;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != 3) row_error(path, line_no, "expected 3 fields, got " + std::to_string(fields.size()));

    SubjectRecord record;
    if (fields[0] == "E") record.group = Group::E;
    else if (fields[0] == "C") record.group = Group::C;
    else row_error(path, line_no, "group must be E or C, got '" + fields[0] + "'");

    if (fields[1] == "0") record.responder = false;
    else if (fields[1] == "1") record.responder = true;
    else row_error(path, line_no, "response must be 0 or 1, got '" + fields[1] + "'");

    record.time = parse_time(fields[2], path, line_no);
    data.push_back(record);
  }
  if (in.bad()) throw IoError("read failure on '" + path + "'");
  return data;
}

void write_dataset(std::ostream& out, const Dataset& data) {
  write_csv_row(out, {"group", "response", "time"});
  for (const SubjectRecord& record : data)
    write_csv_row(out, {record.group == Group::E ? "E" : "C", record.responder ? "1" : "0",
                        format_double(record.time)});
}

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.10g", value);
  return buffer;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string escaped = "\"";
  for (char c : field) {
    escaped += c;
    if (c == '"') escaped += '"';
  }
  escaped += '"';
  return escaped;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(fields[i]);
  }
  out << "\r\n";
}

nlohmann::json load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  nlohmann::json config;
  try {
    config = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DomainError(path + ": " + e.what());
  }
  if (!config.is_object()) throw DomainError(path + ": config must be a JSON object");
  const auto it = config.find("schema_version");
  if (it == config.end()) throw DomainError(path + ": missing schema_version");
  if (!it->is_number_integer() || it->get<int>() != kSchemaVersion)
    throw DomainError(path + ": unsupported schema_version, expected " + std::to_string(kSchemaVersion));
  return config;
}

RsesParams parse_params(const nlohmann::json& node, const std::string& where) {
  if (!node.is_object()) throw DomainError(where + ": expected an object with p, lambda1, lambda0");
  RsesParams params;
  params.p = require_number(node, "p", where);
  params.lambda1 = require_number(node, "lambda1", where);
  params.lambda0 = require_number(node, "lambda0", where);
  params.validate();
  return params;
}

TwoGroupModel parse_model(const nlohmann::json& node) {
  if (!node.is_object()) throw DomainError("model: expected an object");
  TwoGroupModel model;
  model.experimental = parse_params(require(node, "experimental", "model"), "model.experimental");
  model.control = parse_params(require(node, "control", "model"), "model.control");
  return model;
}

TestMethod parse_test_method(const std::string& name) {
  if (name == "approx" || name == "approximate") return TestMethod::approximate;
  if (name == "exact") return TestMethod::exact;
  throw DomainError("unknown test method '" + name + "', expected approx or exact");
}

SimTest parse_sim_test(const std::string& name) {
  if (name == "logrank") return SimTest::logrank;
  if (name == "stratified-logrank") return SimTest::stratified_logrank;
  if (name == "approx-rses") return SimTest::approx_rses;
  if (name == "exact-rses") return SimTest::exact_rses;
  throw DomainError("unknown simulation test '" + name + "'");
}

const char* to_string(TestMethod method) {
  return method == TestMethod::approximate ? "approximate" : "exact";
}

nlohmann::json result_envelope(const std::string& command, nlohmann::json inputs) {
  nlohmann::json envelope;
  envelope["tool"] = "rses";
  envelope["version"] = kVersion;
  envelope["command"] = command;
  envelope["inputs"] = std::move(inputs);
  return envelope;
}

std::optional<int> thread_override() {
  const char* raw = std::getenv("RSES_THREADS");
  if (raw == nullptr) return std::nullopt;
  const std::string text(raw);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value < 1)
    throw DomainError("RSES_THREADS must be a positive integer");
  return value;
}

}  // namespace rses::io
