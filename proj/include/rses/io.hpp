#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rses/design.hpp"
#include "rses/inference.hpp"
#include "rses/logrank.hpp"
#include "rses/model.hpp"

namespace rses::io {

// Subject data CSV: header `group,response,time`, group in {E,C}, response
// in {0,1}, time > 0. Unreadable file -> IoError; malformed content ->
// DomainError carrying the 1-based line number.
Dataset read_dataset(const std::string& path);
void write_dataset(std::ostream& out, const Dataset& data);

// All floating-point output goes through this: 10 significant digits.
std::string format_double(double value);

// RFC-4180 rows: fields quoted when needed, lines terminated with CRLF.
std::string csv_escape(const std::string& field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

// Scenario configuration: JSON with a mandatory schema_version field.
inline constexpr int kSchemaVersion = 1;
nlohmann::json load_config(const std::string& path);

RsesParams parse_params(const nlohmann::json& node, const std::string& where);
TwoGroupModel parse_model(const nlohmann::json& node);

TestMethod parse_test_method(const std::string& name);
SimTest parse_sim_test(const std::string& name);
const char* to_string(TestMethod method);

// Machine-readable report skeleton; the caller attaches "results" and
// "provenance" before emission.
nlohmann::json result_envelope(const std::string& command, nlohmann::json inputs);

// Thread-count override from the RSES_THREADS environment variable; unset
// means library default. Invalid values -> DomainError.
std::optional<int> thread_override();

}  // namespace rses::io
