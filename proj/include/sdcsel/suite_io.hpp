// Copyright 2026 The sdcsel Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <string>

#include "sdcsel/error.hpp"
#include "sdcsel/io.hpp"
#include "sdcsel/model.hpp"

// Canonical suite document:
//   {"suite_id": "...", "cases": [{"test_id": "...", "road_points": [[x, y], ...],
//                                  "outcome": "PASS"|"FAIL", "sim_time_sec": 12.5}, ...]}
// A third coordinate per point (elevation) is accepted and dropped.

namespace sdcsel {

using ordered_json = nlohmann::ordered_json;

inline ordered_json to_json(const TestCase& tc) {
  ordered_json pts = ordered_json::array();
  for (const auto& p : tc.road_points) pts.push_back({p.x, p.y});
  return ordered_json{{"test_id", tc.test_id}, {"road_points", std::move(pts)}};
}

inline ordered_json to_json(const LabeledCase& lc) {
  ordered_json j = to_json(lc.test_case);
  j["outcome"] = std::string(to_string(lc.oracle.outcome));
  j["sim_time_sec"] = lc.oracle.sim_time_sec;
  return j;
}

// One case per line keeps large suites diffable.
inline std::string dump_suite(const TestSuite& suite) {
  std::string out = "{\n  \"suite_id\": " + ordered_json(suite.suite_id).dump() + ",\n  \"cases\": [";
  for (std::size_t i = 0; i < suite.cases.size(); ++i) {
    out += i == 0 ? "\n    " : ",\n    ";
    out += to_json(suite.cases[i]).dump();
  }
  out += suite.cases.empty() ? "]\n}\n" : "\n  ]\n}\n";
  return out;
}

namespace detail {

inline std::string field_path(const std::string& where, const char* key) {
  return where.empty() ? std::string(key) : where + "." + key;
}

template <typename Json>
const Json& require(const Json& obj, const char* key, const std::string& where) {
  const std::string path = field_path(where, key);
  if (!obj.is_object()) throw SchemaError(where.empty() ? "<root>" : where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path, "missing");
  return *it;
}

template <typename Json>
std::string require_string(const Json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_string()) throw SchemaError(field_path(where, key), "expected a string");
  return v.template get<std::string>();
}

template <typename Json>
double require_number(const Json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_number()) throw SchemaError(field_path(where, key), "expected a number");
  return v.template get<double>();
}

}  // namespace detail

template <typename Json>
TestCase test_case_from_json(const Json& j, const std::string& where) {
  TestCase tc;
  tc.test_id = detail::require_string(j, "test_id", where);
  const auto& pts = detail::require(j, "road_points", where);
  if (!pts.is_array()) throw SchemaError(where + ".road_points", "expected an array");
  tc.road_points.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    const std::string at = where + ".road_points[" + std::to_string(i) + "]";
    if (!p.is_array() || p.size() < 2 || p.size() > 3) {
      throw SchemaError(at, "expected [x, y] or [x, y, z]");
    }
    if (!p[0].is_number() || !p[1].is_number()) throw SchemaError(at, "coordinates must be numbers");
    tc.road_points.push_back({p[0].template get<double>(), p[1].template get<double>()});
  }
  return tc;
}

template <typename Json>
TestSuite suite_from_json(const Json& j) {
  TestSuite suite;
  suite.suite_id = detail::require_string(j, "suite_id", "");
  const auto& cases = detail::require(j, "cases", "");
  if (!cases.is_array()) throw SchemaError("cases", "expected an array");
  suite.cases.reserve(cases.size());
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const std::string where = "cases[" + std::to_string(i) + "]";
    LabeledCase lc;
    lc.test_case = test_case_from_json(cases[i], where);
    const std::string outcome = detail::require_string(cases[i], "outcome", where);
    const auto parsed = parse_outcome(outcome);
    if (!parsed) throw SchemaError(where + ".outcome", "expected PASS or FAIL, got '" + outcome + "'");
    lc.oracle = {lc.test_case.test_id, *parsed, detail::require_number(cases[i], "sim_time_sec", where)};
    suite.cases.push_back(std::move(lc));
  }
  return suite;
}

inline TestSuite parse_suite(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed suite document at byte ") + std::to_string(e.byte) + ": " + e.what());
  }
  return suite_from_json(j);
}

// Readers for foreign suite formats, keyed by file extension (".json" is the
// canonical format). Register an adapter here to ingest other datasets.
using SuiteReader = std::function<TestSuite(const std::filesystem::path&)>;

inline std::map<std::string, SuiteReader>& suite_readers() {
  static std::map<std::string, SuiteReader> readers{
      {".json", [](const std::filesystem::path& p) { return parse_suite(read_text_file(p)); }}};
  return readers;
}

// Throws ParseError, SchemaError or ValidationError.
inline TestSuite load_suite(const std::filesystem::path& path) {
  const auto& readers = suite_readers();
  auto it = readers.find(path.extension().string());
  if (it == readers.end()) throw ParseError("no suite reader for '" + path.string() + "'");
  TestSuite suite = it->second(path);
  if (auto report = validate_suite(suite); !report.empty()) throw ValidationError(std::move(report));
  return suite;
}

inline void store_suite(const TestSuite& suite, const std::filesystem::path& path) {
  write_text_file(path, dump_suite(suite));
}

}  // namespace sdcsel
