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

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sdcsel/error.hpp"

namespace sdcsel {

// A point of the planar map frame, in meters.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

using Road = std::vector<Point2>;

struct TestCase {
  std::string test_id;
  Road road_points;

  friend bool operator==(const TestCase&, const TestCase&) = default;
};

// FAIL is a fault.
enum class Outcome { kPass, kFail };

inline std::string_view to_string(Outcome o) { return o == Outcome::kFail ? "FAIL" : "PASS"; }

inline std::optional<Outcome> parse_outcome(std::string_view s) {
  if (s == "PASS") return Outcome::kPass;
  if (s == "FAIL") return Outcome::kFail;
  return std::nullopt;
}

struct OracleRecord {
  std::string test_id;
  Outcome outcome = Outcome::kPass;
  double sim_time_sec = 0.0;

  friend bool operator==(const OracleRecord&, const OracleRecord&) = default;
};

struct LabeledCase {
  TestCase test_case;
  OracleRecord oracle;

  bool is_fault() const { return oracle.outcome == Outcome::kFail; }

  friend bool operator==(const LabeledCase&, const LabeledCase&) = default;
};

inline constexpr std::size_t kMinSuiteSize = 5;

struct TestSuite {
  std::string suite_id;
  std::vector<LabeledCase> cases;

  std::size_t size() const { return cases.size(); }

  friend bool operator==(const TestSuite&, const TestSuite&) = default;
};

struct SelectionDecision {
  std::string test_id;
  bool selected = false;

  friend bool operator==(const SelectionDecision&, const SelectionDecision&) = default;
};

// An undefined metric value. Empty optionals are never folded into numbers.
using MetricValue = std::optional<double>;

struct SuiteMetrics {
  std::string suite_id;
  std::string tool_name;
  long long selection_cnt = 0;
  double time_to_initialize = 0.0;
  double time_to_select_tests = 0.0;
  MetricValue time_to_fault_ratio;
  MetricValue fault_to_selection_ratio;
  MetricValue diversity;
  // Spread of the selected cases' mean |kappa|; detail report only.
  MetricValue diversity_std;

  friend bool operator==(const SuiteMetrics&, const SuiteMetrics&) = default;
};

struct Violation {
  std::string test_id;  // empty for suite-level violations
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

using ValidationReport = std::vector<Violation>;

inline std::string describe(const ValidationReport& report) {
  std::string out;
  for (const auto& v : report) {
    if (!out.empty()) out += "; ";
    out += v.test_id.empty() ? v.message : v.test_id + ": " + v.message;
  }
  return out;
}

class ValidationError : public Error {
 public:
  explicit ValidationError(ValidationReport report)
      : Error("invalid suite: " + describe(report)), report_(std::move(report)) {}

  const ValidationReport& report() const noexcept { return report_; }

 private:
  ValidationReport report_;
};

inline bool is_finite(const Point2& p) { return std::isfinite(p.x) && std::isfinite(p.y); }

// Every violated invariant of a single test case, in a stable order.
inline void validate_case(const LabeledCase& lc, ValidationReport& out) {
  const auto& tc = lc.test_case;
  const std::string& id = tc.test_id;
  if (id.empty()) out.push_back({id, "empty test_id"});
  if (lc.oracle.test_id != id) {
    out.push_back({id, "oracle test_id '" + lc.oracle.test_id + "' does not match"});
  }
  if (tc.road_points.size() < 2) {
    out.push_back({id, "road has " + std::to_string(tc.road_points.size()) + " points, need >= 2"});
  }
  for (std::size_t i = 0; i < tc.road_points.size(); ++i) {
    if (!is_finite(tc.road_points[i])) {
      out.push_back({id, "non-finite coordinate at point " + std::to_string(i)});
    }
    if (i > 0 && tc.road_points[i] == tc.road_points[i - 1]) {
      out.push_back({id, "consecutive duplicate point at index " + std::to_string(i)});
    }
  }
  const double t = lc.oracle.sim_time_sec;
  if (!std::isfinite(t) || t < 0.0) {
    out.push_back({id, "sim_time_sec must be finite and >= 0"});
  }
}

inline ValidationReport validate_suite(const TestSuite& suite) {
  ValidationReport report;
  if (suite.suite_id.empty()) report.push_back({"", "empty suite_id"});
  if (suite.cases.size() < kMinSuiteSize) {
    report.push_back(
        {"", "suite has " + std::to_string(suite.cases.size()) + " cases, need >= " + std::to_string(kMinSuiteSize)});
  }
  std::unordered_map<std::string_view, std::size_t> seen;
  for (std::size_t i = 0; i < suite.cases.size(); ++i) {
    const auto& lc = suite.cases[i];
    validate_case(lc, report);
    const auto& id = lc.test_case.test_id;
    if (id.empty()) continue;
    auto [it, inserted] = seen.emplace(id, i);
    if (!inserted) {
      report.push_back({id, "duplicate test_id (first at index " + std::to_string(it->second) + ")"});
    }
  }
  return report;
}

inline long long count_faults(const TestSuite& suite) {
  long long n = 0;
  for (const auto& lc : suite.cases) n += lc.is_fault() ? 1 : 0;
  return n;
}

}  // namespace sdcsel
