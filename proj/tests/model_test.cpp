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

#include "sdcsel/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "support/fixtures.hpp"

namespace sdcsel {
namespace {

using testing::labeled;

TestSuite ten_case_suite() { return testing::load_fixture("small_10.json"); }

TEST(ValidateSuite, WellFormedSuiteHasNoViolations) { EXPECT_TRUE(validate_suite(ten_case_suite()).empty()); }

TEST(ValidateSuite, DuplicateIdIsReportedByName) {
  auto suite = ten_case_suite();
  suite.cases[5].test_case.test_id = "t3";
  suite.cases[5].oracle.test_id = "t3";
  const auto report = validate_suite(suite);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0].test_id, "t3");
  EXPECT_NE(report[0].message.find("duplicate"), std::string::npos);
}

TEST(ValidateSuite, NegativeSimTimeNamesTheRecord) {
  auto suite = ten_case_suite();
  suite.cases[4].oracle.sim_time_sec = -1.0;
  const auto report = validate_suite(suite);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0].test_id, "t4");
}

TEST(ValidateSuite, CatchesEachCaseInvariant) {
  auto suite = ten_case_suite();
  suite.cases[0].test_case.road_points.push_back(suite.cases[0].test_case.road_points.back());
  suite.cases[1].test_case.road_points[1].x = std::numeric_limits<double>::infinity();
  suite.cases[2].oracle.test_id = "other";
  suite.cases[3].test_case.road_points.resize(1);
  suite.cases[4].oracle.sim_time_sec = std::nan("");
  const auto report = validate_suite(suite);
  ASSERT_EQ(report.size(), 5u);
  EXPECT_EQ(report[0].test_id, "t0");
  EXPECT_EQ(report[1].test_id, "t1");
  EXPECT_EQ(report[2].test_id, "t2");
  EXPECT_EQ(report[3].test_id, "t3");
  EXPECT_EQ(report[4].test_id, "t4");
}

TEST(ValidateSuite, TooSmallToSplit) {
  auto suite = ten_case_suite();
  suite.cases.resize(4);
  const auto report = validate_suite(suite);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_TRUE(report[0].test_id.empty());
}

TEST(ValidateSuite, EmptyIdsAndSuiteName) {
  TestSuite suite;
  for (int i = 0; i < 5; ++i) {
    suite.cases.push_back(labeled(i == 2 ? "" : "c" + std::to_string(i), {{0, 0}, {1, 0}}, Outcome::kPass, 1));
  }
  const auto report = validate_suite(suite);
  ASSERT_EQ(report.size(), 2u);
  EXPECT_EQ(report[0].message, "empty suite_id");
  EXPECT_EQ(report[1].message, "empty test_id");
}

TEST(Outcome, RoundTripsThroughText) {
  EXPECT_EQ(parse_outcome(to_string(Outcome::kPass)), Outcome::kPass);
  EXPECT_EQ(parse_outcome(to_string(Outcome::kFail)), Outcome::kFail);
  EXPECT_EQ(parse_outcome("MAYBE"), std::nullopt);
}

TEST(CountFaults, CountsFailLabels) { EXPECT_EQ(count_faults(ten_case_suite()), 4); }

}  // namespace
}  // namespace sdcsel
