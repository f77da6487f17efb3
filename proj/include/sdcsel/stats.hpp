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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdcsel/error.hpp"
#include "sdcsel/model.hpp"

namespace sdcsel::stats {

// Summary columns, in report order. The two "ration" spellings match the
// competition's result column names.
enum class Metric {
  kSelectionCnt,
  kTimeToInitialize,
  kTimeToSelectTests,
  kTimeToFaultRatio,
  kFaultToSelectionRatio,
  kDiversity,
};

inline constexpr std::array<Metric, 6> kMetrics{Metric::kSelectionCnt,          Metric::kTimeToInitialize,
                                                Metric::kTimeToSelectTests,     Metric::kTimeToFaultRatio,
                                                Metric::kFaultToSelectionRatio, Metric::kDiversity};

inline constexpr std::string_view column_name(Metric m) {
  switch (m) {
    case Metric::kSelectionCnt:
      return "selection_cnt";
    case Metric::kTimeToInitialize:
      return "time_to_initialize";
    case Metric::kTimeToSelectTests:
      return "time_to_select_tests";
    case Metric::kTimeToFaultRatio:
      return "time_to_fault_ration";
    case Metric::kFaultToSelectionRatio:
      return "fault_to_selection_ration";
    case Metric::kDiversity:
      return "diversity";
  }
  return "";
}

inline constexpr bool is_timing(Metric m) { return m == Metric::kTimeToInitialize || m == Metric::kTimeToSelectTests; }

inline MetricValue metric_value(const SuiteMetrics& row, Metric m) {
  switch (m) {
    case Metric::kSelectionCnt:
      return static_cast<double>(row.selection_cnt);
    case Metric::kTimeToInitialize:
      return row.time_to_initialize;
    case Metric::kTimeToSelectTests:
      return row.time_to_select_tests;
    case Metric::kTimeToFaultRatio:
      return row.time_to_fault_ratio;
    case Metric::kFaultToSelectionRatio:
      return row.fault_to_selection_ratio;
    case Metric::kDiversity:
      return row.diversity;
  }
  return std::nullopt;
}

// max / mean / std / min over the defined values of one metric.
struct Summary {
  MetricValue max;
  MetricValue mean;
  MetricValue std;  // sample (n - 1); undefined for fewer than two values
  MetricValue min;
  std::size_t count = 0;
  std::size_t missing = 0;

  friend bool operator==(const Summary&, const Summary&) = default;
};

inline Summary summarize(std::span<const MetricValue> values) {
  Summary s;
  double sum = 0.0;
  for (const auto& v : values) {
    if (!v) {
      ++s.missing;
      continue;
    }
    ++s.count;
    sum += *v;
    s.max = s.max ? std::max(*s.max, *v) : *v;
    s.min = s.min ? std::min(*s.min, *v) : *v;
  }
  if (s.count == 0) return s;
  const double mean = sum / static_cast<double>(s.count);
  // Rounding can nudge the mean just outside [min, max] for near-constant data.
  s.mean = std::clamp(mean, *s.min, *s.max);
  if (s.count >= 2) {
    double ss = 0.0;
    for (const auto& v : values) {
      if (v) ss += (*v - mean) * (*v - mean);
    }
    s.std = std::sqrt(ss / static_cast<double>(s.count - 1));
  }
  return s;
}

struct AggregateStats {
  std::string tool_name;
  std::size_t n_suites = 0;  // rows aggregated
  std::array<Summary, kMetrics.size()> per_metric{};

  const Summary& operator[](Metric m) const { return per_metric[static_cast<std::size_t>(m)]; }

  friend bool operator==(const AggregateStats&, const AggregateStats&) = default;
};

inline AggregateStats aggregate(const std::string& tool_name, std::span<const SuiteMetrics> rows) {
  if (rows.empty()) throw NoData("no successful rows to aggregate for tool '" + tool_name + "'");
  AggregateStats agg;
  agg.tool_name = tool_name;
  agg.n_suites = rows.size();
  std::vector<MetricValue> column(rows.size());
  for (std::size_t k = 0; k < kMetrics.size(); ++k) {
    for (std::size_t r = 0; r < rows.size(); ++r) column[r] = metric_value(rows[r], kMetrics[k]);
    agg.per_metric[k] = summarize(column);
  }
  return agg;
}

}  // namespace sdcsel::stats
