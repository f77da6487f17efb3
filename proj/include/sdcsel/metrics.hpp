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
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sdcsel/geometry.hpp"
#include "sdcsel/model.hpp"

// Per-suite scores of one tool's selection. Decisions may arrive in any order;
// every sum runs in eval-split order so results are bit-identical regardless.

namespace sdcsel::metrics {

struct PhaseTimings {
  double time_to_initialize = 0.0;  // s, monotonic clock
  double time_to_select_tests = 0.0;
};

struct MetricOptions {
  // When > 0 roads are re-sampled at this arc-length step before profiling.
  double resample_step = 0.0;
};

namespace detail {

// Cases of `eval` whose decision is selected=true, in eval order.
inline std::vector<const LabeledCase*> selected_cases(std::span<const SelectionDecision> decisions,
                                                      const TestSuite& eval) {
  std::unordered_map<std::string_view, bool> chosen;
  chosen.reserve(decisions.size());
  for (const auto& d : decisions) chosen.emplace(d.test_id, d.selected);
  std::vector<const LabeledCase*> out;
  for (const auto& lc : eval.cases) {
    auto it = chosen.find(lc.test_case.test_id);
    if (it != chosen.end() && it->second) out.push_back(&lc);
  }
  return out;
}

}  // namespace detail

inline long long selection_count(std::span<const SelectionDecision> decisions) {
  long long n = 0;
  for (const auto& d : decisions) n += d.selected ? 1 : 0;
  return n;
}

// Simulation time spent on the selection per fault it reveals; lower is better.
inline MetricValue time_to_fault_ratio(std::span<const SelectionDecision> decisions, const TestSuite& eval) {
  double sim_time = 0.0;
  long long faults = 0;
  for (const auto* lc : detail::selected_cases(decisions, eval)) {
    sim_time += lc->oracle.sim_time_sec;
    faults += lc->is_fault() ? 1 : 0;
  }
  if (faults == 0) return std::nullopt;
  return sim_time / static_cast<double>(faults);
}

// Precision of the selection.
inline MetricValue fault_to_selection_ratio(std::span<const SelectionDecision> decisions, const TestSuite& eval) {
  const auto selected = detail::selected_cases(decisions, eval);
  if (selected.empty()) return std::nullopt;
  long long faults = 0;
  for (const auto* lc : selected) faults += lc->is_fault() ? 1 : 0;
  return static_cast<double>(faults) / static_cast<double>(selected.size());
}

inline double road_mean_abs_curvature(std::span<const Point2> road, const MetricOptions& opts = {}) {
  if (opts.resample_step > 0.0) {
    const Road resampled = geometry::resample_uniform(road, opts.resample_step);
    return resampled.size() < 3 ? 0.0 : geometry::curvature_profile(resampled).mean_abs_kappa;
  }
  return road.size() < 3 ? 0.0 : geometry::curvature_profile(road).mean_abs_kappa;
}

struct Diversity {
  MetricValue mean;  // headline column
  MetricValue std;   // sample std across selected cases, needs >= 2
};

inline Diversity curvature_diversity(std::span<const SelectionDecision> decisions, const TestSuite& eval,
                                     const MetricOptions& opts = {}) {
  std::vector<double> per_case;
  for (const auto* lc : detail::selected_cases(decisions, eval)) {
    per_case.push_back(road_mean_abs_curvature(lc->test_case.road_points, opts));
  }
  Diversity out;
  if (per_case.empty()) return out;
  double sum = 0.0;
  for (double v : per_case) sum += v;
  const double mean = sum / static_cast<double>(per_case.size());
  out.mean = mean;
  if (per_case.size() >= 2) {
    double ss = 0.0;
    for (double v : per_case) ss += (v - mean) * (v - mean);
    out.std = std::sqrt(ss / static_cast<double>(per_case.size() - 1));
  }
  return out;
}

inline SuiteMetrics compute_suite_metrics(std::span<const SelectionDecision> decisions, const TestSuite& eval,
                                          const PhaseTimings& timings, const std::string& tool_name,
                                          const MetricOptions& opts = {}) {
  SuiteMetrics m;
  m.suite_id = eval.suite_id;
  m.tool_name = tool_name;
  m.selection_cnt = selection_count(decisions);
  m.time_to_initialize = timings.time_to_initialize;
  m.time_to_select_tests = timings.time_to_select_tests;
  m.time_to_fault_ratio = time_to_fault_ratio(decisions, eval);
  m.fault_to_selection_ratio = fault_to_selection_ratio(decisions, eval);
  const auto div = curvature_diversity(decisions, eval, opts);
  m.diversity = div.mean;
  m.diversity_std = div.std;
  return m;
}

}  // namespace sdcsel::metrics
