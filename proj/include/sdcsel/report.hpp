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
#include <cstdio>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdcsel/error.hpp"
#include "sdcsel/evaluator.hpp"
#include "sdcsel/io.hpp"
#include "sdcsel/stats.hpp"
#include "sdcsel/suite_io.hpp"

// Run artifacts. Wall-clock measurements only ever appear under "timings"
// and "wallclock" keys of run.json and in the two time_* columns of the
// tables; everything else is a pure function of suites, tools and seeds.

namespace sdcsel::report {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kProtocolVersion = "sdcsel.wire.pb/1";

inline constexpr const char* kDetailFile = "detail.csv";
inline constexpr const char* kAggregateFile = "aggregate.csv";
inline constexpr const char* kSummaryFile = "summary.txt";
inline constexpr const char* kRunFile = "run.json";
inline constexpr const char* kConfigFile = "config.json";

using stats::Metric;

inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string fixed6(const MetricValue& v) { return v ? fixed6(*v) : std::string(); }

inline nlohmann::ordered_json optional_json(const MetricValue& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline MetricValue optional_from_json(const nlohmann::json& j, const std::string& where) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_number()) throw SchemaError(where, "expected a number or null");
  return j.get<double>();
}

// --- run document --------------------------------------------------------

inline nlohmann::ordered_json summary_json(const stats::Summary& s) {
  return {{"max", optional_json(s.max)},
          {"mean", optional_json(s.mean)},
          {"std", optional_json(s.std)},
          {"min", optional_json(s.min)},
          {"count", s.count},
          {"missing", s.missing}};
}

inline nlohmann::ordered_json row_json(const evaluator::RowResult& r) {
  const auto& m = r.metrics;
  nlohmann::ordered_json j{
      {"tool", m.tool_name},
      {"suite", m.suite_id},
      {"reported_name", r.reported_name},
      {"status", r.failed() ? "failed" : "ok"},
      {"failure_kind", r.failure ? nlohmann::ordered_json(std::string(protocol::to_string(*r.failure)))
                                 : nlohmann::ordered_json(nullptr)},
      {"failure_reason", r.failure_reason},
      {"metrics",
       {{"selection_cnt", m.selection_cnt},
        {"time_to_fault_ration", optional_json(m.time_to_fault_ratio)},
        {"fault_to_selection_ration", optional_json(m.fault_to_selection_ratio)},
        {"diversity", optional_json(m.diversity)},
        {"diversity_std", optional_json(m.diversity_std)}}},
      {"timings", {{"time_to_initialize", m.time_to_initialize}, {"time_to_select_tests", m.time_to_select_tests}}}};
  if (r.transcript) {
    const auto& t = *r.transcript;
    nlohmann::ordered_json decisions = nlohmann::ordered_json::array();
    for (const auto& d : t.decisions) decisions.push_back({d.test_id, d.selected});
    j["transcript"] = {{"reported_name", t.reported_name},
                       {"init_ids", t.init_ids},
                       {"select_ids", t.select_ids},
                       {"ack_detail", t.ack_detail},
                       {"decisions", std::move(decisions)}};
  }
  return j;
}

inline nlohmann::ordered_json aggregate_json(const evaluator::ToolOutcome& t) {
  nlohmann::ordered_json j{{"tool", t.tool_name},
                           {"reported_name", t.reported_name},
                           {"n_suites", t.stats ? t.stats->n_suites : 0},
                           {"failed_rows", t.failed_rows}};
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
  nlohmann::ordered_json timings = nlohmann::ordered_json::object();
  for (Metric m : stats::kMetrics) {
    auto& target = stats::is_timing(m) ? timings : metrics;
    target[std::string(stats::column_name(m))] =
        t.stats ? summary_json((*t.stats)[m]) : nlohmann::ordered_json(nullptr);
  }
  j["metrics"] = std::move(metrics);
  j["timings"] = std::move(timings);
  return j;
}

inline nlohmann::ordered_json run_json(const evaluator::EvaluationRun& run) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : run.rows) rows.push_back(row_json(r));
  nlohmann::ordered_json aggregates = nlohmann::ordered_json::array();
  for (const auto& t : run.tools) aggregates.push_back(aggregate_json(t));
  return {{"run_id", run.run_id},
          {"versions", {{"sdcsel", kVersion}, {"protocol", kProtocolVersion}}},
          {"config", run.config_snapshot},
          {"rows", std::move(rows)},
          {"aggregates", std::move(aggregates)},
          {"wallclock", {{"started_at", run.started_at}}}};
}

namespace detail {

inline stats::Summary summary_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where, "expected an object");
  stats::Summary s;
  s.max = optional_from_json(sdcsel::detail::require(j, "max", where), where + ".max");
  s.mean = optional_from_json(sdcsel::detail::require(j, "mean", where), where + ".mean");
  s.std = optional_from_json(sdcsel::detail::require(j, "std", where), where + ".std");
  s.min = optional_from_json(sdcsel::detail::require(j, "min", where), where + ".min");
  s.count = static_cast<std::size_t>(sdcsel::detail::require_number(j, "count", where));
  s.missing = static_cast<std::size_t>(sdcsel::detail::require_number(j, "missing", where));
  return s;
}

}  // namespace detail

// Rebuilds the run from run.json; transcripts are not restored.
inline evaluator::EvaluationRun parse_run(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed run document at byte ") + std::to_string(e.byte) + ": " + e.what());
  }
  using sdcsel::detail::require;
  using sdcsel::detail::require_number;
  using sdcsel::detail::require_string;

  evaluator::EvaluationRun run;
  run.run_id = require_string(j, "run_id", "");
  run.config_snapshot = nlohmann::ordered_json::parse(require(j, "config", "").dump());
  const auto& wallclock = require(j, "wallclock", "");
  run.started_at = require_string(wallclock, "started_at", "wallclock");

  const auto& rows = require(j, "rows", "");
  if (!rows.is_array()) throw SchemaError("rows", "expected an array");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string where = "rows[" + std::to_string(i) + "]";
    const auto& rj = rows[i];
    evaluator::RowResult r;
    r.metrics.tool_name = require_string(rj, "tool", where);
    r.metrics.suite_id = require_string(rj, "suite", where);
    r.reported_name = require_string(rj, "reported_name", where);
    r.failure_reason = require_string(rj, "failure_reason", where);
    const auto& mj = require(rj, "metrics", where);
    const std::string mw = where + ".metrics";
    r.metrics.selection_cnt = static_cast<long long>(require_number(mj, "selection_cnt", mw));
    r.metrics.time_to_fault_ratio = optional_from_json(require(mj, "time_to_fault_ration", mw), mw);
    r.metrics.fault_to_selection_ratio = optional_from_json(require(mj, "fault_to_selection_ration", mw), mw);
    r.metrics.diversity = optional_from_json(require(mj, "diversity", mw), mw);
    r.metrics.diversity_std = optional_from_json(require(mj, "diversity_std", mw), mw);
    const auto& tj = require(rj, "timings", where);
    r.metrics.time_to_initialize = require_number(tj, "time_to_initialize", where + ".timings");
    r.metrics.time_to_select_tests = require_number(tj, "time_to_select_tests", where + ".timings");
    run.rows.push_back(std::move(r));
  }

  const auto& aggs = require(j, "aggregates", "");
  if (!aggs.is_array()) throw SchemaError("aggregates", "expected an array");
  for (std::size_t i = 0; i < aggs.size(); ++i) {
    const std::string where = "aggregates[" + std::to_string(i) + "]";
    const auto& aj = aggs[i];
    evaluator::ToolOutcome t;
    t.tool_name = require_string(aj, "tool", where);
    t.reported_name = require_string(aj, "reported_name", where);
    t.failed_rows = static_cast<std::size_t>(require_number(aj, "failed_rows", where));
    const auto& mj = require(aj, "metrics", where);
    const auto& tj = require(aj, "timings", where);
    if (!mj.at(std::string(stats::column_name(Metric::kSelectionCnt))).is_null()) {
      stats::AggregateStats s;
      s.tool_name = t.tool_name;
      s.n_suites = static_cast<std::size_t>(require_number(aj, "n_suites", where));
      for (std::size_t k = 0; k < stats::kMetrics.size(); ++k) {
        const Metric m = stats::kMetrics[k];
        const std::string col(stats::column_name(m));
        const auto& block = stats::is_timing(m) ? tj : mj;
        s.per_metric[k] = detail::summary_from_json(require(block, col.c_str(), where), where + "." + col);
      }
      t.stats = s;
    }
    run.tools.push_back(std::move(t));
  }
  return run;
}

inline evaluator::EvaluationRun load_run(const std::filesystem::path& path) { return parse_run(read_text_file(path)); }

// --- tables ---------------------------------------------------------------

inline constexpr const char* kStatNames[] = {"max", "mean", "std", "min"};

inline const MetricValue& stat_of(const stats::Summary& s, int which) {
  switch (which) {
    case 0:
      return s.max;
    case 1:
      return s.mean;
    case 2:
      return s.std;
    default:
      return s.min;
  }
}

// Aggregate table laid out like the competition's results table: one block
// per tool, statistic rows max, mean, std, min.
inline std::string render_aggregate_text(std::span<const evaluator::ToolOutcome> tools) {
  std::size_t n = 0;
  for (const auto& t : tools) {
    if (t.stats) n = std::max(n, t.stats->n_suites + t.failed_rows);
  }
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"tool", "statistic"};
  for (Metric m : stats::kMetrics) header.emplace_back(stats::column_name(m));
  cells.push_back(header);
  std::vector<std::string> notes;
  for (const auto& t : tools) {
    if (!t.stats) {
      std::vector<std::string> line{t.tool_name, "failed"};
      line.resize(header.size(), "");
      cells.push_back(line);
      notes.push_back(t.tool_name + ": every session failed (" + std::to_string(t.failed_rows) + " rows)");
      continue;
    }
    for (int k = 0; k < 4; ++k) {
      std::vector<std::string> line{k == 0 ? t.tool_name : "", kStatNames[k]};
      for (Metric m : stats::kMetrics) {
        const auto& v = stat_of((*t.stats)[m], k);
        line.push_back(v ? fixed6(*v) : "MISSING");
      }
      cells.push_back(line);
    }
    std::string missing;
    for (Metric m : stats::kMetrics) {
      const auto& s = (*t.stats)[m];
      if (s.missing > 0) {
        missing += (missing.empty() ? "" : ", ") + std::string(stats::column_name(m)) + "=" + std::to_string(s.missing);
      }
    }
    if (!missing.empty()) notes.push_back(t.tool_name + ": MISSING values excluded: " + missing);
    if (t.failed_rows > 0)
      notes.push_back(t.tool_name + ": failed sessions excluded: " + std::to_string(t.failed_rows));
  }

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  }
  std::string out = "Performance metrics statistics (N=" + std::to_string(n) + ")\n";
  for (std::size_t r = 0; r < cells.size(); ++r) {
    std::string line;
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      const auto& cell = cells[r][c];
      const std::string pad(width[c] - cell.size(), ' ');
      line += c < 2 ? cell + pad : pad + cell;  // labels left, numbers right
      if (c + 1 < cells[r].size()) line += "  ";
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  for (const auto& note : notes) out += "# " + note + "\n";
  return out;
}

inline std::string render_aggregate_csv(std::span<const evaluator::ToolOutcome> tools) {
  std::string out = "tool,statistic";
  for (Metric m : stats::kMetrics) out += "," + std::string(stats::column_name(m));
  out += "\n";
  for (const auto& t : tools) {
    if (!t.stats) continue;
    for (int k = 0; k < 4; ++k) {
      out += t.tool_name + "," + kStatNames[k];
      for (Metric m : stats::kMetrics) out += "," + fixed6(stat_of((*t.stats)[m], k));
      out += "\n";
    }
  }
  return out;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string render_detail_csv(std::span<const evaluator::RowResult> rows) {
  std::string out = "tool,suite";
  for (Metric m : stats::kMetrics) out += "," + std::string(stats::column_name(m));
  out += ",diversity_std,failure_reason\n";
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out += csv_escape(m.tool_name) + "," + csv_escape(m.suite_id);
    if (r.failed()) {
      out += ",,,,,,,";
    } else {
      out += "," + std::to_string(m.selection_cnt) + "," + fixed6(m.time_to_initialize) + "," +
             fixed6(m.time_to_select_tests) + "," + fixed6(m.time_to_fault_ratio) + "," +
             fixed6(m.fault_to_selection_ratio) + "," + fixed6(m.diversity) + "," + fixed6(m.diversity_std);
    }
    out += "," + csv_escape(r.failure_reason) + "\n";
  }
  return out;
}

// Writes detail.csv, aggregate.csv, summary.txt, run.json and config.json.
inline void persist_run(const evaluator::EvaluationRun& run, const std::filesystem::path& out_dir) {
  write_text_file(out_dir / kDetailFile, render_detail_csv(run.rows));
  write_text_file(out_dir / kAggregateFile, render_aggregate_csv(run.tools));
  write_text_file(out_dir / kSummaryFile, render_aggregate_text(run.tools));
  write_text_file(out_dir / kRunFile, run_json(run).dump(2) + "\n");
  write_text_file(out_dir / kConfigFile, run.config_snapshot.dump(2) + "\n");
}

}  // namespace sdcsel::report
