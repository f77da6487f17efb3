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

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <functional>
#include <future>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sdcsel/dataset.hpp"
#include "sdcsel/error.hpp"
#include "sdcsel/metrics.hpp"
#include "sdcsel/model.hpp"
#include "sdcsel/process.hpp"
#include "sdcsel/protocol.hpp"
#include "sdcsel/stats.hpp"
#include "sdcsel/wire/client.hpp"

namespace sdcsel::evaluator {

using Clock = std::chrono::steady_clock;

// A tool reachable through a fresh ToolClient per session.
struct ToolSpec {
  std::string name;                                                      // distinct within a run; labels the rows
  nlohmann::ordered_json descriptor = nlohmann::ordered_json::object();  // config snapshot entry
  protocol::ToolClientFactory connect;

  // Optional launch: the command is started before the tool's first session
  // and torn down after its last; `readiness_endpoint` is polled with get_name.
  std::optional<std::string> launch_command;
  std::optional<wire::Endpoint> readiness_endpoint;
  std::chrono::milliseconds launch_timeout{30'000};
};

struct EvaluationConfig {
  std::vector<ToolSpec> tools;
  dataset::SplitSpec split;
  protocol::Timeouts timeouts;
  metrics::MetricOptions metric_options;
  bool parallel_tools = false;  // never parallel suites against one tool
  bool keep_transcripts = false;
  nlohmann::ordered_json suites_snapshot = nlohmann::ordered_json::array();

  void validate() const {
    if (tools.empty()) throw InvalidConfig("at least one tool is required");
    std::unordered_set<std::string> names;
    for (const auto& t : tools) {
      if (t.name.empty()) throw InvalidConfig("tool name must not be empty");
      if (!names.insert(t.name).second) throw InvalidConfig("duplicate tool name '" + t.name + "'");
      if (!t.connect) throw InvalidConfig("tool '" + t.name + "' has no connection");
    }
  }
};

struct SessionTranscript {
  std::string reported_name;
  std::vector<std::string> init_ids;
  std::vector<std::string> select_ids;
  std::vector<SelectionDecision> decisions;  // as checked, in case order
  std::string ack_detail;
};

struct RowResult {
  SuiteMetrics metrics;
  std::string reported_name;  // from the handshake
  std::optional<protocol::FailureKind> failure;
  std::string failure_reason;
  std::optional<SessionTranscript> transcript;

  bool failed() const { return !failure_reason.empty(); }
};

inline double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// One session: handshake, initialize with the init split, select over the
// eval split, score. Failures become a failed row; nothing is thrown.
inline RowResult evaluate_tool_on_suite(const std::string& tool_name, const protocol::ToolClientFactory& connect,
                                        const TestSuite& suite, const dataset::SplitSpec& split_spec,
                                        const metrics::MetricOptions& metric_options = {},
                                        bool keep_transcript = false) {
  RowResult row;
  row.metrics.suite_id = suite.suite_id;
  row.metrics.tool_name = tool_name;
  SessionTranscript transcript;
  try {
    const auto split = dataset::split_suite(suite, split_spec);
    const auto init_items = protocol::to_init_items(split.init);
    const auto select_cases = protocol::to_select_cases(split.eval);

    auto client = connect();
    row.reported_name = client->get_name().name;
    transcript.reported_name = row.reported_name;

    metrics::PhaseTimings timings;
    auto t0 = Clock::now();
    const auto ack = client->initialize(init_items);
    timings.time_to_initialize = seconds_since(t0);
    row.metrics.time_to_initialize = timings.time_to_initialize;

    t0 = Clock::now();
    auto decisions = client->select(select_cases);
    timings.time_to_select_tests = seconds_since(t0);

    row.metrics = metrics::compute_suite_metrics(decisions, split.eval, timings, tool_name, metric_options);
    if (keep_transcript) {
      transcript.ack_detail = ack.detail;
      for (const auto& it : init_items) transcript.init_ids.push_back(it.test_case.test_id);
      for (const auto& tc : select_cases) transcript.select_ids.push_back(tc.test_id);
      transcript.decisions = std::move(decisions);
    }
  } catch (const protocol::ProtocolError& e) {
    row.failure = e.kind();
    row.failure_reason = e.what();
  } catch (const std::exception& e) {
    row.failure_reason = std::string("Error: ") + e.what();
  }
  if (keep_transcript) row.transcript = std::move(transcript);
  return row;
}

struct ToolOutcome {
  std::string tool_name;
  std::string reported_name;
  std::optional<stats::AggregateStats> stats;  // empty when every row failed
  std::size_t failed_rows = 0;
};

struct EvaluationRun {
  std::string run_id;
  std::string started_at;  // wall clock, ISO-8601 UTC
  nlohmann::ordered_json config_snapshot;
  std::vector<RowResult> rows;  // tool-major, config order
  std::vector<ToolOutcome> tools;

  bool any_tool_fully_failed() const {
    for (const auto& t : tools) {
      if (!t.stats) return true;
    }
    return false;
  }
};

inline nlohmann::ordered_json snapshot(const EvaluationConfig& cfg) {
  nlohmann::ordered_json tools = nlohmann::ordered_json::array();
  for (const auto& t : cfg.tools) {
    nlohmann::ordered_json d = t.descriptor;
    d["name"] = t.name;
    if (t.launch_command) d["launch"] = *t.launch_command;
    tools.push_back(std::move(d));
  }
  nlohmann::ordered_json split{{"init_fraction", cfg.split.init_fraction}, {"shuffle_seed", nullptr}};
  if (cfg.split.shuffle_seed) split["shuffle_seed"] = *cfg.split.shuffle_seed;
  return {{"suites", cfg.suites_snapshot},
          {"tools", std::move(tools)},
          {"split", std::move(split)},
          {"timeouts_ms",
           {{"connect", cfg.timeouts.connect.count()},
            {"initialize", cfg.timeouts.initialize.count()},
            {"select", cfg.timeouts.select.count()}}},
          {"resample_step", cfg.metric_options.resample_step},
          {"parallel_tools", cfg.parallel_tools}};
}

inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string utc_now_iso8601() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  ::gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace detail {

// Polls get_name until the launched tool answers or the budget runs out.
inline void wait_until_ready(const ToolSpec& tool, ChildProcess& child) {
  const auto deadline = Clock::now() + tool.launch_timeout;
  std::string last = "no attempt";
  while (Clock::now() < deadline) {
    if (!child.running()) {
      throw protocol::ProtocolError(protocol::FailureKind::kUnreachable, "launch command exited early");
    }
    try {
      protocol::Timeouts probe_timeouts;
      probe_timeouts.connect = std::chrono::milliseconds(500);
      wire::RemoteClient probe(*tool.readiness_endpoint, probe_timeouts);
      probe.get_name();
      return;
    } catch (const protocol::ProtocolError& e) {
      last = e.what();
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  throw protocol::ProtocolError(protocol::FailureKind::kUnreachable, "launched tool never became ready: " + last);
}

inline std::vector<RowResult> run_tool(const ToolSpec& tool, std::span<const TestSuite> suites,
                                       const EvaluationConfig& cfg) {
  std::vector<RowResult> rows;
  rows.reserve(suites.size());
  std::optional<ChildProcess> child;
  std::string launch_failure;
  std::optional<protocol::FailureKind> launch_kind;
  if (tool.launch_command) {
    try {
      child.emplace(*tool.launch_command, false);
      if (tool.readiness_endpoint) wait_until_ready(tool, *child);
    } catch (const protocol::ProtocolError& e) {
      launch_kind = e.kind();
      launch_failure = e.what();
    } catch (const std::exception& e) {
      launch_kind = protocol::FailureKind::kUnreachable;
      launch_failure = std::string("Unreachable: ") + e.what();
    }
  }
  for (const auto& suite : suites) {
    if (launch_kind) {
      RowResult row;
      row.metrics.suite_id = suite.suite_id;
      row.metrics.tool_name = tool.name;
      row.failure = launch_kind;
      row.failure_reason = launch_failure;
      rows.push_back(std::move(row));
      continue;
    }
    rows.push_back(
        evaluate_tool_on_suite(tool.name, tool.connect, suite, cfg.split, cfg.metric_options, cfg.keep_transcripts));
  }
  if (child) child->terminate();
  return rows;
}

}  // namespace detail

inline ToolOutcome summarize_tool(const std::string& tool_name, std::span<const RowResult> rows) {
  ToolOutcome out;
  out.tool_name = tool_name;
  std::vector<SuiteMetrics> ok;
  for (const auto& r : rows) {
    if (r.metrics.tool_name != tool_name) continue;
    if (r.failed()) {
      ++out.failed_rows;
    } else {
      ok.push_back(r.metrics);
      if (out.reported_name.empty()) out.reported_name = r.reported_name;
    }
  }
  if (!ok.empty()) out.stats = stats::aggregate(tool_name, ok);
  return out;
}

inline EvaluationRun run_evaluation(const EvaluationConfig& cfg, std::span<const TestSuite> suites) {
  cfg.validate();
  if (suites.empty()) throw InvalidConfig("at least one suite is required");

  EvaluationRun run;
  run.config_snapshot = snapshot(cfg);
  run.run_id = fnv1a_hex(run.config_snapshot.dump());
  run.started_at = utc_now_iso8601();

  std::vector<std::vector<RowResult>> per_tool(cfg.tools.size());
  if (cfg.parallel_tools && cfg.tools.size() > 1) {
    std::vector<std::future<std::vector<RowResult>>> jobs;
    for (const auto& tool : cfg.tools) {
      jobs.push_back(
          std::async(std::launch::async, [&tool, suites, &cfg] { return detail::run_tool(tool, suites, cfg); }));
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) per_tool[i] = jobs[i].get();
  } else {
    for (std::size_t i = 0; i < cfg.tools.size(); ++i) per_tool[i] = detail::run_tool(cfg.tools[i], suites, cfg);
  }

  for (std::size_t i = 0; i < cfg.tools.size(); ++i) {
    auto outcome = summarize_tool(cfg.tools[i].name, per_tool[i]);
    for (auto& r : per_tool[i]) run.rows.push_back(std::move(r));
    run.tools.push_back(std::move(outcome));
  }
  return run;
}

// Tool factories --------------------------------------------------------------

inline protocol::ToolClientFactory in_process_tool(protocol::SelectorFactory make_selector,
                                                   protocol::Timeouts timeouts = {},
                                                   protocol::ReplyMode mode = protocol::ReplyMode::kStrict) {
  return [make_selector = std::move(make_selector), timeouts, mode]() -> std::unique_ptr<protocol::ToolClient> {
    return std::make_unique<protocol::InProcessClient>(make_selector(), timeouts, mode);
  };
}

inline protocol::ToolClientFactory remote_tool(wire::Endpoint endpoint, protocol::Timeouts timeouts = {},
                                               protocol::ReplyMode mode = protocol::ReplyMode::kStrict) {
  return [endpoint = std::move(endpoint), timeouts, mode]() -> std::unique_ptr<protocol::ToolClient> {
    return std::make_unique<wire::RemoteClient>(endpoint, timeouts, mode);
  };
}

}  // namespace sdcsel::evaluator
