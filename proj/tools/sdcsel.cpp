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

#include <signal.h>

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sdcsel/baselines.hpp"
#include "sdcsel/dataset.hpp"
#include "sdcsel/error.hpp"
#include "sdcsel/evaluator.hpp"
#include "sdcsel/report.hpp"
#include "sdcsel/suite_io.hpp"
#include "sdcsel/wire/server.hpp"

namespace {

using namespace sdcsel;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitToolFailure = 3;

std::chrono::milliseconds seconds_to_ms(double s) {
  if (!(s > 0.0)) throw InvalidConfig("timeouts must be positive");
  return std::chrono::milliseconds(static_cast<long long>(s * 1000.0 + 0.5));
}

// --- generate -----------------------------------------------------------------

struct GenerateArgs {
  dataset::GeneratorConfig cfg;
  std::string out;
  std::optional<double> target_failure_rate;
  unsigned threads = 0;
};

int run_generate(GenerateArgs& a) {
  a.cfg.validate();
  if (a.target_failure_rate) {
    a.cfg.fail_curvature_threshold = dataset::calibrate_fail_threshold(a.cfg, *a.target_failure_rate);
  }
  const auto suites = dataset::generate_suites(a.cfg, a.threads);
  dataset::write_benchmark(a.out, a.cfg, suites);
  std::size_t cases = 0, faults = 0;
  for (const auto& g : suites) {
    cases += g.suite.cases.size();
    faults += count_faults(g.suite);
  }
  std::printf("wrote %zu suites (%zu cases, %zu faults, failure rate %.4f, threshold %.6f) to %s\n", suites.size(),
              cases, faults, static_cast<double>(faults) / static_cast<double>(cases), a.cfg.fail_curvature_threshold,
              a.out.c_str());
  return kExitOk;
}

// --- evaluate -----------------------------------------------------------------

struct EvaluateArgs {
  std::vector<std::string> suites;
  std::vector<std::string> baselines;
  std::vector<std::string> remotes;
  std::vector<std::string> launches;
  std::vector<std::string> lenient;
  bool serve_baselines = false;
  double init_fraction = 0.8;
  std::optional<std::uint64_t> shuffle_seed;
  double connect_timeout = 5.0;
  double init_timeout = 600.0;
  double select_timeout = 300.0;
  bool parallel_tools = false;
  bool transcripts = false;
  double resample_step = 0.0;
  std::string out;
  std::string format = "text";
};

struct BaselineSpec {
  std::string kind;
  std::string name;
  baselines::BaselineOptions options;
};

// KIND[:key=value,...] with keys seed, p, name.
BaselineSpec parse_baseline(const std::string& text) {
  BaselineSpec spec;
  const auto colon = text.find(':');
  spec.kind = text.substr(0, colon);
  if (!baselines::is_baseline(spec.kind)) throw InvalidConfig("unknown baseline '" + spec.kind + "'");
  spec.name = spec.kind == "random"       ? baselines::kRandomName
              : spec.kind == "select-all" ? baselines::kSelectAllName
                                          : baselines::kThresholdName;
  if (colon == std::string::npos) return spec;
  std::string rest = text.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string kv = rest.substr(0, comma);
    rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidConfig("baseline option '" + kv + "' is not key=value");
    const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    try {
      if (key == "seed") {
        spec.options.seed = std::stoull(value);
      } else if (key == "p") {
        spec.options.p_select = std::stod(value);
      } else if (key == "name") {
        spec.name = value;
      } else {
        throw InvalidConfig("unknown baseline option '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw InvalidConfig("bad value for baseline option '" + key + "'");
    }
  }
  return spec;
}

std::pair<std::string, std::string> split_once(const std::string& text, char sep, const char* what) {
  const auto at = text.find(sep);
  if (at == std::string::npos || at == 0 || at + 1 == text.size()) {
    throw InvalidConfig(std::string(what) + " '" + text + "' is malformed");
  }
  return {text.substr(0, at), text.substr(at + 1)};
}

int run_evaluate(const EvaluateArgs& a) {
  // Load and validate everything before contacting any tool.
  std::vector<TestSuite> suites;
  evaluator::EvaluationConfig cfg;
  for (const auto& arg : a.suites) {
    for (const auto& file : dataset::list_suite_files(arg)) {
      suites.push_back(load_suite(file));
      cfg.suites_snapshot.push_back({{"suite_id", suites.back().suite_id},
                                     {"file", file.filename().string()},
                                     {"content_fnv1a", evaluator::fnv1a_hex(read_text_file(file))},
                                     {"cases", suites.back().cases.size()},
                                     {"faults", count_faults(suites.back())}});
    }
  }
  if (suites.empty()) throw InvalidConfig("no suites found");

  cfg.split.init_fraction = a.init_fraction;
  cfg.split.shuffle_seed = a.shuffle_seed;
  cfg.timeouts.connect = seconds_to_ms(a.connect_timeout);
  cfg.timeouts.initialize = seconds_to_ms(a.init_timeout);
  cfg.timeouts.select = seconds_to_ms(a.select_timeout);
  cfg.metric_options.resample_step = a.resample_step;
  if (!(a.resample_step >= 0.0)) throw InvalidConfig("resample step must be >= 0");
  cfg.parallel_tools = a.parallel_tools;
  cfg.keep_transcripts = a.transcripts;

  auto mode_for = [&](const std::string& name) {
    for (const auto& n : a.lenient) {
      if (n == name) return protocol::ReplyMode::kImplicit;
    }
    return protocol::ReplyMode::kStrict;
  };

  std::vector<std::unique_ptr<wire::ToolServer>> servers;
  for (const auto& text : a.baselines) {
    const auto spec = parse_baseline(text);
    auto factory = baselines::baseline_factory(spec.kind, spec.options);
    evaluator::ToolSpec tool;
    tool.name = spec.name;
    tool.descriptor = {{"kind", "baseline"},
                       {"baseline", spec.kind},
                       {"seed", spec.options.seed},
                       {"p_select", spec.options.p_select},
                       {"transport", a.serve_baselines ? "wire" : "in-process"}};
    if (a.serve_baselines) {
      servers.push_back(std::make_unique<wire::ToolServer>(std::move(factory)));
      servers.back()->start();
      tool.connect = evaluator::remote_tool(servers.back()->endpoint(), cfg.timeouts, mode_for(tool.name));
    } else {
      tool.connect = evaluator::in_process_tool(std::move(factory), cfg.timeouts, mode_for(tool.name));
    }
    cfg.tools.push_back(std::move(tool));
  }
  for (const auto& text : a.remotes) {
    const auto [name, where] = split_once(text, '=', "remote tool");
    evaluator::ToolSpec tool;
    tool.name = name;
    tool.descriptor = {{"kind", "remote"}, {"endpoint", where}};
    tool.connect = evaluator::remote_tool(wire::Endpoint::parse(where), cfg.timeouts, mode_for(name));
    cfg.tools.push_back(std::move(tool));
  }
  for (const auto& text : a.launches) {
    const auto [name, rest] = split_once(text, '=', "launched tool");
    const auto [where, command] = split_once(rest, '=', "launched tool");
    evaluator::ToolSpec tool;
    tool.name = name;
    tool.descriptor = {{"kind", "launched"}, {"endpoint", where}};
    const auto endpoint = wire::Endpoint::parse(where);
    tool.connect = evaluator::remote_tool(endpoint, cfg.timeouts, mode_for(name));
    tool.launch_command = command;
    tool.readiness_endpoint = endpoint;
    cfg.tools.push_back(std::move(tool));
  }
  for (const auto& n : a.lenient) {
    bool known = false;
    for (const auto& t : cfg.tools) known = known || t.name == n;
    if (!known) throw InvalidConfig("--lenient names unknown tool '" + n + "'");
  }

  const auto run = evaluator::run_evaluation(cfg, suites);
  for (auto& s : servers) s->stop();

  for (const auto& row : run.rows) {
    if (row.failed()) {
      std::fprintf(stderr, "session failed: %s on %s: %s\n", row.metrics.tool_name.c_str(),
                   row.metrics.suite_id.c_str(), row.failure_reason.c_str());
    }
  }
  if (!a.out.empty()) report::persist_run(run, a.out);
  const std::string table =
      a.format == "csv" ? report::render_aggregate_csv(run.tools) : report::render_aggregate_text(run.tools);
  std::fputs(table.c_str(), stdout);
  return run.any_tool_fully_failed() ? kExitToolFailure : kExitOk;
}

// --- serve-baseline -------------------------------------------------------------

struct ServeArgs {
  std::string kind;
  std::uint64_t seed = 0;
  double p_select = 0.5;
  std::string host = "127.0.0.1";
  int port = 0;
};

int run_serve(const ServeArgs& a) {
  if (a.port < 0 || a.port > 65535) throw InvalidConfig("port must lie in [0, 65535]");
  baselines::BaselineOptions opts{a.seed, a.p_select};
  auto factory = baselines::baseline_factory(a.kind, opts);

  // Block the stop signals before any thread exists so only sigwait sees them.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);
  ::signal(SIGPIPE, SIG_IGN);

  wire::ToolServer server(std::move(factory), a.host, static_cast<std::uint16_t>(a.port));
  server.start();
  std::printf("listening on %s\n", server.endpoint().str().c_str());
  std::fflush(stdout);
  int sig = 0;
  sigwait(&stop_signals, &sig);
  server.stop();
  std::fprintf(stderr, "stopped after %zu sessions\n", server.sessions_served());
  return kExitOk;
}

// --- report / validate ----------------------------------------------------------

int run_report(const std::string& path, const std::string& format) {
  std::filesystem::path file = path;
  if (std::filesystem::is_directory(file)) file /= report::kRunFile;
  const auto run = report::load_run(file);
  std::string out;
  if (format == "csv") {
    out = report::render_aggregate_csv(run.tools);
  } else if (format == "detail") {
    out = report::render_detail_csv(run.rows);
  } else {
    out = report::render_aggregate_text(run.tools);
  }
  std::fputs(out.c_str(), stdout);
  return kExitOk;
}

int run_validate(const std::vector<std::string>& paths) {
  int status = kExitOk;
  for (const auto& arg : paths) {
    for (const auto& file : dataset::list_suite_files(arg)) {
      try {
        const auto suite = load_suite(file);
        std::printf("ok %s: %s, %zu cases, %lld faults\n", file.string().c_str(), suite.suite_id.c_str(),
                    suite.cases.size(), count_faults(suite));
      } catch (const Error& e) {
        std::printf("invalid %s: %s\n", file.string().c_str(), e.what());
        status = kExitData;
      }
    }
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  ::signal(SIGPIPE, SIG_IGN);
  CLI::App app{"Evaluation harness for regression test selection of simulated driving tests"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic benchmark of labelled suites");
  generate->add_option("-o,--out", gen.out, "Output directory")->required();
  generate->add_option("--suites", gen.cfg.n_suites, "Number of suites")->capture_default_str();
  generate->add_option("--cases", gen.cfg.cases_per_suite, "Cases per suite")->capture_default_str();
  generate->add_option("--seed", gen.cfg.seed, "Master seed")->capture_default_str();
  generate->add_option("--prefix", gen.cfg.suite_prefix, "Suite name prefix")->capture_default_str();
  generate->add_option("--min-segments", gen.cfg.min_segments)->capture_default_str();
  generate->add_option("--max-segments", gen.cfg.max_segments)->capture_default_str();
  generate->add_option("--min-amplitude", gen.cfg.min_amplitude, "Min |curvature| per segment, 1/m")
      ->capture_default_str();
  generate->add_option("--max-amplitude", gen.cfg.max_amplitude, "Max |curvature| per segment, 1/m")
      ->capture_default_str();
  generate->add_option("--min-segment-length", gen.cfg.min_segment_length)->capture_default_str();
  generate->add_option("--max-segment-length", gen.cfg.max_segment_length)->capture_default_str();
  generate->add_option("--road-width", gen.cfg.road_width, "Self-intersection clearance, m")->capture_default_str();
  generate->add_option("--fail-threshold", gen.cfg.fail_curvature_threshold, "FAIL iff peak |curvature| exceeds this")
      ->capture_default_str();
  generate->add_option("--target-failure-rate", gen.target_failure_rate,
                       "Calibrate the fail threshold to this expected failure rate");
  generate->add_option("--label-noise", gen.cfg.label_noise, "Probability of flipping a label")->capture_default_str();
  generate->add_option("--sim-base", gen.cfg.sim_base_sec)->capture_default_str();
  generate->add_option("--sim-per-meter", gen.cfg.sim_sec_per_meter)->capture_default_str();
  generate->add_option("--sim-jitter", gen.cfg.sim_jitter_sec)->capture_default_str();
  generate->add_option("--threads", gen.threads, "Worker threads (0 = hardware)")->capture_default_str();

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Run tools over suites and aggregate the metrics");
  evaluate->add_option("--suites", ev.suites, "Suite files or directories")->required();
  evaluate->add_option("--baseline", ev.baselines, "Built-in tool: random|select-all|threshold[:seed=N,p=X,name=S]");
  evaluate->add_option("--remote", ev.remotes, "Running tool server: NAME=HOST:PORT");
  evaluate->add_option("--launch", ev.launches, "Tool started for the run: NAME=HOST:PORT=COMMAND");
  evaluate->add_option("--lenient", ev.lenient, "Accept selected-ids-only replies from this tool");
  evaluate->add_flag("--serve-baselines", ev.serve_baselines, "Run built-in tools behind loopback servers");
  evaluate->add_option("--init-fraction", ev.init_fraction, "Share of each suite used for initialization")
      ->capture_default_str();
  evaluate->add_option("--shuffle-seed", ev.shuffle_seed, "Shuffle before splitting");
  evaluate->add_option("--connect-timeout", ev.connect_timeout, "Seconds")
      ->envname("SDCSEL_CONNECT_TIMEOUT")
      ->capture_default_str();
  evaluate->add_option("--init-timeout", ev.init_timeout, "Seconds")
      ->envname("SDCSEL_INIT_TIMEOUT")
      ->capture_default_str();
  evaluate->add_option("--select-timeout", ev.select_timeout, "Seconds")
      ->envname("SDCSEL_SELECT_TIMEOUT")
      ->capture_default_str();
  evaluate->add_flag("--parallel-tools", ev.parallel_tools, "Evaluate different tools concurrently");
  evaluate->add_flag("--transcripts", ev.transcripts, "Store session transcripts in run.json");
  evaluate->add_option("--resample-step", ev.resample_step, "Resample roads before diversity, m (0 = off)")
      ->capture_default_str();
  evaluate->add_option("-o,--out", ev.out, "Write run artifacts to this directory");
  evaluate->add_option("--format", ev.format, "Printed table format")
      ->check(CLI::IsMember({"text", "csv"}))
      ->capture_default_str();

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve-baseline", "Serve a built-in tool over TCP until interrupted");
  serve->add_option("kind", sv.kind, "random|select-all|threshold")->required();
  serve->add_option("--seed", sv.seed)->capture_default_str();
  serve->add_option("--p", sv.p_select, "Selection probability of the random tool")->capture_default_str();
  serve->add_option("--host", sv.host)->capture_default_str();
  serve->add_option("--port", sv.port, "0 picks a free port")->capture_default_str();

  std::string report_path, report_format = "text";
  auto* rep = app.add_subcommand("report", "Print the tables of a stored run");
  rep->add_option("run", report_path, "run.json or its directory")->required();
  rep->add_option("--format", report_format)->check(CLI::IsMember({"text", "csv", "detail"}))->capture_default_str();

  std::vector<std::string> validate_paths;
  auto* val = app.add_subcommand("validate", "Check suite files");
  val->add_option("paths", validate_paths, "Suite files or directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*generate) return run_generate(gen);
    if (*evaluate) return run_evaluate(ev);
    if (*serve) return run_serve(sv);
    if (*rep) return run_report(report_path, report_format);
    if (*val) return run_validate(validate_paths);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return kExitOk;
}
