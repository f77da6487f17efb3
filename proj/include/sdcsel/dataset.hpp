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
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <future>
#include <nlohmann/json.hpp>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "sdcsel/error.hpp"
#include "sdcsel/geometry.hpp"
#include "sdcsel/io.hpp"
#include "sdcsel/model.hpp"
#include "sdcsel/rng.hpp"
#include "sdcsel/suite_io.hpp"

namespace sdcsel::dataset {

// ---------------------------------------------------------------------------
// Splitting

struct SplitSpec {
  double init_fraction = 0.8;
  std::optional<std::uint64_t> shuffle_seed;  // empty keeps stored order
};

struct Split {
  TestSuite init;
  TestSuite eval;
};

inline std::size_t init_size(std::size_t n_cases, double init_fraction) {
  // The epsilon absorbs products such as 0.29 * 100 = 28.999999999999996.
  return static_cast<std::size_t>(std::floor(init_fraction * static_cast<double>(n_cases) + 1e-9));
}

inline Split split_suite(const TestSuite& suite, const SplitSpec& spec) {
  if (!(spec.init_fraction > 0.0 && spec.init_fraction < 1.0)) {
    throw InvalidConfig("init_fraction must lie in (0, 1)");
  }
  const std::size_t n = suite.cases.size();
  const std::size_t n_init = init_size(n, spec.init_fraction);
  if (n_init == 0 || n_init >= n) {
    throw DegenerateSplit("splitting " + std::to_string(n) + " cases at " + std::to_string(spec.init_fraction) +
                          " leaves an empty side");
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  if (spec.shuffle_seed) {
    Rng rng(*spec.shuffle_seed);
    for (std::size_t i = n - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<long long>(i)));
      std::swap(order[i], order[j]);
    }
  }

  Split out;
  out.init.suite_id = suite.suite_id;
  out.eval.suite_id = suite.suite_id;
  out.init.cases.reserve(n_init);
  out.eval.cases.reserve(n - n_init);
  for (std::size_t k = 0; k < n; ++k) {
    (k < n_init ? out.init : out.eval).cases.push_back(suite.cases[order[k]]);
  }
  return out;
}

inline double suite_failure_rate(const TestSuite& suite) {
  if (suite.cases.empty()) throw InvalidConfig("suite_failure_rate: empty suite");
  return static_cast<double>(count_faults(suite)) / static_cast<double>(suite.cases.size());
}

// ---------------------------------------------------------------------------
// Synthetic benchmark generation
//
// Roads are chains of constant-curvature segments. Heading is integrated at
// 1 m steps, so every interior point turns by its segment's curvature.

struct GeneratorConfig {
  int n_suites = 36;
  int cases_per_suite = 950;
  std::uint64_t seed = 1;
  std::string suite_prefix = "synthetic";

  int min_segments = 3;
  int max_segments = 8;
  double min_amplitude = 0.0;  // |curvature| per segment, 1/m
  double max_amplitude = 0.07;
  double min_segment_length = 10.0;  // m
  double max_segment_length = 40.0;

  double road_width = 8.0;  // self-intersection clearance, m
  double fail_curvature_threshold = 0.063;
  double label_noise = 0.0;

  double sim_base_sec = 20.0;
  double sim_sec_per_meter = 0.25;
  double sim_jitter_sec = 5.0;  // uniform in [-jitter, +jitter]

  // Coordinates are rounded to this grid (m) so files stay compact.
  double coordinate_quantum = 1e-6;

  void validate() const {
    auto fail = [](const std::string& m) { throw InvalidConfig("generator config: " + m); };
    if (n_suites < 1) fail("n_suites must be >= 1");
    if (cases_per_suite < static_cast<int>(kMinSuiteSize)) {
      fail("cases_per_suite must be >= " + std::to_string(kMinSuiteSize));
    }
    if (min_segments < 1 || max_segments < min_segments) fail("segment count range is empty");
    if (!(min_amplitude >= 0.0) || !(max_amplitude >= min_amplitude)) fail("amplitude range is empty");
    if (!(min_segment_length >= 2.0) || !(max_segment_length >= min_segment_length)) {
      fail("segment length range is empty or below 2 m");
    }
    if (!(road_width > 0.0)) fail("road_width must be > 0");
    if (!(fail_curvature_threshold > 0.0)) fail("fail_curvature_threshold must be > 0");
    if (!(label_noise >= 0.0 && label_noise < 1.0)) fail("label_noise must lie in [0, 1)");
    if (!(sim_base_sec >= 0.0) || !(sim_sec_per_meter >= 0.0) || !(sim_jitter_sec >= 0.0)) {
      fail("sim time parameters must be >= 0");
    }
    if (!(coordinate_quantum > 0.0)) fail("coordinate_quantum must be > 0");
  }
};

inline constexpr int kMaxConsecutiveRejections = 1000;

// Rounds to the grid. Dividing by the integral inverse (when there is one)
// lands on the double nearest the decimal, so it prints short.
inline double quantize(double v, double quantum) {
  const double inv = std::round(1.0 / quantum);
  if (inv >= 1.0 && std::abs(inv * quantum - 1.0) < 1e-12) return std::round(v * inv) / inv;
  return std::round(v / quantum) * quantum;
}

// Samples one road that passes the self-intersection check.
inline Road sample_road(const GeneratorConfig& cfg, Rng& rng) {
  for (int attempt = 0; attempt < kMaxConsecutiveRejections; ++attempt) {
    const auto n_segments = rng.uniform_int(cfg.min_segments, cfg.max_segments);
    double x = rng.uniform(0.0, 200.0);
    double y = rng.uniform(0.0, 200.0);
    double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);

    Road road;
    road.push_back({quantize(x, cfg.coordinate_quantum), quantize(y, cfg.coordinate_quantum)});
    for (long long s = 0; s < n_segments; ++s) {
      const double amplitude = rng.uniform(cfg.min_amplitude, cfg.max_amplitude);
      const double kappa = rng.bernoulli(0.5) ? amplitude : -amplitude;
      const double length = rng.uniform(cfg.min_segment_length, cfg.max_segment_length);
      const auto steps = std::max<long long>(1, std::llround(length));
      for (long long k = 0; k < steps; ++k) {
        x += std::cos(heading);
        y += std::sin(heading);
        heading += kappa;
        road.push_back({quantize(x, cfg.coordinate_quantum), quantize(y, cfg.coordinate_quantum)});
      }
    }
    if (!geometry::is_self_intersecting(road, cfg.road_width)) return road;
  }
  throw GenerationExhausted("no valid road after " + std::to_string(kMaxConsecutiveRejections) +
                            " consecutive rejections");
}

inline std::string suite_name(const GeneratorConfig& cfg, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%03d", index + 1);
  return cfg.suite_prefix + buf;
}

inline std::string case_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "t%05d", index);
  return buf;
}

struct GeneratedSuite {
  TestSuite suite;
  std::uint64_t seed = 0;
};

inline GeneratedSuite generate_suite(const GeneratorConfig& cfg, int index) {
  const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(index));
  Rng rng(seed);
  GeneratedSuite out;
  out.seed = seed;
  out.suite.suite_id = suite_name(cfg, index);
  out.suite.cases.reserve(static_cast<std::size_t>(cfg.cases_per_suite));
  for (int c = 0; c < cfg.cases_per_suite; ++c) {
    LabeledCase lc;
    lc.test_case.test_id = case_name(c);
    lc.test_case.road_points = sample_road(cfg, rng);
    const auto profile = geometry::curvature_profile(lc.test_case.road_points);
    bool fail = profile.max_abs_kappa() > cfg.fail_curvature_threshold;
    if (rng.bernoulli(cfg.label_noise)) fail = !fail;
    const double jitter = rng.uniform(-cfg.sim_jitter_sec, cfg.sim_jitter_sec);
    const double sim =
        cfg.sim_base_sec + cfg.sim_sec_per_meter * geometry::road_length(lc.test_case.road_points) + jitter;
    lc.oracle = {lc.test_case.test_id, fail ? Outcome::kFail : Outcome::kPass,
                 quantize(std::max(0.0, sim), cfg.coordinate_quantum)};
    out.suite.cases.push_back(std::move(lc));
  }
  return out;
}

// Suites are independent substreams of the master seed, so the result does
// not depend on `threads`.
inline std::vector<GeneratedSuite> generate_suites(const GeneratorConfig& cfg, unsigned threads = 0) {
  cfg.validate();
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  std::vector<GeneratedSuite> out(static_cast<std::size_t>(cfg.n_suites));
  for (int base = 0; base < cfg.n_suites; base += static_cast<int>(threads)) {
    std::vector<std::future<GeneratedSuite>> batch;
    for (int i = base; i < std::min(cfg.n_suites, base + static_cast<int>(threads)); ++i) {
      batch.push_back(std::async(threads == 1 ? std::launch::deferred : std::launch::async,
                                 [&cfg, i] { return generate_suite(cfg, i); }));
    }
    for (std::size_t k = 0; k < batch.size(); ++k) out[static_cast<std::size_t>(base) + k] = batch[k].get();
  }
  return out;
}

// Picks fail_curvature_threshold so that the expected failure rate (after
// label noise) is `target_rate`, from a pilot sample of roads drawn on a
// stream disjoint from every suite stream.
inline double calibrate_fail_threshold(const GeneratorConfig& cfg, double target_rate, int pilot_roads = 4000) {
  const double noise = cfg.label_noise;
  if (!(target_rate > noise && target_rate < 1.0 - noise)) {
    throw InvalidConfig("target failure rate unreachable with label_noise " + std::to_string(noise));
  }
  const double clean_rate = (target_rate - noise) / (1.0 - 2.0 * noise);
  Rng rng(derive_seed(cfg.seed, 0xCA11B8A7E0000000ULL));
  std::vector<double> peaks;
  peaks.reserve(static_cast<std::size_t>(pilot_roads));
  for (int i = 0; i < pilot_roads; ++i) {
    peaks.push_back(geometry::curvature_profile(sample_road(cfg, rng)).max_abs_kappa());
  }
  std::sort(peaks.begin(), peaks.end());
  const auto n_pass = static_cast<std::size_t>(std::llround((1.0 - clean_rate) * pilot_roads));
  const std::size_t hi = std::clamp<std::size_t>(n_pass, 1, peaks.size() - 1);
  const double threshold = 0.5 * (peaks[hi - 1] + peaks[hi]);
  if (!(threshold > 0.0)) throw InvalidConfig("calibration found no positive curvature threshold");
  return threshold;
}

inline nlohmann::ordered_json to_json(const GeneratorConfig& c) {
  return {{"n_suites", c.n_suites},
          {"cases_per_suite", c.cases_per_suite},
          {"seed", c.seed},
          {"suite_prefix", c.suite_prefix},
          {"min_segments", c.min_segments},
          {"max_segments", c.max_segments},
          {"min_amplitude", c.min_amplitude},
          {"max_amplitude", c.max_amplitude},
          {"min_segment_length", c.min_segment_length},
          {"max_segment_length", c.max_segment_length},
          {"road_width", c.road_width},
          {"fail_curvature_threshold", c.fail_curvature_threshold},
          {"label_noise", c.label_noise},
          {"sim_base_sec", c.sim_base_sec},
          {"sim_sec_per_meter", c.sim_sec_per_meter},
          {"sim_jitter_sec", c.sim_jitter_sec},
          {"coordinate_quantum", c.coordinate_quantum}};
}

inline constexpr const char* kManifestName = "manifest.json";

// Writes <suite_id>.json per suite plus manifest.json.
inline void write_benchmark(const std::filesystem::path& dir, const GeneratorConfig& cfg,
                            const std::vector<GeneratedSuite>& suites) {
  nlohmann::ordered_json manifest;
  manifest["generator"] = to_json(cfg);
  manifest["suites"] = nlohmann::ordered_json::array();
  for (const auto& g : suites) {
    const std::string file = g.suite.suite_id + ".json";
    store_suite(g.suite, dir / file);
    manifest["suites"].push_back({{"suite_id", g.suite.suite_id},
                                  {"file", file},
                                  {"seed", g.seed},
                                  {"cases", g.suite.cases.size()},
                                  {"faults", count_faults(g.suite)}});
  }
  write_text_file(dir / kManifestName, manifest.dump(2) + "\n");
}

// Suite files of a directory (manifest excluded) in lexicographic order, or
// the path itself when it is a file.
inline std::vector<std::filesystem::path> list_suite_files(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(path)) return {path};
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (!entry.is_regular_file()) continue;
    const auto& p = entry.path();
    if (p.filename() == kManifestName) continue;
    if (suite_readers().contains(p.extension().string())) files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace sdcsel::dataset
