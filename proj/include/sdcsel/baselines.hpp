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
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdcsel/error.hpp"
#include "sdcsel/geometry.hpp"
#include "sdcsel/model.hpp"
#include "sdcsel/protocol.hpp"
#include "sdcsel/rng.hpp"

namespace sdcsel::baselines {

inline constexpr const char* kRandomName = "random-baseline";
inline constexpr const char* kSelectAllName = "select-all-baseline";
inline constexpr const char* kThresholdName = "threshold-baseline";

// ---------------------------------------------------------------------------
// Random selection.
//
// The k-th case offered in a selection stream (k = 0, 1, ...) is selected iff
//   u_k < p_select,  u_k = (splitmix64_at(seed, k) >> 11) * 2^-53,
// i.e. the k-th draw of a SplitMix64 stream seeded with `seed`. The scheme is
// keyed by stream position only, so any implementation reproduces it exactly.

struct RandomSelectorConfig {
  double p_select = 0.5;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(p_select >= 0.0 && p_select <= 1.0)) throw InvalidConfig("p_select must lie in [0, 1]");
  }
};

inline SelectionDecision random_select(const RandomSelectorConfig& config, std::uint64_t position,
                                       const TestCase& test_case) {
  return {test_case.test_id, unit_double(splitmix64_at(config.seed, position)) < config.p_select};
}

class RandomSelector final : public protocol::Selector {
 public:
  explicit RandomSelector(RandomSelectorConfig config) : config_(config) { config_.validate(); }

  std::string name() const override { return kRandomName; }

  void begin_initialization() override {}
  void consume(const protocol::InitializationItem&) override {}
  protocol::InitializationAck end_initialization() override { return {true, {}}; }

  void begin_selection() override { position_ = 0; }
  void offer(const TestCase& tc, const protocol::DecisionSink& emit) override {
    emit(random_select(config_, position_++, tc));
  }
  void end_selection(const protocol::DecisionSink&) override {}

 private:
  RandomSelectorConfig config_;
  std::uint64_t position_ = 0;
};

class SelectAllSelector final : public protocol::Selector {
 public:
  std::string name() const override { return kSelectAllName; }

  void begin_initialization() override {}
  void consume(const protocol::InitializationItem&) override {}
  protocol::InitializationAck end_initialization() override { return {true, {}}; }

  void begin_selection() override {}
  void offer(const TestCase& tc, const protocol::DecisionSink& emit) override { emit({tc.test_id, true}); }
  void end_selection(const protocol::DecisionSink&) override {}
};

// ---------------------------------------------------------------------------
// Curvature threshold: predicts FAIL when a road's peak |curvature| reaches a
// threshold learned from the initialization stream.

struct ThresholdSelectorState {
  double threshold = 0.0;  // 1/m
  double training_accuracy = 0.0;
  std::size_t trained_on = 0;
};

// Peak |curvature| of a road; empty for roads too short to have a profile.
inline std::optional<double> peak_curvature(std::span<const Point2> road) {
  if (road.size() < 3) return std::nullopt;
  return geometry::curvature_profile(road).max_abs_kappa();
}

// Candidate thresholds are the smallest feature (select everything), the
// midpoints between adjacent distinct features, and the next double above the
// largest feature (select nothing). The most accurate candidate wins; ties go
// to the smaller threshold.
inline ThresholdSelectorState threshold_train(std::span<const protocol::InitializationItem> items) {
  std::vector<std::pair<double, bool>> samples;  // (peak, is_fault)
  samples.reserve(items.size());
  for (const auto& item : items) {
    if (auto peak = peak_curvature(item.test_case.road_points)) {
      samples.emplace_back(*peak, item.oracle.outcome == Outcome::kFail);
    }
  }
  if (samples.empty()) throw NoTrainableData("no initialization item has a curvature profile");
  std::sort(samples.begin(), samples.end());

  const std::size_t n = samples.size();
  std::size_t faults_total = 0;
  for (const auto& s : samples) faults_total += s.second ? 1 : 0;

  // Threshold at boundary k selects samples[k..n): correct = passes below + faults at/above.
  std::size_t passes_below = 0;
  std::size_t faults_below = 0;
  std::size_t best_correct = faults_total;  // k = 0
  double best_threshold = samples.front().first;
  for (std::size_t k = 1; k <= n; ++k) {
    (samples[k - 1].second ? faults_below : passes_below) += 1;
    if (k < n && samples[k].first == samples[k - 1].first) continue;
    const std::size_t correct = passes_below + (faults_total - faults_below);
    if (correct > best_correct) {
      best_correct = correct;
      best_threshold = k < n ? 0.5 * (samples[k - 1].first + samples[k].first)
                             : std::nextafter(samples[n - 1].first, std::numeric_limits<double>::infinity());
    }
  }
  return {best_threshold, static_cast<double>(best_correct) / static_cast<double>(n), n};
}

inline SelectionDecision threshold_select(const std::optional<ThresholdSelectorState>& state,
                                          const TestCase& test_case) {
  if (!state) throw Untrained("threshold selector used before initialization");
  const auto peak = peak_curvature(test_case.road_points);
  return {test_case.test_id, peak.has_value() && *peak >= state->threshold};
}

class ThresholdSelector final : public protocol::Selector {
 public:
  std::string name() const override { return kThresholdName; }

  void begin_initialization() override {
    state_.reset();
    items_.clear();
  }
  void consume(const protocol::InitializationItem& item) override { items_.push_back(item); }
  protocol::InitializationAck end_initialization() override {
    std::string detail;
    try {
      state_ = threshold_train(items_);
      detail = "threshold=" + std::to_string(state_->threshold);
    } catch (const NoTrainableData&) {
      // Nothing to learn from: select every case rather than refuse the session.
      state_ = ThresholdSelectorState{0.0, 0.0, 0};
      detail = "no training data, selecting every case";
    }
    items_.clear();
    return {true, detail};
  }

  void begin_selection() override {
    if (!state_) throw Untrained("threshold selector used before initialization");
  }
  void offer(const TestCase& tc, const protocol::DecisionSink& emit) override { emit(threshold_select(state_, tc)); }
  void end_selection(const protocol::DecisionSink&) override {}

  const std::optional<ThresholdSelectorState>& state() const { return state_; }

 private:
  std::vector<protocol::InitializationItem> items_;
  std::optional<ThresholdSelectorState> state_;
};

struct BaselineOptions {
  std::uint64_t seed = 0;
  double p_select = 0.5;
};

inline bool is_baseline(const std::string& kind) {
  return kind == "random" || kind == "select-all" || kind == "threshold";
}

// "random", "select-all" or "threshold".
inline protocol::SelectorFactory baseline_factory(const std::string& kind, BaselineOptions opts = {}) {
  if (kind == "random") {
    RandomSelectorConfig cfg{opts.p_select, opts.seed};
    cfg.validate();
    return [cfg] { return std::make_unique<RandomSelector>(cfg); };
  }
  if (kind == "select-all") return [] { return std::make_unique<SelectAllSelector>(); };
  if (kind == "threshold") return [] { return std::make_unique<ThresholdSelector>(); };
  throw InvalidConfig("unknown baseline '" + kind + "'");
}

}  // namespace sdcsel::baselines
