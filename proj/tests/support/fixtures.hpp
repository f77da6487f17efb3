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
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "sdcsel/model.hpp"
#include "sdcsel/suite_io.hpp"

#ifndef SDCSEL_FIXTURE_DIR
#error "SDCSEL_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace sdcsel::testing {

inline std::filesystem::path fixture_path(const std::string& name) {
  return std::filesystem::path(SDCSEL_FIXTURE_DIR) / name;
}

inline TestSuite load_fixture(const std::string& name) { return load_suite(fixture_path(name)); }

// The frozen multi-suite fixture set, fixture_001.json ... fixture_010.json.
inline std::vector<TestSuite> fixture_suites(int count = 10) {
  std::vector<TestSuite> out;
  for (int i = 1; i <= count; ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "suites/fixture_%03d.json", i);
    out.push_back(load_fixture(name));
  }
  return out;
}

inline Road straight_road(double length, double step = 1.0) {
  Road r;
  for (double s = 0.0; s <= length + 1e-9; s += step) r.push_back({s, 0.0});
  return r;
}

// Points every `step` metres of arc along a circle centred at the origin.
inline Road circle_road(double radius, double step = 1.0, double turns = 1.0) {
  Road r;
  const double total = 2.0 * std::numbers::pi * radius * turns;
  const int n = static_cast<int>(std::floor(total / step));
  for (int k = 0; k < n; ++k) {
    const double a = k * step / radius;
    r.push_back({radius * std::cos(a), radius * std::sin(a)});
  }
  return r;
}

// Densely sampled polyline through the corner points.
inline Road polyline(const std::vector<Point2>& corners, double step = 1.0) {
  Road r{corners.front()};
  for (std::size_t i = 1; i < corners.size(); ++i) {
    const Point2 a = corners[i - 1], b = corners[i];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const int n = std::max(1, static_cast<int>(std::ceil(len / step - 1e-9)));
    for (int k = 1; k <= n; ++k) {
      const double t = static_cast<double>(k) / n;
      r.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    }
  }
  return r;
}

// A hairpin whose last leg stops `gap` metres above its first leg.
inline Road hairpin(double gap) { return polyline({{0, 0}, {50, 0}, {50, 20}, {10, 20}, {10, gap}}); }

inline LabeledCase labeled(const std::string& id, Road road, Outcome outcome, double sim_time) {
  return {{id, std::move(road)}, {id, outcome, sim_time}};
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "sdcsel-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace sdcsel::testing
