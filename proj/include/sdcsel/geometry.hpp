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
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sdcsel/error.hpp"
#include "sdcsel/model.hpp"

namespace sdcsel::geometry {

struct CurvatureProfile {
  std::vector<double> kappas;  // 1/m, one per interior road point
  double mean_abs_kappa = 0.0;

  double max_abs_kappa() const {
    double m = 0.0;
    for (double k : kappas) m = std::max(m, std::abs(k));
    return m;
  }
};

inline double distance(const Point2& a, const Point2& b) { return std::hypot(b.x - a.x, b.y - a.y); }

inline double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Signed curvature of the circle through three points; counter-clockwise
// turns are positive and collinear triples give 0.
inline double menger_curvature(const Point2& p1, const Point2& p2, const Point2& p3) {
  if (p1 == p2 || p2 == p3 || p1 == p3) {
    throw DegeneratePoints("menger_curvature: coincident points");
  }
  const double twice_area = cross(p1, p2, p3);
  if (twice_area == 0.0) return 0.0;
  return 2.0 * twice_area / (distance(p1, p2) * distance(p2, p3) * distance(p1, p3));
}

inline CurvatureProfile curvature_profile(std::span<const Point2> road) {
  if (road.size() < 3) {
    throw TooFewPoints("curvature_profile: need >= 3 points, got " + std::to_string(road.size()));
  }
  CurvatureProfile profile;
  profile.kappas.reserve(road.size() - 2);
  double abs_sum = 0.0;
  for (std::size_t i = 0; i + 2 < road.size(); ++i) {
    const double k = menger_curvature(road[i], road[i + 1], road[i + 2]);
    profile.kappas.push_back(k);
    abs_sum += std::abs(k);
  }
  profile.mean_abs_kappa = abs_sum / static_cast<double>(profile.kappas.size());
  return profile;
}

inline double road_length(std::span<const Point2> road) {
  double len = 0.0;
  for (std::size_t i = 1; i < road.size(); ++i) len += distance(road[i - 1], road[i]);
  return len;
}

// Re-samples a polyline at uniform arc-length spacing. The final point is
// always kept, so the last spacing may be shorter than `step`.
inline Road resample_uniform(std::span<const Point2> road, double step) {
  if (!(step > 0.0)) throw InvalidConfig("resample step must be > 0");
  Road out;
  if (road.empty()) return out;
  out.push_back(road.front());
  double carried = 0.0;  // arc length since the last emitted point
  for (std::size_t i = 1; i < road.size(); ++i) {
    const Point2 a = road[i - 1];
    const Point2 b = road[i];
    const double seg = distance(a, b);
    double along = step - carried;
    while (along <= seg) {
      const double t = along / seg;
      out.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
      along += step;
    }
    carried = seg - (along - step);
  }
  const double tail = distance(out.back(), road.back());
  if (tail > 1e-9 * step) out.push_back(road.back());
  return out;
}

namespace detail {

inline double point_segment_distance(const Point2& p, const Point2& a, const Point2& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

inline bool on_segment(const Point2& a, const Point2& b, const Point2& p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

inline int orientation(const Point2& a, const Point2& b, const Point2& c) {
  const double v = cross(a, b, c);
  return (v > 0.0) - (v < 0.0);
}

inline bool segments_intersect(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

}  // namespace detail

inline double segment_distance(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  if (detail::segments_intersect(a, b, c, d)) return 0.0;
  return std::min({detail::point_segment_distance(a, c, d), detail::point_segment_distance(b, c, d),
                   detail::point_segment_distance(c, a, b), detail::point_segment_distance(d, a, b)});
}

// Two centerline pieces closer than `road_width` only count as an overlap when
// at least this much road lies between them; anything nearer is the same bend.
inline double min_overlap_arc_gap(double road_width) { return 0.5 * std::numbers::pi * road_width; }

// True iff two non-adjacent centerline segments cross, or come closer than
// road_width while separated by at least min_overlap_arc_gap of road.
inline bool is_self_intersecting(std::span<const Point2> road, double road_width) {
  const std::size_t n_seg = road.size() < 2 ? 0 : road.size() - 1;
  if (n_seg < 3) return false;

  std::vector<double> arc(road.size(), 0.0);
  for (std::size_t i = 1; i < road.size(); ++i) arc[i] = arc[i - 1] + distance(road[i - 1], road[i]);
  const double gap_needed = min_overlap_arc_gap(road_width);

  // Coarse pass over chunks of consecutive segments.
  constexpr std::size_t kChunk = 16;
  struct Box {
    double x0, y0, x1, y1;
  };
  const std::size_t n_chunks = (n_seg + kChunk - 1) / kChunk;
  std::vector<Box> boxes(n_chunks);
  for (std::size_t c = 0; c < n_chunks; ++c) {
    Box b{road[c * kChunk].x, road[c * kChunk].y, road[c * kChunk].x, road[c * kChunk].y};
    const std::size_t last = std::min(road.size() - 1, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i <= last; ++i) {
      b.x0 = std::min(b.x0, road[i].x);
      b.y0 = std::min(b.y0, road[i].y);
      b.x1 = std::max(b.x1, road[i].x);
      b.y1 = std::max(b.y1, road[i].y);
    }
    boxes[c] = b;
  }
  auto boxes_near = [&](const Box& a, const Box& b) {
    const double dx = std::max({0.0, a.x0 - b.x1, b.x0 - a.x1});
    const double dy = std::max({0.0, a.y0 - b.y1, b.y0 - a.y1});
    return std::hypot(dx, dy) < road_width;
  };

  for (std::size_t ca = 0; ca < n_chunks; ++ca) {
    for (std::size_t cb = ca; cb < n_chunks; ++cb) {
      if (!boxes_near(boxes[ca], boxes[cb])) continue;
      const std::size_t i_end = std::min(n_seg, (ca + 1) * kChunk);
      for (std::size_t i = ca * kChunk; i < i_end; ++i) {
        const std::size_t j_begin = std::max(i + 2, cb * kChunk);
        const std::size_t j_end = std::min(n_seg, (cb + 1) * kChunk);
        for (std::size_t j = j_begin; j < j_end; ++j) {
          const double d = segment_distance(road[i], road[i + 1], road[j], road[j + 1]);
          if (d == 0.0) return true;
          if (d < road_width && arc[j] - arc[i + 1] >= gap_needed) return true;
        }
      }
    }
  }
  return false;
}

}  // namespace sdcsel::geometry
