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

#include "competition.pb.h"
#include "sdcsel/model.hpp"
#include "sdcsel/protocol.hpp"

namespace sdcsel::wire {

// Both encoders overwrite `out`, so callers may reuse one message per stream.
inline void to_proto(const TestCase& tc, pb::SDCTestCase& out) {
  out.Clear();
  out.set_test_id(tc.test_id);
  auto* pts = out.mutable_road_points();
  pts->Reserve(static_cast<int>(tc.road_points.size()));
  for (const auto& p : tc.road_points) {
    auto* rp = pts->Add();
    rp->set_x(p.x);
    rp->set_y(p.y);
  }
}

inline TestCase from_proto(const pb::SDCTestCase& in) {
  TestCase tc;
  tc.test_id = in.test_id();
  tc.road_points.reserve(static_cast<std::size_t>(in.road_points_size()));
  for (const auto& p : in.road_points()) tc.road_points.push_back({p.x(), p.y()});
  return tc;
}

inline void to_proto(const protocol::InitializationItem& item, pb::Oracle& out) {
  out.Clear();
  to_proto(item.test_case, *out.mutable_test_case());
  out.set_outcome(item.oracle.outcome == Outcome::kFail ? pb::FAIL : pb::PASS);
  out.set_sim_time_sec(item.oracle.sim_time_sec);
}

// Returns false when the outcome is unset.
inline bool from_proto(const pb::Oracle& in, protocol::InitializationItem& out) {
  if (in.outcome() != pb::PASS && in.outcome() != pb::FAIL) return false;
  out.test_case = from_proto(in.test_case());
  out.oracle = {out.test_case.test_id, in.outcome() == pb::FAIL ? Outcome::kFail : Outcome::kPass, in.sim_time_sec()};
  return true;
}

}  // namespace sdcsel::wire
