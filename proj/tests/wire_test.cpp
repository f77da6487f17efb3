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

#include <gtest/gtest.h>
#include <sys/socket.h>

#include <chrono>

#include "competition.pb.h"
#include "sdcsel/baselines.hpp"
#include "sdcsel/evaluator.hpp"
#include "sdcsel/wire/client.hpp"
#include "sdcsel/wire/convert.hpp"
#include "sdcsel/wire/server.hpp"
#include "support/conformance.hpp"
#include "support/faulty.hpp"
#include "support/fixtures.hpp"

namespace sdcsel::wire {
namespace {

using protocol::FailureKind;
using protocol::ProtocolError;
using testing::faulty;
using testing::Misbehavior;

struct Served {
  explicit Served(protocol::SelectorFactory f) : server(std::move(f)) { server.start(); }
  ToolServer server;
};

dataset::Split fixture_split() { return dataset::split_suite(testing::load_fixture("small_10.json"), {}); }

FailureKind remote_failure(const protocol::SelectorFactory& f, bool initialize_first, protocol::Timeouts t = {},
                           std::string* detail = nullptr) {
  Served s(f);
  const auto split = fixture_split();
  RemoteClient client(s.server.endpoint(), t);
  try {
    client.get_name();
    if (initialize_first) client.initialize(protocol::to_init_items(split.init));
    client.select(protocol::to_select_cases(split.eval));
  } catch (const ProtocolError& e) {
    if (detail) *detail = e.detail();
    return e.kind();
  }
  ADD_FAILURE() << "no ProtocolError raised";
  return FailureKind::kUnreachable;
}

// Strips the varint length prefix of one frame.
std::string frame_body(const std::string& frame) {
  std::size_t i = 0;
  while (static_cast<unsigned char>(frame[i]) & 0x80) ++i;
  return frame.substr(i + 1);
}

TEST(Wire, BaselinesPassConformance) {
  for (const char* kind : {"random", "select-all", "threshold"}) {
    SCOPED_TRACE(kind);
    Served s(baselines::baseline_factory(kind, {7, 0.5}));
    testing::expect_conformance(evaluator::remote_tool(s.server.endpoint()));
  }
}

TEST(Wire, NameOverTheWire) {
  Served s(baselines::baseline_factory("random"));
  RemoteClient client(s.server.endpoint());
  EXPECT_EQ(client.get_name().name, "random-baseline");
  EXPECT_EQ(client.get_name().name, "random-baseline");
}

TEST(Wire, UnreachableEndpointFailsWithinConnectTimeout) {
  std::uint16_t port = 0;
  {
    auto probe = listen_on("127.0.0.1", 0, port);
  }  // closed again: nothing listens
  protocol::Timeouts t;
  t.connect = std::chrono::milliseconds(500);
  RemoteClient client({"127.0.0.1", port}, t);
  const auto start = Clock::now();
  try {
    client.get_name();
    FAIL() << "connected to a closed port";
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.kind(), FailureKind::kUnreachable);
  }
  EXPECT_LT(Clock::now() - start, std::chrono::milliseconds(1500));
}

TEST(Wire, SelectPhaseCarriesNoOracleData) {
  Served s(baselines::baseline_factory("random", {7, 0.5}));
  const auto split = fixture_split();
  WireTranscript transcript;
  RemoteClient client(s.server.endpoint(), {}, protocol::ReplyMode::kStrict, &transcript);
  client.get_name();
  client.initialize(protocol::to_init_items(split.init));
  client.select(protocol::to_select_cases(split.eval));

  ASSERT_EQ(transcript.select_frames.size(), split.eval.cases.size() + 1);
  for (const auto& frame : transcript.select_frames) {
    pb::ToolRequest req;
    ASSERT_TRUE(req.ParseFromString(frame_body(frame)));
    EXPECT_TRUE(req.has_select_case() || req.has_select_end());
    // Nothing beyond id and road travels, not even as unknown fields.
    if (req.has_select_case()) {
      const auto& tc = req.select_case();
      EXPECT_TRUE(tc.GetReflection()->GetUnknownFields(tc).empty());
      EXPECT_TRUE(req.GetReflection()->GetUnknownFields(req).empty());
      pb::SDCTestCase bare;
      bare.set_test_id(tc.test_id());
      *bare.mutable_road_points() = tc.road_points();
      EXPECT_EQ(bare.SerializeAsString(), tc.SerializeAsString());
    }
  }
  // The schema itself has no place for them.
  const auto* desc = pb::SDCTestCase::descriptor();
  for (int i = 0; i < desc->field_count(); ++i) {
    EXPECT_NE(desc->field(i)->name(), "outcome");
    EXPECT_NE(desc->field(i)->name(), "sim_time_sec");
  }
  // Initialization, by contrast, does carry labels.
  pb::ToolRequest first_init;
  ASSERT_TRUE(first_init.ParseFromString(frame_body(transcript.init_frames.front())));
  EXPECT_NE(first_init.init_item().outcome(), pb::OUTCOME_UNSPECIFIED);
}

TEST(Wire, ContractViolationsAreRecognised) {
  std::string detail;
  EXPECT_EQ(remote_failure(faulty(Misbehavior::kDropFirst), true, {}, &detail), FailureKind::kProtocolViolation);
  EXPECT_NE(detail.find("missing decision for test_id 't8'"), std::string::npos);
  EXPECT_EQ(remote_failure(faulty(Misbehavior::kDuplicateFirst), true), FailureKind::kProtocolViolation);
  EXPECT_EQ(remote_failure(faulty(Misbehavior::kUnknownId), true), FailureKind::kProtocolViolation);
}

TEST(Wire, SelectBeforeInitializeIsRejectedByTheTool) {
  std::string detail;
  EXPECT_EQ(remote_failure(baselines::baseline_factory("select-all"), false, {}, &detail),
            FailureKind::kProtocolViolation);
  EXPECT_EQ(detail, "select before initialize");
}

TEST(Wire, ToolErrorsCarryTheirDetail) {
  std::string detail;
  EXPECT_EQ(remote_failure(faulty(Misbehavior::kThrowInInit), true, {}, &detail), FailureKind::kToolError);
  EXPECT_EQ(detail, "model exploded on item 3");
  EXPECT_EQ(remote_failure(faulty(Misbehavior::kThrowInSelect), true, {}, &detail), FailureKind::kToolError);
  EXPECT_EQ(detail, "selector crashed on case 1");
  EXPECT_EQ(remote_failure(faulty(Misbehavior::kNack), true), FailureKind::kToolError);
}

TEST(Wire, ToolThatDiesMidStreamBreaksTheStream) {
  testing::CrashingServer crashing(1);
  const auto split = fixture_split();
  RemoteClient client(crashing.endpoint());
  EXPECT_EQ(client.get_name().name, "crashing-tool");
  client.initialize(protocol::to_init_items(split.init));
  try {
    client.select(protocol::to_select_cases(split.eval));
    FAIL() << "select survived a dead tool";
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.kind(), FailureKind::kStreamBroken);
  }
}

TEST(Wire, SlowToolTimesOut) {
  protocol::Timeouts t;
  t.initialize = std::chrono::milliseconds(100);
  EXPECT_EQ(remote_failure(faulty(Misbehavior::kSlowInit, std::chrono::milliseconds(600)), true, t),
            FailureKind::kTimeout);
}

TEST(Wire, LenientModeInfersUnselectedCases) {
  Served s(faulty(Misbehavior::kSelectedOnly));
  const auto split = fixture_split();
  RemoteClient client(s.server.endpoint(), {}, protocol::ReplyMode::kImplicit);
  client.get_name();
  client.initialize(protocol::to_init_items(split.init));
  const auto d = client.select(protocol::to_select_cases(split.eval));
  ASSERT_EQ(d.size(), 2u);
  EXPECT_TRUE(d[0].selected);
  EXPECT_FALSE(d[1].selected);
}

TEST(Wire, MetricsEqualInProcessMetrics) {
  const auto suite = testing::load_fixture("small_10.json");
  for (const char* kind : {"random", "select-all", "threshold"}) {
    SCOPED_TRACE(kind);
    const auto factory = baselines::baseline_factory(kind, {7, 0.5});
    Served s(factory);
    const auto wire_row =
        evaluator::evaluate_tool_on_suite("t", evaluator::remote_tool(s.server.endpoint()), suite, {});
    const auto local_row = evaluator::evaluate_tool_on_suite("t", evaluator::in_process_tool(factory), suite, {});
    ASSERT_FALSE(wire_row.failed()) << wire_row.failure_reason;
    auto a = wire_row.metrics, b = local_row.metrics;
    a.time_to_initialize = b.time_to_initialize = 0.0;
    a.time_to_select_tests = b.time_to_select_tests = 0.0;
    EXPECT_EQ(a, b);
  }
}

TEST(Wire, GeometryAwareToolMatchesInProcessOnGeneratedSuites) {
  const auto factory = baselines::baseline_factory("threshold");
  Served s(factory);
  for (const auto& suite : testing::fixture_suites(3)) {
    const auto wire_row =
        evaluator::evaluate_tool_on_suite("t", evaluator::remote_tool(s.server.endpoint()), suite, {}, {}, true);
    const auto local_row =
        evaluator::evaluate_tool_on_suite("t", evaluator::in_process_tool(factory), suite, {}, {}, true);
    ASSERT_FALSE(wire_row.failed()) << wire_row.failure_reason;
    EXPECT_EQ(wire_row.transcript->ack_detail, local_row.transcript->ack_detail);
    EXPECT_EQ(wire_row.transcript->decisions, local_row.transcript->decisions);
  }
}

TEST(Convert, ReusedMessageCarriesOnlyTheLatestRoad) {
  pb::SDCTestCase msg;
  to_proto(TestCase{"a", {{0, 0}, {1, 0}, {2, 1}}}, msg);
  to_proto(TestCase{"b", {{5, 5}, {6, 6}}}, msg);
  EXPECT_EQ(from_proto(msg), (TestCase{"b", {{5, 5}, {6, 6}}}));
  pb::Oracle item;
  to_proto(protocol::InitializationItem{{"a", {{0, 0}, {1, 0}, {2, 1}}}, {"a", Outcome::kFail, 3.0}}, item);
  to_proto(protocol::InitializationItem{{"b", {{0, 0}, {1, 1}}}, {"b", Outcome::kPass, 4.0}}, item);
  protocol::InitializationItem back;
  ASSERT_TRUE(from_proto(item, back));
  EXPECT_EQ(back.test_case.road_points.size(), 2u);
  EXPECT_EQ(back.oracle.outcome, Outcome::kPass);
}

TEST(Wire, ServerHandlesSequentialSessionsAndLargeRoads) {
  Served s(baselines::baseline_factory("select-all"));
  TestCase big{"big", {}};
  for (int i = 0; i < 200000; ++i) big.road_points.push_back({i * 0.5, std::sin(i * 0.01)});
  for (int round = 0; round < 3; ++round) {
    RemoteClient client(s.server.endpoint());
    client.get_name();
    client.initialize({});
    const std::vector<TestCase> cases{big};
    EXPECT_EQ(client.select(cases), (std::vector<SelectionDecision>{{"big", true}}));
  }
  // The last connection may still be draining when the count is read.
  const auto deadline = Clock::now() + std::chrono::seconds(5);
  while (s.server.sessions_served() < 3 && Clock::now() < deadline) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  EXPECT_EQ(s.server.sessions_served(), 3u);
}

TEST(Framing, MessagesSurviveArbitraryChunking) {
  int fds[2];
  ASSERT_EQ(::socketpair(AF_UNIX, SOCK_STREAM, 0, fds), 0);
  FramedSocket writer{Fd(fds[0])};
  Fd raw(fds[1]);
  std::string bytes;
  for (int i = 0; i < 50; ++i) {
    pb::ToolResponse resp;
    resp.mutable_decision()->set_test_id(std::string(static_cast<std::size_t>(i * 7), 'x') + std::to_string(i));
    resp.mutable_decision()->set_selected(i % 2 == 0);
    bytes += writer.queue(resp);
  }
  writer.flush(Clock::now() + std::chrono::seconds(5));
  // Drain the raw side, then replay into a fresh pair in odd-sized chunks.
  std::string received;
  while (received.size() < bytes.size()) {
    char buf[4096];
    const auto n = ::read(raw.get(), buf, sizeof buf);
    ASSERT_GT(n, 0);
    received.append(buf, static_cast<std::size_t>(n));
  }
  EXPECT_EQ(received, bytes);

  int pair2[2];
  ASSERT_EQ(::socketpair(AF_UNIX, SOCK_STREAM, 0, pair2), 0);
  Fd feed(pair2[0]);
  FramedSocket reader{Fd(pair2[1])};
  std::size_t sent = 0, chunk = 1, got = 0;
  pb::ToolResponse resp;
  while (got < 50) {
    if (sent < bytes.size()) {
      const std::size_t len = std::min(chunk, bytes.size() - sent);
      ASSERT_EQ(::write(feed.get(), bytes.data() + sent, len), static_cast<ssize_t>(len));
      sent += len;
      chunk = chunk % 13 + 2;
    }
    reader.pump(Clock::now() + std::chrono::milliseconds(20));
    while (reader.try_pop(resp)) {
      EXPECT_EQ(resp.decision().test_id(), std::string(got * 7, 'x') + std::to_string(got));
      EXPECT_EQ(resp.decision().selected(), got % 2 == 0);
      ++got;
    }
  }
}

}  // namespace
}  // namespace sdcsel::wire
