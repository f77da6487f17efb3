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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "competition.pb.h"
#include "sdcsel/protocol.hpp"
#include "sdcsel/wire/convert.hpp"
#include "sdcsel/wire/socket.hpp"

namespace sdcsel::wire {

// Raw outbound frames of one session, split by call.
struct WireTranscript {
  std::vector<std::string> name_frames;
  std::vector<std::string> init_frames;
  std::vector<std::string> select_frames;
};

// Evaluator side of a session with a tool server. The connection opens on the
// first call and closes with the client.
class RemoteClient final : public protocol::ToolClient {
 public:
  RemoteClient(Endpoint endpoint, protocol::Timeouts timeouts = {},
               protocol::ReplyMode mode = protocol::ReplyMode::kStrict, WireTranscript* transcript = nullptr)
      : endpoint_(std::move(endpoint)), timeouts_(timeouts), mode_(mode), transcript_(transcript) {}

  protocol::ToolIdentity get_name() override {
    const auto deadline = Clock::now() + timeouts_.connect;
    auto& sock = connection();
    pb::ToolRequest req;
    req.mutable_name();
    record(&WireTranscript::name_frames, sock.queue(req));
    const auto resp = await_reply(deadline, "get_name");
    if (!resp.has_name()) unexpected(resp, "name reply");
    if (resp.name().name().empty()) {
      throw protocol::ProtocolError(FailureKind::kProtocolViolation, "tool reported an empty name");
    }
    return {resp.name().name()};
  }

  protocol::InitializationAck initialize(std::span<const protocol::InitializationItem> items) override {
    const auto deadline = Clock::now() + timeouts_.initialize;
    auto& sock = connection();
    pb::ToolRequest req;
    for (const auto& item : items) {
      to_proto(item, *req.mutable_init_item());
      record(&WireTranscript::init_frames, sock.queue(req));
      // Keep the outbound buffer bounded and notice early errors.
      while (sock.has_pending_output()) {
        reject_early_reply(sock);
        step(deadline, "initialize");
      }
      reject_early_reply(sock);
    }
    req.mutable_init_end();
    record(&WireTranscript::init_frames, sock.queue(req));
    const auto resp = await_reply(deadline, "initialize");
    if (!resp.has_init_ack()) unexpected(resp, "initialization reply");
    if (!resp.init_ack().ok()) {
      throw protocol::ProtocolError(FailureKind::kToolError,
                                    "initialization not acknowledged: " + resp.init_ack().detail());
    }
    return {true, resp.init_ack().detail()};
  }

  std::vector<SelectionDecision> select(std::span<const TestCase> cases) override {
    const auto deadline = Clock::now() + timeouts_.select;
    auto& sock = connection();
    std::vector<SelectionDecision> replies;
    replies.reserve(cases.size());
    pb::ToolResponse resp;
    auto drain = [&] {
      while (sock.try_pop(resp)) {
        if (resp.has_decision()) {
          replies.push_back({resp.decision().test_id(), resp.decision().selected()});
        } else if (resp.has_select_done()) {
          return true;
        } else {
          unexpected(resp, "selection reply");
        }
      }
      return false;
    };

    pb::ToolRequest req;
    for (const auto& tc : cases) {
      to_proto(tc, *req.mutable_select_case());
      record(&WireTranscript::select_frames, sock.queue(req));
      while (sock.has_pending_output()) {
        if (drain()) unexpected_done();
        step(deadline, "select");
      }
      if (drain()) unexpected_done();
    }
    req.mutable_select_end();
    record(&WireTranscript::select_frames, sock.queue(req));
    while (!drain()) {
      if (sock.peer_closed() && !sock.has_pending_output()) {
        throw protocol::ProtocolError(FailureKind::kStreamBroken, "connection closed during select");
      }
      step(deadline, "select");
    }
    return protocol::check_decisions(cases, std::move(replies), mode_);
  }

 private:
  FramedSocket& connection() {
    if (!socket_) socket_.emplace(connect_to(endpoint_, timeouts_.connect));
    return *socket_;
  }

  void record(std::vector<std::string> WireTranscript::* phase, std::string frame) {
    if (transcript_) (transcript_->*phase).push_back(std::move(frame));
  }

  void step(Clock::time_point deadline, const char* phase) {
    if (!socket_->pump(deadline)) {
      throw protocol::ProtocolError(FailureKind::kTimeout, std::string(phase) + " timed out after " + endpoint_.str());
    }
  }

  // Any reply before the end of a client stream is an error frame or a violation.
  static void reject_early_reply(FramedSocket& sock) {
    pb::ToolResponse resp;
    if (sock.try_pop(resp)) unexpected(resp, "no reply before the stream ends");
  }

  pb::ToolResponse await_reply(Clock::time_point deadline, const char* phase) {
    auto& sock = *socket_;
    pb::ToolResponse resp;
    while (!sock.try_pop(resp)) {
      if (sock.peer_closed() && !sock.has_pending_output()) {
        throw protocol::ProtocolError(FailureKind::kStreamBroken, std::string("connection closed during ") + phase);
      }
      step(deadline, phase);
    }
    return resp;
  }

  [[noreturn]] static void unexpected(const pb::ToolResponse& resp, const std::string& expected) {
    if (resp.has_error()) {
      const auto kind =
          resp.error().code() == pb::PROTOCOL_VIOLATION ? FailureKind::kProtocolViolation : FailureKind::kToolError;
      throw protocol::ProtocolError(kind, resp.error().detail());
    }
    throw protocol::ProtocolError(FailureKind::kProtocolViolation, "unexpected message (expected " + expected + ")");
  }

  [[noreturn]] static void unexpected_done() {
    throw protocol::ProtocolError(FailureKind::kProtocolViolation, "selection finished before the stream ended");
  }

  Endpoint endpoint_;
  protocol::Timeouts timeouts_;
  protocol::ReplyMode mode_;
  WireTranscript* transcript_;
  std::optional<FramedSocket> socket_;
};

}  // namespace sdcsel::wire
