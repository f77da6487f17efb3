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

#include <sys/socket.h>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <utility>

#include "competition.pb.h"
#include "sdcsel/protocol.hpp"
#include "sdcsel/wire/convert.hpp"
#include "sdcsel/wire/socket.hpp"

namespace sdcsel::wire {

// Tool side of one connection: decodes requests and drives a Selector.
class SessionHandler {
 public:
  explicit SessionHandler(std::unique_ptr<protocol::Selector> selector) : selector_(std::move(selector)) {}

  // Handles one request, queueing replies on `sock`. Returns false once the
  // session must end (an error reply has been queued).
  bool handle(const pb::ToolRequest& req, FramedSocket& sock) {
    try {
      dispatch(req, sock);
      return true;
    } catch (const SessionViolation& v) {
      reply_error(sock, pb::PROTOCOL_VIOLATION, v.what());
    } catch (const std::exception& e) {
      reply_error(sock, pb::TOOL_ERROR, e.what());
    }
    return false;
  }

 private:
  struct SessionViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
  };

  enum class Phase { kFresh, kNamed, kInitializing, kInitialized, kSelecting };

  void dispatch(const pb::ToolRequest& req, FramedSocket& sock) {
    pb::ToolResponse resp;
    switch (req.payload_case()) {
      case pb::ToolRequest::kName:
        if (phase_ == Phase::kInitializing || phase_ == Phase::kSelecting) {
          throw SessionViolation("name request inside a stream");
        }
        resp.mutable_name()->set_name(selector_->name());
        sock.queue(resp);
        if (phase_ == Phase::kFresh) phase_ = Phase::kNamed;
        return;

      case pb::ToolRequest::kInitItem: {
        begin_init();
        protocol::InitializationItem item;
        if (!from_proto(req.init_item(), item)) throw SessionViolation("initialization item without outcome");
        selector_->consume(item);
        return;
      }

      case pb::ToolRequest::kInitEnd: {
        begin_init();
        const auto ack = selector_->end_initialization();
        resp.mutable_init_ack()->set_ok(ack.done);
        resp.mutable_init_ack()->set_detail(ack.detail);
        sock.queue(resp);
        phase_ = ack.done ? Phase::kInitialized : Phase::kNamed;
        return;
      }

      case pb::ToolRequest::kSelectCase: {
        begin_select();
        const TestCase tc = from_proto(req.select_case());
        selector_->offer(tc, sink(sock));
        return;
      }

      case pb::ToolRequest::kSelectEnd:
        begin_select();
        selector_->end_selection(sink(sock));
        resp.mutable_select_done();
        sock.queue(resp);
        phase_ = Phase::kInitialized;
        return;

      case pb::ToolRequest::PAYLOAD_NOT_SET:
        break;
    }
    throw SessionViolation("empty request");
  }

  void begin_init() {
    if (phase_ == Phase::kInitializing) return;
    if (phase_ == Phase::kFresh) throw SessionViolation("initialize before get_name");
    if (phase_ == Phase::kSelecting) throw SessionViolation("initialize inside a selection stream");
    selector_->begin_initialization();
    phase_ = Phase::kInitializing;
  }

  void begin_select() {
    if (phase_ == Phase::kSelecting) return;
    if (phase_ != Phase::kInitialized) throw SessionViolation("select before initialize");
    selector_->begin_selection();
    phase_ = Phase::kSelecting;
  }

  static protocol::DecisionSink sink(FramedSocket& sock) {
    return [&sock](SelectionDecision d) {
      pb::ToolResponse resp;
      resp.mutable_decision()->set_test_id(d.test_id);
      resp.mutable_decision()->set_selected(d.selected);
      sock.queue(resp);
    };
  }

  static void reply_error(FramedSocket& sock, pb::ErrorCode code, const std::string& detail) {
    pb::ToolResponse resp;
    resp.mutable_error()->set_code(code);
    resp.mutable_error()->set_detail(detail);
    sock.queue(resp);
  }

  std::unique_ptr<protocol::Selector> selector_;
  Phase phase_ = Phase::kFresh;
};

// Serves a selector over TCP, one session at a time; every connection gets a
// fresh selector from the factory.
class ToolServer {
 public:
  ToolServer(protocol::SelectorFactory factory, const std::string& host = "127.0.0.1", std::uint16_t port = 0)
      : factory_(std::move(factory)), listener_(listen_on(host, port, port_)), host_(host) {}

  ToolServer(const ToolServer&) = delete;
  ToolServer& operator=(const ToolServer&) = delete;
  ~ToolServer() { stop(); }

  std::uint16_t port() const { return port_; }
  Endpoint endpoint() const { return {host_, port_}; }

  // Blocks until stop() is called.
  void serve() {
    while (!stopping_.load()) {
      pollfd p{listener_.get(), POLLIN, 0};
      if (::poll(&p, 1, 50) <= 0) continue;
      Fd conn(::accept(listener_.get(), nullptr, nullptr));
      if (!conn.valid()) continue;
      run_session(std::move(conn));
    }
  }

  void start() {
    thread_ = std::thread([this] { serve(); });
  }

  void stop() {
    stopping_.store(true);
    if (thread_.joinable()) thread_.join();
  }

  std::size_t sessions_served() const { return sessions_.load(); }

 private:
  void run_session(Fd conn) {
    FramedSocket sock(std::move(conn));
    SessionHandler handler(factory_());
    pb::ToolRequest req;
    try {
      for (;;) {
        bool alive = true;
        while (alive && sock.try_pop(req)) alive = handler.handle(req, sock);
        if (!alive) break;
        if (sock.peer_closed()) {
          sock.flush(Clock::now() + std::chrono::seconds(5));
          break;
        }
        if (stopping_.load()) break;
        sock.pump(Clock::now() + std::chrono::milliseconds(50));
      }
    } catch (const Error&) {
      // Broken stream: nothing more can be said to this peer.
    }
    sock.linger_close(std::chrono::seconds(2));
    ++sessions_;
  }

  protocol::SelectorFactory factory_;
  std::uint16_t port_ = 0;
  Fd listener_;
  std::string host_;
  std::atomic<bool> stopping_{false};
  std::atomic<std::size_t> sessions_{0};
  std::thread thread_;
};

}  // namespace sdcsel::wire
