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
#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sdcsel/error.hpp"
#include "sdcsel/model.hpp"

// The evaluator <-> tool contract. A session is strictly sequential:
//
//   get_name  ->  initialize(stream of labeled cases) -> ack
//             ->  select(stream of bare cases) -> one decision per case
//
// Tools implement Selector. The evaluator talks to a ToolClient, which is
// either InProcessClient (wrapping a Selector) or wire::RemoteClient. Both
// apply the same reply checks so they are interchangeable.

namespace sdcsel::protocol {

struct ToolIdentity {
  std::string name;
};

struct InitializationItem {
  TestCase test_case;
  OracleRecord oracle;
};

struct InitializationAck {
  bool done = false;
  std::string detail;
};

enum class FailureKind { kUnreachable, kTimeout, kToolError, kStreamBroken, kProtocolViolation };

inline std::string_view to_string(FailureKind k) {
  switch (k) {
    case FailureKind::kUnreachable:
      return "Unreachable";
    case FailureKind::kTimeout:
      return "Timeout";
    case FailureKind::kToolError:
      return "ToolError";
    case FailureKind::kStreamBroken:
      return "StreamBroken";
    case FailureKind::kProtocolViolation:
      return "ProtocolViolation";
  }
  return "Unknown";
}

class ProtocolError : public Error {
 public:
  ProtocolError(FailureKind kind, std::string detail)
      : Error(std::string(to_string(kind)) + ": " + detail), kind_(kind), detail_(std::move(detail)) {}

  FailureKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  FailureKind kind_;
  std::string detail_;
};

// Thrown by a Selector to report a failure to the evaluator.
class ToolFailure : public Error {
 public:
  using Error::Error;
};

using DecisionSink = std::function<void(SelectionDecision)>;

// Tool side of the contract, driven one message at a time.
class Selector {
 public:
  virtual ~Selector() = default;

  virtual std::string name() const = 0;

  // Starts a fresh initialization stream; discards any previous training.
  virtual void begin_initialization() = 0;
  virtual void consume(const InitializationItem& item) = 0;
  virtual InitializationAck end_initialization() = 0;

  virtual void begin_selection() = 0;
  // May emit decisions for this or earlier cases right away, or hold them
  // until end_selection.
  virtual void offer(const TestCase& test_case, const DecisionSink& emit) = 0;
  virtual void end_selection(const DecisionSink& emit) = 0;
};

using SelectorFactory = std::function<std::unique_ptr<Selector>()>;

struct Timeouts {
  std::chrono::milliseconds connect{5'000};
  std::chrono::milliseconds initialize{600'000};
  std::chrono::milliseconds select{300'000};
};

// Evaluator side of one session.
class ToolClient {
 public:
  virtual ~ToolClient() = default;

  virtual ToolIdentity get_name() = 0;
  virtual InitializationAck initialize(std::span<const InitializationItem> items) = 0;
  virtual std::vector<SelectionDecision> select(std::span<const TestCase> cases) = 0;
};

using ToolClientFactory = std::function<std::unique_ptr<ToolClient>()>;

enum class ReplyMode {
  kStrict,    // exactly one decision per case
  kImplicit,  // only selected ids are sent; the rest are inferred unselected
};

// Checks a complete reply stream against the cases that were sent and returns
// the decisions in case order. Throws ProtocolViolation naming the first
// offending id.
inline std::vector<SelectionDecision> check_decisions(std::span<const TestCase> cases,
                                                      std::vector<SelectionDecision> replies, ReplyMode mode) {
  std::unordered_map<std::string_view, std::size_t> index;
  index.reserve(cases.size());
  for (std::size_t i = 0; i < cases.size(); ++i) index.emplace(cases[i].test_id, i);

  std::vector<std::optional<bool>> verdict(cases.size());
  for (const auto& d : replies) {
    auto it = index.find(d.test_id);
    if (it == index.end()) {
      throw ProtocolError(FailureKind::kProtocolViolation, "decision for unknown test_id '" + d.test_id + "'");
    }
    auto& slot = verdict[it->second];
    if (slot) {
      throw ProtocolError(FailureKind::kProtocolViolation, "duplicate decision for test_id '" + d.test_id + "'");
    }
    slot = d.selected;
  }

  std::vector<SelectionDecision> out;
  out.reserve(cases.size());
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (!verdict[i]) {
      if (mode == ReplyMode::kStrict) {
        throw ProtocolError(FailureKind::kProtocolViolation, "missing decision for test_id '" + cases[i].test_id + "'");
      }
      verdict[i] = false;
    }
    out.push_back({cases[i].test_id, *verdict[i]});
  }
  return out;
}

// Session ordering shared by both client kinds.
class SessionState {
 public:
  void named() { phase_ = std::max(phase_, Phase::kNamed); }
  void initialized() { phase_ = Phase::kInitialized; }

  void require_initialized() const {
    if (phase_ != Phase::kInitialized) {
      throw ProtocolError(FailureKind::kProtocolViolation, "select before initialize");
    }
  }

 private:
  enum class Phase { kFresh, kNamed, kInitialized };
  Phase phase_ = Phase::kFresh;
};

// Runs a Selector in the evaluator's own thread. Timeouts are checked after
// each phase returns since an in-process call cannot be interrupted.
class InProcessClient final : public ToolClient {
 public:
  explicit InProcessClient(std::unique_ptr<Selector> selector, Timeouts timeouts = {},
                           ReplyMode mode = ReplyMode::kStrict)
      : selector_(std::move(selector)), timeouts_(timeouts), mode_(mode) {}

  ToolIdentity get_name() override {
    auto id = guarded([&] { return ToolIdentity{selector_->name()}; });
    state_.named();
    return id;
  }

  InitializationAck initialize(std::span<const InitializationItem> items) override {
    const auto start = std::chrono::steady_clock::now();
    auto ack = guarded([&] {
      selector_->begin_initialization();
      for (const auto& item : items) selector_->consume(item);
      return selector_->end_initialization();
    });
    check_budget(start, timeouts_.initialize, "initialize");
    if (!ack.done) throw ProtocolError(FailureKind::kToolError, "initialization not acknowledged: " + ack.detail);
    state_.initialized();
    return ack;
  }

  std::vector<SelectionDecision> select(std::span<const TestCase> cases) override {
    state_.require_initialized();
    const auto start = std::chrono::steady_clock::now();
    std::vector<SelectionDecision> replies;
    guarded([&] {
      DecisionSink sink = [&replies](SelectionDecision d) { replies.push_back(std::move(d)); };
      selector_->begin_selection();
      for (const auto& tc : cases) selector_->offer(tc, sink);
      selector_->end_selection(sink);
      return 0;
    });
    check_budget(start, timeouts_.select, "select");
    return check_decisions(cases, std::move(replies), mode_);
  }

 private:
  template <typename F>
  static std::invoke_result_t<F> guarded(F&& f) {
    try {
      return f();
    } catch (const ProtocolError&) {
      throw;
    } catch (const std::exception& e) {
      throw ProtocolError(FailureKind::kToolError, e.what());
    }
  }

  static void check_budget(std::chrono::steady_clock::time_point start, std::chrono::milliseconds budget,
                           const char* phase) {
    if (std::chrono::steady_clock::now() - start > budget) {
      throw ProtocolError(FailureKind::kTimeout,
                          std::string(phase) + " exceeded " + std::to_string(budget.count()) + " ms");
    }
  }

  std::unique_ptr<Selector> selector_;
  Timeouts timeouts_;
  ReplyMode mode_;
  SessionState state_;
};

inline std::vector<InitializationItem> to_init_items(const TestSuite& suite) {
  std::vector<InitializationItem> items;
  items.reserve(suite.cases.size());
  for (const auto& lc : suite.cases) items.push_back({lc.test_case, lc.oracle});
  return items;
}

// Bare cases only: oracles never leave the evaluator during selection.
inline std::vector<TestCase> to_select_cases(const TestSuite& suite) {
  std::vector<TestCase> cases;
  cases.reserve(suite.cases.size());
  for (const auto& lc : suite.cases) cases.push_back(lc.test_case);
  return cases;
}

}  // namespace sdcsel::protocol
