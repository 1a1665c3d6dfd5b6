/*
 * Copyright 2026 The AMRule Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef AMRULE_ANNOTATION_HPP_
#define AMRULE_ANNOTATION_HPP_

#include <filesystem>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "amrule/json_util.hpp"
#include "amrule/rule.hpp"

namespace amrule::annotation {

// Accept is the only positive verdict for Prompt candidates, which have no
// parameters to bind.
enum class Verdict { kExactMatch, kRange, kContain, kAbstain, kAccept };

std::string_view VerdictName(Verdict verdict);
Verdict VerdictFromName(const std::string& name);

struct Decision {
  std::string rule_id;
  Verdict verdict = Verdict::kAbstain;
  std::optional<RangeDirection> direction;  // Range
  std::optional<Side> side;                 // Contain
  std::string annotator;
  std::string timestamp;

  // {"rule_id", "verdict", "params"} plus annotator/timestamp when set.
  Json ToJson() const;
  static Decision FromJson(const Json& json);

  // Equality ignores annotator and timestamp.
  bool SameVerdict(const Decision& other) const;
};

std::vector<Decision> LoadDecisions(const std::filesystem::path& path);
void AppendDecisions(const std::filesystem::path& path,
                     std::span<const Decision> decisions);

// Throws kValidation when the verdict cannot apply to the candidate.
void ValidateDecision(const CandidateRule& candidate, const Decision& decision);

// The candidate with the decision's parameters bound.
CandidateRule BindDecision(const CandidateRule& candidate,
                           const Decision& decision);

struct CandidateContext {
  CandidateRule rule;
  std::vector<Json> examples;  // up to 3 large-error pairs

  Json ToJson() const;
  static CandidateContext FromJson(const Json& json);
};

enum class SessionState { kOpen, kFinalized };

struct RuleSet {
  std::vector<CandidateRule> accepted;
  std::vector<CandidateRule> rejected;
};

class AnnotationSession {
 public:
  AnnotationSession() = default;
  AnnotationSession(int iteration, std::vector<CandidateContext> candidates);

  int iteration() const { return iteration_; }
  SessionState state() const { return state_; }
  const std::vector<CandidateContext>& candidates() const { return candidates_; }
  const std::map<std::string, Decision>& decisions() const { return decisions_; }
  std::vector<std::string> PendingIds() const;

  // Idempotent on an identical resubmission; a different verdict for an
  // already decided rule replaces it while the session is open.
  void Submit(const Decision& decision);
  const RuleSet& Finalize();
  const std::optional<RuleSet>& result() const { return result_; }

  Json ToJson() const;
  static AnnotationSession FromJson(const Json& json);

 private:
  const CandidateContext& Find(const std::string& rule_id) const;

  int iteration_ = 0;
  std::vector<CandidateContext> candidates_;
  std::map<std::string, Decision> decisions_;
  SessionState state_ = SessionState::kOpen;
  std::optional<RuleSet> result_;
};

// Holds at most one open session and serializes mutations. The persist hook
// runs after each mutation and before the call returns.
class SessionManager {
 public:
  using PersistHook = std::function<void(const AnnotationSession&)>;

  explicit SessionManager(std::size_t budget = 10, PersistHook persist = {})
      : budget_(budget), persist_(std::move(persist)) {}

  void set_persist_hook(PersistHook persist);
  void set_budget(std::size_t budget);

  // Throws kConflict while another session is open, kValidation when the
  // candidate count exceeds the budget. Empty candidate lists finalize
  // immediately.
  AnnotationSession Open(int iteration, std::vector<CandidateContext> candidates);
  // Reinstates a persisted session (crash recovery).
  void Restore(AnnotationSession session);

  AnnotationSession Submit(const Decision& decision);
  RuleSet Finalize();

  // Blocks until the session of `iteration` is finalized, or throws
  // kConflict once Cancel() is called.
  RuleSet WaitForFinalize(int iteration);
  void Cancel();
  // Drops any current session, open or not.
  void Discard();

  bool has_session() const;
  bool has_open_session() const;
  // Copy of the current (open or last finalized) session; kConflict if none.
  AnnotationSession Current() const;

 private:
  AnnotationSession& RequireOpen();

  std::size_t budget_;
  PersistHook persist_;
  mutable std::mutex mu_;
  std::condition_variable finalized_;
  bool cancelled_ = false;
  std::optional<AnnotationSession> current_;
};

class Annotator {
 public:
  virtual ~Annotator() = default;
  virtual Decision Decide(const CandidateContext& candidate) = 0;
};

// Accepts a candidate iff it matches a planted rule, with the true direction
// for Range. Prompt candidates are accepted when their attribute is the
// attribute of a planted ExactMatch and the filled template asserts that the
// values are the same for a compatible pair.
class ScriptedAnnotator : public Annotator {
 public:
  explicit ScriptedAnnotator(std::vector<PlantedRule> truth)
      : truth_(std::move(truth)) {}
  Decision Decide(const CandidateContext& candidate) override;

 private:
  std::vector<PlantedRule> truth_;
};

// Replays a decisions file. A candidate with no recorded decision is an
// error (kNotFound).
class ReplayAnnotator : public Annotator {
 public:
  explicit ReplayAnnotator(std::vector<Decision> decisions);
  Decision Decide(const CandidateContext& candidate) override;

 private:
  std::map<std::string, Decision> by_id_;
};

}  // namespace amrule::annotation

#endif  // AMRULE_ANNOTATION_HPP_
