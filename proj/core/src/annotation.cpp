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

#include "amrule/annotation.hpp"

#include <fstream>
#include <set>

#include "amrule/error.hpp"

namespace amrule::annotation {

std::string_view VerdictName(Verdict verdict) {
  switch (verdict) {
    case Verdict::kExactMatch:
      return "ExactMatch";
    case Verdict::kRange:
      return "Range";
    case Verdict::kContain:
      return "Contain";
    case Verdict::kAbstain:
      return "Abstain";
    case Verdict::kAccept:
      return "Accept";
  }
  return "Abstain";
}

Verdict VerdictFromName(const std::string& name) {
  for (auto v : {Verdict::kExactMatch, Verdict::kRange, Verdict::kContain,
                 Verdict::kAbstain, Verdict::kAccept}) {
    if (VerdictName(v) == name) return v;
  }
  throw Error(ErrorCode::kValidation, "unknown verdict '" + name + "'");
}

Json Decision::ToJson() const {
  Json params = Json::object();
  if (direction) params["direction"] = RangeDirectionName(*direction);
  if (side) params["side"] = SideName(*side);
  Json j = {{"rule_id", rule_id},
            {"verdict", VerdictName(verdict)},
            {"params", params}};
  if (!annotator.empty()) j["annotator"] = annotator;
  if (!timestamp.empty()) j["timestamp"] = timestamp;
  return j;
}

Decision Decision::FromJson(const Json& j) {
  Decision d;
  try {
    d.rule_id = j.at("rule_id").get<std::string>();
    d.verdict = VerdictFromName(j.at("verdict").get<std::string>());
    if (j.contains("params") && !j["params"].is_null()) {
      const auto& p = j["params"];
      if (!p.is_object()) {
        throw Error(ErrorCode::kValidation, "params must be an object");
      }
      if (p.contains("direction")) {
        d.direction = RangeDirectionFromName(p["direction"].get<std::string>());
      }
      if (p.contains("side")) d.side = SideFromName(p["side"].get<std::string>());
    }
    if (j.contains("annotator")) d.annotator = j["annotator"].get<std::string>();
    if (j.contains("timestamp")) d.timestamp = j["timestamp"].get<std::string>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("bad decision: ") + e.what());
  }
  return d;
}

bool Decision::SameVerdict(const Decision& o) const {
  return rule_id == o.rule_id && verdict == o.verdict &&
         direction == o.direction && side == o.side;
}

std::vector<Decision> LoadDecisions(const std::filesystem::path& path) {
  std::vector<Decision> out;
  for (const auto& line : ReadJsonLines(path)) {
    out.push_back(Decision::FromJson(Json(line)));
  }
  return out;
}

void AppendDecisions(const std::filesystem::path& path,
                     std::span<const Decision> decisions) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  for (const auto& d : decisions) {
    Decision bare = d;
    bare.timestamp.clear();
    out << bare.ToJson().dump() << "\n";
  }
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

void ValidateDecision(const CandidateRule& c, const Decision& d) {
  auto mismatch = [&] {
    throw Error(ErrorCode::kValidation,
                std::string(VerdictName(d.verdict)) + " verdict cannot apply to " +
                    std::string(RuleKindName(c.kind)) + " candidate " + c.id);
  };
  switch (d.verdict) {
    case Verdict::kAbstain:
      return;
    case Verdict::kExactMatch:
      if (c.kind != RuleKind::kExactMatch) mismatch();
      return;
    case Verdict::kAccept:
      if (c.kind != RuleKind::kPrompt) mismatch();
      return;
    case Verdict::kRange:
      if (c.kind != RuleKind::kRange) mismatch();
      if (!d.direction || *d.direction == RangeDirection::kUnresolved) {
        throw Error(ErrorCode::kValidation,
                    "Range verdict needs a direction (le or ge)");
      }
      return;
    case Verdict::kContain:
      if (c.kind != RuleKind::kContain) mismatch();
      if (d.side && *d.side != c.side) {
        throw Error(ErrorCode::kValidation,
                    "Contain verdict names a different side than the candidate");
      }
      return;
  }
}

CandidateRule BindDecision(const CandidateRule& c, const Decision& d) {
  ValidateDecision(c, d);
  CandidateRule out = c;
  if (d.verdict == Verdict::kRange) out.direction = *d.direction;
  return out;
}

Json CandidateContext::ToJson() const {
  return {{"rule", rule.ToJson()},
          {"description", rule.Describe()},
          {"examples", examples}};
}

CandidateContext CandidateContext::FromJson(const Json& j) {
  CandidateContext c;
  c.rule = CandidateRule::FromJson(j.at("rule"));
  for (const auto& e : j.at("examples")) c.examples.push_back(e);
  return c;
}

AnnotationSession::AnnotationSession(int iteration,
                                     std::vector<CandidateContext> candidates)
    : iteration_(iteration), candidates_(std::move(candidates)) {
  std::set<std::string> ids;
  for (const auto& c : candidates_) {
    if (!ids.insert(c.rule.id).second) {
      throw Error(ErrorCode::kValidation, "duplicate candidate id " + c.rule.id);
    }
  }
}

const CandidateContext& AnnotationSession::Find(const std::string& id) const {
  for (const auto& c : candidates_) {
    if (c.rule.id == id) return c;
  }
  throw Error(ErrorCode::kNotFound, "no candidate with id '" + id + "'");
}

std::vector<std::string> AnnotationSession::PendingIds() const {
  std::vector<std::string> out;
  for (const auto& c : candidates_) {
    if (!decisions_.contains(c.rule.id)) out.push_back(c.rule.id);
  }
  return out;
}

void AnnotationSession::Submit(const Decision& decision) {
  const auto& candidate = Find(decision.rule_id);
  if (state_ != SessionState::kOpen) {
    auto it = decisions_.find(decision.rule_id);
    if (it != decisions_.end() && it->second.SameVerdict(decision)) return;
    throw Error(ErrorCode::kConflict, "session is already finalized");
  }
  ValidateDecision(candidate.rule, decision);
  auto it = decisions_.find(decision.rule_id);
  if (it != decisions_.end() && it->second.SameVerdict(decision)) return;
  decisions_[decision.rule_id] = decision;
}

const RuleSet& AnnotationSession::Finalize() {
  if (result_) return *result_;
  const auto pending = PendingIds();
  if (!pending.empty()) {
    throw Error(ErrorCode::kIncompleteSession,
                std::to_string(pending.size()) + " candidates still pending");
  }
  RuleSet rs;
  for (const auto& c : candidates_) {
    const auto& d = decisions_.at(c.rule.id);
    if (d.verdict == Verdict::kAbstain) {
      rs.rejected.push_back(c.rule);
    } else {
      rs.accepted.push_back(BindDecision(c.rule, d));
    }
  }
  result_ = std::move(rs);
  state_ = SessionState::kFinalized;
  return *result_;
}

Json AnnotationSession::ToJson() const {
  Json cands = Json::array();
  for (const auto& c : candidates_) cands.push_back(c.ToJson());
  Json decs = Json::array();
  for (const auto& c : candidates_) {
    if (auto it = decisions_.find(c.rule.id); it != decisions_.end()) {
      decs.push_back(it->second.ToJson());
    }
  }
  Json j = {{"iteration", iteration_},
            {"state", state_ == SessionState::kOpen ? "open" : "finalized"},
            {"candidates", cands},
            {"decisions", decs},
            {"pending", PendingIds()}};
  if (result_) {
    Json acc = Json::array(), rej = Json::array();
    for (const auto& r : result_->accepted) acc.push_back(r.ToJson());
    for (const auto& r : result_->rejected) rej.push_back(r.ToJson());
    j["accepted"] = acc;
    j["rejected"] = rej;
  }
  return j;
}

AnnotationSession AnnotationSession::FromJson(const Json& j) {
  std::vector<CandidateContext> cands;
  for (const auto& c : j.at("candidates")) {
    cands.push_back(CandidateContext::FromJson(c));
  }
  AnnotationSession s(j.at("iteration").get<int>(), std::move(cands));
  for (const auto& d : j.at("decisions")) s.Submit(Decision::FromJson(d));
  if (j.at("state").get<std::string>() == "finalized") s.Finalize();
  return s;
}

void SessionManager::set_persist_hook(PersistHook persist) {
  std::lock_guard lock(mu_);
  persist_ = std::move(persist);
}

AnnotationSession SessionManager::Open(int iteration,
                                       std::vector<CandidateContext> candidates) {
  std::lock_guard lock(mu_);
  if (current_ && current_->state() == SessionState::kOpen) {
    throw Error(ErrorCode::kConflict, "an annotation session is already open");
  }
  if (candidates.size() > budget_) {
    throw Error(ErrorCode::kValidation,
                "session holds " + std::to_string(candidates.size()) +
                    " candidates, budget is " + std::to_string(budget_));
  }
  AnnotationSession session(iteration, std::move(candidates));
  if (session.candidates().empty()) session.Finalize();
  if (persist_) persist_(session);
  current_ = std::move(session);
  finalized_.notify_all();
  return *current_;
}

void SessionManager::Restore(AnnotationSession session) {
  std::lock_guard lock(mu_);
  if (persist_) persist_(session);
  current_ = std::move(session);
  finalized_.notify_all();
}

RuleSet SessionManager::WaitForFinalize(int iteration) {
  std::unique_lock lock(mu_);
  finalized_.wait(lock, [&] {
    return cancelled_ ||
           (current_ && current_->iteration() == iteration &&
            current_->state() == SessionState::kFinalized);
  });
  if (!(current_ && current_->iteration() == iteration &&
        current_->state() == SessionState::kFinalized)) {
    throw Error(ErrorCode::kConflict, "annotation wait cancelled");
  }
  return *current_->result();
}

void SessionManager::set_budget(std::size_t budget) {
  std::lock_guard lock(mu_);
  budget_ = budget;
}

void SessionManager::Discard() {
  std::lock_guard lock(mu_);
  current_.reset();
}

void SessionManager::Cancel() {
  std::lock_guard lock(mu_);
  cancelled_ = true;
  finalized_.notify_all();
}

AnnotationSession& SessionManager::RequireOpen() {
  if (!current_ || current_->state() != SessionState::kOpen) {
    throw Error(ErrorCode::kConflict, "no open annotation session");
  }
  return *current_;
}

AnnotationSession SessionManager::Submit(const Decision& decision) {
  std::lock_guard lock(mu_);
  if (!current_) throw Error(ErrorCode::kConflict, "no annotation session");
  AnnotationSession next = *current_;
  next.Submit(decision);
  if (persist_) persist_(next);
  current_ = std::move(next);
  return *current_;
}

RuleSet SessionManager::Finalize() {
  std::lock_guard lock(mu_);
  if (!current_) throw Error(ErrorCode::kConflict, "no annotation session");
  if (current_->state() == SessionState::kFinalized) return *current_->result();
  AnnotationSession next = *current_;
  next.Finalize();
  if (persist_) persist_(next);
  current_ = std::move(next);
  finalized_.notify_all();
  return *current_->result();
}

bool SessionManager::has_session() const {
  std::lock_guard lock(mu_);
  return current_.has_value();
}

bool SessionManager::has_open_session() const {
  std::lock_guard lock(mu_);
  return current_ && current_->state() == SessionState::kOpen;
}

AnnotationSession SessionManager::Current() const {
  std::lock_guard lock(mu_);
  if (!current_) throw Error(ErrorCode::kConflict, "no annotation session");
  return *current_;
}

Decision ScriptedAnnotator::Decide(const CandidateContext& candidate) {
  const auto& c = candidate.rule;
  Decision d;
  d.rule_id = c.id;
  d.annotator = "scripted";
  d.verdict = Verdict::kAbstain;
  for (const auto& truth : truth_) {
    if (c.kind == RuleKind::kPrompt) {
      if (truth.kind == RuleKind::kExactMatch && truth.attribute == c.attribute &&
          c.prompt && c.prompt->positive_polarity &&
          c.prompt->relation_token == "same") {
        d.verdict = Verdict::kAccept;
        return d;
      }
      continue;
    }
    if (!truth.Matches(c)) continue;
    switch (c.kind) {
      case RuleKind::kExactMatch:
        d.verdict = Verdict::kExactMatch;
        break;
      case RuleKind::kRange:
        d.verdict = Verdict::kRange;
        d.direction = truth.direction;
        break;
      case RuleKind::kContain:
        d.verdict = Verdict::kContain;
        d.side = truth.side;
        break;
      case RuleKind::kPrompt:
        break;
    }
    return d;
  }
  return d;
}

ReplayAnnotator::ReplayAnnotator(std::vector<Decision> decisions) {
  for (auto& d : decisions) {
    const std::string id = d.rule_id;
    by_id_[id] = std::move(d);
  }
}

Decision ReplayAnnotator::Decide(const CandidateContext& candidate) {
  auto it = by_id_.find(candidate.rule.id);
  if (it == by_id_.end()) {
    throw Error(ErrorCode::kNotFound,
                "decisions file has no entry for rule " + candidate.rule.id);
  }
  return it->second;
}

}  // namespace amrule::annotation
