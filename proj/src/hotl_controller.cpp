#include "meetflow/hotl_controller.hpp"

namespace meetflow {

void require_valid(const HotlConfig& config) {
  if (config.proposal_window <= Millis::zero()) {
    throw Error(ErrorCode::ConfigError, "proposal window must be positive");
  }
  if (config.abort_cooldown < Millis::zero() || config.abort_cooldown_utterances < 0) {
    throw Error(ErrorCode::ConfigError, "abort cooldown must not be negative");
  }
}

std::string_view to_string(ProposalStatus s) noexcept {
  switch (s) {
    case ProposalStatus::open: return "open";
    case ProposalStatus::aborted: return "aborted";
    case ProposalStatus::committed: return "committed";
  }
  return "unknown";
}

ProposalStatus parse_proposal_status(std::string_view s) {
  if (s == "open") return ProposalStatus::open;
  if (s == "aborted") return ProposalStatus::aborted;
  if (s == "committed") return ProposalStatus::committed;
  throw Error(ErrorCode::InvalidArgument, "unknown proposal status '" + std::string(s) + "'");
}

namespace hotl {

std::string proposal_id_for(std::uint64_t ordinal) { return "p" + std::to_string(ordinal); }

TransitionProposal open_proposal(const HotlConfig& config, const std::optional<TransitionProposal>& current,
                                 const TrackerState& tracker, const TransitionCandidate& candidate, Timestamp now,
                                 std::uint64_t ordinal) {
  if (current && current->is_open()) {
    throw Error(ErrorCode::ProposalAlreadyOpen, "proposal " + current->proposal_id + " is still open");
  }
  TransitionProposal p;
  p.proposal_id = proposal_id_for(ordinal);
  p.from_index = tracker.current_phase_index;
  p.to_index = candidate.target_index;
  p.opened_at = now;
  p.deadline = now + config.proposal_window;
  p.status = ProposalStatus::open;
  return p;
}

TransitionProposal abort(const std::optional<TransitionProposal>& current, std::string_view proposal_id,
                         const ParticipantId& participant, const std::set<ParticipantId>& members, Timestamp now) {
  if (!members.contains(participant)) {
    throw Error(ErrorCode::UnknownParticipant, "'" + participant + "' is not a member of this session");
  }
  if (!current || current->proposal_id != proposal_id || !current->is_open()) {
    throw Error(ErrorCode::ProposalNotOpen, "proposal " + std::string(proposal_id) + " is not open");
  }
  if (now >= current->deadline) {
    throw Error(ErrorCode::DeadlinePassed, "proposal " + current->proposal_id + " reached its deadline");
  }
  TransitionProposal p = *current;
  p.status = ProposalStatus::aborted;
  p.aborted_by = participant;
  return p;
}

std::optional<CommitEffect> tick(const std::optional<TransitionProposal>& current, Timestamp now) {
  if (!current || !current->is_open() || now < current->deadline) return std::nullopt;
  TransitionProposal p = *current;
  p.status = ProposalStatus::committed;
  return CommitEffect{p, p.to_index};
}

void apply_abort(TrackerState& tracker, const HotlConfig& config, const TransitionProposal& aborted, Timestamp at) {
  install_cooldown(tracker, aborted.to_index, at + config.abort_cooldown, config.abort_cooldown_utterances);
}

void apply_commit(TrackerState& tracker, const TransitionProposal& committed) {
  enter_phase(tracker, committed.to_index);
}

}  // namespace hotl

void to_json(Json& j, const HotlConfig& c) {
  j = {{"proposal_window_ms", c.proposal_window.count()},
       {"abort_cooldown_ms", c.abort_cooldown.count()},
       {"abort_cooldown_utterances", c.abort_cooldown_utterances}};
}

void from_json(const Json& j, HotlConfig& c) {
  const HotlConfig defaults;
  c.proposal_window = Millis{j.value("proposal_window_ms", defaults.proposal_window.count())};
  c.abort_cooldown = Millis{j.value("abort_cooldown_ms", defaults.abort_cooldown.count())};
  c.abort_cooldown_utterances = j.value("abort_cooldown_utterances", defaults.abort_cooldown_utterances);
}

void to_json(Json& j, const TransitionProposal& p) {
  j = {{"proposal_id", p.proposal_id},
       {"from_index", p.from_index},
       {"to_index", p.to_index},
       {"opened_at_ms", to_millis(p.opened_at)},
       {"deadline_ms", to_millis(p.deadline)},
       {"status", to_string(p.status)},
       {"aborted_by", p.aborted_by ? Json(*p.aborted_by) : Json(nullptr)}};
}

void from_json(const Json& j, TransitionProposal& p) {
  p.proposal_id = j.at("proposal_id").get<std::string>();
  p.from_index = j.at("from_index").get<PhaseIndex>();
  p.to_index = j.at("to_index").get<PhaseIndex>();
  p.opened_at = from_millis(j.at("opened_at_ms").get<std::int64_t>());
  p.deadline = from_millis(j.at("deadline_ms").get<std::int64_t>());
  p.status = parse_proposal_status(j.at("status").get<std::string>());
  const auto& by = j.at("aborted_by");
  p.aborted_by = by.is_null() ? std::nullopt : std::optional<ParticipantId>(by.get<std::string>());
}

}  // namespace meetflow
