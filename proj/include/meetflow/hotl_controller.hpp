#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "meetflow/clock.hpp"
#include "meetflow/core_model.hpp"
#include "meetflow/phase_tracker.hpp"

namespace meetflow {

// Human-on-the-loop transitions: the system proposes a phase change, any
// participant may abort it before the deadline, otherwise it commits.

struct HotlConfig {
  Millis proposal_window{10'000};
  Millis abort_cooldown{60'000};
  int abort_cooldown_utterances = 5;

  bool operator==(const HotlConfig&) const = default;
};

void require_valid(const HotlConfig& config);

enum class ProposalStatus { open, aborted, committed };

std::string_view to_string(ProposalStatus s) noexcept;
ProposalStatus parse_proposal_status(std::string_view s);

struct TransitionProposal {
  std::string proposal_id;
  PhaseIndex from_index = 0;
  PhaseIndex to_index = 0;
  Timestamp opened_at{};
  Timestamp deadline{};
  ProposalStatus status = ProposalStatus::open;
  std::optional<ParticipantId> aborted_by;

  bool is_open() const noexcept { return status == ProposalStatus::open; }
  bool operator==(const TransitionProposal&) const = default;
};

struct CommitEffect {
  TransitionProposal proposal;  // status committed
  PhaseIndex to_index = 0;
};

namespace hotl {

// "p<ordinal>", ordinals start at 1 per session.
std::string proposal_id_for(std::uint64_t ordinal);

// Throws Error(ProposalAlreadyOpen) if `current` is still open.
TransitionProposal open_proposal(const HotlConfig& config, const std::optional<TransitionProposal>& current,
                                 const TrackerState& tracker, const TransitionCandidate& candidate, Timestamp now,
                                 std::uint64_t ordinal);

// Veto by a single member. Throws ProposalNotOpen, DeadlinePassed or UnknownParticipant.
TransitionProposal abort(const std::optional<TransitionProposal>& current, std::string_view proposal_id,
                         const ParticipantId& participant, const std::set<ParticipantId>& members, Timestamp now);

// Commit once the deadline has been reached with no objection.
std::optional<CommitEffect> tick(const std::optional<TransitionProposal>& current, Timestamp now);

// Tracker consequences of the terminal statuses.
void apply_abort(TrackerState& tracker, const HotlConfig& config, const TransitionProposal& aborted, Timestamp at);
void apply_commit(TrackerState& tracker, const TransitionProposal& committed);

}  // namespace hotl

void to_json(Json& j, const HotlConfig& c);
void from_json(const Json& j, HotlConfig& c);
void to_json(Json& j, const TransitionProposal& p);
void from_json(const Json& j, TransitionProposal& p);

}  // namespace meetflow
