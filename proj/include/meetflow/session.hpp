#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "meetflow/clock.hpp"
#include "meetflow/core_model.hpp"
#include "meetflow/focus_tool.hpp"
#include "meetflow/hotl_controller.hpp"
#include "meetflow/layout_engine.hpp"
#include "meetflow/phase_pipeline.hpp"
#include "meetflow/phase_tracker.hpp"

namespace meetflow {

enum class Lifecycle { created, pre_meeting, refining, ready, in_meeting, ended };

std::string_view to_string(Lifecycle l) noexcept;
Lifecycle parse_lifecycle(std::string_view s);

struct SessionConfig {
  HotlConfig hotl;
  int top_k = kDefaultTopK;
  int max_attempts = kDefaultMaxAttempts;
  int min_features = kDefaultMinFeatures;
  ClassifierKind classifier = ClassifierKind::keyword_fallback;
  std::vector<PhaseIndex> scripted_verdicts;  // used when classifier == scripted
  std::vector<std::string> available_programs{"PowerPoint", "Excel", "Word", "Notepad", "Whiteboard", "Browser"};
  std::string scenario_text;                  // focus tool scenario; empty means the invitation text
  std::optional<Millis> response_deadline;    // measured from session creation
  std::set<std::string> roles;                // empty means the default role set

  RoleSet role_set() const { return roles.empty() ? RoleSet{} : RoleSet{roles}; }
  bool operator==(const SessionConfig&) const = default;
};

void require_valid(const SessionConfig& config);

struct SessionState {
  std::string session_id;
  Lifecycle lifecycle = Lifecycle::created;
  SessionConfig config;
  Timestamp created_at{};
  Invitation invitation;
  std::optional<PhasePlan> plan;
  std::optional<FocusTool> focus_tool;
  std::vector<FocusResponse> responses;
  std::optional<DivergenceReport> divergence;
  std::optional<std::vector<PlacedLayout>> layouts;
  std::optional<PhaseIndex> applied_layout;
  TrackerState tracker;
  std::optional<TransitionProposal> proposal;
  std::uint64_t proposals_opened = 0;
  std::uint64_t utterance_count = 0;
  std::map<ParticipantId, RoleName> members;
  std::uint64_t last_seq = 0;

  bool is_member(const ParticipantId& id) const { return members.contains(id); }
  std::set<ParticipantId> member_ids() const;
  bool operator==(const SessionState&) const = default;
};

enum class EventKind {
  session_created,
  member_joined,
  plan_generated,
  focus_tool_ready,
  focus_response_submitted,
  divergence_published,
  plan_refined,
  layouts_generated,
  meeting_started,
  utterance_ingested,
  transition_proposed,
  transition_aborted,
  transition_committed,
  layout_applied,
  meeting_ended,
};

std::string_view to_string(EventKind k) noexcept;
std::optional<EventKind> parse_event_kind(std::string_view s) noexcept;

struct EventRecord {
  std::uint64_t seq = 0;
  Timestamp at{};
  EventKind kind = EventKind::session_created;
  Json payload = Json::object();

  bool operator==(const EventRecord&) const = default;
};

// The single fold shared by live sessions and replay. Throws GapDetected when
// seq is not last_seq + 1 and LifecycleViolation when the event is not legal
// in the current lifecycle.
void apply(SessionState& state, const EventRecord& event);

SessionState replay(std::span<const EventRecord> log);

// One JSON object per line.
std::string to_line(const EventRecord& event);
EventRecord parse_event_line(std::string_view line);  // UnknownEventKind, ParseFailure
std::vector<EventRecord> read_event_log(const std::filesystem::path& path);

void to_json(Json& j, const SessionConfig& c);
void from_json(const Json& j, SessionConfig& c);
void to_json(Json& j, const EventRecord& e);
void from_json(const Json& j, EventRecord& e);
Json state_json(const SessionState& s);

}  // namespace meetflow
