#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "meetflow/session.hpp"
#include "meetflow/sync_server.hpp"

namespace meetflow {

struct ScenarioMember {
  ParticipantId participant_id;
  RoleName role;
};

// Every feature gets `fallback` unless listed in `overrides` (by feature id).
struct FocusVote {
  Selection fallback = Selection::include;
  Selections overrides;
};

struct ScriptedUtterance {
  Millis at{0};  // since meeting start
  ParticipantId speaker_id;
  std::string text;
};

struct ScriptedAbort {
  std::uint64_t proposal_ordinal = 1;
  ParticipantId participant_id;
  Millis after{1000};  // since the proposal opened
};

inline constexpr std::int64_t kDefaultScenarioStartMs = 1'700'000'000'000;

struct ScenarioScript {
  Invitation invitation;
  std::vector<ScenarioMember> members;
  std::map<ParticipantId, FocusVote> focus_votes;
  std::vector<ScriptedUtterance> utterances;
  std::vector<ScriptedAbort> aborts;
  SessionConfig config;  // scripted_verdicts in the file switch the classifier to scripted
  std::filesystem::path fixture_dir;  // resolved against the script's directory
  Timestamp start = from_millis(kDefaultScenarioStartMs);
};

ScenarioScript parse_scenario(const Json& doc, const std::filesystem::path& base_dir = {});
ScenarioScript load_scenario(const std::filesystem::path& path);

// Throws InvalidArgument naming the first reference to a non-member.
void require_valid(const ScenarioScript& script);

Selections selections_for(const FocusVote& vote, const FocusTool& tool);

struct TimelineEntry {
  Timestamp at{};
  std::uint64_t seq = 0;
  std::string text;
};

struct TimelineReport {
  std::string session_id;
  Timestamp start{};
  std::vector<TimelineEntry> entries;
  std::size_t proposals = 0;
  std::size_t aborts = 0;
  std::size_t commits = 0;
  std::vector<std::string> errors;
  std::optional<SessionState> final_state;

  bool ok() const noexcept { return errors.empty(); }
};

TimelineReport build_timeline(const std::vector<EventRecord>& log, Timestamp start);
std::string render_timeline(const TimelineReport& report);

struct ScenarioOutcome {
  TimelineReport report;
  std::vector<EventRecord> log;
  std::optional<ErrorCode> first_error;  // drives the exit code
};

struct ScenarioRunOptions {
  std::optional<std::filesystem::path> data_dir;  // event log lands in <data_dir>/sessions/<id>.log
};

// Drives a session hub in-process on a virtual clock.
ScenarioOutcome run_scenario(const ScenarioScript& script, std::shared_ptr<Gateway> gateway,
                             const ScenarioRunOptions& options = {});

}  // namespace meetflow
