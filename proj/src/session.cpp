#include "meetflow/session.hpp"

#include <array>
#include <fstream>

namespace meetflow {

namespace {

constexpr std::array<std::string_view, 6> kLifecycleNames{"created", "pre_meeting", "refining",
                                                          "ready",   "in_meeting",  "ended"};

constexpr std::array<std::string_view, 15> kEventNames{
    "session_created",      "member_joined",       "plan_generated",       "focus_tool_ready",
    "focus_response_submitted", "divergence_published", "plan_refined",    "layouts_generated",
    "meeting_started",      "utterance_ingested",  "transition_proposed",  "transition_aborted",
    "transition_committed", "layout_applied",      "meeting_ended"};

void expect_lifecycle(const SessionState& state, const EventRecord& event, std::initializer_list<Lifecycle> allowed) {
  for (const Lifecycle l : allowed) {
    if (state.lifecycle == l) return;
  }
  throw Error(ErrorCode::LifecycleViolation, std::string(to_string(event.kind)) + " is not valid while the session is " +
                                                 std::string(to_string(state.lifecycle)));
}

void advance(SessionState& state, Lifecycle to) {
  if (static_cast<int>(to) != static_cast<int>(state.lifecycle) + 1) {
    throw Error(ErrorCode::LifecycleViolation, "lifecycle cannot move from " + std::string(to_string(state.lifecycle)) +
                                                   " to " + std::string(to_string(to)));
  }
  state.lifecycle = to;
}

const PhasePlan& require_plan(const SessionState& state) {
  if (!state.plan) throw Error(ErrorCode::LifecycleViolation, "session has no plan yet");
  return *state.plan;
}

}  // namespace

std::string_view to_string(Lifecycle l) noexcept { return kLifecycleNames[static_cast<std::size_t>(l)]; }

Lifecycle parse_lifecycle(std::string_view s) {
  for (std::size_t i = 0; i < kLifecycleNames.size(); ++i) {
    if (kLifecycleNames[i] == s) return static_cast<Lifecycle>(i);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown lifecycle '" + std::string(s) + "'");
}

std::string_view to_string(EventKind k) noexcept { return kEventNames[static_cast<std::size_t>(k)]; }

std::optional<EventKind> parse_event_kind(std::string_view s) noexcept {
  for (std::size_t i = 0; i < kEventNames.size(); ++i) {
    if (kEventNames[i] == s) return static_cast<EventKind>(i);
  }
  return std::nullopt;
}

void require_valid(const SessionConfig& config) {
  require_valid(config.hotl);
  if (config.top_k < 1) throw Error(ErrorCode::ConfigError, "top_k must be at least 1");
  if (config.max_attempts < 1 || config.max_attempts > kMaxAttemptsCeiling) {
    throw Error(ErrorCode::ConfigError, "max_attempts must be between 1 and " + std::to_string(kMaxAttemptsCeiling));
  }
  if (config.min_features < 1) throw Error(ErrorCode::ConfigError, "min_features must be positive");
  if (config.available_programs.empty()) throw Error(ErrorCode::ConfigError, "available_programs is empty");
  if (config.response_deadline && *config.response_deadline <= Millis::zero()) {
    throw Error(ErrorCode::ConfigError, "response deadline must be positive");
  }
  if (config.classifier == ClassifierKind::scripted && config.scripted_verdicts.empty()) {
    throw Error(ErrorCode::ConfigError, "scripted classifier needs scripted_verdicts");
  }
}

std::set<ParticipantId> SessionState::member_ids() const {
  std::set<ParticipantId> ids;
  for (const auto& [id, role] : members) ids.insert(id);
  return ids;
}

void apply(SessionState& state, const EventRecord& event) {
  if (event.seq != state.last_seq + 1) {
    throw Error(ErrorCode::GapDetected, "expected seq " + std::to_string(state.last_seq + 1) + ", found " +
                                            std::to_string(event.seq));
  }
  const Json& p = event.payload;
  switch (event.kind) {
    case EventKind::session_created:
      if (state.last_seq != 0) throw Error(ErrorCode::LifecycleViolation, "session_created must be the first event");
      state.session_id = p.at("session_id").get<std::string>();
      state.invitation = p.at("invitation").get<Invitation>();
      state.config = p.at("config").get<SessionConfig>();
      state.created_at = event.at;
      break;
    case EventKind::member_joined:
      if (state.lifecycle == Lifecycle::ended) expect_lifecycle(state, event, {});
      state.members[p.at("participant_id").get<std::string>()] = p.at("role").get<RoleName>();
      break;
    case EventKind::plan_generated:
      expect_lifecycle(state, event, {Lifecycle::created});
      state.plan = p.at("plan").get<PhasePlan>();
      advance(state, Lifecycle::pre_meeting);
      break;
    case EventKind::focus_tool_ready:
      expect_lifecycle(state, event, {Lifecycle::pre_meeting});
      state.focus_tool = p.at("tool").get<FocusTool>();
      break;
    case EventKind::focus_response_submitted:
      expect_lifecycle(state, event, {Lifecycle::pre_meeting});
      upsert_response(state.responses, p.at("response").get<FocusResponse>());
      break;
    case EventKind::divergence_published: {
      expect_lifecycle(state, event, {Lifecycle::pre_meeting});
      const Json& d = p.at("divergence");
      state.divergence = d.is_null() ? std::nullopt : std::optional<DivergenceReport>(d.get<DivergenceReport>());
      advance(state, Lifecycle::refining);
      break;
    }
    case EventKind::plan_refined:
      expect_lifecycle(state, event, {Lifecycle::refining});
      state.plan = p.at("plan").get<PhasePlan>();
      break;
    case EventKind::layouts_generated:
      expect_lifecycle(state, event, {Lifecycle::refining});
      state.layouts = p.at("placed").get<std::vector<PlacedLayout>>();
      advance(state, Lifecycle::ready);
      break;
    case EventKind::meeting_started:
      expect_lifecycle(state, event, {Lifecycle::ready});
      state.tracker = TrackerState{};
      advance(state, Lifecycle::in_meeting);
      break;
    case EventKind::layout_applied: {
      expect_lifecycle(state, event, {Lifecycle::in_meeting});
      const auto index = p.at("phase_index").get<PhaseIndex>();
      if (!state.layouts || index >= state.layouts->size()) {
        throw Error(ErrorCode::PreconditionViolation, "no layout for phase " + std::to_string(index));
      }
      state.applied_layout = index;
      break;
    }
    case EventKind::utterance_ingested:
      expect_lifecycle(state, event, {Lifecycle::in_meeting});
      note_utterance(state.tracker, p.at("utterance").get<Utterance>().at);
      ++state.utterance_count;
      break;
    case EventKind::transition_proposed:
      expect_lifecycle(state, event, {Lifecycle::in_meeting});
      require_plan(state);
      state.proposal = p.at("proposal").get<TransitionProposal>();
      ++state.proposals_opened;
      break;
    case EventKind::transition_aborted: {
      expect_lifecycle(state, event, {Lifecycle::in_meeting});
      auto proposal = p.at("proposal").get<TransitionProposal>();
      hotl::apply_abort(state.tracker, state.config.hotl, proposal, event.at);
      state.proposal = std::move(proposal);
      break;
    }
    case EventKind::transition_committed: {
      expect_lifecycle(state, event, {Lifecycle::in_meeting});
      auto proposal = p.at("proposal").get<TransitionProposal>();
      hotl::apply_commit(state.tracker, proposal);
      state.proposal = std::move(proposal);
      break;
    }
    case EventKind::meeting_ended:
      expect_lifecycle(state, event, {Lifecycle::in_meeting});
      advance(state, Lifecycle::ended);
      break;
  }
  state.last_seq = event.seq;
}

SessionState replay(std::span<const EventRecord> log) {
  SessionState state;
  for (const auto& event : log) apply(state, event);
  return state;
}

void to_json(Json& j, const SessionConfig& c) {
  j = {{"hotl", c.hotl},
       {"top_k", c.top_k},
       {"max_attempts", c.max_attempts},
       {"min_features", c.min_features},
       {"classifier", to_string(c.classifier)},
       {"scripted_verdicts", c.scripted_verdicts},
       {"available_programs", c.available_programs},
       {"scenario_text", c.scenario_text},
       {"response_deadline_ms", c.response_deadline ? Json(c.response_deadline->count()) : Json(nullptr)},
       {"roles", c.roles}};
}

void from_json(const Json& j, SessionConfig& c) {
  const SessionConfig defaults;
  c.hotl = j.contains("hotl") ? j.at("hotl").get<HotlConfig>() : defaults.hotl;
  c.top_k = j.value("top_k", defaults.top_k);
  c.max_attempts = j.value("max_attempts", defaults.max_attempts);
  c.min_features = j.value("min_features", defaults.min_features);
  c.classifier = parse_classifier_kind(j.value("classifier", std::string(to_string(defaults.classifier))));
  c.scripted_verdicts = j.value("scripted_verdicts", defaults.scripted_verdicts);
  c.available_programs = j.value("available_programs", defaults.available_programs);
  c.scenario_text = j.value("scenario_text", defaults.scenario_text);
  const auto it = j.find("response_deadline_ms");
  c.response_deadline = (it == j.end() || it->is_null()) ? std::nullopt : std::optional<Millis>(Millis{it->get<std::int64_t>()});
  c.roles = j.value("roles", defaults.roles);
}

void to_json(Json& j, const EventRecord& e) {
  j = {{"seq", e.seq}, {"at_ms", to_millis(e.at)}, {"kind", to_string(e.kind)}, {"payload", e.payload}};
}

void from_json(const Json& j, EventRecord& e) {
  const auto kind_name = j.at("kind").get<std::string>();
  const auto kind = parse_event_kind(kind_name);
  if (!kind) throw Error(ErrorCode::UnknownEventKind, "unknown event kind '" + kind_name + "'");
  e.seq = j.at("seq").get<std::uint64_t>();
  e.at = from_millis(j.at("at_ms").get<std::int64_t>());
  e.kind = *kind;
  e.payload = j.at("payload");
}

std::string to_line(const EventRecord& event) { return canonical_dump(Json(event)); }

EventRecord parse_event_line(std::string_view line) {
  Json value = Json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded() || !value.is_object()) throw ParseFailure("event line is not a JSON object");
  try {
    return value.get<EventRecord>();
  } catch (const Json::exception& e) {
    throw ParseFailure(std::string("malformed event record: ") + e.what());
  }
}

std::vector<EventRecord> read_event_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open event log " + path.string());
  std::vector<EventRecord> log;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    log.push_back(parse_event_line(line));
  }
  return log;
}

Json state_json(const SessionState& s) {
  Json members = Json::object();
  for (const auto& [id, role] : s.members) members[id] = role;
  Json j = {{"session_id", s.session_id},
            {"lifecycle", to_string(s.lifecycle)},
            {"config", s.config},
            {"created_at_ms", to_millis(s.created_at)},
            {"invitation", s.invitation},
            {"plan", s.plan ? Json(*s.plan) : Json(nullptr)},
            {"focus_tool", s.focus_tool ? Json(*s.focus_tool) : Json(nullptr)},
            {"responses", s.responses},
            {"divergence", s.divergence ? Json(*s.divergence) : Json(nullptr)},
            {"layouts", s.layouts ? Json(*s.layouts) : Json(nullptr)},
            {"applied_layout", s.applied_layout ? Json(*s.applied_layout) : Json(nullptr)},
            {"tracker", s.tracker},
            {"proposal", s.proposal ? Json(*s.proposal) : Json(nullptr)},
            {"proposals_opened", s.proposals_opened},
            {"utterance_count", s.utterance_count},
            {"members", std::move(members)},
            {"last_seq", s.last_seq}};
  return j;
}

}  // namespace meetflow
