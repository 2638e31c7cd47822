#include "meetflow/sync_server.hpp"

#include <algorithm>
#include <iostream>

#include "meetflow/phase_pipeline.hpp"

namespace meetflow {

namespace {

const std::set<std::string>& command_types() {
  static const std::set<std::string> types{"join",          "submit_focus_response", "submit_utterance",
                                           "abort_transition", "start_meeting",       "end_meeting"};
  return types;
}

std::string require_string(const Json& payload, const char* key) {
  const auto it = payload.find(key);
  if (it == payload.end() || !it->is_string()) {
    throw Error(ErrorCode::ProtocolError, std::string("payload needs a string \"") + key + "\"");
  }
  return it->get<std::string>();
}

void require_member(const SessionState& state, const ParticipantId& participant) {
  if (!state.is_member(participant)) {
    throw Error(ErrorCode::UnknownParticipant, "'" + participant + "' has not joined this session");
  }
}

void require_lifecycle(const SessionState& state, Lifecycle expected, std::string_view command) {
  if (state.lifecycle != expected) {
    throw Error(ErrorCode::LifecycleViolation, std::string(command) + " needs the session to be " +
                                                   std::string(to_string(expected)) + ", it is " +
                                                   std::string(to_string(state.lifecycle)));
  }
}

void require_organizer(const SessionState& state, const ParticipantId& participant, std::string_view command) {
  if (participant != state.invitation.organizer_id) {
    throw Error(ErrorCode::PermissionDenied, "only the organizer may " + std::string(command));
  }
}

std::unique_ptr<PhaseClassifier> make_classifier(const SessionState& state, Gateway& gateway) {
  switch (state.config.classifier) {
    case ClassifierKind::llm: return std::make_unique<LlmClassifier>(gateway, state.config.max_attempts);
    case ClassifierKind::keyword_fallback: return std::make_unique<KeywordClassifier>();
    case ClassifierKind::scripted: {
      // The script position is derived from the log, not kept in memory.
      const auto& script = state.config.scripted_verdicts;
      const auto used = std::min<std::size_t>(state.utterance_count, script.size());
      return std::make_unique<ScriptedClassifier>(
          std::vector<PhaseIndex>(script.begin() + static_cast<std::ptrdiff_t>(used), script.end()));
    }
  }
  throw Error(ErrorCode::ConfigError, "unknown classifier");
}

}  // namespace

// ---------------------------------------------------------------------------
// Wire format

Json wire_json(const WireMessage& m) {
  Json j = {{"type", m.type}, {"session_id", m.session_id}, {"payload", m.payload}};
  if (m.seq) j["seq"] = *m.seq;
  return j;
}

WireMessage parse_wire_message(std::string_view text) {
  const Json j = Json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::ProtocolError, "message is not a JSON object");
  const auto type = j.find("type");
  if (type == j.end() || !type->is_string()) throw Error(ErrorCode::ProtocolError, "message needs a string \"type\"");
  WireMessage m;
  m.type = type->get<std::string>();
  if (const auto id = j.find("session_id"); id != j.end() && id->is_string()) m.session_id = id->get<std::string>();
  if (const auto seq = j.find("seq"); seq != j.end() && seq->is_number_unsigned()) m.seq = seq->get<std::uint64_t>();
  if (const auto payload = j.find("payload"); payload != j.end()) {
    if (!payload->is_object()) throw Error(ErrorCode::ProtocolError, "\"payload\" must be an object");
    m.payload = *payload;
  }
  return m;
}

bool Outbound::delivers_to(const ParticipantId& id) const {
  switch (audience) {
    case Audience::everyone: return true;
    case Audience::only: return id == participant;
    case Audience::everyone_except: return id != participant;
  }
  return false;
}

WireMessage event_message(const std::string& session_id, const EventRecord& event,
                          const std::optional<ParticipantId>& viewer) {
  WireMessage m{std::string(to_string(event.kind)), session_id, event.seq, event.payload};
  m.payload["at_ms"] = to_millis(event.at);
  if (event.kind == EventKind::focus_response_submitted) {
    const Json& response = event.payload.at("response");
    const auto owner = response.at("participant_id").get<std::string>();
    if (viewer != owner) {
      m.payload["response"] = {{"participant_id", owner},
                               {"role", response.at("role")},
                               {"submitted_at_ms", response.at("submitted_at_ms")}};
    }
  }
  return m;
}

WireMessage error_message(const std::string& session_id, ErrorCode code, std::string_view message) {
  return WireMessage{"error", session_id, std::nullopt, {{"code", to_string(code)}, {"message", message}}};
}

// ---------------------------------------------------------------------------
// Persistence

std::filesystem::path session_log_path(const std::filesystem::path& data_dir, const std::string& session_id) {
  return data_dir / "sessions" / (session_id + ".log");
}

FileEventSink::FileEventSink(const std::filesystem::path& data_dir, const std::string& session_id)
    : path_(session_log_path(data_dir, session_id)) {
  std::filesystem::create_directories(path_.parent_path());
  out_.open(path_, std::ios::app | std::ios::binary);
  if (!out_) throw Error(ErrorCode::ConfigError, "cannot open " + path_.string() + " for appending");
}

void FileEventSink::append(const EventRecord& event) {
  out_ << to_line(event) << '\n';
  out_.flush();
  if (!out_) throw Error(ErrorCode::ConfigError, "failed writing " + path_.string());
}

// ---------------------------------------------------------------------------
// Hub

struct SessionHub::Slot {
  std::mutex mutex;
  SessionState state;
  std::vector<EventRecord> log;
  std::unique_ptr<EventSink> sink;
  bool deadline_failed = false;  // an automatic close failed; wait for the next response instead
};

SessionHub::SessionHub(std::shared_ptr<Gateway> gateway, const Clock& clock, HubOptions options)
    : gateway_(std::move(gateway)), clock_(clock), options_(std::move(options)) {
  require_valid(options_.defaults);
}

SessionHub::~SessionHub() = default;

std::shared_ptr<SessionHub::Slot> SessionHub::find(const std::string& session_id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "no session '" + session_id + "'");
  return it->second;
}

std::string SessionHub::create_session(const Invitation& invitation, std::optional<SessionConfig> config) {
  const SessionConfig cfg = config.value_or(options_.defaults);
  require_valid(cfg);
  require_valid(invitation);
  const RoleSet roles = cfg.role_set();
  for (const auto& role : invitation.attendee_roles) roles.parse(role.value);

  const Timestamp now = clock_.now();
  std::string session_id;
  {
    std::unique_lock lock(sessions_mutex_);
    const auto n = ++created_counter_;
    session_id = "s-" + sha256_hex(canonical_dump(Json(invitation)) + "|" + std::to_string(to_millis(now)) + "|" +
                                   std::to_string(n))
                            .substr(0, 12);
  }

  const PipelineOptions pipeline{cfg.max_attempts, cfg.top_k};
  const PlanGeneration plan = generate_initial_plan(*gateway_, invitation, pipeline);
  const std::string scenario = cfg.scenario_text.empty() ? invitation.text : cfg.scenario_text;
  const FocusToolGeneration tool =
      generate_focus_tool(*gateway_, invitation, scenario, cfg.min_features, cfg.max_attempts);

  auto slot = std::make_shared<Slot>();
  const std::vector<Draft> drafts{
      {EventKind::session_created, {{"session_id", session_id}, {"invitation", invitation}, {"config", cfg}}},
      {EventKind::plan_generated, {{"plan", plan.plan}, {"attempt_count", plan.attempt_count}}},
      {EventKind::focus_tool_ready, {{"tool", tool.tool}, {"attempt_count", tool.attempt_count}}}};
  if (options_.data_dir) slot->sink = std::make_unique<FileEventSink>(*options_.data_dir, session_id);
  commit(*slot, drafts, now);

  std::unique_lock lock(sessions_mutex_);
  sessions_.emplace(session_id, std::move(slot));
  return session_id;
}

std::vector<EventRecord> SessionHub::commit(Slot& slot, const std::vector<Draft>& drafts, Timestamp now) {
  SessionState next = slot.state;
  std::vector<EventRecord> events;
  events.reserve(drafts.size());
  for (const auto& draft : drafts) {
    EventRecord event{next.last_seq + 1, now, draft.kind, draft.payload};
    apply(next, event);
    events.push_back(std::move(event));
  }
  for (const auto& event : events) {
    if (slot.sink) slot.sink->append(event);
    slot.log.push_back(event);
  }
  slot.state = std::move(next);
  return events;
}

void SessionHub::publish(const Slot& slot, const std::vector<EventRecord>& events, const Deliver& deliver) const {
  const std::string& id = slot.state.session_id;
  for (const auto& event : events) {
    if (event.kind == EventKind::focus_response_submitted) {
      const auto owner = event.payload.at("response").at("participant_id").get<std::string>();
      deliver(Outbound{Audience::only, owner, event_message(id, event, owner)});
      deliver(Outbound{Audience::everyone_except, owner, event_message(id, event, std::nullopt)});
      continue;
    }
    if (event.kind == EventKind::member_joined) {
      // Catch the newcomer up on everything before their own join.
      const auto joiner = event.payload.at("participant_id").get<std::string>();
      for (const auto& past : slot.log) {
        if (past.seq >= event.seq) break;
        deliver(Outbound{Audience::only, joiner, event_message(id, past, joiner)});
      }
    }
    deliver(Outbound{Audience::everyone, {}, event_message(id, event, std::nullopt)});
  }
}

std::vector<SessionHub::Draft> SessionHub::close_responses(const SessionState& state, Timestamp now) {
  (void)now;
  const PipelineOptions pipeline{state.config.max_attempts, state.config.top_k};
  std::optional<DivergenceReport> divergence;
  if (state.responses.size() >= 2) divergence = compute_divergence(*state.focus_tool, state.responses);

  std::vector<Draft> drafts;
  drafts.push_back({EventKind::divergence_published,
                    {{"divergence", divergence ? Json(*divergence) : Json(nullptr)},
                     {"response_count", state.responses.size()}}});

  PhasePlan plan = *state.plan;
  if (divergence && divergence->has_divergence()) {
    const RefinementContext context{plan, *divergence, state.invitation, *state.focus_tool};
    PlanGeneration refined = refine_plan(*gateway_, context, pipeline);
    plan = refined.plan;
    drafts.push_back({EventKind::plan_refined, {{"plan", refined.plan}, {"attempt_count", refined.attempt_count}}});
  }

  const LayoutGeneration layouts =
      generate_phase_layouts(*gateway_, plan, state.config.available_programs, state.config.max_attempts);
  std::vector<PlacedLayout> placed;
  for (const auto& layout : layouts.layouts) placed.push_back(place(layout));
  drafts.push_back({EventKind::layouts_generated,
                    {{"layouts", layouts.layouts}, {"placed", placed}, {"attempt_count", layouts.attempt_count}}});
  return drafts;
}

std::vector<SessionHub::Draft> SessionHub::due_drafts(Slot& slot, Timestamp now) {
  const SessionState& state = slot.state;
  std::vector<Draft> drafts;
  if (state.lifecycle == Lifecycle::in_meeting) {
    if (const auto effect = hotl::tick(state.proposal, now)) {
      drafts.push_back({EventKind::transition_committed, {{"proposal", effect->proposal}}});
      drafts.push_back({EventKind::layout_applied,
                        {{"phase_index", effect->to_index}, {"layout", state.layouts->at(effect->to_index)}}});
    }
  } else if (state.lifecycle == Lifecycle::pre_meeting && state.config.response_deadline && !slot.deadline_failed &&
             now >= state.created_at + *state.config.response_deadline) {
    try {
      drafts = close_responses(state, now);
    } catch (const Error& e) {
      slot.deadline_failed = true;
      std::cerr << "session " << state.session_id << ": closing responses at the deadline failed: " << e.what()
                << '\n';
    }
  }
  return drafts;
}

std::vector<SessionHub::Draft> SessionHub::command_drafts(const SessionState& state, const ParticipantId& participant,
                                                          const WireMessage& command, Timestamp now) {
  const std::string& type = command.type;
  const Json& payload = command.payload;
  if (!command_types().contains(type)) {
    throw Error(ErrorCode::ProtocolError, "unknown command type '" + type + "'");
  }

  if (type == "join") {
    if (state.lifecycle == Lifecycle::ended) throw Error(ErrorCode::LifecycleViolation, "the meeting has ended");
    const RoleName role = state.config.role_set().parse(require_string(payload, "role"));
    if (const auto it = state.members.find(participant); it != state.members.end() && it->second == role) return {};
    return {{EventKind::member_joined, {{"participant_id", participant}, {"role", role}}}};
  }

  require_member(state, participant);

  if (type == "submit_focus_response") {
    require_lifecycle(state, Lifecycle::pre_meeting, type);
    const auto it = payload.find("selections");
    if (it == payload.end() || !it->is_object()) throw Error(ErrorCode::ProtocolError, "payload needs \"selections\"");
    FocusResponse response = submit_response(*state.focus_tool, participant, state.members.at(participant),
                                             selections_from_json(*it), now);
    std::vector<Draft> drafts{{EventKind::focus_response_submitted, {{"response", response}}}};

    std::vector<FocusResponse> after = state.responses;
    upsert_response(after, std::move(response));
    const bool everyone = std::all_of(state.members.begin(), state.members.end(), [&](const auto& member) {
      return std::any_of(after.begin(), after.end(),
                         [&](const FocusResponse& r) { return r.participant_id == member.first; });
    });
    if (everyone) {
      SessionState projected = state;
      projected.responses = std::move(after);
      for (auto& d : close_responses(projected, now)) drafts.push_back(std::move(d));
    }
    return drafts;
  }

  if (type == "start_meeting") {
    require_organizer(state, participant, "start the meeting");
    require_lifecycle(state, Lifecycle::ready, type);
    return {{EventKind::meeting_started, Json::object()},
            {EventKind::layout_applied, {{"phase_index", 0}, {"layout", state.layouts->at(0)}}}};
  }

  if (type == "end_meeting") {
    require_organizer(state, participant, "end the meeting");
    require_lifecycle(state, Lifecycle::in_meeting, type);
    std::vector<Draft> drafts;
    if (state.proposal && state.proposal->is_open()) {
      // Ending the meeting vetoes whatever is pending, so every proposal closes.
      const auto aborted = hotl::abort(state.proposal, state.proposal->proposal_id, participant, state.member_ids(), now);
      drafts.push_back({EventKind::transition_aborted, {{"proposal", aborted}}});
    }
    drafts.push_back({EventKind::meeting_ended, Json::object()});
    return drafts;
  }

  if (type == "abort_transition") {
    require_lifecycle(state, Lifecycle::in_meeting, type);
    const auto aborted =
        hotl::abort(state.proposal, require_string(payload, "proposal_id"), participant, state.member_ids(), now);
    return {{EventKind::transition_aborted, {{"proposal", aborted}}}};
  }

  // submit_utterance
  require_lifecycle(state, Lifecycle::in_meeting, type);
  const std::string text = require_string(payload, "text");
  if (trim(text).empty()) throw Error(ErrorCode::InvalidArgument, "utterance text is empty");
  const Utterance utterance{participant, now, text};
  const ClassifierVerdict verdict = make_classifier(state, *gateway_)->classify(utterance, *state.plan, state.tracker);
  std::vector<Draft> drafts{{EventKind::utterance_ingested, {{"utterance", utterance}, {"verdict", verdict}}}};
  const auto candidate = observe(state.tracker, *state.plan, verdict, now);
  if (candidate && !(state.proposal && state.proposal->is_open())) {
    const auto proposal =
        hotl::open_proposal(state.config.hotl, state.proposal, state.tracker, *candidate, now, state.proposals_opened + 1);
    drafts.push_back({EventKind::transition_proposed,
                      {{"proposal", proposal}, {"target_title", state.plan->phases[proposal.to_index].title}}});
  }
  return drafts;
}

void SessionHub::handle_command(const std::string& session_id, const ParticipantId& participant,
                                const WireMessage& command, const Deliver& deliver) {
  std::shared_ptr<Slot> slot;
  try {
    slot = find(session_id);
  } catch (const Error& e) {
    deliver(Outbound{Audience::only, participant, error_message(session_id, e.code(), e.what())});
    return;
  }
  std::lock_guard lock(slot->mutex);
  const Timestamp now = clock_.now();
  publish(*slot, commit(*slot, due_drafts(*slot, now), now), deliver);
  try {
    const auto drafts = command_drafts(slot->state, participant, command, now);
    publish(*slot, commit(*slot, drafts, now), deliver);
  } catch (const Error& e) {
    deliver(Outbound{Audience::only, participant, error_message(session_id, e.code(), e.what())});
  } catch (const std::exception& e) {
    deliver(Outbound{Audience::only, participant, error_message(session_id, ErrorCode::ProtocolError, e.what())});
  }
}

std::vector<Outbound> SessionHub::handle_command(const std::string& session_id, const ParticipantId& participant,
                                                 const WireMessage& command) {
  std::vector<Outbound> out;
  handle_command(session_id, participant, command, [&](const Outbound& o) { out.push_back(o); });
  return out;
}

void SessionHub::tick(const Deliver& deliver) {
  std::vector<std::shared_ptr<Slot>> slots;
  {
    std::shared_lock lock(sessions_mutex_);
    for (const auto& [id, slot] : sessions_) slots.push_back(slot);
  }
  for (const auto& slot : slots) {
    std::lock_guard lock(slot->mutex);
    const Timestamp now = clock_.now();
    publish(*slot, commit(*slot, due_drafts(*slot, now), now), deliver);
  }
}

std::vector<Outbound> SessionHub::tick() {
  std::vector<Outbound> out;
  tick([&](const Outbound& o) { out.push_back(o); });
  return out;
}

SessionState SessionHub::snapshot(const std::string& session_id) const {
  const auto slot = find(session_id);
  std::lock_guard lock(slot->mutex);
  return slot->state;
}

std::vector<EventRecord> SessionHub::event_log(const std::string& session_id) const {
  const auto slot = find(session_id);
  std::lock_guard lock(slot->mutex);
  return slot->log;
}

std::vector<std::string> SessionHub::session_ids() const {
  std::shared_lock lock(sessions_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, slot] : sessions_) ids.push_back(id);
  return ids;
}

bool SessionHub::has_session(const std::string& session_id) const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.contains(session_id);
}

std::optional<Timestamp> SessionHub::next_deadline() const {
  std::vector<std::shared_ptr<Slot>> slots;
  {
    std::shared_lock lock(sessions_mutex_);
    for (const auto& [id, slot] : sessions_) slots.push_back(slot);
  }
  std::optional<Timestamp> earliest;
  const auto consider = [&](Timestamp t) { earliest = std::min(earliest.value_or(t), t); };
  for (const auto& slot : slots) {
    std::lock_guard lock(slot->mutex);
    const SessionState& s = slot->state;
    if (s.lifecycle == Lifecycle::in_meeting && s.proposal && s.proposal->is_open()) consider(s.proposal->deadline);
    if (s.lifecycle == Lifecycle::pre_meeting && s.config.response_deadline && !slot->deadline_failed) {
      consider(s.created_at + *s.config.response_deadline);
    }
  }
  return earliest;
}

}  // namespace meetflow
