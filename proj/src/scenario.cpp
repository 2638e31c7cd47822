#include "meetflow/scenario.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace meetflow {

namespace {

std::string format_offset(Timestamp at, Timestamp start) {
  const auto ms = (at - start).count();
  const char* sign = ms < 0 ? "-" : "+";
  const auto a = ms < 0 ? -ms : ms;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%02lld:%02lld.%03lld", sign, static_cast<long long>(a / 60000),
                static_cast<long long>((a / 1000) % 60), static_cast<long long>(a % 1000));
  return buf;
}

std::string plan_line(const PhasePlan& plan) {
  std::string out;
  for (std::size_t i = 0; i < plan.phases.size(); ++i) {
    const auto& p = plan.phases[i];
    if (i) out += " | ";
    out += p.title + " (" + std::to_string(p.allotted_minutes) + " min, " + std::string(to_string(p.directionality)) +
           ")";
  }
  return out;
}

std::string phase_title(const SessionState& s, PhaseIndex i) {
  if (s.plan && i < s.plan->phases.size()) return "'" + s.plan->phases[i].title + "'";
  return "#" + std::to_string(i);
}

std::string describe(const SessionState& before, const SessionState& after, const EventRecord& e, Timestamp start) {
  const Json& p = e.payload;
  switch (e.kind) {
    case EventKind::session_created:
      return "session " + after.session_id + " created (" + std::to_string(after.invitation.duration_minutes) +
             " min, organizer " + after.invitation.organizer_id + ")";
    case EventKind::member_joined:
      return p.at("participant_id").get<std::string>() + " joined as " + p.at("role").get<std::string>();
    case EventKind::plan_generated:
      return "initial plan, " + std::to_string(after.plan->phases.size()) + " phases, " +
             std::to_string(after.plan->total_minutes()) + " min: " + plan_line(*after.plan);
    case EventKind::focus_tool_ready:
      return "focus tool ready with " + std::to_string(after.focus_tool->features.size()) + " features";
    case EventKind::focus_response_submitted: {
      const auto& r = p.at("response");
      return r.at("participant_id").get<std::string>() + " submitted focus selections (total " +
             std::to_string(r.at("total_price").get<std::int64_t>()) + ")";
    }
    case EventKind::divergence_published: {
      if (!after.divergence) return "responses closed with fewer than two; no divergence computed";
      if (!after.divergence->has_divergence()) return "responses closed; no divergent features";
      std::string out = "divergent features:";
      for (const auto& id : after.divergence->divergent_ids_ranked) {
        const auto& t = after.divergence->per_feature.at(id);
        const FeatureItem* f = after.focus_tool ? after.focus_tool->find(id) : nullptr;
        out += " " + (f ? f->name : id) + " (" + std::to_string(t.include_count) + " in / " +
               std::to_string(t.exclude_count) + " out);";
      }
      out.pop_back();
      return out;
    }
    case EventKind::plan_refined:
      return "refined plan revision " + std::to_string(after.plan->revision) + ", " +
             std::to_string(after.plan->phases.size()) + " phases, " + std::to_string(after.plan->total_minutes()) +
             " min: " + plan_line(*after.plan);
    case EventKind::layouts_generated:
      return "layouts ready for " + std::to_string(after.layouts->size()) + " phases";
    case EventKind::meeting_started:
      return "meeting started in " + phase_title(after, after.tracker.current_phase_index);
    case EventKind::utterance_ingested: {
      const auto u = p.at("utterance").get<Utterance>();
      const auto v = p.at("verdict").get<ClassifierVerdict>();
      return u.speaker_id + ": \"" + u.text + "\" -> " + phase_title(after, v.predicted_phase_index) + " [" +
             std::string(to_string(v.classifier_id)) + "]";
    }
    case EventKind::transition_proposed: {
      const auto& pr = *after.proposal;
      return "proposal " + pr.proposal_id + ": " + phase_title(after, pr.from_index) + " -> " +
             phase_title(after, pr.to_index) + ", commits at " + format_offset(pr.deadline, start) +
             " unless aborted";
    }
    case EventKind::transition_aborted: {
      const auto& pr = *after.proposal;
      return "proposal " + pr.proposal_id + " aborted by " + pr.aborted_by.value_or("?") + "; phase stays " +
             phase_title(after, after.tracker.current_phase_index);
    }
    case EventKind::transition_committed: {
      const auto& pr = *after.proposal;
      return "proposal " + pr.proposal_id + " committed: " + phase_title(before, before.tracker.current_phase_index) +
             " -> " + phase_title(after, after.tracker.current_phase_index);
    }
    case EventKind::layout_applied: {
      const auto layout = p.at("layout").get<PlacedLayout>();
      std::string out = "layout for '" + layout.phase_title + "':";
      for (const auto& pl : layout.placements) {
        char tile[96];
        std::snprintf(tile, sizeof tile, " [%.3f,%.3f %.3fx%.3f]", pl.tile.x, pl.tile.y, pl.tile.w, pl.tile.h);
        out += " " + pl.program.name_or_url + tile;
      }
      return out;
    }
    case EventKind::meeting_ended:
      return "meeting ended in " + phase_title(after, after.tracker.current_phase_index);
  }
  return std::string(to_string(e.kind));
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  Json doc = Json::parse(buffer.str(), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw Error(ErrorCode::InvalidArgument, path.string() + " is not valid JSON");
  return doc;
}

}  // namespace

ScenarioScript parse_scenario(const Json& doc, const std::filesystem::path& base_dir) {
  try {
    ScenarioScript s;
    s.invitation = doc.at("invitation").get<Invitation>();
    for (const auto& m : doc.at("members")) {
      s.members.push_back({m.at("participant_id").get<std::string>(), RoleName{m.at("role").get<std::string>()}});
    }
    if (const auto it = doc.find("focus_votes"); it != doc.end()) {
      for (const auto& [pid, v] : it->items()) {
        FocusVote vote;
        vote.fallback = parse_selection(v.value("default", std::string("include")));
        if (const auto o = v.find("overrides"); o != v.end()) vote.overrides = selections_from_json(*o);
        s.focus_votes[pid] = std::move(vote);
      }
    }
    for (const auto& u : doc.value("utterances", Json::array())) {
      s.utterances.push_back(
          {Millis{u.at("at_ms").get<std::int64_t>()}, u.at("speaker_id").get<std::string>(), u.at("text").get<std::string>()});
    }
    for (const auto& a : doc.value("aborts", Json::array())) {
      s.aborts.push_back({a.at("proposal").get<std::uint64_t>(), a.at("participant_id").get<std::string>(),
                          Millis{a.value("after_ms", std::int64_t{1000})}});
    }
    if (const auto it = doc.find("config"); it != doc.end()) s.config = it->get<SessionConfig>();
    if (const auto it = doc.find("scripted_verdicts"); it != doc.end() && !it->is_null()) {
      s.config.classifier = ClassifierKind::scripted;
      s.config.scripted_verdicts = it->get<std::vector<PhaseIndex>>();
    }
    if (const auto it = doc.find("fixture_dir"); it != doc.end()) {
      const std::filesystem::path dir = it->get<std::string>();
      s.fixture_dir = dir.is_absolute() || base_dir.empty() ? dir : (base_dir / dir).lexically_normal();
    }
    s.start = from_millis(doc.value("start_ms", kDefaultScenarioStartMs));
    return s;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed scenario: ") + e.what());
  }
}

ScenarioScript load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_json_file(path), path.parent_path());
}

void require_valid(const ScenarioScript& script) {
  require_valid(script.invitation);
  require_valid(script.config);
  if (script.members.empty()) throw Error(ErrorCode::InvalidArgument, "scenario has no members");
  const RoleSet roles = script.config.role_set();
  std::set<ParticipantId> ids;
  for (const auto& m : script.members) {
    roles.parse(m.role.value);
    if (!ids.insert(m.participant_id).second) {
      throw Error(ErrorCode::InvalidArgument, "member '" + m.participant_id + "' is listed twice");
    }
  }
  const auto known = [&](const ParticipantId& id, std::string_view where) {
    if (!ids.contains(id)) {
      throw Error(ErrorCode::InvalidArgument, std::string(where) + " references unknown participant '" + id + "'");
    }
  };
  known(script.invitation.organizer_id, "invitation organizer");
  for (const auto& [id, vote] : script.focus_votes) known(id, "focus_votes");
  Millis last{0};
  for (const auto& u : script.utterances) {
    known(u.speaker_id, "utterance");
    if (u.at < last) throw Error(ErrorCode::InvalidArgument, "utterance times must not decrease");
    last = u.at;
  }
  for (const auto& a : script.aborts) {
    known(a.participant_id, "abort");
    if (a.proposal_ordinal == 0) throw Error(ErrorCode::InvalidArgument, "abort proposal ordinals start at 1");
    if (a.after < Millis::zero()) throw Error(ErrorCode::InvalidArgument, "abort after_ms must not be negative");
  }
  if (!script.config.response_deadline) {
    for (const auto& m : script.members) {
      if (!script.focus_votes.contains(m.participant_id)) {
        throw Error(ErrorCode::InvalidArgument, "member '" + m.participant_id +
                                                    "' has no focus vote and no response deadline is configured");
      }
    }
  }
}

Selections selections_for(const FocusVote& vote, const FocusTool& tool) {
  Selections out;
  for (const auto& f : tool.features) out[f.id] = vote.fallback;
  for (const auto& [id, s] : vote.overrides) out[id] = s;
  return out;
}

TimelineReport build_timeline(const std::vector<EventRecord>& log, Timestamp start) {
  TimelineReport report;
  report.start = start;
  SessionState state;
  for (const auto& e : log) {
    const SessionState before = state;
    apply(state, e);
    report.entries.push_back({e.at, e.seq, describe(before, state, e, start)});
    switch (e.kind) {
      case EventKind::transition_proposed: ++report.proposals; break;
      case EventKind::transition_aborted: ++report.aborts; break;
      case EventKind::transition_committed: ++report.commits; break;
      default: break;
    }
  }
  report.session_id = state.session_id;
  report.final_state = std::move(state);
  return report;
}

std::string render_timeline(const TimelineReport& report) {
  std::string out = "session " + report.session_id + "\n";
  for (const auto& e : report.entries) {
    char seq[16];
    std::snprintf(seq, sizeof seq, "#%03llu", static_cast<unsigned long long>(e.seq));
    out += format_offset(e.at, report.start) + " " + seq + " " + e.text + "\n";
  }
  out += "summary: " + std::to_string(report.proposals) + " proposals, " + std::to_string(report.commits) +
         " committed, " + std::to_string(report.aborts) + " aborted";
  if (report.final_state) {
    out += "; final lifecycle " + std::string(to_string(report.final_state->lifecycle)) + ", phase " +
           phase_title(*report.final_state, report.final_state->tracker.current_phase_index);
  }
  out += "\n";
  for (const auto& err : report.errors) out += "error: " + err + "\n";
  return out;
}

ScenarioOutcome run_scenario(const ScenarioScript& script, std::shared_ptr<Gateway> gateway,
                             const ScenarioRunOptions& options) {
  require_valid(script);
  ManualClock clock(script.start);
  SessionHub hub(std::move(gateway), clock, HubOptions{script.config, options.data_dir});

  ScenarioOutcome outcome;
  std::vector<std::string> errors;
  const auto fail = [&](ErrorCode code, const std::string& message) {
    if (!outcome.first_error) outcome.first_error = code;
    errors.push_back(std::string(to_string(code)) + ": " + message);
  };
  const auto finish = [&](const std::string& session_id) {
    if (!session_id.empty()) {
      outcome.log = hub.event_log(session_id);
      outcome.report = build_timeline(outcome.log, script.start);
    }
    outcome.report.errors = errors;
    return outcome;
  };

  std::string id;
  try {
    id = hub.create_session(script.invitation, script.config);
  } catch (const Error& e) {
    fail(e.code(), std::string("session creation failed: ") + e.what());
    return finish({});
  }

  const auto send = [&](const ParticipantId& who, const std::string& type, Json payload) {
    for (const auto& o : hub.handle_command(id, who, WireMessage{type, id, std::nullopt, std::move(payload)})) {
      if (o.message.type == "error" && o.delivers_to(who)) {
        const auto code = parse_error_code(o.message.payload.value("code", std::string{}));
        fail(code.value_or(ErrorCode::ProtocolError),
             type + " from " + who + ": " + o.message.payload.value("message", std::string{}));
      }
    }
  };
  const auto step = [&] { clock.advance(Millis{1000}); };

  for (const auto& m : script.members) {
    step();
    send(m.participant_id, "join", {{"role", m.role.value}});
  }
  const FocusTool tool = *hub.snapshot(id).focus_tool;
  for (const auto& m : script.members) {
    const auto it = script.focus_votes.find(m.participant_id);
    if (it == script.focus_votes.end()) continue;
    step();
    send(m.participant_id, "submit_focus_response", {{"selections", selections_json(selections_for(it->second, tool))}});
  }
  if (hub.snapshot(id).lifecycle == Lifecycle::pre_meeting) {
    if (const auto deadline = hub.next_deadline(); deadline && *deadline > clock.now()) clock.set(*deadline);
    hub.tick();
  }
  if (hub.snapshot(id).lifecycle != Lifecycle::ready) {
    fail(ErrorCode::LifecycleViolation, "session never became ready for the meeting");
    return finish(id);
  }

  step();
  send(script.invitation.organizer_id, "start_meeting", Json::object());
  const Timestamp meeting_start = clock.now();

  std::set<std::uint64_t> aborts_done;
  // Runs deadlines and scripted aborts that fall at or before `until`.
  const auto run_until = [&](std::optional<Timestamp> until) {
    for (;;) {
      const SessionState s = hub.snapshot(id);
      if (s.lifecycle != Lifecycle::in_meeting || !s.proposal || !s.proposal->is_open()) return;
      const auto& open = *s.proposal;
      std::optional<std::pair<Timestamp, const ScriptedAbort*>> next_abort;
      for (const auto& a : script.aborts) {
        if (a.proposal_ordinal != s.proposals_opened || aborts_done.contains(a.proposal_ordinal)) continue;
        const Timestamp at = open.opened_at + a.after;
        if (!next_abort || at < next_abort->first) next_abort = std::pair{at, &a};
      }
      const Timestamp next = next_abort ? std::min(next_abort->first, open.deadline) : open.deadline;
      if (until && next > *until) return;
      clock.set(std::max(next, clock.now()));
      if (next_abort && next_abort->first < open.deadline) {
        aborts_done.insert(next_abort->second->proposal_ordinal);
        send(next_abort->second->participant_id, "abort_transition", {{"proposal_id", open.proposal_id}});
      } else {
        hub.tick();
        if (next_abort) {
          aborts_done.insert(next_abort->second->proposal_ordinal);
          fail(ErrorCode::DeadlinePassed, "abort of " + open.proposal_id + " by " +
                                              next_abort->second->participant_id + " is scheduled after its deadline");
        }
      }
    }
  };

  for (const auto& u : script.utterances) {
    const Timestamp at = meeting_start + u.at;
    run_until(at);
    clock.set(std::max(at, clock.now()));
    send(u.speaker_id, "submit_utterance", {{"text", u.text}});
  }
  run_until(std::nullopt);

  const auto opened = hub.snapshot(id).proposals_opened;
  for (const auto& a : script.aborts) {
    if (a.proposal_ordinal > opened) {
      fail(ErrorCode::InvalidArgument,
           "abort targets proposal " + std::to_string(a.proposal_ordinal) + " but only " + std::to_string(opened) +
               " opened");
    }
  }

  step();
  send(script.invitation.organizer_id, "end_meeting", Json::object());
  return finish(id);
}

}  // namespace meetflow
