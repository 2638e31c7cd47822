// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <sys/wait.h>

#include "../support.hpp"

using namespace meetflow;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void expect(bool condition, const std::string& what) {
  if (!condition) throw Failure(what);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int digits = 3) {
  std::ostringstream out;
  out.precision(digits);
  out << std::fixed << v;
  return out.str();
}

// ---------------------------------------------------------------------------
// 1. Tiling

double overlap(const Tile& a, const Tile& b) {
  const double w = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double h = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  return w > 0 && h > 0 ? w * h : 0.0;
}

bool same(const Tile& t, double x, double y, double w, double h) {
  constexpr double eps = 1e-12;
  return std::abs(t.x - x) < eps && std::abs(t.y - y) < eps && std::abs(t.w - w) < eps && std::abs(t.h - h) < eps;
}

// Angle of the tile centre around the canvas centre, screen coordinates (y down),
// so increasing angle is clockwise.
double angle(const Tile& t) { return std::atan2(t.y + t.h / 2 - 0.5, t.x + t.w / 2 - 0.5); }

Outcome tiling() {
  const auto t0 = std::chrono::steady_clock::now();
  for (int n = 1; n <= kMaxPanes; ++n) {
    const auto tiles = tile(n);
    expect(static_cast<int>(tiles.size()) == n, "tile(" + std::to_string(n) + ") size");
    double area = 0;
    for (std::size_t i = 0; i < tiles.size(); ++i) {
      const Tile& t = tiles[i];
      expect(t.x >= 0 && t.y >= 0 && t.x + t.w <= 1 + 1e-12 && t.y + t.h <= 1 + 1e-12, "tile outside canvas");
      area += t.w * t.h;
      for (std::size_t j = i + 1; j < tiles.size(); ++j) {
        expect(overlap(t, tiles[j]) <= 1e-12, "tiles overlap for count " + std::to_string(n));
      }
    }
    expect(std::abs(area - 1.0) <= 1e-9, "area " + std::to_string(area) + " for count " + std::to_string(n));
    if (n > 1) {
      const double start = angle(tiles[0]);
      double previous = -1;
      for (const auto& t : tiles) {
        double rel = std::fmod(angle(t) - start + 4 * M_PI, 2 * M_PI);
        expect(rel > previous, "tiles not clockwise for count " + std::to_string(n));
        previous = rel;
      }
    }
  }
  const auto t1 = tile(1), t2 = tile(2), t3 = tile(3), t4 = tile(4), t5 = tile(5);
  expect(same(t1[0], 0, 0, 1, 1), "one program is full screen");
  expect(same(t2[0], 0, 0, .5, 1) && same(t2[1], .5, 0, .5, 1), "two programs are left and right halves");
  expect(same(t3[0], 0, 0, .5, 1) && same(t3[1], .5, 0, .5, .5) && same(t3[2], .5, .5, .5, .5),
         "three programs split the right half top and bottom");
  expect(same(t4[0], 0, 0, .5, .5) && same(t4[1], .5, 0, .5, .5) && same(t4[2], .5, .5, .5, .5) &&
             same(t4[3], 0, .5, .5, .5),
         "four programs split both halves");
  const double third = 1.0 / 3.0;
  expect(same(t5[0], 0, 0, .5, .5) && same(t5[1], .5, 0, .5, .5), "five programs: two equal panels at the top");
  expect(same(t5[2], 2 * third, .5, third, .5) && same(t5[3], third, .5, third, .5) && same(t5[4], 0, .5, third, .5),
         "five programs: three equal panels at the bottom");
  for (int n : {0, 6}) {
    bool refused = false;
    try {
      tile(n);
    } catch (const Error& e) {
      refused = e.code() == ErrorCode::CountOutOfRange;
    }
    expect(refused, "count " + std::to_string(n) + " refused");
  }
  const double s = seconds_since(t0);
  expect(s < 1.0, "runtime " + fmt(s) + " s");
  return {true, "counts 1..5 disjoint, area 1, layout rules and clockwise order hold; " + fmt(s) + " s"};
}

// ---------------------------------------------------------------------------
// 2. Golden refinement

struct GoldenRun {
  PhasePlan initial;
  PhasePlan refined;
};

GoldenRun golden_run() {
  auto gateway = support::replay_gateway();
  const ScenarioScript script = load_scenario(support::scenario_path("strata.scenario"));
  const PhasePlan initial = generate_initial_plan(*gateway, script.invitation).plan;
  const FocusTool tool = generate_focus_tool(*gateway, script.invitation, script.invitation.text).tool;
  std::vector<FocusResponse> responses;
  for (const auto& m : script.members) {
    responses.push_back(submit_response(tool, m.participant_id, m.role,
                                        selections_for(script.focus_votes.at(m.participant_id), tool), script.start));
  }
  const RefinementContext context{initial, compute_divergence(tool, responses), script.invitation, tool};
  return {initial, refine_plan(*gateway, context, PipelineOptions{kDefaultMaxAttempts, script.config.top_k}).plan};
}

std::vector<int> minutes(const PhasePlan& plan) {
  std::vector<int> out;
  for (const auto& p : plan.phases) out.push_back(p.allotted_minutes);
  return out;
}

bool has_title(const PhasePlan& plan, const std::string& title) {
  return std::any_of(plan.phases.begin(), plan.phases.end(), [&](const Phase& p) { return p.title == title; });
}

Outcome golden_refinement() {
  const auto t0 = std::chrono::steady_clock::now();
  const GoldenRun a = golden_run();
  const double s = seconds_since(t0);
  const GoldenRun b = golden_run();
  expect(minutes(a.initial) == std::vector<int>{5, 15, 10, 10, 10, 10}, "initial minutes");
  expect(a.initial.total_minutes() == 60, "initial total");
  expect(minutes(a.refined) == std::vector<int>{5, 20, 20, 10}, "refined minutes");
  expect(has_title(a.refined, "Discussing Bluetooth 5.0"), "Bluetooth phase");
  expect(has_title(a.refined, "Discussing Auto Pairing"), "Auto Pairing phase");
  expect(canonical_dump(Json(a.initial)) == canonical_dump(Json(b.initial)), "initial plan bytes differ");
  expect(canonical_dump(Json(a.refined)) == canonical_dump(Json(b.refined)), "refined plan bytes differ");
  expect(s < 5.0, "runtime " + fmt(s) + " s");
  return {true, "6 phases (5,15,10,10,10,10)=60 -> 4 phases (5,20,20,10), identical bytes across runs; " + fmt(s) + " s"};
}

// ---------------------------------------------------------------------------
// 3. Structured-output retry

Outcome structured_retry() {
  const std::string valid = support::strata_canned().at("phase_generation").at(0).dump();
  const Invitation inv = support::strata_invitation();

  auto once = std::make_shared<CannedProvider>();
  once->push(Purpose::phase_generation, "Sure! Here is the agenda: pt=Introduction, t=5");
  once->push(Purpose::phase_generation, valid);
  Gateway gateway(once);
  const auto ok = generate_initial_plan(gateway, inv);
  expect(ok.attempt_count == 2, "attempt_count " + std::to_string(ok.attempt_count));

  auto never = std::make_shared<CannedProvider>();
  for (const char* bad : {"not json", "{\"goal\": \"g\"}", "[No prose]"}) never->push(Purpose::phase_generation, bad);
  Gateway failing(never);
  std::size_t reasons = 0;
  bool exhausted = false;
  try {
    generate_initial_plan(failing, inv);
  } catch (const StructuredOutputExhausted& e) {
    exhausted = true;
    reasons = e.reasons().size();
  }
  expect(exhausted, "malformed x3 did not raise StructuredOutputExhausted");
  expect(reasons == 3, "reasons " + std::to_string(reasons));
  return {true, "[malformed, valid] -> attempt 2; [malformed x3] -> StructuredOutputExhausted with 3 reasons"};
}

// ---------------------------------------------------------------------------
// 4. Directionality property

Outcome directionality() {
  std::mt19937_64 rng(20240611);
  const HotlConfig config;
  constexpr int kStreams = 10'000;
  std::uint64_t commits = 0, iterative_reentries = 0, proposals = 0, verdicts = 0;
  for (int s = 0; s < kStreams; ++s) {
    PhasePlan plan;
    const int n = std::uniform_int_distribution<int>(2, 8)(rng);
    for (int i = 0; i < n; ++i) {
      Phase p;
      p.title = "phase " + std::to_string(i);
      p.directionality = rng() % 2 ? Directionality::directional : Directionality::iterative;
      plan.phases.push_back(p);
    }
    TrackerState tracker;
    std::optional<TransitionProposal> proposal;
    std::uint64_t ordinal = 0;
    Timestamp now = from_millis(0);
    const int length = std::uniform_int_distribution<int>(5, 40)(rng);
    for (int k = 0; k < length; ++k) {
      now += Millis{std::uniform_int_distribution<int>(0, 15'000)(rng)};
      if (const auto effect = hotl::tick(proposal, now)) {
        const PhaseIndex to = effect->to_index;
        const bool directional = plan.phases[to].directionality == Directionality::directional;
        expect(!(directional && tracker.visited.contains(to)), "committed re-entry of directional phase");
        expect(to != tracker.current_phase_index, "committed self-transition");
        if (!directional && tracker.visited.contains(to)) ++iterative_reentries;
        hotl::apply_commit(tracker, effect->proposal);
        proposal = effect->proposal;
        ++commits;
      }
      if (proposal && proposal->is_open() && rng() % 5 == 0) {
        const auto aborted = hotl::abort(proposal, proposal->proposal_id, "a", {"a"}, now);
        hotl::apply_abort(tracker, config, aborted, now);
        proposal = aborted;
      }
      const PhaseIndex target = std::uniform_int_distribution<PhaseIndex>(0, n - 1)(rng);
      ++verdicts;
      note_utterance(tracker, now);
      const auto candidate = observe(tracker, plan, ClassifierVerdict{target, 1.0, ClassifierKind::scripted}, now);
      if (candidate) {
        expect(candidate->target_index != tracker.current_phase_index, "self-transition proposed");
      }
      const bool iterative = plan.phases[target].directionality == Directionality::iterative;
      if (iterative && target != tracker.current_phase_index && !tracker.under_cooldown(target, now)) {
        expect(candidate.has_value(), "iterative phase was not re-enterable");
      }
      if (candidate && !(proposal && proposal->is_open())) {
        proposal = hotl::open_proposal(config, proposal, tracker, *candidate, now, ++ordinal);
        ++proposals;
      }
    }
  }
  expect(iterative_reentries > 0, "no iterative re-entry was exercised");
  return {true, std::to_string(kStreams) + " streams, " + std::to_string(verdicts) + " verdicts, " +
                    std::to_string(proposals) + " proposals, " + std::to_string(commits) + " commits (" +
                    std::to_string(iterative_reentries) + " iterative re-entries), no directional re-entry"};
}

// ---------------------------------------------------------------------------
// 5. HOTL protocol with three clients

struct SimClient {
  ParticipantId id;
  bool connected = false;
  std::vector<WireMessage> inbox;
};

WireMessage cmd(const std::string& type, Json payload = Json::object()) {
  return WireMessage{type, {}, std::nullopt, std::move(payload)};
}

struct SimSession {
  ScenarioScript script = load_scenario(support::scenario_path("strata.scenario"));
  ManualClock clock{script.start};
  SessionHub hub{support::replay_gateway(), clock};
  std::array<SimClient, 3> clients{SimClient{"pm"}, SimClient{"hw"}, SimClient{"sw"}};
  std::string id;

  void deliver(const std::vector<Outbound>& out, const ParticipantId& sender) {
    for (const auto& o : out) {
      if (o.message.type == "error") {
        expect(o.audience == Audience::only && o.participant == sender, "error broadcast beyond its sender");
      }
      for (auto& c : clients) {
        if (c.connected && o.delivers_to(c.id)) c.inbox.push_back(o.message);
      }
    }
  }

  void send(const ParticipantId& who, const WireMessage& m) {
    for (auto& c : clients) c.connected = c.connected || c.id == who;
    deliver(hub.handle_command(id, who, m), who);
  }

  void advance_to(Timestamp t) {
    while (const auto d = hub.next_deadline()) {
      if (*d > t) break;
      clock.set(std::max(*d, clock.now()));
      deliver(hub.tick(), {});
    }
    clock.set(std::max(t, clock.now()));
  }

  void open(const SessionConfig& config) {
    id = hub.create_session(script.invitation, config);
    for (const auto& m : script.members) {
      clock.advance(Millis{1000});
      send(m.participant_id, cmd("join", {{"role", m.role.value}}));
    }
    const FocusTool tool = *hub.snapshot(id).focus_tool;
    for (const auto& m : script.members) {
      clock.advance(Millis{1000});
      send(m.participant_id, cmd("submit_focus_response",
                                 {{"selections", selections_json(selections_for(script.focus_votes.at(m.participant_id), tool))}}));
    }
    clock.advance(Millis{1000});
    send("pm", cmd("start_meeting"));
    expect(hub.snapshot(id).lifecycle == Lifecycle::in_meeting, "session did not start");
  }
};

struct LogAudit {
  std::size_t commits = 0;
  std::size_t aborts = 0;
  std::size_t reproposals_after_cooldown = 0;
};

// Checks commit timing, abort effects and cooldown on one session log.
LogAudit audit(const std::vector<EventRecord>& log) {
  LogAudit a;
  SessionState state;
  struct Cool {
    Timestamp at;
    std::size_t utterances = 0;
  };
  std::map<PhaseIndex, Cool> cooling;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const EventRecord& e = log[i];
    const SessionState before = state;
    apply(state, e);
    const HotlConfig& hotl = state.config.hotl;
    switch (e.kind) {
      case EventKind::transition_committed: {
        ++a.commits;
        const auto& p = *state.proposal;
        expect(e.at == p.deadline, "commit at " + std::to_string(to_millis(e.at)) + " but deadline " +
                                       std::to_string(to_millis(p.deadline)));
        expect(i + 1 < log.size() && log[i + 1].kind == EventKind::layout_applied &&
                   log[i + 1].payload.at("phase_index").get<PhaseIndex>() == p.to_index,
               "layout_applied does not follow transition_committed");
        const bool directional = state.plan->phases[p.to_index].directionality == Directionality::directional;
        expect(!(directional && before.tracker.visited.contains(p.to_index)), "directional phase re-entered");
        break;
      }
      case EventKind::transition_aborted:
        ++a.aborts;
        expect(state.tracker.current_phase_index == before.tracker.current_phase_index, "abort changed the phase");
        cooling[state.proposal->to_index] = Cool{e.at, 0};
        break;
      case EventKind::utterance_ingested:
        for (auto& [phase, c] : cooling) ++c.utterances;
        break;
      case EventKind::transition_proposed: {
        const PhaseIndex to = state.proposal->to_index;
        expect(to != before.tracker.current_phase_index, "self-transition proposed");
        if (const auto it = cooling.find(to); it != cooling.end()) {
          const bool cleared = e.at >= it->second.at + hotl.abort_cooldown ||
                               it->second.utterances >= static_cast<std::size_t>(hotl.abort_cooldown_utterances);
          expect(cleared, "aborted target re-proposed during its cooldown");
          ++a.reproposals_after_cooldown;
          cooling.erase(it);
        }
        break;
      }
      default: break;
    }
  }
  return a;
}

Outcome hotl_protocol() {
  // (a) exact deadline
  {
    SimSession sim;
    sim.open(SessionConfig{});
    sim.send("hw", cmd("submit_utterance", {{"text", "Bluetooth 5.0 would double our wireless range"}}));
    const auto proposal = sim.hub.snapshot(sim.id).proposal;
    expect(proposal && proposal->is_open(), "no proposal opened");
    sim.clock.set(proposal->deadline - Millis{1});
    expect(sim.hub.tick().empty(), "committed before the deadline");
    sim.clock.set(proposal->deadline);
    sim.deliver(sim.hub.tick(), {});
    for (const auto& c : sim.clients) {
      const auto n = c.inbox.size();
      expect(n >= 2 && c.inbox[n - 2].type == "transition_committed" && c.inbox[n - 1].type == "layout_applied",
             c.id + " did not see commit then layout");
    }
    expect(sim.hub.snapshot(sim.id).tracker.current_phase_index == proposal->to_index, "phase unchanged after commit");
  }
  // (b) single abort
  {
    SimSession sim;
    sim.open(SessionConfig{});
    sim.send("hw", cmd("submit_utterance", {{"text", "Bluetooth 5.0 would double our wireless range"}}));
    const auto proposal = *sim.hub.snapshot(sim.id).proposal;
    sim.clock.advance(Millis{2000});
    sim.send("sw", cmd("abort_transition", {{"proposal_id", proposal.proposal_id}}));
    sim.advance_to(proposal.deadline + Millis{1});
    expect(sim.hub.snapshot(sim.id).tracker.current_phase_index == 0, "phase changed after abort");
    sim.clock.advance(Millis{1000});
    sim.send("hw", cmd("submit_utterance", {{"text", "Bluetooth range again, and the chipset"}}));
    expect(sim.hub.snapshot(sim.id).proposals_opened == 1, "target re-proposed during cooldown");
    sim.advance_to(sim.clock.now() + SessionConfig{}.hotl.abort_cooldown);
    sim.send("hw", cmd("submit_utterance", {{"text", "Bluetooth range again, and the chipset"}}));
    const auto again = sim.hub.snapshot(sim.id).proposal;
    expect(again->proposal_id == "p2" && again->to_index == proposal.to_index, "no re-proposal after cooldown");
  }
  // (c) randomized sessions
  std::mt19937_64 rng(424242);
  constexpr int kSessions = 100;
  LogAudit total;
  for (int s = 0; s < kSessions; ++s) {
    SessionConfig config;
    config.classifier = ClassifierKind::scripted;
    const int length = std::uniform_int_distribution<int>(4, 24)(rng);
    for (int i = 0; i < length; ++i) config.scripted_verdicts.push_back(rng() % 4);
    config.hotl.proposal_window = Millis{std::uniform_int_distribution<int>(2'000, 15'000)(rng)};
    config.hotl.abort_cooldown = Millis{std::uniform_int_distribution<int>(5'000, 60'000)(rng)};
    config.hotl.abort_cooldown_utterances = std::uniform_int_distribution<int>(1, 5)(rng);

    SimSession sim;
    sim.open(config);
    for (int i = 0; i < length; ++i) {
      sim.advance_to(sim.clock.now() + Millis{std::uniform_int_distribution<int>(0, 20'000)(rng)});
      const auto& speaker = sim.clients[rng() % 3].id;
      const auto state = sim.hub.snapshot(sim.id);
      if (state.proposal && state.proposal->is_open() && rng() % 3 == 0) {
        sim.send(speaker, cmd("abort_transition", {{"proposal_id", state.proposal->proposal_id}}));
      }
      sim.send(speaker, cmd("submit_utterance", {{"text", "utterance " + std::to_string(i)}}));
    }
    sim.advance_to(sim.clock.now() + Millis{60'000});
    sim.send("pm", cmd("end_meeting"));

    const auto log = sim.hub.event_log(sim.id);
    const SessionState live = sim.hub.snapshot(sim.id);
    expect(replay(log) == live, "replay differs from the live snapshot in session " + std::to_string(s));
    expect(live.lifecycle == Lifecycle::ended, "session did not end");
    for (const auto& c : sim.clients) {
      std::uint64_t expected = 1;
      for (const auto& m : c.inbox) {
        if (!m.seq) continue;
        expect(*m.seq == expected, c.id + " saw seq " + std::to_string(*m.seq) + ", expected " + std::to_string(expected));
        ++expected;
      }
      expect(expected == live.last_seq + 1, c.id + " missed events");
    }
    const LogAudit a = audit(log);
    total.commits += a.commits;
    total.aborts += a.aborts;
    total.reproposals_after_cooldown += a.reproposals_after_cooldown;
  }
  expect(total.commits > 0 && total.aborts > 0, "randomized sessions exercised no commits or aborts");
  return {true, "exact-deadline commit, abort holds phase and cools down; " + std::to_string(kSessions) +
                    " random sessions replay to the live snapshot (" + std::to_string(total.commits) + " commits, " +
                    std::to_string(total.aborts) + " aborts, " + std::to_string(total.reproposals_after_cooldown) +
                    " re-proposals after cooldown)"};
}

// ---------------------------------------------------------------------------
// 6. Divergence oracle

struct OracleRow {
  int include = 0;
  int exclude = 0;
};

// Independent tally over a bit table: bit (r * features + f) set means role r includes feature f.
std::vector<std::string> oracle_ranking(std::uint32_t table, int roles, int features, std::vector<OracleRow>& rows) {
  rows.assign(features, {});
  for (int r = 0; r < roles; ++r) {
    for (int f = 0; f < features; ++f) {
      if (table >> (r * features + f) & 1u) {
        ++rows[f].include;
      } else {
        ++rows[f].exclude;
      }
    }
  }
  std::vector<std::tuple<int, int, std::string>> keyed;
  for (int f = 0; f < features; ++f) {
    if (rows[f].include > 0 && rows[f].exclude > 0) {
      keyed.emplace_back(-std::min(rows[f].include, rows[f].exclude), -(rows[f].include + rows[f].exclude),
                         "f" + std::to_string(f));
    }
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::string> out;
  for (auto& k : keyed) out.push_back(std::get<2>(k));
  return out;
}

Outcome divergence_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::uint64_t tables = 0, permutation_checks = 0;
  std::vector<OracleRow> rows;
  for (int roles = 1; roles <= 4; ++roles) {
    for (int features = 1; features <= 6; ++features) {
      FocusTool tool;
      tool.min_features = features;
      for (int f = 0; f < features; ++f) tool.features.push_back({"f" + std::to_string(f), "F" + std::to_string(f), f});
      std::vector<FocusResponse> responses(roles);
      for (int r = 0; r < roles; ++r) {
        responses[r].participant_id = "r" + std::to_string(r);
        for (const auto& f : tool.features) responses[r].selections[f.id] = Selection::exclude;
      }
      const std::uint32_t limit = 1u << (roles * features);
      for (std::uint32_t table = 0; table < limit; ++table) {
        for (int r = 0; r < roles; ++r) {
          auto it = responses[r].selections.begin();
          for (int f = 0; f < features; ++f, ++it) {
            it->second = (table >> (r * features + f) & 1u) ? Selection::include : Selection::exclude;
          }
        }
        ++tables;
        if (roles < 2) {
          bool refused = false;
          try {
            compute_divergence(tool, responses);
          } catch (const Error& e) {
            refused = e.code() == ErrorCode::InsufficientResponses;
          }
          expect(refused, "a single response was accepted");
          continue;
        }
        const DivergenceReport report = compute_divergence(tool, responses);
        const auto ranking = oracle_ranking(table, roles, features, rows);
        expect(report.divergent_ids_ranked == ranking, "ranking differs for table " + std::to_string(table));
        for (int f = 0; f < features; ++f) {
          const FeatureTally& t = report.per_feature.at("f" + std::to_string(f));
          expect(t.include_count == rows[f].include && t.exclude_count == rows[f].exclude &&
                     t.divergent == (rows[f].include > 0 && rows[f].exclude > 0),
                 "tally differs for table " + std::to_string(table));
        }
        if (table % 251 == 0) {
          std::vector<FocusResponse> shuffled = responses;
          std::sort(shuffled.begin(), shuffled.end(),
                    [](const auto& a, const auto& b) { return a.participant_id < b.participant_id; });
          do {
            expect(compute_divergence(tool, shuffled) == report, "response order changed the report");
            ++permutation_checks;
          } while (std::next_permutation(shuffled.begin(), shuffled.end(), [](const auto& a, const auto& b) {
            return a.participant_id < b.participant_id;
          }));
        }
      }
    }
  }
  return {true, std::to_string(tables) + " vote tables (1..4 roles x 1..6 features) match the brute-force tally, " +
                    std::to_string(permutation_checks) + " permutation checks; " + fmt(seconds_since(t0), 1) + " s"};
}

// ---------------------------------------------------------------------------
// 7. Focus-tool cardinality

std::string feature_list(int count) {
  Json list = Json::array();
  for (int i = 0; i < count; ++i) {
    list.push_back({{"name", "Option " + std::string(1, static_cast<char>('A' + i % 26)) + std::to_string(i / 26)},
                    {"price", 5 + i}});
  }
  return Json{{"features", list}}.dump();
}

Outcome focus_tool_cardinality() {
  auto provider = std::make_shared<CannedProvider>();
  provider->push(Purpose::focus_tool_generation, feature_list(12));
  provider->push(Purpose::focus_tool_generation, feature_list(32));
  Gateway gateway(provider);
  const auto out = generate_focus_tool(gateway, support::strata_invitation(), "Strata headphones", kDefaultMinFeatures);
  expect(out.attempt_count == 2, "attempt_count " + std::to_string(out.attempt_count));
  expect(out.tool.features.size() == 32, "feature count");
  require_valid(out.tool);
  return {true, "12 then 32 features -> accepted at attempt 2 with 32 unique features"};
}

// ---------------------------------------------------------------------------
// 8. End-to-end scenario through the CLI

struct CliRun {
  int status = -1;
  double seconds = 0;
};

CliRun run_cli(const fs::path& scenario, const fs::path& out) {
  const std::string cmd = std::string(MEETFLOW_CLI) + " scenario run '" + scenario.string() + "' --out '" +
                          out.string() + "' > '" + (out / "stdout.txt").string() + "' 2>&1";
  const auto t0 = std::chrono::steady_clock::now();
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, seconds_since(t0)};
}

Outcome end_to_end() {
  support::TempDir a("accept-a");
  support::TempDir b("accept-b");
  const fs::path scenario = support::scenario_path("strata.scenario");
  const CliRun first = run_cli(scenario, a.path());
  const CliRun second = run_cli(scenario, b.path());
  expect(first.status == 0 && second.status == 0,
         "exit status " + std::to_string(first.status) + "/" + std::to_string(second.status));
  expect(first.seconds < 10 && second.seconds < 10, "runtime " + fmt(first.seconds) + " s");

  std::vector<fs::path> logs;
  for (const auto& e : fs::directory_iterator(a.path() / "sessions")) logs.push_back(e.path());
  expect(logs.size() == 1, "expected one session log");
  const fs::path other = b.path() / "sessions" / logs[0].filename();
  expect(fs::exists(other), "second run used a different session id");
  expect(support::read_text(logs[0]) == support::read_text(other), "event logs differ between runs");
  const std::string timeline = logs[0].stem().string() + ".timeline.txt";
  expect(support::read_text(a.path() / timeline) == support::read_text(b.path() / timeline), "timelines differ");

  const auto log = read_event_log(logs[0]);
  std::set<std::pair<PhaseIndex, PhaseIndex>> distinct;
  std::size_t commits = 0;
  for (const auto& e : log) {
    if (e.kind != EventKind::transition_committed) continue;
    const auto p = e.payload.at("proposal").get<TransitionProposal>();
    distinct.insert({p.from_index, p.to_index});
    ++commits;
  }
  expect(distinct.size() >= 2, "only " + std::to_string(distinct.size()) + " distinct committed transitions");
  return {true, "exit 0 twice, " + std::to_string(commits) + " committed transitions, byte-identical logs; " +
                    fmt(std::max(first.seconds, second.seconds)) + " s"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"tiling exactness", tiling},
      {"golden refinement", golden_refinement},
      {"structured-output retry", structured_retry},
      {"directionality state machine", directionality},
      {"HOTL protocol", hotl_protocol},
      {"divergence oracle", divergence_oracle},
      {"focus-tool cardinality", focus_tool_cardinality},
      {"end-to-end scenario", end_to_end},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
