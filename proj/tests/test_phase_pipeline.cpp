#include <doctest.h>

#include "support.hpp"

using namespace meetflow;

namespace {

const char* kPlanA =
    R"({"goal":"g","pi":[{"pt":"Introduction","pd":"d","be":[],"bd":[],"p":"high","t":10,"d":"directional"},{"pt":"Work","pd":"d","be":[],"bd":[],"p":"medium","t":50,"d":"iterative"}],"exp":"e"})";
const char* kPlanNoIntro =
    R"({"goal":"g","pi":[{"pt":"Kickoff","pd":"d","be":[],"bd":[],"p":"high","t":10,"d":"directional"},{"pt":"Work","pd":"d","be":[],"bd":[],"p":"medium","t":50,"d":"iterative"}],"exp":"e"})";

Invitation hour_invitation() { return Invitation{"Quarterly planning", 60, "pm", {}}; }

struct StrataContext {
  RefinementContext context;
  PhasePlan initial;
};

StrataContext strata_context(Gateway& gateway) {
  const ScenarioScript script = load_scenario(support::scenario_path("strata.scenario"));
  const PhasePlan initial = generate_initial_plan(gateway, script.invitation).plan;
  const FocusTool tool = generate_focus_tool(gateway, script.invitation, script.invitation.text).tool;
  std::vector<FocusResponse> responses;
  for (const auto& m : script.members) {
    responses.push_back(
        submit_response(tool, m.participant_id, m.role, selections_for(script.focus_votes.at(m.participant_id), tool),
                        script.start));
  }
  return {RefinementContext{initial, compute_divergence(tool, responses), script.invitation, tool}, initial};
}

FocusTool one_feature_tool() {
  FocusTool tool;
  tool.scenario_text = "s";
  tool.min_features = 1;
  tool.features = {{"solar-panel", "Solar Panel", 40}, {"usb-c", "USB-C", 5}};
  return tool;
}

}  // namespace

TEST_CASE("initial plan replays from fixtures") {
  auto gateway = support::replay_gateway();
  const auto out = generate_initial_plan(*gateway, support::strata_invitation());
  CHECK(out.attempt_count == 1);
  CHECK(out.plan == support::strata_initial_plan());
  CHECK(out.report.empty());
  CHECK(out.plan.phases.size() == 6);
  CHECK(out.plan.total_minutes() == 60);
}

TEST_CASE("refinement replays to four phases around the two divergent features") {
  auto gateway = support::replay_gateway();
  const auto strata = strata_context(*gateway);
  CHECK(strata.context.divergence.divergent_ids_ranked ==
        std::vector<std::string>{"auto-pairing", "bluetooth-5-0", "wireless-charging"});
  CHECK(divergence_summary(strata.context, 2) ==
        "- Auto Pairing (include 2, exclude 1)\n- Bluetooth 5.0 (include 2, exclude 1)\n");

  const auto refined = refine_plan(*gateway, strata.context);
  CHECK(refined.plan == support::strata_refined_plan());
  CHECK(refined.plan.revision == 1);
  std::vector<int> minutes;
  for (const auto& p : refined.plan.phases) minutes.push_back(p.allotted_minutes);
  CHECK(minutes == std::vector<int>{5, 20, 20, 10});
  CHECK(refined.report.warning_count() == 1);
}

TEST_CASE("a plan without an introduction is sent back once") {
  auto provider = std::make_shared<CannedProvider>();
  provider->push(Purpose::phase_generation, kPlanNoIntro);
  provider->push(Purpose::phase_generation, kPlanA);
  Gateway gateway(provider);
  const auto out = generate_initial_plan(gateway, hour_invitation());
  CHECK(out.attempt_count == 2);
  CHECK(out.plan.phases.front().title == "Introduction");
}

TEST_CASE("persistent violations end in PlanInvalid") {
  auto provider = std::make_shared<CannedProvider>();
  for (int i = 0; i < 3; ++i) provider->push(Purpose::phase_generation, kPlanNoIntro);
  Gateway gateway(provider);
  try {
    generate_initial_plan(gateway, hour_invitation());
    FAIL("expected PlanInvalid");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PlanInvalid);
    CHECK(std::string(e.what()).find("introduction") != std::string::npos);
  }
}

TEST_CASE("unreadable output ends in StructuredOutputExhausted") {
  auto provider = std::make_shared<CannedProvider>();
  for (int i = 0; i < 3; ++i) provider->push(Purpose::phase_generation, "I cannot help with that.");
  Gateway gateway(provider);
  CHECK_THROWS_AS(generate_initial_plan(gateway, hour_invitation()), StructuredOutputExhausted);
}

TEST_CASE("an invalid invitation is refused before any model call") {
  auto provider = std::make_shared<CannedProvider>();
  provider->push(Purpose::phase_generation, kPlanA);
  Gateway gateway(provider);
  try {
    generate_initial_plan(gateway, Invitation{"Quick sync", 1, "pm", {}});
    FAIL("expected PreconditionViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PreconditionViolation);
  }
  CHECK(provider->remaining(Purpose::phase_generation) == 1);
}

TEST_CASE("single divergent feature gets exactly one phase") {
  FocusTool tool = one_feature_tool();
  std::vector<FocusResponse> responses = {
      submit_response(tool, "a", RoleName{"designer"}, {{"solar-panel", Selection::include}, {"usb-c", Selection::include}}, {}),
      submit_response(tool, "b", RoleName{"designer"}, {{"solar-panel", Selection::exclude}, {"usb-c", Selection::include}}, {})};
  const RefinementContext context{parse_compact_plan(kPlanA), compute_divergence(tool, responses), hour_invitation(), tool};

  const std::string twice =
      R"({"goal":"g","pi":[{"pt":"Introduction","pd":"d","be":[],"bd":[],"p":"high","t":10,"d":"directional"},{"pt":"Discussing Solar Panel","pd":"d","be":[],"bd":[],"p":"high","t":20,"d":"iterative"},{"pt":"Solar Panel costs","pd":"d","be":[],"bd":[],"p":"high","t":20,"d":"iterative"},{"pt":"Conclusion","pd":"d","be":[],"bd":[],"p":"low","t":10,"d":"directional"}],"exp":"e"})";
  const std::string once =
      R"({"goal":"g","pi":[{"pt":"Introduction","pd":"d","be":[],"bd":[],"p":"high","t":10,"d":"directional"},{"pt":"Discussing Solar Panel","pd":"d","be":[],"bd":[],"p":"high","t":40,"d":"iterative"},{"pt":"Conclusion","pd":"d","be":[],"bd":[],"p":"low","t":10,"d":"directional"}],"exp":"e"})";
  auto provider = std::make_shared<CannedProvider>();
  provider->push(Purpose::phase_refinement, twice);
  provider->push(Purpose::phase_refinement, once);
  Gateway gateway(provider);
  const auto out = refine_plan(gateway, context);
  CHECK(out.attempt_count == 2);
  CHECK(out.plan.phases.size() == 3);
  CHECK(out.plan.revision == 1);
  CHECK(out.report.empty());
}

TEST_CASE("refinement without divergence is a precondition violation") {
  FocusTool tool = one_feature_tool();
  const Selections same = {{"solar-panel", Selection::include}, {"usb-c", Selection::include}};
  std::vector<FocusResponse> responses = {submit_response(tool, "a", RoleName{"designer"}, same, {}),
                                          submit_response(tool, "b", RoleName{"designer"}, same, {})};
  const RefinementContext context{parse_compact_plan(kPlanA), compute_divergence(tool, responses), hour_invitation(), tool};
  auto provider = std::make_shared<CannedProvider>();
  Gateway gateway(provider);
  try {
    refine_plan(gateway, context);
    FAIL("expected PreconditionViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PreconditionViolation);
  }
}
