#include <doctest.h>

#include <algorithm>

#include "support.hpp"

using namespace meetflow;

namespace {

FocusTool small_tool() {
  FocusTool t;
  t.scenario_text = "earbuds";
  t.min_features = 3;
  t.features = {{"anc", "ANC", 10}, {"case", "Case", 20}, {"eq", "EQ", 10}};
  return t;
}

FocusResponse respond(const FocusTool& tool, const std::string& who, std::initializer_list<Selection> picks) {
  Selections s;
  auto it = picks.begin();
  for (const auto& f : tool.features) s[f.id] = *it++;
  return submit_response(tool, who, RoleName{"designer"}, s, Timestamp{});
}

std::string features_json(int count, std::string prefix = "Feature item ") {
  Json list = Json::array();
  for (int i = 0; i < count; ++i) list.push_back({{"name", prefix + std::string(1, char('A' + i % 26)) + std::to_string(i)}, {"price", i}});
  return Json{{"features", list}}.dump();
}

}  // namespace

TEST_CASE("totals are computed server-side") {
  const FocusTool tool = small_tool();
  using enum Selection;
  CHECK(respond(tool, "a", {include, exclude, include}).total_price == 20);
  CHECK(respond(tool, "a", {exclude, exclude, exclude}).total_price == 0);
  CHECK(respond(tool, "a", {include, include, include}).total_price == 40);
}

TEST_CASE("selections must be total and known") {
  const FocusTool tool = small_tool();
  try {
    submit_response(tool, "a", RoleName{"designer"}, {{"anc", Selection::include}, {"wings", Selection::include}},
                    Timestamp{});
    FAIL("expected IncompleteSelection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IncompleteSelection);
    const std::string what = e.what();
    CHECK(what.find("case") != std::string::npos);
    CHECK(what.find("wings") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_selection("maybe"), Error);
}

TEST_CASE("resubmission replaces the earlier response") {
  const FocusTool tool = small_tool();
  using enum Selection;
  std::vector<FocusResponse> responses;
  upsert_response(responses, respond(tool, "a", {include, include, include}));
  upsert_response(responses, respond(tool, "b", {exclude, exclude, exclude}));
  upsert_response(responses, respond(tool, "a", {exclude, exclude, exclude}));
  REQUIRE(responses.size() == 2);
  CHECK(responses[0].participant_id == "a");
  CHECK(responses[0].total_price == 0);
}

TEST_CASE("divergence tallies and ranking") {
  FocusTool tool = small_tool();
  using enum Selection;
  const std::vector<FocusResponse> responses = {respond(tool, "a", {include, include, include}),
                                                respond(tool, "b", {exclude, include, exclude}),
                                                respond(tool, "c", {exclude, include, include})};
  const auto report = compute_divergence(tool, responses);
  CHECK(report.per_feature.at("anc") == FeatureTally{1, 2, true});
  CHECK(report.per_feature.at("case") == FeatureTally{3, 0, false});
  CHECK(report.per_feature.at("eq") == FeatureTally{2, 1, true});
  CHECK(report.divergent_ids_ranked == std::vector<std::string>{"anc", "eq"});

  const std::vector<FocusResponse> agree = {respond(tool, "a", {include, include, include}),
                                            respond(tool, "b", {include, include, include})};
  CHECK_FALSE(compute_divergence(tool, agree).has_divergence());

  try {
    compute_divergence(tool, std::span(agree).first(1));
    FAIL("expected InsufficientResponses");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientResponses);
  }
}

TEST_CASE("divergence does not depend on response order") {
  const FocusTool tool = small_tool();
  using enum Selection;
  std::vector<FocusResponse> responses = {respond(tool, "a", {include, exclude, include}),
                                          respond(tool, "b", {exclude, include, exclude}),
                                          respond(tool, "c", {exclude, exclude, include}),
                                          respond(tool, "d", {include, include, include})};
  const auto expected = compute_divergence(tool, responses);
  std::sort(responses.begin(), responses.end(),
            [](const FocusResponse& x, const FocusResponse& y) { return x.participant_id < y.participant_id; });
  do {
    CHECK(compute_divergence(tool, responses) == expected);
  } while (std::next_permutation(responses.begin(), responses.end(), [](const auto& x, const auto& y) {
    return x.participant_id < y.participant_id;
  }));
}

TEST_CASE("placeholder names are rejected") {
  CHECK(is_placeholder_feature_name("Feature 26"));
  CHECK(is_placeholder_feature_name("feature #3"));
  CHECK(is_placeholder_feature_name("... and many more features"));
  CHECK_FALSE(is_placeholder_feature_name("Feature-rich case"));
  CHECK_FALSE(is_placeholder_feature_name("Bluetooth 5.0"));
}

TEST_CASE("parse_focus_tool content rules are semantic failures") {
  const auto expect_semantic = [](const std::string& raw, const char* fragment) {
    try {
      parse_focus_tool(raw, "s", 3);
      FAIL("expected ParseFailure");
    } catch (const ParseFailure& f) {
      CHECK(f.semantic());
      CHECK(std::string(f.what()).find(fragment) != std::string::npos);
    }
  };
  expect_semantic(features_json(2), "3+ features");
  expect_semantic(R"({"features":[{"name":"A","price":1},{"name":"a","price":2},{"name":"B","price":3}]})",
                  "more than once");
  expect_semantic(R"([{"name":"A","price":1},{"name":"Feature 2","price":2},{"name":"B","price":3}])",
                  "not descriptive");

  try {
    parse_focus_tool(R"({"items":[]})", "s", 3);
    FAIL("expected ParseFailure");
  } catch (const ParseFailure& f) {
    CHECK_FALSE(f.semantic());
  }

  const FocusTool tool = parse_focus_tool(R"([{"name":"Bluetooth 5.0","price":12.4},{"name":"B","price":3},{"name":"C","price":0}])", "s", 3);
  CHECK(tool.features[0].id == "bluetooth-5-0");
  CHECK(tool.features[0].price == 12);
}

TEST_CASE("require_valid catches duplicates and short tools") {
  FocusTool tool = small_tool();
  CHECK_NOTHROW(require_valid(tool));
  tool.features.push_back({"anc-2", "anc", 1});
  CHECK_THROWS_AS(require_valid(tool), Error);
  tool = small_tool();
  tool.min_features = 4;
  try {
    require_valid(tool);
    FAIL("expected ToolInvalid");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ToolInvalid);
  }
}

TEST_CASE("generation retries a short list and succeeds on the second attempt") {
  auto provider = std::make_shared<CannedProvider>();
  provider->push(Purpose::focus_tool_generation, features_json(12));
  provider->push(Purpose::focus_tool_generation, features_json(32));
  Gateway gateway(provider);
  const auto out = generate_focus_tool(gateway, support::strata_invitation(), "earbuds", 30);
  CHECK(out.attempt_count == 2);
  CHECK(out.tool.features.size() == 32);
}

TEST_CASE("three short lists end in ToolInvalid") {
  auto provider = std::make_shared<CannedProvider>();
  for (int i = 0; i < 3; ++i) provider->push(Purpose::focus_tool_generation, features_json(12));
  Gateway gateway(provider);
  try {
    generate_focus_tool(gateway, support::strata_invitation(), "earbuds", 30);
    FAIL("expected ToolInvalid");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ToolInvalid);
  }
}

TEST_CASE("tool view and json round-trip") {
  const FocusTool tool = small_tool();
  CHECK(Json(tool).get<FocusTool>() == tool);
  const Json view = tool_view(tool);
  CHECK(view.at("features").size() == 3);
  CHECK(view.at("features")[1].at("price") == 20);
  const FocusResponse r = respond(tool, "a", {Selection::include, Selection::exclude, Selection::include});
  CHECK(Json(r).get<FocusResponse>() == r);
}
