#include "meetflow/focus_tool.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>

#include "meetflow/prompts.hpp"

namespace meetflow {

const FeatureItem* FocusTool::find(std::string_view id) const {
  const auto it = std::find_if(features.begin(), features.end(), [&](const FeatureItem& f) { return f.id == id; });
  return it == features.end() ? nullptr : &*it;
}

std::string_view to_string(Selection s) noexcept { return s == Selection::include ? "include" : "exclude"; }

Selection parse_selection(std::string_view s) {
  if (s == "include") return Selection::include;
  if (s == "exclude") return Selection::exclude;
  throw Error(ErrorCode::InvalidArgument, "selection must be include or exclude, got '" + std::string(s) + "'");
}

bool is_placeholder_feature_name(std::string_view name) {
  static const std::regex numbered(R"(^\s*feature\s*#?\s*\d+\s*$)", std::regex::icase);
  const std::string n(name);
  return std::regex_match(n, numbered) || contains_icase(n, "more features");
}

FocusTool parse_focus_tool(std::string_view raw_text, std::string scenario_text, int min_features) {
  const auto value = extract_first_json(raw_text);
  if (!value) throw ParseFailure("no JSON value was found in the response");
  const Json* list = &*value;
  if (value->is_object()) {
    const auto it = value->find("features");
    if (it == value->end()) throw ParseFailure("the response is missing required key \"features\"");
    list = &*it;
  }
  if (!list->is_array()) throw ParseFailure("\"features\" must be a list");

  FocusTool tool;
  tool.scenario_text = std::move(scenario_text);
  tool.min_features = min_features;
  for (std::size_t i = 0; i < list->size(); ++i) {
    const Json& item = (*list)[i];
    const std::string where = "feature " + std::to_string(i + 1);
    if (!item.is_object()) throw ParseFailure(where + " must be a JSON object");
    const auto name = item.find("name");
    if (name == item.end() || !name->is_string()) throw ParseFailure(where + " needs a string \"name\"");
    const auto price = item.find("price");
    if (price == item.end() || !price->is_number()) throw ParseFailure(where + " needs a numeric \"price\"");

    FeatureItem f;
    f.name = trim(name->get<std::string>());
    f.price = price->is_number_integer() ? price->get<std::int64_t>() : std::llround(price->get<double>());
    f.id = slugify(f.name);
    if (f.name.empty() || f.id.empty()) throw ParseFailure(where + " has an empty name", true);
    if (is_placeholder_feature_name(f.name)) {
      throw ParseFailure(where + " name '" + f.name + "' is not descriptive; every feature needs a unique descriptive name",
                         true);
    }
    if (f.price < 0) throw ParseFailure(where + " has a negative price", true);
    tool.features.push_back(std::move(f));
  }

  if (static_cast<int>(tool.features.size()) < min_features) {
    throw ParseFailure("It does not show " + std::to_string(min_features) + "+ features (only " +
                           std::to_string(tool.features.size()) + " listed)",
                       true);
  }
  std::set<std::string> seen;
  for (const auto& f : tool.features) {
    if (!seen.insert(f.id).second) {
      throw ParseFailure("feature '" + f.name + "' appears more than once; feature names must be unique", true);
    }
  }
  return tool;
}

void require_valid(const FocusTool& tool) {
  if (static_cast<int>(tool.features.size()) < tool.min_features) {
    throw Error(ErrorCode::ToolInvalid, "focus tool has fewer than " + std::to_string(tool.min_features) + " features");
  }
  std::set<std::string> ids;
  std::set<std::string> names;
  for (const auto& f : tool.features) {
    if (!ids.insert(f.id).second || !names.insert(to_lower(f.name)).second) {
      throw Error(ErrorCode::ToolInvalid, "duplicate feature '" + f.name + "'");
    }
  }
}

FocusToolGeneration generate_focus_tool(Gateway& gateway, const Invitation& invitation, std::string scenario_text,
                                        int min_features, int max_attempts) {
  require_valid(invitation);
  if (trim(scenario_text).empty()) throw Error(ErrorCode::PreconditionViolation, "scenario text is empty");

  PromptRequest request = build_request(Purpose::focus_tool_generation,
                                        {{"min_features", std::to_string(min_features)}, {"scenario", scenario_text}});
  request.max_attempts = max_attempts;
  const std::function<FocusTool(std::string_view)> parser = [&](std::string_view raw) {
    return parse_focus_tool(raw, scenario_text, min_features);
  };
  try {
    auto result = gateway.complete_structured(std::move(request), parser);
    return {std::move(result.value), result.attempt_count};
  } catch (const StructuredOutputExhausted& exhausted) {
    if (exhausted.last_failure_semantic()) throw Error(ErrorCode::ToolInvalid, exhausted.what());
    throw;
  }
}

FocusResponse submit_response(const FocusTool& tool, ParticipantId participant_id, RoleName role,
                              Selections selections, Timestamp submitted_at) {
  std::vector<std::string> missing;
  std::vector<std::string> unknown;
  std::int64_t total = 0;
  for (const auto& f : tool.features) {
    const auto it = selections.find(f.id);
    if (it == selections.end()) {
      missing.push_back(f.id);
    } else if (it->second == Selection::include) {
      total += f.price;
    }
  }
  for (const auto& [id, _] : selections) {
    if (tool.find(id) == nullptr) unknown.push_back(id);
  }
  if (!missing.empty() || !unknown.empty()) {
    std::string message = "selection must cover every feature exactly once";
    const auto append = [&](const char* label, const std::vector<std::string>& ids) {
      if (ids.empty()) return;
      message += std::string("; ") + label + ":";
      for (const auto& id : ids) message += " " + id;
    };
    append("missing", missing);
    append("unknown", unknown);
    throw Error(ErrorCode::IncompleteSelection, message);
  }
  return FocusResponse{std::move(participant_id), std::move(role), std::move(selections), total, submitted_at};
}

void upsert_response(std::vector<FocusResponse>& responses, FocusResponse response) {
  const auto it = std::find_if(responses.begin(), responses.end(), [&](const FocusResponse& r) {
    return r.participant_id == response.participant_id;
  });
  if (it == responses.end()) {
    responses.push_back(std::move(response));
  } else {
    *it = std::move(response);
  }
}

DivergenceReport compute_divergence(const FocusTool& tool, std::span<const FocusResponse> responses) {
  if (responses.size() < 2) {
    throw Error(ErrorCode::InsufficientResponses,
                "divergence needs at least 2 responses, got " + std::to_string(responses.size()));
  }
  DivergenceReport report;
  for (const auto& f : tool.features) {
    FeatureTally tally;
    for (const auto& r : responses) {
      const auto it = r.selections.find(f.id);
      if (it == r.selections.end()) continue;
      (it->second == Selection::include ? tally.include_count : tally.exclude_count) += 1;
    }
    tally.divergent = tally.include_count >= 1 && tally.exclude_count >= 1;
    if (tally.divergent) report.divergent_ids_ranked.push_back(f.id);
    report.per_feature.emplace(f.id, tally);
  }
  std::sort(report.divergent_ids_ranked.begin(), report.divergent_ids_ranked.end(),
            [&](const std::string& a, const std::string& b) {
              const FeatureTally& ta = report.per_feature.at(a);
              const FeatureTally& tb = report.per_feature.at(b);
              const int min_a = std::min(ta.include_count, ta.exclude_count);
              const int min_b = std::min(tb.include_count, tb.exclude_count);
              if (min_a != min_b) return min_a > min_b;
              const int total_a = ta.include_count + ta.exclude_count;
              const int total_b = tb.include_count + tb.exclude_count;
              if (total_a != total_b) return total_a > total_b;
              return a < b;
            });
  return report;
}

Json tool_view(const FocusTool& tool) {
  Json features = Json::array();
  for (const auto& f : tool.features) features.push_back({{"id", f.id}, {"name", f.name}, {"price", f.price}});
  return {{"scenario_text", tool.scenario_text}, {"features", std::move(features)}};
}

void to_json(Json& j, const FeatureItem& f) { j = {{"id", f.id}, {"name", f.name}, {"price", f.price}}; }

void from_json(const Json& j, FeatureItem& f) {
  f.id = j.at("id").get<std::string>();
  f.name = j.at("name").get<std::string>();
  f.price = j.at("price").get<std::int64_t>();
}

void to_json(Json& j, const FocusTool& t) {
  j = {{"scenario_text", t.scenario_text}, {"features", t.features}, {"min_features", t.min_features}};
}

void from_json(const Json& j, FocusTool& t) {
  t.scenario_text = j.at("scenario_text").get<std::string>();
  t.features = j.at("features").get<std::vector<FeatureItem>>();
  t.min_features = j.value("min_features", kDefaultMinFeatures);
}

Json selections_json(const Selections& s) {
  Json out = Json::object();
  for (const auto& [id, sel] : s) out[id] = to_string(sel);
  return out;
}

Selections selections_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "selections must be an object of feature id -> include|exclude");
  Selections out;
  for (const auto& [id, sel] : j.items()) {
    if (!sel.is_string()) throw Error(ErrorCode::InvalidArgument, "selection for '" + id + "' must be a string");
    out.emplace(id, parse_selection(sel.get<std::string>()));
  }
  return out;
}

void to_json(Json& j, const FocusResponse& r) {
  j = {{"participant_id", r.participant_id},
       {"role", r.role},
       {"selections", selections_json(r.selections)},
       {"total_price", r.total_price},
       {"submitted_at_ms", to_millis(r.submitted_at)}};
}

void from_json(const Json& j, FocusResponse& r) {
  r.participant_id = j.at("participant_id").get<std::string>();
  r.role = j.at("role").get<RoleName>();
  r.selections = selections_from_json(j.at("selections"));
  r.total_price = j.at("total_price").get<std::int64_t>();
  r.submitted_at = from_millis(j.at("submitted_at_ms").get<std::int64_t>());
}

void to_json(Json& j, const DivergenceReport& d) {
  Json per = Json::object();
  for (const auto& [id, t] : d.per_feature) {
    per[id] = {{"include_count", t.include_count}, {"exclude_count", t.exclude_count}, {"divergent", t.divergent}};
  }
  j = {{"per_feature", std::move(per)}, {"divergent_ids_ranked", d.divergent_ids_ranked}};
}

void from_json(const Json& j, DivergenceReport& d) {
  d.per_feature.clear();
  for (const auto& [id, t] : j.at("per_feature").items()) {
    d.per_feature.emplace(id, FeatureTally{t.at("include_count").get<int>(), t.at("exclude_count").get<int>(),
                                           t.at("divergent").get<bool>()});
  }
  d.divergent_ids_ranked = j.at("divergent_ids_ranked").get<std::vector<std::string>>();
}

}  // namespace meetflow
