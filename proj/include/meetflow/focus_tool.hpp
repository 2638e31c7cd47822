#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "meetflow/clock.hpp"
#include "meetflow/core_model.hpp"
#include "meetflow/genai_gateway.hpp"

namespace meetflow {

inline constexpr int kDefaultMinFeatures = 30;

struct FeatureItem {
  std::string id;  // slug of name
  std::string name;
  std::int64_t price = 0;

  bool operator==(const FeatureItem&) const = default;
};

struct FocusTool {
  std::string scenario_text;
  std::vector<FeatureItem> features;
  int min_features = kDefaultMinFeatures;

  const FeatureItem* find(std::string_view id) const;
  bool operator==(const FocusTool&) const = default;
};

enum class Selection { include, exclude };

std::string_view to_string(Selection s) noexcept;
Selection parse_selection(std::string_view s);  // throws Error(InvalidArgument)

using Selections = std::map<std::string, Selection>;

struct FocusResponse {
  ParticipantId participant_id;
  RoleName role;
  Selections selections;
  std::int64_t total_price = 0;
  Timestamp submitted_at{};

  bool operator==(const FocusResponse&) const = default;
};

struct FeatureTally {
  int include_count = 0;
  int exclude_count = 0;
  bool divergent = false;

  bool operator==(const FeatureTally&) const = default;
};

struct DivergenceReport {
  std::map<std::string, FeatureTally> per_feature;
  // Divergent ids by min(include, exclude) desc, then total votes desc, then id asc.
  std::vector<std::string> divergent_ids_ranked;

  bool has_divergence() const noexcept { return !divergent_ids_ranked.empty(); }
  bool operator==(const DivergenceReport&) const = default;
};

// True for names like "Feature 26" that carry no description.
bool is_placeholder_feature_name(std::string_view name);

// Parses {"features":[{"name","price"}...]} (or a bare list). Content rules
// (count, uniqueness, descriptive names) fail with a semantic ParseFailure.
FocusTool parse_focus_tool(std::string_view raw_text, std::string scenario_text,
                           int min_features = kDefaultMinFeatures);

// Throws Error(ToolInvalid) when ids or names repeat or the tool is too small.
void require_valid(const FocusTool& tool);

struct FocusToolGeneration {
  FocusTool tool;
  int attempt_count = 1;
};

FocusToolGeneration generate_focus_tool(Gateway& gateway, const Invitation& invitation, std::string scenario_text,
                                        int min_features = kDefaultMinFeatures,
                                        int max_attempts = kDefaultMaxAttempts);

// Validates totality and computes total_price server-side.
FocusResponse submit_response(const FocusTool& tool, ParticipantId participant_id, RoleName role,
                              Selections selections, Timestamp submitted_at);

// Resubmission by the same participant replaces the earlier response in place.
void upsert_response(std::vector<FocusResponse>& responses, FocusResponse response);

DivergenceReport compute_divergence(const FocusTool& tool, std::span<const FocusResponse> responses);

// Client-facing projection: features with their prices, no totals or other attendees' choices.
Json tool_view(const FocusTool& tool);

void to_json(Json& j, const FeatureItem& f);
void from_json(const Json& j, FeatureItem& f);
void to_json(Json& j, const FocusTool& t);
void from_json(const Json& j, FocusTool& t);
void to_json(Json& j, const FocusResponse& r);
void from_json(const Json& j, FocusResponse& r);
void to_json(Json& j, const DivergenceReport& d);
void from_json(const Json& j, DivergenceReport& d);
Json selections_json(const Selections& s);
Selections selections_from_json(const Json& j);

}  // namespace meetflow
