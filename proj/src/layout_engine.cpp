#include "meetflow/layout_engine.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include "meetflow/prompts.hpp"

namespace meetflow {

std::vector<Tile> tile(int count) {
  constexpr double half = 0.5;
  constexpr double third = 1.0 / 3.0;
  switch (count) {
    case 1: return {{0, 0, 1, 1}};
    case 2: return {{0, 0, half, 1}, {half, 0, half, 1}};
    case 3: return {{0, 0, half, 1}, {half, 0, half, half}, {half, half, half, half}};
    case 4: return {{0, 0, half, half}, {half, 0, half, half}, {half, half, half, half}, {0, half, half, half}};
    case 5:
      return {{0, 0, half, half},
              {half, 0, half, half},
              {2 * third, half, third, half},
              {third, half, third, half},
              {0, half, third, half}};
    default:
      throw Error(ErrorCode::CountOutOfRange,
                  "pane count must be between 1 and " + std::to_string(kMaxPanes) + ", got " + std::to_string(count));
  }
}

PlacedLayout place(const PhaseLayout& layout) {
  const auto tiles = tile(static_cast<int>(layout.programs.size()));
  PlacedLayout out{layout.phase_title, {}};
  out.placements.reserve(tiles.size());
  for (std::size_t i = 0; i < tiles.size(); ++i) out.placements.push_back({layout.programs[i], tiles[i]});
  return out;
}

bool looks_like_url(std::string_view text) {
  static const std::regex url(R"(^https?://[A-Za-z0-9.-]+(:\d+)?(/\S*)?$)", std::regex::icase);
  return std::regex_match(std::string(text), url);
}

namespace {

bool is_available(std::string_view name, const std::vector<std::string>& available) {
  const std::string wanted = to_lower(trim(name));
  return std::any_of(available.begin(), available.end(),
                     [&](const std::string& a) { return to_lower(trim(a)) == wanted; });
}

}  // namespace

std::vector<PhaseLayout> parse_phase_layouts(std::string_view raw_text, const PhasePlan& plan,
                                             const std::vector<std::string>& available_programs) {
  const auto value = extract_first_json(raw_text);
  if (!value) throw ParseFailure("no JSON value was found in the response");
  if (!value->is_array()) throw ParseFailure("the response must be a JSON list with one layout per phase");

  std::vector<PhaseLayout> layouts;
  for (std::size_t i = 0; i < value->size(); ++i) {
    const Json& item = (*value)[i];
    const std::string where = "layout " + std::to_string(i + 1);
    if (!item.is_object()) throw ParseFailure(where + " must be a JSON object");
    const auto title = item.find("PhaseTitle");
    if (title == item.end() || !title->is_string()) throw ParseFailure(where + " needs a string \"PhaseTitle\"");
    const auto timer = item.find("timer");
    if (timer == item.end() || !timer->is_number()) throw ParseFailure(where + " needs a numeric \"timer\"");
    const auto list = item.find("programList");
    if (list == item.end() || !list->is_array()) throw ParseFailure(where + " needs a \"programList\" list");

    PhaseLayout layout;
    layout.phase_title = title->get<std::string>();
    layout.timer_minutes = timer->is_number_integer() ? timer->get<int>()
                                                      : static_cast<int>(std::lround(timer->get<double>()));
    for (std::size_t k = 0; k < list->size(); ++k) {
      const Json& program = (*list)[k];
      const std::string pwhere = where + " program " + std::to_string(k + 1);
      if (!program.is_object()) throw ParseFailure(pwhere + " must be a JSON object");
      const auto name = program.find("name");
      if (name == program.end() || !name->is_string()) throw ParseFailure(pwhere + " needs a string \"name\"");
      const auto description = program.find("description");
      if (description == program.end() || !description->is_string()) {
        throw ParseFailure(pwhere + " needs a string \"description\"");
      }
      layout.programs.push_back({trim(name->get<std::string>()), description->get<std::string>()});
    }
    layouts.push_back(std::move(layout));
  }

  if (layouts.size() != plan.phases.size()) {
    throw ParseFailure("expected " + std::to_string(plan.phases.size()) + " layouts, one per phase, got " +
                           std::to_string(layouts.size()),
                       true);
  }
  bool any_url = false;
  for (std::size_t i = 0; i < layouts.size(); ++i) {
    const PhaseLayout& layout = layouts[i];
    const std::string where = "layout " + std::to_string(i + 1);
    if (to_lower(trim(layout.phase_title)) != to_lower(trim(plan.phases[i].title))) {
      throw ParseFailure(where + " is titled '" + layout.phase_title + "' but phase " + std::to_string(i + 1) +
                             " is '" + plan.phases[i].title + "'",
                         true);
    }
    const auto n = layout.programs.size();
    if (n < 1 || n > static_cast<std::size_t>(kMaxPanes)) {
      throw ParseFailure(where + " lists " + std::to_string(n) + " programs; each phase needs 1-5 programs", true);
    }
    for (const auto& p : layout.programs) {
      if (p.name_or_url.empty()) throw ParseFailure(where + " has a program with an empty name", true);
      const bool url = looks_like_url(p.name_or_url);
      any_url = any_url || url;
      if (!url && !is_available(p.name_or_url, available_programs)) {
        throw ParseFailure(where + " uses '" + p.name_or_url +
                               "', which is neither in the program list nor a URL",
                           true);
      }
    }
  }
  if (!any_url) throw ParseFailure("no URL was generated; generate at least one URL", true);
  return layouts;
}

LayoutGeneration generate_phase_layouts(Gateway& gateway, const PhasePlan& plan,
                                        const std::vector<std::string>& available_programs, int max_attempts) {
  if (plan.phases.empty()) throw Error(ErrorCode::PreconditionViolation, "plan has no phases");
  if (available_programs.empty()) throw Error(ErrorCode::PreconditionViolation, "no programs are available");

  std::string programs;
  for (const auto& p : available_programs) programs += "- " + p + "\n";
  if (!programs.empty()) programs.pop_back();

  PromptRequest request = build_request(
      Purpose::layout_generation, {{"programs", programs}, {"phases", canonical_dump(to_compact_json(plan).at("pi"))}});
  request.max_attempts = max_attempts;
  const std::function<std::vector<PhaseLayout>(std::string_view)> parser = [&](std::string_view raw) {
    return parse_phase_layouts(raw, plan, available_programs);
  };
  try {
    auto result = gateway.complete_structured(std::move(request), parser);
    return {std::move(result.value), result.attempt_count};
  } catch (const StructuredOutputExhausted& exhausted) {
    if (exhausted.last_failure_semantic()) throw Error(ErrorCode::LayoutInvalid, exhausted.what());
    throw;
  }
}

void to_json(Json& j, const ProgramAssignment& p) { j = {{"name", p.name_or_url}, {"description", p.rationale}}; }

void from_json(const Json& j, ProgramAssignment& p) {
  p.name_or_url = j.at("name").get<std::string>();
  p.rationale = j.at("description").get<std::string>();
}

void to_json(Json& j, const PhaseLayout& l) {
  j = {{"PhaseTitle", l.phase_title}, {"timer", l.timer_minutes}, {"programList", l.programs}};
}

void from_json(const Json& j, PhaseLayout& l) {
  l.phase_title = j.at("PhaseTitle").get<std::string>();
  l.timer_minutes = j.at("timer").get<int>();
  l.programs = j.at("programList").get<std::vector<ProgramAssignment>>();
}

void to_json(Json& j, const Tile& t) { j = {{"x", t.x}, {"y", t.y}, {"w", t.w}, {"h", t.h}}; }

void from_json(const Json& j, Tile& t) {
  t.x = j.at("x").get<double>();
  t.y = j.at("y").get<double>();
  t.w = j.at("w").get<double>();
  t.h = j.at("h").get<double>();
}

void to_json(Json& j, const PlacedLayout& l) {
  Json placements = Json::array();
  for (const auto& p : l.placements) placements.push_back({{"program", p.program}, {"tile", p.tile}});
  j = {{"phase_title", l.phase_title}, {"placements", std::move(placements)}};
}

void from_json(const Json& j, PlacedLayout& l) {
  l.phase_title = j.at("phase_title").get<std::string>();
  l.placements.clear();
  for (const auto& p : j.at("placements")) {
    l.placements.push_back({p.at("program").get<ProgramAssignment>(), p.at("tile").get<Tile>()});
  }
}

}  // namespace meetflow
