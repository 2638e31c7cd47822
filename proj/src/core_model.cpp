#include "meetflow/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "meetflow/error.hpp"

namespace meetflow {

RoleSet::RoleSet()
    : names_{"program_manager", "software_engineer", "hardware_engineer", "designer", "researcher"} {}

RoleSet::RoleSet(std::set<std::string> names) : names_(std::move(names)) {}

bool RoleSet::contains(std::string_view name) const { return names_.contains(std::string(name)); }

RoleName RoleSet::parse(std::string_view name) const {
  if (!contains(name)) throw Error(ErrorCode::InvalidArgument, "unknown role '" + std::string(name) + "'");
  return RoleName{std::string(name)};
}

void require_valid(const Invitation& invitation) {
  if (trim(invitation.text).empty()) {
    throw Error(ErrorCode::PreconditionViolation, "invitation text is empty");
  }
  if (invitation.duration_minutes < kMinMeetingMinutes) {
    throw Error(ErrorCode::PreconditionViolation,
                "invitation duration " + std::to_string(invitation.duration_minutes) +
                    " min is below the " + std::to_string(kMinMeetingMinutes) + " min minimum");
  }
}

std::string_view to_string(Priority p) noexcept {
  switch (p) {
    case Priority::high: return "high";
    case Priority::medium: return "medium";
    case Priority::low: return "low";
    case Priority::unrecognized: break;
  }
  return "unrecognized";
}

std::string_view to_string(Directionality d) noexcept {
  switch (d) {
    case Directionality::directional: return "directional";
    case Directionality::iterative: return "iterative";
    case Directionality::unrecognized: break;
  }
  return "unrecognized";
}

Priority parse_priority(std::string_view s) noexcept {
  const std::string v = to_lower(trim(s));
  if (v == "high") return Priority::high;
  if (v == "medium") return Priority::medium;
  if (v == "low") return Priority::low;
  return Priority::unrecognized;
}

Directionality parse_directionality(std::string_view s) noexcept {
  const std::string v = to_lower(trim(s));
  if (v == "directional") return Directionality::directional;
  if (v == "iterative") return Directionality::iterative;
  return Directionality::unrecognized;
}

int PhasePlan::total_minutes() const noexcept {
  return std::accumulate(phases.begin(), phases.end(), 0,
                         [](int acc, const Phase& p) { return acc + p.allotted_minutes; });
}

bool is_introduction_title(std::string_view title) { return contains_icase(title, "introduction"); }

bool is_conclusion_title(std::string_view title) {
  return contains_icase(title, "conclusion") || contains_icase(title, "next steps") ||
         contains_icase(title, "wrap");
}

std::size_t ValidationReport::error_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(),
                                                [](const Violation& v) { return v.severity == Severity::error; }));
}

std::size_t ValidationReport::warning_count() const noexcept { return violations.size() - error_count(); }

std::string ValidationReport::describe_errors() const {
  std::string out;
  for (const auto& v : violations) {
    if (v.severity != Severity::error) continue;
    if (!out.empty()) out += "; ";
    out += v.message;
  }
  return out;
}

ValidationReport validate_plan(const PhasePlan& plan, const Invitation& invitation, PlanChecks checks) {
  ValidationReport report;
  const auto error = [&](std::string rule, std::string message) {
    report.violations.push_back({Severity::error, std::move(rule), std::move(message)});
  };
  const auto warning = [&](std::string rule, std::string message) {
    report.violations.push_back({Severity::warning, std::move(rule), std::move(message)});
  };

  if (plan.phases.empty()) {
    error("empty_phases", "the plan has no phases");
    return report;
  }
  if (!is_introduction_title(plan.phases.front().title)) {
    error("missing_introduction",
          "the first phase must be an introduction phase (got '" + plan.phases.front().title + "')");
  }
  for (std::size_t i = 0; i < plan.phases.size(); ++i) {
    const Phase& p = plan.phases[i];
    const std::string where = "phase " + std::to_string(i + 1);
    if (trim(p.title).empty()) error("empty_title", where + " has an empty title");
    if (p.allotted_minutes < 1) error("minutes_too_small", where + " must be allotted at least 1 minute");
    if (p.priority == Priority::unrecognized) {
      error("invalid_priority", where + " priority must be one of high, medium, low");
    }
    if (p.directionality == Directionality::unrecognized) {
      error("invalid_directionality", where + " direction must be directional or iterative");
    }
  }

  const int total = plan.total_minutes();
  const int budget = invitation.duration_minutes;
  if (total > budget) {
    error("over_allocated", "phases total " + std::to_string(total) + " minutes, exceeding the " +
                                std::to_string(budget) + " minute meeting");
  } else if (total < budget) {
    warning("under_allocated", "phases total " + std::to_string(total) + " of " + std::to_string(budget) +
                                   " available minutes");
  }

  if (checks.expect_conclusion && !is_conclusion_title(plan.phases.back().title)) {
    warning("missing_conclusion", "the plan does not end with a conclusion or next-steps phase");
  }
  return report;
}

namespace {

const Json& require_key(const Json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseFailure(where + " is missing required key \"" + key + "\"");
  return *it;
}

std::string require_string(const Json& obj, const char* key, const std::string& where) {
  const Json& v = require_key(obj, key, where);
  if (!v.is_string()) throw ParseFailure(where + " key \"" + key + "\" must be a string");
  return v.get<std::string>();
}

std::vector<std::string> require_string_list(const Json& obj, const char* key, const std::string& where) {
  const Json& v = require_key(obj, key, where);
  if (!v.is_array()) throw ParseFailure(where + " key \"" + key + "\" must be a list of strings");
  std::vector<std::string> out;
  for (const auto& item : v) {
    if (!item.is_string()) throw ParseFailure(where + " key \"" + key + "\" must contain only strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

int require_minutes(const Json& obj, const char* key, const std::string& where) {
  const Json& v = require_key(obj, key, where);
  if (!v.is_number()) throw ParseFailure(where + " key \"" + key + "\" must be a number");
  if (v.is_number_integer()) return v.get<int>();
  return static_cast<int>(std::lround(v.get<double>()));
}

}  // namespace

PhasePlan plan_from_compact(const Json& value) {
  if (!value.is_object()) throw ParseFailure("the response must be a JSON object with keys goal, pi, exp");
  PhasePlan plan;
  plan.goal = require_string(value, "goal", "plan");
  plan.explanation = require_string(value, "exp", "plan");
  const Json& phases = require_key(value, "pi", "plan");
  if (!phases.is_array()) throw ParseFailure("plan key \"pi\" must be a list of phase definitions");
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const Json& item = phases[i];
    const std::string where = "phase " + std::to_string(i + 1);
    if (!item.is_object()) throw ParseFailure(where + " must be a JSON object");
    Phase p;
    p.title = require_string(item, "pt", where);
    p.description = require_string(item, "pd", where);
    p.encouraged_behaviors = require_string_list(item, "be", where);
    p.discouraged_behaviors = require_string_list(item, "bd", where);
    p.priority = parse_priority(require_string(item, "p", where));
    p.allotted_minutes = require_minutes(item, "t", where);
    p.directionality = parse_directionality(require_string(item, "d", where));
    plan.phases.push_back(std::move(p));
  }
  plan.revision = 0;
  return plan;
}

PhasePlan parse_compact_plan(std::string_view raw_text) {
  const auto value = extract_first_json(raw_text);
  if (!value) throw ParseFailure("no JSON value was found in the response");
  return plan_from_compact(*value);
}

Json to_compact_json(const PhasePlan& plan) {
  Json phases = Json::array();
  for (const auto& p : plan.phases) {
    phases.push_back({{"pt", p.title},
                      {"pd", p.description},
                      {"be", p.encouraged_behaviors},
                      {"bd", p.discouraged_behaviors},
                      {"p", to_string(p.priority)},
                      {"t", p.allotted_minutes},
                      {"d", to_string(p.directionality)}});
  }
  return {{"goal", plan.goal}, {"pi", std::move(phases)}, {"exp", plan.explanation}};
}

void to_json(Json& j, const RoleName& r) { j = r.value; }
void from_json(const Json& j, RoleName& r) { r.value = j.get<std::string>(); }

void to_json(Json& j, const Invitation& inv) {
  j = {{"text", inv.text},
       {"duration_minutes", inv.duration_minutes},
       {"organizer_id", inv.organizer_id},
       {"attendee_roles", inv.attendee_roles}};
}

void from_json(const Json& j, Invitation& inv) {
  inv.text = j.at("text").get<std::string>();
  inv.duration_minutes = j.at("duration_minutes").get<int>();
  inv.organizer_id = j.at("organizer_id").get<std::string>();
  inv.attendee_roles = j.value("attendee_roles", std::vector<RoleName>{});
}

void to_json(Json& j, const Phase& phase) {
  j = {{"title", phase.title},
       {"description", phase.description},
       {"encouraged_behaviors", phase.encouraged_behaviors},
       {"discouraged_behaviors", phase.discouraged_behaviors},
       {"priority", to_string(phase.priority)},
       {"allotted_minutes", phase.allotted_minutes},
       {"directionality", to_string(phase.directionality)}};
}

void from_json(const Json& j, Phase& phase) {
  phase.title = j.at("title").get<std::string>();
  phase.description = j.at("description").get<std::string>();
  phase.encouraged_behaviors = j.at("encouraged_behaviors").get<std::vector<std::string>>();
  phase.discouraged_behaviors = j.at("discouraged_behaviors").get<std::vector<std::string>>();
  phase.priority = parse_priority(j.at("priority").get<std::string>());
  phase.allotted_minutes = j.at("allotted_minutes").get<int>();
  phase.directionality = parse_directionality(j.at("directionality").get<std::string>());
}

void to_json(Json& j, const PhasePlan& plan) {
  j = {{"goal", plan.goal}, {"explanation", plan.explanation}, {"phases", plan.phases}, {"revision", plan.revision}};
}

void from_json(const Json& j, PhasePlan& plan) {
  plan.goal = j.at("goal").get<std::string>();
  plan.explanation = j.at("explanation").get<std::string>();
  plan.phases = j.at("phases").get<std::vector<Phase>>();
  plan.revision = j.at("revision").get<int>();
}

}  // namespace meetflow
