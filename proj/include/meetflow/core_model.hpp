#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "meetflow/structured_text.hpp"

namespace meetflow {

using ParticipantId = std::string;

struct RoleName {
  std::string value;

  auto operator<=>(const RoleName&) const = default;
};

// Configured set of recognised roles; membership is checked on join and for invitations.
class RoleSet {
public:
  RoleSet();  // program_manager, software_engineer, hardware_engineer, designer, researcher
  explicit RoleSet(std::set<std::string> names);

  bool contains(std::string_view name) const;
  RoleName parse(std::string_view name) const;  // throws Error(InvalidArgument)
  const std::set<std::string>& names() const noexcept { return names_; }

private:
  std::set<std::string> names_;
};

struct Invitation {
  std::string text;
  int duration_minutes = 0;
  ParticipantId organizer_id;
  std::vector<RoleName> attendee_roles;

  bool operator==(const Invitation&) const = default;
};

inline constexpr int kMinMeetingMinutes = 5;

// Throws Error(PreconditionViolation) when the invitation cannot drive a meeting.
void require_valid(const Invitation& invitation);

enum class Priority { high, medium, low, unrecognized };
enum class Directionality { directional, iterative, unrecognized };

std::string_view to_string(Priority p) noexcept;
std::string_view to_string(Directionality d) noexcept;
Priority parse_priority(std::string_view s) noexcept;
Directionality parse_directionality(std::string_view s) noexcept;

struct Phase {
  std::string title;
  std::string description;
  std::vector<std::string> encouraged_behaviors;
  std::vector<std::string> discouraged_behaviors;
  Priority priority = Priority::medium;
  int allotted_minutes = 1;
  Directionality directionality = Directionality::iterative;

  bool operator==(const Phase&) const = default;
};

struct PhasePlan {
  std::string goal;
  std::string explanation;
  std::vector<Phase> phases;
  int revision = 0;

  int total_minutes() const noexcept;
  bool operator==(const PhasePlan&) const = default;
};

bool is_introduction_title(std::string_view title);
bool is_conclusion_title(std::string_view title);

enum class Severity { error, warning };

struct Violation {
  Severity severity;
  std::string rule;
  std::string message;

  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool empty() const noexcept { return violations.empty(); }
  std::size_t error_count() const noexcept;
  std::size_t warning_count() const noexcept;
  bool has_errors() const noexcept { return error_count() > 0; }
  std::string describe_errors() const;

  bool operator==(const ValidationReport&) const = default;
};

struct PlanChecks {
  // Refined plans are expected to close with a conclusion/next-steps phase (warning only).
  bool expect_conclusion = false;
};

// Reports every problem; never throws.
ValidationReport validate_plan(const PhasePlan& plan, const Invitation& invitation, PlanChecks checks = {});

// Parses the compact model-side schema {"goal","pi":[{"pt","pd","be","bd","p","t","d"}],"exp"}.
// Throws ParseFailure with a reason suitable for a corrective prompt.
PhasePlan parse_compact_plan(std::string_view raw_text);
PhasePlan plan_from_compact(const Json& value);
Json to_compact_json(const PhasePlan& plan);

void to_json(Json& j, const RoleName& r);
void from_json(const Json& j, RoleName& r);
void to_json(Json& j, const Invitation& inv);
void from_json(const Json& j, Invitation& inv);
void to_json(Json& j, const Phase& phase);
void from_json(const Json& j, Phase& phase);
void to_json(Json& j, const PhasePlan& plan);
void from_json(const Json& j, PhasePlan& plan);

}  // namespace meetflow
