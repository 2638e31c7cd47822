#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "meetflow/core_model.hpp"
#include "meetflow/genai_gateway.hpp"

namespace meetflow {

inline constexpr int kMaxPanes = 5;

struct ProgramAssignment {
  std::string name_or_url;
  std::string rationale;

  bool operator==(const ProgramAssignment&) const = default;
};

struct PhaseLayout {
  std::string phase_title;
  int timer_minutes = 0;
  std::vector<ProgramAssignment> programs;  // 1..5, placement order

  bool operator==(const PhaseLayout&) const = default;
};

// Normalised rectangle on the unit canvas; clients scale to pixels.
struct Tile {
  double x = 0;
  double y = 0;
  double w = 1;
  double h = 1;

  bool operator==(const Tile&) const = default;
};

struct Placement {
  ProgramAssignment program;
  Tile tile;

  bool operator==(const Placement&) const = default;
};

struct PlacedLayout {
  std::string phase_title;
  std::vector<Placement> placements;

  bool operator==(const PlacedLayout&) const = default;
};

// Tiles for `count` panes in clockwise order from the top-left:
//   1 full screen        2 left | right
//   3 left | right split top/bottom
//   4 both halves split  5 two halves on top, three thirds below
// Throws Error(CountOutOfRange) outside 1..5.
std::vector<Tile> tile(int count);

PlacedLayout place(const PhaseLayout& layout);

bool looks_like_url(std::string_view text);

// Parses the model's list of {"PhaseTitle","timer","programList":[{"name","description"}]}
// and checks it against the plan: one layout per phase in order, 1..5 programs each,
// each name a listed program or a URL, and at least one URL overall.
std::vector<PhaseLayout> parse_phase_layouts(std::string_view raw_text, const PhasePlan& plan,
                                             const std::vector<std::string>& available_programs);

struct LayoutGeneration {
  std::vector<PhaseLayout> layouts;
  int attempt_count = 1;
};

LayoutGeneration generate_phase_layouts(Gateway& gateway, const PhasePlan& plan,
                                        const std::vector<std::string>& available_programs,
                                        int max_attempts = kDefaultMaxAttempts);

void to_json(Json& j, const ProgramAssignment& p);
void from_json(const Json& j, ProgramAssignment& p);
void to_json(Json& j, const PhaseLayout& l);
void from_json(const Json& j, PhaseLayout& l);
void to_json(Json& j, const Tile& t);
void from_json(const Json& j, Tile& t);
void to_json(Json& j, const PlacedLayout& l);
void from_json(const Json& j, PlacedLayout& l);

}  // namespace meetflow
