#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "meetflow/scenario.hpp"

namespace support {

using namespace meetflow;
namespace fs = std::filesystem;

inline fs::path source_dir() { return MEETFLOW_SOURCE_DIR; }
inline fs::path fixtures_dir() { return source_dir() / "fixtures"; }
inline fs::path scenario_path(const std::string& name) { return source_dir() / "scenarios" / name; }

inline Json read_json(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return Json::parse(buffer.str());
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline Json strata_canned() { return read_json(source_dir() / "scenarios" / "strata.canned.json"); }

inline PhasePlan strata_initial_plan() { return plan_from_compact(strata_canned().at("phase_generation").at(0)); }

inline PhasePlan strata_refined_plan() {
  PhasePlan plan = plan_from_compact(strata_canned().at("phase_refinement").at(0));
  plan.revision = 1;
  return plan;
}

inline Invitation strata_invitation() { return load_scenario(scenario_path("strata.scenario")).invitation; }

inline std::shared_ptr<Gateway> replay_gateway() {
  return std::make_shared<Gateway>(std::make_shared<ReplayProvider>(fixtures_dir()));
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("meetflow-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

}  // namespace support
