#include "meetflow/prompts.hpp"

#include <array>

#include "meetflow/error.hpp"

namespace meetflow {

// Defined in the generated prompt_assets.cpp.
std::string_view embedded_prompt_text(Purpose purpose);

namespace {

std::string strip_trailing_newlines(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

}  // namespace

PromptTemplate parse_prompt_template(std::string_view text) {
  PromptTemplate out;
  enum class Section { none, system, user } section = Section::none;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;

    if (section == Section::none && line.starts_with("# version:")) {
      out.version = std::stoi(std::string(line.substr(10)));
    } else if (line == "[system]") {
      section = Section::system;
    } else if (line == "[user]") {
      section = Section::user;
    } else if (section == Section::system) {
      out.system.append(line).push_back('\n');
    } else if (section == Section::user) {
      out.user.append(line).push_back('\n');
    }
    if (eol == text.size()) break;
  }
  out.system = strip_trailing_newlines(std::move(out.system));
  out.user = strip_trailing_newlines(std::move(out.user));
  if (out.version <= 0 || out.system.empty() || out.user.empty()) {
    throw Error(ErrorCode::ConfigError, "prompt template needs a version line, a [system] and a [user] section");
  }
  return out;
}

const PromptTemplate& builtin_template(Purpose purpose) {
  static const std::array<PromptTemplate, 5> templates = [] {
    std::array<PromptTemplate, 5> t;
    for (auto p : {Purpose::phase_generation, Purpose::phase_refinement, Purpose::layout_generation,
                   Purpose::focus_tool_generation, Purpose::utterance_classification}) {
      t[static_cast<std::size_t>(p)] = parse_prompt_template(embedded_prompt_text(p));
    }
    return t;
  }();
  return templates[static_cast<std::size_t>(purpose)];
}

std::string render(std::string_view text, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (true) {
    const std::size_t open = text.find("{{", pos);
    if (open == std::string_view::npos) break;
    const std::size_t close = text.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    const std::string name(text.substr(open + 2, close - open - 2));
    const auto it = vars.find(name);
    if (it == vars.end()) throw Error(ErrorCode::InvalidArgument, "no value for prompt placeholder {{" + name + "}}");
    out.append(text.substr(pos, open - pos));
    out.append(it->second);
    pos = close + 2;
  }
  out.append(text.substr(pos));
  return out;
}

PromptRequest build_request(Purpose purpose, const std::map<std::string, std::string>& vars) {
  const PromptTemplate& t = builtin_template(purpose);
  PromptRequest request;
  request.purpose = purpose;
  request.system_prompt = render(t.system, vars);
  request.user_prompt = render(t.user, vars);
  return request;
}

}  // namespace meetflow
