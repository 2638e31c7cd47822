#pragma once

#include <map>
#include <string>
#include <string_view>

#include "meetflow/genai_gateway.hpp"

namespace meetflow {

// Versioned prompt asset: "# version: N", then "[system]" and "[user]" sections.
// Placeholders are written {{name}}.
struct PromptTemplate {
  int version = 0;
  std::string system;
  std::string user;
};

PromptTemplate parse_prompt_template(std::string_view text);

// Templates compiled in from prompts/*.txt, one per purpose.
const PromptTemplate& builtin_template(Purpose purpose);

// Substitutes every {{name}}; throws Error(InvalidArgument) on a placeholder with no value.
std::string render(std::string_view text, const std::map<std::string, std::string>& vars);

PromptRequest build_request(Purpose purpose, const std::map<std::string, std::string>& vars);

}  // namespace meetflow
