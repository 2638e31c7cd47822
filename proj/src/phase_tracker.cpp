#include "meetflow/phase_tracker.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "meetflow/prompts.hpp"

namespace meetflow {

std::string_view to_string(ClassifierKind k) noexcept {
  switch (k) {
    case ClassifierKind::llm: return "llm";
    case ClassifierKind::keyword_fallback: return "keyword_fallback";
    case ClassifierKind::scripted: return "scripted";
  }
  return "unknown";
}

ClassifierKind parse_classifier_kind(std::string_view s) {
  if (s == "llm") return ClassifierKind::llm;
  if (s == "keyword_fallback") return ClassifierKind::keyword_fallback;
  if (s == "scripted") return ClassifierKind::scripted;
  throw Error(ErrorCode::InvalidArgument, "unknown classifier mode '" + std::string(s) + "'");
}

bool TrackerState::under_cooldown(PhaseIndex phase, Timestamp now) const {
  const auto it = cooldowns.find(phase);
  return it != cooldowns.end() && now < it->second.expires_at && it->second.utterances_remaining > 0;
}

TransitionCheck validate_transition(const TrackerState& state, const PhasePlan& plan, PhaseIndex target_index,
                                    Timestamp now) {
  if (target_index >= plan.phases.size()) {
    throw Error(ErrorCode::PreconditionViolation, "phase index " + std::to_string(target_index) + " is out of range");
  }
  if (target_index == state.current_phase_index) return {false, "already in this phase"};

  if (plan.phases[target_index].directionality != Directionality::iterative) {
    std::optional<PhaseIndex> furthest;
    for (const PhaseIndex v : state.visited) {
      if (v < plan.phases.size() && plan.phases[v].directionality != Directionality::iterative) {
        furthest = std::max(furthest.value_or(v), v);
      }
    }
    if (furthest && target_index <= *furthest) {
      if (state.visited.contains(target_index)) return {false, "directional phase cannot be returned to"};
      return {false, "directional phases only move forward"};
    }
  }
  if (state.under_cooldown(target_index, now)) return {false, "phase is cooling down after an abort"};
  return {true, "ok"};
}

std::optional<TransitionCandidate> observe(const TrackerState& state, const PhasePlan& plan,
                                           const ClassifierVerdict& verdict, Timestamp now) {
  if (verdict.predicted_phase_index == state.current_phase_index) return std::nullopt;
  if (!validate_transition(state, plan, verdict.predicted_phase_index, now).allowed) return std::nullopt;
  return TransitionCandidate{verdict.predicted_phase_index};
}

void enter_phase(TrackerState& state, PhaseIndex phase) {
  state.current_phase_index = phase;
  state.visited.insert(phase);
}

void install_cooldown(TrackerState& state, PhaseIndex phase, Timestamp until, int utterances) {
  state.cooldowns[phase] = Cooldown{until, utterances};
}

void note_utterance(TrackerState& state, Timestamp now) {
  for (auto it = state.cooldowns.begin(); it != state.cooldowns.end();) {
    it->second.utterances_remaining -= 1;
    if (it->second.utterances_remaining <= 0 || now >= it->second.expires_at) {
      it = state.cooldowns.erase(it);
    } else {
      ++it;
    }
  }
}

// ---------------------------------------------------------------------------
// Keyword fallback

namespace {

const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> words = {
      "a",     "about", "all",   "also",  "am",    "an",     "and",   "any",    "are",   "as",    "at",
      "be",    "been",  "but",   "by",    "can",   "could",  "d",     "did",    "do",    "does",  "for",
      "from",  "get",   "go",    "going", "got",   "had",    "has",   "have",   "he",    "her",   "here",
      "him",   "his",   "how",   "i",     "if",    "in",     "into",  "is",     "it",    "its",   "just",
      "let",   "lets",  "like",  "ll",    "m",     "maybe",  "me",    "more",   "my",    "no",    "not",
      "now",   "of",    "ok",    "okay",  "on",    "one",    "or",    "our",    "out",   "re",    "really",
      "s",     "she",   "should", "so",   "some",  "t",      "talk",  "talking", "than", "that",  "the",
      "their", "them",  "then",  "there", "these", "they",   "think", "this",   "those", "to",    "too",
      "up",    "us",    "ve",    "very",  "was",   "we",     "well",  "were",   "what",  "when",  "where",
      "which", "who",   "why",   "will",  "with",  "would",  "yeah",  "yes",    "you",   "your"};
  return words;
}

std::unordered_set<std::string> phase_vocabulary(const Phase& phase) {
  std::unordered_set<std::string> vocab;
  const auto add = [&](std::string_view text) {
    for (auto& t : content_tokens(text)) vocab.insert(std::move(t));
  };
  add(phase.title);
  add(phase.description);
  for (const auto& b : phase.encouraged_behaviors) add(b);
  for (const auto& b : phase.discouraged_behaviors) add(b);
  return vocab;
}

std::vector<std::string> distinct(std::vector<std::string> tokens) {
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  return tokens;
}

}  // namespace

std::vector<std::string> content_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  const auto flush = [&] {
    if (!current.empty() && !stopwords().contains(current)) out.push_back(current);
    current.clear();
  };
  for (const unsigned char c : text) {
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

std::vector<int> keyword_scores(std::string_view utterance, const PhasePlan& plan) {
  const auto tokens = distinct(content_tokens(utterance));
  std::vector<int> scores;
  scores.reserve(plan.phases.size());
  for (const auto& phase : plan.phases) {
    const auto vocab = phase_vocabulary(phase);
    scores.push_back(static_cast<int>(
        std::count_if(tokens.begin(), tokens.end(), [&](const std::string& t) { return vocab.contains(t); })));
  }
  return scores;
}

ClassifierVerdict KeywordClassifier::classify(const Utterance& utterance, const PhasePlan& plan,
                                              const TrackerState& state) {
  if (plan.phases.empty()) throw Error(ErrorCode::PreconditionViolation, "plan has no phases");
  const auto scores = keyword_scores(utterance.text, plan);
  const auto token_count = distinct(content_tokens(utterance.text)).size();
  const int best = *std::max_element(scores.begin(), scores.end());
  const auto winners = std::count(scores.begin(), scores.end(), best);

  PhaseIndex predicted = state.current_phase_index;
  if (winners == 1) {
    predicted = static_cast<PhaseIndex>(std::find(scores.begin(), scores.end(), best) - scores.begin());
  }
  const double confidence =
      token_count == 0 ? 0.0 : static_cast<double>(scores[predicted]) / static_cast<double>(token_count);
  return ClassifierVerdict{predicted, confidence, ClassifierKind::keyword_fallback};
}

ScriptedClassifier::ScriptedClassifier(std::vector<PhaseIndex> script) : script_(std::move(script)) {}

ClassifierVerdict ScriptedClassifier::classify(const Utterance&, const PhasePlan& plan, const TrackerState&) {
  if (next_ >= script_.size()) {
    throw Error(ErrorCode::ScriptExhausted, "scripted classifier has no verdict left after " +
                                                std::to_string(script_.size()) + " utterance(s)");
  }
  const PhaseIndex index = script_[next_];
  if (index >= plan.phases.size()) {
    throw Error(ErrorCode::InvalidArgument, "scripted verdict " + std::to_string(index) + " is out of range");
  }
  ++next_;
  return ClassifierVerdict{index, 1.0, ClassifierKind::scripted};
}

PhaseIndex parse_phase_index(std::string_view raw_text, std::size_t phase_count) {
  const auto value = extract_first_json(raw_text);
  if (!value) throw ParseFailure("no JSON value was found in the response");
  if (!value->is_object()) throw ParseFailure("the response must be a JSON object {\"phase\": n}");
  const auto it = value->find("phase");
  if (it == value->end()) throw ParseFailure("the response is missing required key \"phase\"");
  if (!it->is_number_integer()) throw ParseFailure("\"phase\" must be an integer");
  const auto n = it->get<std::int64_t>();
  if (n < 0 || static_cast<std::size_t>(n) >= phase_count) {
    throw ParseFailure("\"phase\" must be between 0 and " + std::to_string(phase_count - 1), true);
  }
  return static_cast<PhaseIndex>(n);
}

LlmClassifier::LlmClassifier(Gateway& gateway, int max_attempts) : gateway_(gateway), max_attempts_(max_attempts) {}

ClassifierVerdict LlmClassifier::classify(const Utterance& utterance, const PhasePlan& plan,
                                          const TrackerState& state) {
  if (plan.phases.empty()) throw Error(ErrorCode::PreconditionViolation, "plan has no phases");
  std::string phases;
  for (std::size_t i = 0; i < plan.phases.size(); ++i) {
    phases += std::to_string(i) + ": " + plan.phases[i].title + " - " + plan.phases[i].description + "\n";
  }
  PromptRequest request = build_request(Purpose::utterance_classification,
                                        {{"phases", phases},
                                         {"current_phase", std::to_string(state.current_phase_index)},
                                         {"utterance", Json(utterance.text).dump()}});
  request.max_attempts = max_attempts_;
  const std::size_t count = plan.phases.size();
  const std::function<PhaseIndex(std::string_view)> parser = [count](std::string_view raw) {
    return parse_phase_index(raw, count);
  };
  auto result = gateway_.complete_structured(std::move(request), parser);
  return ClassifierVerdict{result.value, 1.0, ClassifierKind::llm};
}

void to_json(Json& j, const Utterance& u) {
  j = {{"speaker_id", u.speaker_id}, {"at_ms", to_millis(u.at)}, {"text", u.text}};
}

void from_json(const Json& j, Utterance& u) {
  u.speaker_id = j.at("speaker_id").get<std::string>();
  u.at = from_millis(j.at("at_ms").get<std::int64_t>());
  u.text = j.at("text").get<std::string>();
}

void to_json(Json& j, const ClassifierVerdict& v) {
  j = {{"predicted_phase_index", v.predicted_phase_index},
       {"confidence", v.confidence},
       {"classifier_id", to_string(v.classifier_id)}};
}

void from_json(const Json& j, ClassifierVerdict& v) {
  v.predicted_phase_index = j.at("predicted_phase_index").get<PhaseIndex>();
  v.confidence = j.at("confidence").get<double>();
  v.classifier_id = parse_classifier_kind(j.at("classifier_id").get<std::string>());
}

void to_json(Json& j, const TrackerState& s) {
  Json cooldowns = Json::array();
  for (const auto& [phase, c] : s.cooldowns) {
    cooldowns.push_back(
        {{"phase", phase}, {"expires_at_ms", to_millis(c.expires_at)}, {"utterances_remaining", c.utterances_remaining}});
  }
  j = {{"current_phase_index", s.current_phase_index}, {"visited", s.visited}, {"cooldowns", std::move(cooldowns)}};
}

void from_json(const Json& j, TrackerState& s) {
  s.current_phase_index = j.at("current_phase_index").get<PhaseIndex>();
  s.visited = j.at("visited").get<std::set<PhaseIndex>>();
  s.cooldowns.clear();
  for (const auto& c : j.at("cooldowns")) {
    s.cooldowns[c.at("phase").get<PhaseIndex>()] =
        Cooldown{from_millis(c.at("expires_at_ms").get<std::int64_t>()), c.at("utterances_remaining").get<int>()};
  }
}

}  // namespace meetflow
