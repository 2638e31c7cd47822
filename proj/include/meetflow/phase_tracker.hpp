#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "meetflow/clock.hpp"
#include "meetflow/core_model.hpp"
#include "meetflow/genai_gateway.hpp"

namespace meetflow {

using PhaseIndex = std::size_t;

struct Utterance {
  ParticipantId speaker_id;
  Timestamp at{};
  std::string text;

  bool operator==(const Utterance&) const = default;
};

enum class ClassifierKind { llm, keyword_fallback, scripted };

std::string_view to_string(ClassifierKind k) noexcept;
ClassifierKind parse_classifier_kind(std::string_view s);

struct ClassifierVerdict {
  PhaseIndex predicted_phase_index = 0;
  double confidence = 1.0;
  ClassifierKind classifier_id = ClassifierKind::keyword_fallback;

  bool operator==(const ClassifierVerdict&) const = default;
};

// Cleared by whichever comes first: the deadline or the utterance budget.
struct Cooldown {
  Timestamp expires_at{};
  int utterances_remaining = 0;

  bool operator==(const Cooldown&) const = default;
};

struct TrackerState {
  PhaseIndex current_phase_index = 0;
  std::set<PhaseIndex> visited{0};
  std::map<PhaseIndex, Cooldown> cooldowns;

  bool under_cooldown(PhaseIndex phase, Timestamp now) const;
  bool operator==(const TrackerState&) const = default;
};

struct TransitionCandidate {
  PhaseIndex target_index = 0;

  bool operator==(const TransitionCandidate&) const = default;
};

struct TransitionCheck {
  bool allowed = false;
  std::string reason;
};

// Forward-only for directional targets, free for iterative ones, never the
// current phase, never a phase under cooldown.
TransitionCheck validate_transition(const TrackerState& state, const PhasePlan& plan, PhaseIndex target_index,
                                    Timestamp now);

// A candidate iff the verdict names a different phase that validate_transition allows.
std::optional<TransitionCandidate> observe(const TrackerState& state, const PhasePlan& plan,
                                           const ClassifierVerdict& verdict, Timestamp now);

// State changes; called only from the session's event application path.
void enter_phase(TrackerState& state, PhaseIndex phase);
void install_cooldown(TrackerState& state, PhaseIndex phase, Timestamp until, int utterances);
void note_utterance(TrackerState& state, Timestamp now);

class PhaseClassifier {
public:
  virtual ~PhaseClassifier() = default;
  virtual ClassifierVerdict classify(const Utterance& utterance, const PhasePlan& plan, const TrackerState& state) = 0;
};

// Lower-cased alphanumeric runs with stopwords removed.
std::vector<std::string> content_tokens(std::string_view text);

// Per phase: how many distinct utterance content tokens occur in the phase's
// title, description and behaviours.
std::vector<int> keyword_scores(std::string_view utterance, const PhasePlan& plan);

class KeywordClassifier final : public PhaseClassifier {
public:
  // Argmax of keyword_scores; any tie at the top (including all zero) keeps the current phase.
  ClassifierVerdict classify(const Utterance& utterance, const PhasePlan& plan, const TrackerState& state) override;
};

class ScriptedClassifier final : public PhaseClassifier {
public:
  explicit ScriptedClassifier(std::vector<PhaseIndex> script);

  // Throws Error(ScriptExhausted) past the end of the script.
  ClassifierVerdict classify(const Utterance& utterance, const PhasePlan& plan, const TrackerState& state) override;
  std::size_t position() const noexcept { return next_; }

private:
  std::vector<PhaseIndex> script_;
  std::size_t next_ = 0;
};

class LlmClassifier final : public PhaseClassifier {
public:
  explicit LlmClassifier(Gateway& gateway, int max_attempts = kDefaultMaxAttempts);

  ClassifierVerdict classify(const Utterance& utterance, const PhasePlan& plan, const TrackerState& state) override;

private:
  Gateway& gateway_;
  int max_attempts_;
};

// Reads {"phase": n}; throws ParseFailure when n is missing or out of range.
PhaseIndex parse_phase_index(std::string_view raw_text, std::size_t phase_count);

void to_json(Json& j, const Utterance& u);
void from_json(const Json& j, Utterance& u);
void to_json(Json& j, const ClassifierVerdict& v);
void from_json(const Json& j, ClassifierVerdict& v);
void to_json(Json& j, const TrackerState& s);
void from_json(const Json& j, TrackerState& s);

}  // namespace meetflow
