#pragma once

#include <string>
#include <vector>

#include "meetflow/core_model.hpp"
#include "meetflow/focus_tool.hpp"
#include "meetflow/genai_gateway.hpp"

namespace meetflow {

inline constexpr int kDefaultTopK = 2;

struct PipelineOptions {
  int max_attempts = kDefaultMaxAttempts;
  int top_k = kDefaultTopK;  // divergent features promoted to discussion phases
};

struct RefinementContext {
  PhasePlan base_plan;
  DivergenceReport divergence;
  Invitation invitation;
  FocusTool tool;  // resolves divergent ids to the feature names used in prompts and titles
};

struct PlanGeneration {
  PhasePlan plan;
  ValidationReport report;  // warnings only; plans with errors never leave the pipeline
  int attempt_count = 1;
};

// Invitation -> goal + phase plan (revision 0). Plans that fail validation are sent
// back to the model with the violations as the corrective reason.
// Throws Error(PreconditionViolation) before any model call for an invalid invitation,
// Error(PlanInvalid) when violations persist, StructuredOutputExhausted on unreadable output.
PlanGeneration generate_initial_plan(Gateway& gateway, const Invitation& invitation, const PipelineOptions& options = {});

// The top-K divergent features, most contested first.
std::vector<const FeatureItem*> select_divergent_features(const RefinementContext& context, int top_k);

// One line per selected feature: "- <name> (include N, exclude M)".
std::string divergence_summary(const RefinementContext& context, int top_k);

// Re-plans around the most divergent features. The result keeps an introduction
// first, has exactly one phase titled after each selected feature and passes
// validate_plan; its revision is base + 1.
PlanGeneration refine_plan(Gateway& gateway, const RefinementContext& context, const PipelineOptions& options = {});

}  // namespace meetflow
