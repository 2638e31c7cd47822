#include "meetflow/phase_pipeline.hpp"

#include <algorithm>

#include "meetflow/prompts.hpp"

namespace meetflow {

namespace {

template <class F>
PlanGeneration run_plan_request(Gateway& gateway, PromptRequest request, F&& check) {
  const std::function<PhasePlan(std::string_view)> parser = [&](std::string_view raw) {
    PhasePlan plan = parse_compact_plan(raw);
    check(plan);
    return plan;
  };
  try {
    auto result = gateway.complete_structured(std::move(request), parser);
    return PlanGeneration{std::move(result.value), {}, result.attempt_count};
  } catch (const StructuredOutputExhausted& exhausted) {
    if (exhausted.last_failure_semantic()) throw Error(ErrorCode::PlanInvalid, exhausted.what());
    throw;
  }
}

void reject_errors(const ValidationReport& report) {
  if (report.has_errors()) throw ParseFailure(report.describe_errors(), true);
}

}  // namespace

PlanGeneration generate_initial_plan(Gateway& gateway, const Invitation& invitation, const PipelineOptions& options) {
  require_valid(invitation);
  PromptRequest request = build_request(
      Purpose::phase_generation,
      {{"duration_minutes", std::to_string(invitation.duration_minutes)}, {"invitation", invitation.text}});
  request.max_attempts = options.max_attempts;

  PlanGeneration out = run_plan_request(gateway, std::move(request), [&](const PhasePlan& plan) {
    reject_errors(validate_plan(plan, invitation));
  });
  out.plan.revision = 0;
  out.report = validate_plan(out.plan, invitation);
  return out;
}

std::vector<const FeatureItem*> select_divergent_features(const RefinementContext& context, int top_k) {
  std::vector<const FeatureItem*> out;
  for (const auto& id : context.divergence.divergent_ids_ranked) {
    if (static_cast<int>(out.size()) >= top_k) break;
    const FeatureItem* feature = context.tool.find(id);
    if (feature == nullptr) {
      throw Error(ErrorCode::PreconditionViolation, "divergent feature '" + id + "' is not in the focus tool");
    }
    out.push_back(feature);
  }
  return out;
}

std::string divergence_summary(const RefinementContext& context, int top_k) {
  std::string out;
  for (const FeatureItem* f : select_divergent_features(context, top_k)) {
    const FeatureTally& t = context.divergence.per_feature.at(f->id);
    out += "- " + f->name + " (include " + std::to_string(t.include_count) + ", exclude " +
           std::to_string(t.exclude_count) + ")\n";
  }
  return out;
}

PlanGeneration refine_plan(Gateway& gateway, const RefinementContext& context, const PipelineOptions& options) {
  require_valid(context.invitation);
  if (!context.divergence.has_divergence()) {
    throw Error(ErrorCode::PreconditionViolation, "refinement needs at least one divergent feature");
  }
  if (context.base_plan.revision < 0) throw Error(ErrorCode::PreconditionViolation, "base plan revision is negative");
  if (options.top_k < 1) throw Error(ErrorCode::PreconditionViolation, "top_k must be at least 1");

  const auto selected = select_divergent_features(context, options.top_k);
  PromptRequest request = build_request(
      Purpose::phase_refinement,
      {{"duration_minutes", std::to_string(context.invitation.duration_minutes)},
       {"invitation", context.invitation.text},
       {"base_plan", canonical_dump(to_compact_json(context.base_plan))},
       {"divergence_summary", divergence_summary(context, options.top_k)}});
  request.max_attempts = options.max_attempts;

  const PlanChecks checks{.expect_conclusion = true};
  PlanGeneration out = run_plan_request(gateway, std::move(request), [&](const PhasePlan& plan) {
    reject_errors(validate_plan(plan, context.invitation, checks));
    for (const FeatureItem* f : selected) {
      const auto n = std::count_if(plan.phases.begin(), plan.phases.end(),
                                   [&](const Phase& p) { return contains_icase(p.title, f->name); });
      if (n != 1) {
        throw ParseFailure("the plan must contain exactly one phase titled after '" + f->name + "', found " +
                               std::to_string(n),
                           true);
      }
    }
  });
  out.plan.revision = context.base_plan.revision + 1;
  out.report = validate_plan(out.plan, context.invitation, checks);
  return out;
}

}  // namespace meetflow
