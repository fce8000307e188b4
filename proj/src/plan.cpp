#include "visurvey/plan.hpp"

#include "visurvey/error.hpp"
#include "visurvey/session.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace visurvey {

const char* to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::full: return "full";
    case TaskKind::spot: return "spot";
    case TaskKind::pam: return "pam";
  }
  return "full";
}

TaskKind parse_task_kind(std::string_view text) {
  if (text == "full") return TaskKind::full;
  if (text == "spot") return TaskKind::spot;
  if (text == "pam") return TaskKind::pam;
  throw ParseError("BAD_TASK_KIND", "", "unknown task kind '" + std::string(text) + "'");
}

bool ImageGridStep::contains(std::string_view item_id) const {
  return std::any_of(items.begin(), items.end(),
                     [&](const ItemDef& item) { return item.identifier == item_id; });
}

std::size_t TaskPlan::answerable_step_count() const {
  return static_cast<std::size_t>(
      std::count_if(steps.begin(), steps.end(), [](const Step& s) { return !s.is_summary(); }));
}

std::string item_step_id(std::string_view assessment_id, std::string_view item_id) {
  return std::string(assessment_id) + "." + std::string(item_id);
}

std::string summary_step_id(std::string_view assessment_id) {
  return std::string(assessment_id) + ".summary";
}

std::string grid_step_id(std::string_view assessment_id) {
  return std::string(assessment_id) + ".grid";
}

namespace {

void check_reserved(const ItemDef& item) {
  if (item.identifier == "summary" || item.identifier == "grid") {
    throw CompileError("RESERVED_IDENTIFIER",
                       "item identifier '" + item.identifier + "' collides with a generated step id");
  }
}

}  // namespace

TaskPlan compile_full_task(const AssessmentPair& pair, std::span<const ItemDef> items,
                           std::string_view study_id) {
  if (items.empty()) throw CompileError("EMPTY_ITEMS", "a full assessment needs at least one item");
  TaskPlan plan;
  plan.plan_id = pair.full.identifier + ".full";
  plan.task_kind = TaskKind::full;
  plan.study_id = study_id;
  plan.assessment_id = pair.full.identifier;
  plan.steps.reserve(items.size() + 1);
  for (const ItemDef& item : items) {
    check_reserved(item);
    plan.steps.push_back({item_step_id(pair.full.identifier, item.identifier),
                          SingleChoiceImageStep{item, pair.full.prompt, pair.full.choices}});
  }
  plan.steps.push_back({summary_step_id(pair.full.identifier), SummaryStep{pair.full.summary}});
  return plan;
}

ActiveItemSet derive_active_items(const ResultEnvelope& full_results, const AssessmentPair& pair,
                                  std::span<const ItemDef> items) {
  if (full_results.task_kind != TaskKind::full) {
    throw CompileError("WRONG_TASK_KIND", "active items derive from a full assessment, got " +
                                              std::string(to_string(full_results.task_kind)));
  }
  const std::string prefix = pair.full.identifier + ".";
  std::map<std::string, std::string> answer_by_item;
  for (const StepResult& result : full_results.results) {
    if (result.step_id.rfind(prefix, 0) != 0) {
      throw CompileError("UNKNOWN_STEP", "result step '" + result.step_id + "' does not belong to " +
                                             pair.full.identifier);
    }
    std::string item_id = result.step_id.substr(prefix.size());
    const bool known = std::any_of(items.begin(), items.end(),
                                   [&](const ItemDef& item) { return item.identifier == item_id; });
    if (!known) throw CompileError("UNKNOWN_ITEM", "result references unknown item '" + item_id + "'");
    const auto* choice = std::get_if<ChoiceAnswer>(&result.answer);
    if (!choice) {
      throw CompileError("ANSWER_MISMATCH", "result for '" + item_id + "' is not a choice answer");
    }
    answer_by_item[item_id] = choice->value;
  }

  ActiveItemSet active;
  active.derived_from = full_results.session_id;
  active.derived_at = full_results.completed_at;
  for (const ItemDef& item : items) {
    auto it = answer_by_item.find(item.identifier);
    if (it == answer_by_item.end()) {
      throw CompileError("MISSING_ANSWER", "no full-assessment answer for item '" + item.identifier + "'");
    }
    if (pair.activates(it->second)) active.item_ids.push_back(item.identifier);
  }
  return active;
}

TaskPlan compile_spot_task(const AssessmentPair& pair, const ActiveItemSet& active,
                           std::span<const ItemDef> items, std::string_view study_id) {
  std::set<std::string> wanted;
  for (const std::string& id : active.item_ids) {
    const bool known = std::any_of(items.begin(), items.end(),
                                   [&](const ItemDef& item) { return item.identifier == id; });
    if (!known) throw CompileError("UNKNOWN_ITEM", "active set references unknown item '" + id + "'");
    wanted.insert(id);
  }

  TaskPlan plan;
  plan.plan_id = pair.spot.identifier + ".spot";
  plan.task_kind = TaskKind::spot;
  plan.study_id = study_id;
  plan.assessment_id = pair.spot.identifier;
  if (wanted.empty()) {
    plan.steps.push_back({summary_step_id(pair.spot.identifier), SummaryStep{pair.spot.no_items_summary}});
    return plan;
  }
  ImageGridStep grid;
  grid.prompt = pair.spot.prompt;
  grid.selection = SelectionMode::multiple;
  grid.options = pair.spot.options;
  for (const ItemDef& item : items) {
    if (wanted.count(item.identifier)) grid.items.push_back(item);
  }
  plan.steps.push_back({grid_step_id(pair.spot.identifier), std::move(grid)});
  plan.steps.push_back({summary_step_id(pair.spot.identifier), SummaryStep{pair.spot.summary}});
  return plan;
}

TaskPlan compile_pam_task(std::span<const ItemDef> items, std::string_view prompt,
                          const PamTaskOptions& options) {
  if (items.empty()) throw CompileError("EMPTY_ITEMS", "a PAM task needs at least one image");
  TaskPlan plan;
  plan.plan_id = options.identifier + ".pam";
  plan.task_kind = TaskKind::pam;
  plan.assessment_id = options.identifier;
  ImageGridStep grid;
  grid.items.assign(items.begin(), items.end());
  grid.prompt = prompt;
  grid.selection = SelectionMode::single;
  plan.steps.push_back({grid_step_id(options.identifier), std::move(grid)});
  plan.steps.push_back({summary_step_id(options.identifier), SummaryStep{options.summary}});
  return plan;
}

}  // namespace visurvey
