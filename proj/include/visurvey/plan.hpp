#pragma once

#include "visurvey/study.hpp"
#include "visurvey/time.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace visurvey {

enum class TaskKind { full, spot, pam };

const char* to_string(TaskKind kind);
/// Throws ParseError("BAD_TASK_KIND").
TaskKind parse_task_kind(std::string_view text);

/// One image with the shared prompt and the full choice list.
struct SingleChoiceImageStep {
  ItemDef item;
  std::string prompt;
  std::vector<ChoiceDef> choices;

  bool operator==(const SingleChoiceImageStep&) const = default;
};

enum class SelectionMode { multiple, single };

/// Grid of images. Spot grids select any subset; PAM grids select exactly one
/// and carry no presentation options.
struct ImageGridStep {
  std::vector<ItemDef> items;
  std::string prompt;
  SelectionMode selection = SelectionMode::multiple;
  std::optional<SpotOptionsDef> options;

  bool contains(std::string_view item_id) const;
  bool operator==(const ImageGridStep&) const = default;
};

struct SummaryStep {
  SummaryDef summary;

  bool operator==(const SummaryStep&) const = default;
};

struct Step {
  std::string step_id;
  std::variant<SingleChoiceImageStep, ImageGridStep, SummaryStep> content;

  bool is_summary() const { return std::holds_alternative<SummaryStep>(content); }
  bool operator==(const Step&) const = default;
};

struct TaskPlan {
  std::string plan_id;
  TaskKind task_kind = TaskKind::full;
  std::string study_id;
  /// Full or spot identifier of the source assessment, or the PAM task id.
  std::string assessment_id;
  std::vector<Step> steps;

  std::size_t answerable_step_count() const;
  bool operator==(const TaskPlan&) const = default;
};

struct ActiveItemSet {
  std::vector<std::string> item_ids;
  std::string derived_from;
  std::optional<Timestamp> derived_at;

  bool empty() const { return item_ids.empty(); }
  bool operator==(const ActiveItemSet&) const = default;
};

struct ResultEnvelope;

std::string item_step_id(std::string_view assessment_id, std::string_view item_id);
std::string summary_step_id(std::string_view assessment_id);
std::string grid_step_id(std::string_view assessment_id);

/// One choice step per item in authored order, then the full summary.
/// Throws CompileError EMPTY_ITEMS or RESERVED_IDENTIFIER.
TaskPlan compile_full_task(const AssessmentPair& pair, std::span<const ItemDef> items,
                           std::string_view study_id = {});

/// Items whose full-assessment answer is in the pair's activating set, in
/// study order. Throws CompileError WRONG_TASK_KIND, UNKNOWN_ITEM, UNKNOWN_STEP
/// or MISSING_ANSWER.
ActiveItemSet derive_active_items(const ResultEnvelope& full_results, const AssessmentPair& pair,
                                  std::span<const ItemDef> items);

/// Summary-only plan for an empty set, else grid over the active items and
/// the spot summary. Throws CompileError UNKNOWN_ITEM.
TaskPlan compile_spot_task(const AssessmentPair& pair, const ActiveItemSet& active,
                           std::span<const ItemDef> items, std::string_view study_id = {});

struct PamTaskOptions {
  std::string identifier = "PAM";
  SummaryDef summary{"PAM Summary", "Thanks", "Thank you for reporting your mood", {}};
};

/// Single-select image grid then a summary. Throws CompileError EMPTY_ITEMS.
TaskPlan compile_pam_task(std::span<const ItemDef> items, std::string_view prompt,
                          const PamTaskOptions& options = {});

}  // namespace visurvey
