#pragma once

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace visurvey {

/// Fields present in a document object that the model does not recognize.
/// Kept verbatim so canonical serialization re-emits them.
using Extensions = std::map<std::string, nlohmann::json>;

/// A "#RRGGBB" color. Well-formed input of either case is stored in upper
/// case; malformed input is stored as authored so validation can report it.
class Color {
public:
  Color() = default;
  explicit Color(std::string_view authored);

  const std::string& str() const noexcept { return value_; }
  bool valid() const noexcept { return valid_; }

  bool operator==(const Color&) const = default;

private:
  std::string value_;
  bool valid_ = false;
};

struct SummaryDef {
  std::string identifier;
  std::string title;
  std::string text;
  Extensions extensions;

  bool operator==(const SummaryDef&) const = default;
};

struct ChoiceDef {
  std::string text;
  std::string value;
  Color color;
  Extensions extensions;

  bool operator==(const ChoiceDef&) const = default;
};

struct FullAssessmentDef {
  std::string identifier;
  std::string prompt;
  SummaryDef summary;
  std::vector<ChoiceDef> choices;
  Extensions extensions;

  bool operator==(const FullAssessmentDef&) const = default;
};

struct SpotOptionsDef {
  Color something_selected_button_color;
  Color nothing_selected_button_color;
  Color item_cell_selected_color;
  /// Opaque asset key drawn over selected cells.
  std::string item_cell_selected_overlay_image_title;
  Color item_collection_view_background_color;
  std::int64_t items_per_row = 1;
  double item_min_spacing = 0.0;
  Extensions extensions;

  bool operator==(const SpotOptionsDef&) const = default;
};

struct SpotAssessmentDef {
  std::string identifier;
  std::string prompt;
  SummaryDef summary;
  SummaryDef no_items_summary;
  SpotOptionsDef options;
  Extensions extensions;

  bool operator==(const SpotAssessmentDef&) const = default;
};

/// Full-assessment answer values that put an item into the spot pool.
struct ActivationRule {
  std::vector<std::string> values;
  Extensions extensions;

  bool operator==(const ActivationRule&) const = default;
};

struct AssessmentPair {
  FullAssessmentDef full;
  SpotAssessmentDef spot;
  /// Absent means the default rule: every choice value except the first.
  std::optional<ActivationRule> activation;
  Extensions extensions;

  std::vector<std::string> activating_values() const;
  bool activates(std::string_view choice_value) const;

  bool operator==(const AssessmentPair&) const = default;
};

struct ItemDef {
  std::string identifier;
  std::string description;
  std::string image_title;
  Extensions extensions;

  bool operator==(const ItemDef&) const = default;
};

struct StudyDefinition {
  std::string study_id;
  std::optional<std::int64_t> declared_schema_version;
  std::vector<AssessmentPair> assessments;
  std::vector<ItemDef> items;
  Extensions extensions;
  /// True when the document lists pairs under "assessments" instead of
  /// carrying a single "full"/"spot" pair inline.
  bool assessments_as_array = false;

  std::int64_t schema_version() const { return declared_schema_version.value_or(1); }
  const ItemDef* find_item(std::string_view identifier) const;
  /// Looks a pair up by either its full or spot identifier.
  const AssessmentPair* find_assessment(std::string_view identifier) const;

  bool operator==(const StudyDefinition&) const = default;
};

/// Set of media keys that imageTitle/overlay references may resolve to.
struct AssetManifest {
  std::set<std::string> keys;

  bool contains(const std::string& key) const { return keys.count(key) != 0; }

  /// File stems of every regular file in `dir` ("Bathing.png" -> "Bathing").
  static AssetManifest from_directory(const std::filesystem::path& dir);
  /// A JSON array of strings.
  static AssetManifest from_json(std::string_view text);
};

enum class Severity { error, warning };

struct Diagnostic {
  std::string code;
  Severity severity = Severity::error;
  std::string path;
  std::string message;

  bool operator==(const Diagnostic&) const = default;
};

struct ValidationReport {
  std::vector<Diagnostic> diagnostics;

  std::size_t error_count() const;
  std::size_t warning_count() const;
  bool valid() const { return error_count() == 0; }
};

const char* to_string(Severity s);

/// Highest schemaVersion this build understands.
inline constexpr std::int64_t kSupportedSchemaVersion = 1;

/// Throws ParseError with codes SYNTAX (with line/column), NO_STUDY,
/// MISSING_FIELD, TYPE_MISMATCH or CONFLICTING_LAYOUT (with path).
StudyDefinition parse_study_definition(std::string_view bytes);

StudyDefinition load_study_definition(const std::filesystem::path& file);

/// Diagnostics are ordered by the position of their path in canonical
/// document order. Never throws for a parsed definition.
ValidationReport validate_study(const StudyDefinition& def,
                                const AssetManifest* assets = nullptr);

/// Canonical bytes: 2-space indentation, fixed key order (the order used by
/// the reference YADL document), upper-case colors, authored array order,
/// extensions after known keys sorted by name, trailing newline.
std::string canonical_serialize(const StudyDefinition& def);

/// The canonical document as a JSON value (same key order as the bytes).
nlohmann::ordered_json to_canonical_json(const StudyDefinition& def);

/// Document path rendering shared by validation and parse errors:
/// `YADL.spot.options.itemsPerRow`, `YADL.activities[1].identifier`,
/// names that are not plain identifiers are quoted: `["YADL Study"].full`.
std::string append_path(const std::string& base, std::string_view key);
std::string append_path(const std::string& base, std::size_t index);

}  // namespace visurvey
