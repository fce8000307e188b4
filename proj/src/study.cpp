#include "visurvey/study.hpp"

#include "visurvey/error.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace visurvey {

using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Color

Color::Color(std::string_view authored) : value_(authored) {
  valid_ = authored.size() == 7 && authored[0] == '#' &&
           std::all_of(authored.begin() + 1, authored.end(),
                       [](char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; });
  if (valid_) {
    std::transform(value_.begin(), value_.end(), value_.begin(),
                   [](char c) { return static_cast<char>(std::toupper(static_cast<unsigned char>(c))); });
  }
}

// ---------------------------------------------------------------------------
// Model helpers

std::vector<std::string> AssessmentPair::activating_values() const {
  if (activation) return activation->values;
  std::vector<std::string> values;
  for (std::size_t i = 1; i < full.choices.size(); ++i) values.push_back(full.choices[i].value);
  return values;
}

bool AssessmentPair::activates(std::string_view choice_value) const {
  if (activation) {
    return std::find(activation->values.begin(), activation->values.end(), choice_value) !=
           activation->values.end();
  }
  for (std::size_t i = 1; i < full.choices.size(); ++i) {
    if (full.choices[i].value == choice_value) return true;
  }
  return false;
}

const ItemDef* StudyDefinition::find_item(std::string_view identifier) const {
  for (const auto& item : items) {
    if (item.identifier == identifier) return &item;
  }
  return nullptr;
}

const AssessmentPair* StudyDefinition::find_assessment(std::string_view identifier) const {
  for (const auto& pair : assessments) {
    if (pair.full.identifier == identifier || pair.spot.identifier == identifier) return &pair;
  }
  return nullptr;
}

AssetManifest AssetManifest::from_directory(const std::filesystem::path& dir) {
  AssetManifest manifest;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.is_regular_file()) manifest.keys.insert(entry.path().stem().string());
  }
  if (ec) throw ParseError("ASSETS_UNREADABLE", "", "cannot read asset directory " + dir.string() + ": " + ec.message());
  return manifest;
}

AssetManifest AssetManifest::from_json(std::string_view text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) {
    throw ParseError("TYPE_MISMATCH", "", "asset manifest must be a JSON array of strings");
  }
  AssetManifest manifest;
  for (const auto& v : doc) {
    if (!v.is_string()) throw ParseError("TYPE_MISMATCH", "", "asset manifest entries must be strings");
    manifest.keys.insert(v.get<std::string>());
  }
  return manifest;
}

std::size_t ValidationReport::error_count() const {
  return static_cast<std::size_t>(std::count_if(diagnostics.begin(), diagnostics.end(),
                                                [](const Diagnostic& d) { return d.severity == Severity::error; }));
}

std::size_t ValidationReport::warning_count() const { return diagnostics.size() - error_count(); }

const char* to_string(Severity s) { return s == Severity::error ? "error" : "warning"; }

// ---------------------------------------------------------------------------
// Paths

namespace {

bool plain_name(std::string_view key) {
  if (key.empty() || std::isdigit(static_cast<unsigned char>(key[0]))) return false;
  return std::all_of(key.begin(), key.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

}  // namespace

std::string append_path(const std::string& base, std::string_view key) {
  if (plain_name(key)) return base.empty() ? std::string(key) : base + "." + std::string(key);
  return base + "[" + json(std::string(key)).dump() + "]";
}

std::string append_path(const std::string& base, std::size_t index) {
  return base + "[" + std::to_string(index) + "]";
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

const char* json_type_name(const json& v) {
  if (v.is_number_integer()) return "integer";
  return v.type_name();
}

/// Walks one JSON object, pulling known keys and leaving the rest as extensions.
class ObjectReader {
public:
  ObjectReader(const json& value, std::string path) : value_(value), path_(std::move(path)) {
    if (!value_.is_object()) {
      throw ParseError("TYPE_MISMATCH", path_,
                       path_ + ": expected object, found " + json_type_name(value_));
    }
  }

  const std::string& path() const { return path_; }

  bool has(const std::string& key) const { return value_.contains(key); }

  const json& required(const std::string& key) {
    auto it = value_.find(key);
    if (it == value_.end()) {
      throw ParseError("MISSING_FIELD", append_path(path_, key),
                       append_path(path_, key) + ": required field is missing");
    }
    consumed_.insert(key);
    return *it;
  }

  const json* optional(const std::string& key) {
    auto it = value_.find(key);
    if (it == value_.end()) return nullptr;
    consumed_.insert(key);
    return &*it;
  }

  std::string string(const std::string& key) { return as_string(required(key), append_path(path_, key)); }

  std::int64_t integer(const std::string& key) {
    return as_integer(required(key), append_path(path_, key));
  }

  double number(const std::string& key) {
    const json& v = required(key);
    if (!v.is_number()) type_error(append_path(path_, key), "number", v);
    return v.get<double>();
  }

  Color color(const std::string& key) { return Color(string(key)); }

  const json& array(const std::string& key) {
    const json& v = required(key);
    if (!v.is_array()) type_error(append_path(path_, key), "array", v);
    return v;
  }

  Extensions extensions() const {
    Extensions out;
    for (auto it = value_.begin(); it != value_.end(); ++it) {
      if (!consumed_.count(it.key())) out.emplace(it.key(), it.value());
    }
    return out;
  }

  [[noreturn]] static void type_error(const std::string& path, const char* expected, const json& found) {
    throw ParseError("TYPE_MISMATCH", path,
                     path + ": expected " + expected + ", found " + json_type_name(found));
  }

  static std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) type_error(path, "string", v);
    return v.get<std::string>();
  }

  static std::int64_t as_integer(const json& v, const std::string& path) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_unsigned()) return static_cast<std::int64_t>(v.get<std::uint64_t>());
    type_error(path, "integer", v);
  }

private:
  const json& value_;
  std::string path_;
  std::unordered_set<std::string> consumed_;
};

SummaryDef parse_summary(const json& v, const std::string& path) {
  ObjectReader r(v, path);
  SummaryDef s;
  s.identifier = r.string("identifier");
  s.title = r.string("title");
  s.text = r.string("text");
  s.extensions = r.extensions();
  return s;
}

FullAssessmentDef parse_full(const json& v, const std::string& path) {
  ObjectReader r(v, path);
  FullAssessmentDef full;
  full.identifier = r.string("identifier");
  full.prompt = r.string("prompt");
  full.summary = parse_summary(r.required("summary"), append_path(path, "summary"));
  const json& choices = r.array("choices");
  const std::string choices_path = append_path(path, "choices");
  for (std::size_t i = 0; i < choices.size(); ++i) {
    ObjectReader c(choices[i], append_path(choices_path, i));
    ChoiceDef choice;
    choice.text = c.string("text");
    choice.value = c.string("value");
    choice.color = c.color("color");
    choice.extensions = c.extensions();
    full.choices.push_back(std::move(choice));
  }
  full.extensions = r.extensions();
  return full;
}

SpotOptionsDef parse_options(const json& v, const std::string& path) {
  ObjectReader r(v, path);
  SpotOptionsDef o;
  o.something_selected_button_color = r.color("somethingSelectedButtonColor");
  o.nothing_selected_button_color = r.color("nothingSelectedButtonColor");
  o.item_cell_selected_color = r.color("itemCellSelectedColor");
  o.item_cell_selected_overlay_image_title = r.string("itemCellSelectedOverlayImageTitle");
  o.item_collection_view_background_color = r.color("itemCollectionViewBackgroundColor");
  o.items_per_row = r.integer("itemsPerRow");
  o.item_min_spacing = r.number("itemMinSpacing");
  o.extensions = r.extensions();
  return o;
}

SpotAssessmentDef parse_spot(const json& v, const std::string& path) {
  ObjectReader r(v, path);
  SpotAssessmentDef spot;
  spot.identifier = r.string("identifier");
  spot.prompt = r.string("prompt");
  spot.summary = parse_summary(r.required("summary"), append_path(path, "summary"));
  spot.no_items_summary = parse_summary(r.required("noItemsSummary"), append_path(path, "noItemsSummary"));
  spot.options = parse_options(r.required("options"), append_path(path, "options"));
  spot.extensions = r.extensions();
  return spot;
}

ActivationRule parse_activation(const json& v, const std::string& path) {
  ObjectReader r(v, path);
  ActivationRule rule;
  const json& values = r.array("values");
  const std::string values_path = append_path(path, "values");
  for (std::size_t i = 0; i < values.size(); ++i) {
    rule.values.push_back(ObjectReader::as_string(values[i], append_path(values_path, i)));
  }
  rule.extensions = r.extensions();
  return rule;
}

/// Reads full/spot/activation from `r`; shared by the inline and array layouts.
AssessmentPair parse_pair_fields(ObjectReader& r) {
  AssessmentPair pair;
  pair.full = parse_full(r.required("full"), append_path(r.path(), "full"));
  pair.spot = parse_spot(r.required("spot"), append_path(r.path(), "spot"));
  if (const json* activation = r.optional("activation")) {
    pair.activation = parse_activation(*activation, append_path(r.path(), "activation"));
  }
  return pair;
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  // nlohmann reports the 1-based count of bytes read when the error was detected.
  std::size_t end = std::min(byte > 0 ? byte - 1 : 0, text.size());
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

}  // namespace

StudyDefinition parse_study_definition(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    auto [line, column] = line_column(bytes, e.byte);
    throw ParseError("SYNTAX", "",
                     "syntax error at line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ": " + e.what(),
                     line, column);
  }
  if (!doc.is_object()) {
    throw ParseError("TYPE_MISMATCH", "", "document root must be an object");
  }
  if (doc.empty()) {
    throw ParseError("NO_STUDY", "", "document has no study object");
  }
  if (doc.size() != 1) {
    throw ParseError("NO_STUDY", "", "document root must hold exactly one study object, found " +
                                         std::to_string(doc.size()) + " members");
  }

  StudyDefinition def;
  def.study_id = doc.begin().key();
  const std::string root = append_path("", def.study_id);
  ObjectReader r(doc.begin().value(), root);

  if (const json* version = r.optional("schemaVersion")) {
    def.declared_schema_version = ObjectReader::as_integer(*version, append_path(root, "schemaVersion"));
  }

  if (r.has("assessments")) {
    if (r.has("full") || r.has("spot") || r.has("activation")) {
      throw ParseError("CONFLICTING_LAYOUT", append_path(root, "assessments"),
                       append_path(root, "assessments") +
                           ": cannot be combined with inline full/spot/activation");
    }
    def.assessments_as_array = true;
    const json& pairs = r.array("assessments");
    const std::string pairs_path = append_path(root, "assessments");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      ObjectReader pr(pairs[i], append_path(pairs_path, i));
      AssessmentPair pair = parse_pair_fields(pr);
      pair.extensions = pr.extensions();
      def.assessments.push_back(std::move(pair));
    }
  } else {
    def.assessments.push_back(parse_pair_fields(r));
  }

  const json& activities = r.array("activities");
  const std::string activities_path = append_path(root, "activities");
  for (std::size_t i = 0; i < activities.size(); ++i) {
    ObjectReader ir(activities[i], append_path(activities_path, i));
    ItemDef item;
    item.image_title = ir.string("imageTitle");
    item.description = ir.string("description");
    item.identifier = ir.string("identifier");
    item.extensions = ir.extensions();
    def.items.push_back(std::move(item));
  }
  def.extensions = r.extensions();
  return def;
}

StudyDefinition load_study_definition(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ParseError("UNREADABLE", file.string(), "cannot open " + file.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_study_definition(buffer.str());
}

// ---------------------------------------------------------------------------
// Validation

namespace {

class Validator {
public:
  Validator(const StudyDefinition& def, const AssetManifest* assets) : def_(def), assets_(assets) {}

  ValidationReport run() {
    const std::string root = append_path("", def_.study_id);
    claim_identifier(def_.study_id, root);

    if (!def_.declared_schema_version) {
      warn("MISSING_SCHEMA_VERSION", root, "schemaVersion not declared; assuming 1");
    } else if (*def_.declared_schema_version < 1) {
      error("BAD_SCHEMA_VERSION", append_path(root, "schemaVersion"), "schemaVersion must be >= 1");
    } else if (*def_.declared_schema_version > kSupportedSchemaVersion) {
      error("UNSUPPORTED_SCHEMA_VERSION", append_path(root, "schemaVersion"),
            "schemaVersion " + std::to_string(*def_.declared_schema_version) + " is newer than " +
                std::to_string(kSupportedSchemaVersion));
    }

    if (def_.assessments_as_array) {
      const std::string pairs_path = append_path(root, "assessments");
      if (def_.assessments.empty()) error("NO_ASSESSMENTS", pairs_path, "study defines no assessment pairs");
      for (std::size_t i = 0; i < def_.assessments.size(); ++i) {
        const std::string pair_path = append_path(pairs_path, i);
        check_pair(def_.assessments[i], pair_path);
        unknown_fields(def_.assessments[i].extensions, pair_path);
      }
    } else {
      for (const auto& pair : def_.assessments) check_pair(pair, root);
    }

    const std::string items_path = append_path(root, "activities");
    if (def_.items.empty() && !def_.assessments.empty()) {
      error("EMPTY_ITEMS", items_path, "study has assessments but no activities");
    }
    for (std::size_t i = 0; i < def_.items.size(); ++i) {
      const ItemDef& item = def_.items[i];
      const std::string item_path = append_path(items_path, i);
      asset(item.image_title, append_path(item_path, "imageTitle"));
      const std::string id_path = append_path(item_path, "identifier");
      claim_identifier(item.identifier, id_path);
      if (item.identifier == "summary" || item.identifier == "grid") {
        error("RESERVED_IDENTIFIER", id_path,
              "item identifier '" + item.identifier + "' collides with a generated step id");
      }
      unknown_fields(item.extensions, item_path);
    }
    unknown_fields(def_.extensions, root);
    return std::move(report_);
  }

private:
  void check_pair(const AssessmentPair& pair, const std::string& base) {
    const std::string full_path = append_path(base, "full");
    const FullAssessmentDef& full = pair.full;
    claim_identifier(full.identifier, append_path(full_path, "identifier"));
    check_summary(full.summary, append_path(full_path, "summary"));
    const std::string choices_path = append_path(full_path, "choices");
    if (full.choices.size() < 2) {
      error("TOO_FEW_CHOICES", choices_path, "a full assessment needs at least 2 choices");
    }
    std::set<std::string> values;
    for (std::size_t i = 0; i < full.choices.size(); ++i) {
      const ChoiceDef& choice = full.choices[i];
      const std::string choice_path = append_path(choices_path, i);
      if (!values.insert(choice.value).second) {
        error("DUP_CHOICE_VALUE", append_path(choice_path, "value"),
              "choice value '" + choice.value + "' is already used");
      }
      color(choice.color, append_path(choice_path, "color"));
      unknown_fields(choice.extensions, choice_path);
    }
    unknown_fields(full.extensions, full_path);

    const std::string spot_path = append_path(base, "spot");
    const SpotAssessmentDef& spot = pair.spot;
    claim_identifier(spot.identifier, append_path(spot_path, "identifier"));
    check_summary(spot.summary, append_path(spot_path, "summary"));
    check_summary(spot.no_items_summary, append_path(spot_path, "noItemsSummary"));
    const std::string options_path = append_path(spot_path, "options");
    const SpotOptionsDef& o = spot.options;
    color(o.something_selected_button_color, append_path(options_path, "somethingSelectedButtonColor"));
    color(o.nothing_selected_button_color, append_path(options_path, "nothingSelectedButtonColor"));
    color(o.item_cell_selected_color, append_path(options_path, "itemCellSelectedColor"));
    asset(o.item_cell_selected_overlay_image_title,
          append_path(options_path, "itemCellSelectedOverlayImageTitle"));
    color(o.item_collection_view_background_color,
          append_path(options_path, "itemCollectionViewBackgroundColor"));
    if (o.items_per_row < 1) {
      error("BAD_ITEMS_PER_ROW", append_path(options_path, "itemsPerRow"), "itemsPerRow must be >= 1");
    }
    if (!(o.item_min_spacing >= 0.0)) {
      error("NEGATIVE_SPACING", append_path(options_path, "itemMinSpacing"),
            "itemMinSpacing must be non-negative");
    }
    unknown_fields(o.extensions, options_path);
    unknown_fields(spot.extensions, spot_path);

    if (pair.activation) {
      const std::string activation_path = append_path(base, "activation");
      const std::string values_path = append_path(activation_path, "values");
      for (std::size_t i = 0; i < pair.activation->values.size(); ++i) {
        if (!values.count(pair.activation->values[i])) {
          error("UNKNOWN_ACTIVATION_VALUE", append_path(values_path, i),
                "'" + pair.activation->values[i] + "' is not a choice value of " + full.identifier);
        }
      }
      unknown_fields(pair.activation->extensions, activation_path);
    }
  }

  void check_summary(const SummaryDef& summary, const std::string& path) {
    claim_identifier(summary.identifier, append_path(path, "identifier"));
    unknown_fields(summary.extensions, path);
  }

  void claim_identifier(const std::string& id, const std::string& path) {
    if (id.empty()) {
      error("EMPTY_IDENTIFIER", path, "identifier must not be empty");
      return;
    }
    auto [it, inserted] = identifiers_.emplace(id, path);
    if (!inserted) {
      error("DUP_IDENTIFIER", path, "identifier '" + id + "' already used at " + it->second);
    }
  }

  void color(const Color& c, const std::string& path) {
    if (!c.valid()) error("BAD_COLOR", path, "'" + c.str() + "' is not a #RRGGBB color");
  }

  void asset(const std::string& key, const std::string& path) {
    if (assets_ && !assets_->contains(key)) {
      error("UNRESOLVED_ASSET", path, "asset '" + key + "' is not in the asset manifest");
    }
  }

  void unknown_fields(const Extensions& ext, const std::string& path) {
    for (const auto& [key, value] : ext) {
      warn("UNKNOWN_FIELD", append_path(path, key), "unrecognized field preserved as an extension");
    }
  }

  void error(std::string code, std::string path, std::string message) {
    report_.diagnostics.push_back({std::move(code), Severity::error, std::move(path), std::move(message)});
  }

  void warn(std::string code, std::string path, std::string message) {
    report_.diagnostics.push_back({std::move(code), Severity::warning, std::move(path), std::move(message)});
  }

  const StudyDefinition& def_;
  const AssetManifest* assets_;
  std::map<std::string, std::string> identifiers_;
  ValidationReport report_;
};

}  // namespace

ValidationReport validate_study(const StudyDefinition& def, const AssetManifest* assets) {
  return Validator(def, assets).run();
}

// ---------------------------------------------------------------------------
// Canonical serialization

namespace {

void put_extensions(ordered_json& obj, const Extensions& ext) {
  for (const auto& [key, value] : ext) obj[key] = ordered_json::parse(value.dump());
}

ordered_json summary_json(const SummaryDef& s) {
  ordered_json o = ordered_json::object();
  o["identifier"] = s.identifier;
  o["title"] = s.title;
  o["text"] = s.text;
  put_extensions(o, s.extensions);
  return o;
}

ordered_json full_json(const FullAssessmentDef& full) {
  ordered_json o = ordered_json::object();
  o["identifier"] = full.identifier;
  o["prompt"] = full.prompt;
  o["summary"] = summary_json(full.summary);
  ordered_json choices = ordered_json::array();
  for (const auto& c : full.choices) {
    ordered_json choice = ordered_json::object();
    choice["text"] = c.text;
    choice["value"] = c.value;
    choice["color"] = c.color.str();
    put_extensions(choice, c.extensions);
    choices.push_back(std::move(choice));
  }
  o["choices"] = std::move(choices);
  put_extensions(o, full.extensions);
  return o;
}

ordered_json options_json(const SpotOptionsDef& opt) {
  ordered_json o = ordered_json::object();
  o["somethingSelectedButtonColor"] = opt.something_selected_button_color.str();
  o["nothingSelectedButtonColor"] = opt.nothing_selected_button_color.str();
  o["itemCellSelectedColor"] = opt.item_cell_selected_color.str();
  o["itemCellSelectedOverlayImageTitle"] = opt.item_cell_selected_overlay_image_title;
  o["itemCollectionViewBackgroundColor"] = opt.item_collection_view_background_color.str();
  o["itemsPerRow"] = opt.items_per_row;
  o["itemMinSpacing"] = opt.item_min_spacing;
  put_extensions(o, opt.extensions);
  return o;
}

ordered_json spot_json(const SpotAssessmentDef& spot) {
  ordered_json o = ordered_json::object();
  o["identifier"] = spot.identifier;
  o["prompt"] = spot.prompt;
  o["summary"] = summary_json(spot.summary);
  o["noItemsSummary"] = summary_json(spot.no_items_summary);
  o["options"] = options_json(spot.options);
  put_extensions(o, spot.extensions);
  return o;
}

void put_pair(ordered_json& o, const AssessmentPair& pair) {
  o["full"] = full_json(pair.full);
  o["spot"] = spot_json(pair.spot);
  if (pair.activation) {
    ordered_json a = ordered_json::object();
    a["values"] = pair.activation->values;
    put_extensions(a, pair.activation->extensions);
    o["activation"] = std::move(a);
  }
}

}  // namespace

ordered_json to_canonical_json(const StudyDefinition& def) {
  ordered_json study = ordered_json::object();
  if (def.declared_schema_version) study["schemaVersion"] = *def.declared_schema_version;
  if (def.assessments_as_array || def.assessments.size() != 1) {
    ordered_json pairs = ordered_json::array();
    for (const auto& pair : def.assessments) {
      ordered_json p = ordered_json::object();
      put_pair(p, pair);
      put_extensions(p, pair.extensions);
      pairs.push_back(std::move(p));
    }
    study["assessments"] = std::move(pairs);
  } else {
    put_pair(study, def.assessments.front());
  }
  ordered_json items = ordered_json::array();
  for (const auto& item : def.items) {
    ordered_json i = ordered_json::object();
    i["imageTitle"] = item.image_title;
    i["description"] = item.description;
    i["identifier"] = item.identifier;
    put_extensions(i, item.extensions);
    items.push_back(std::move(i));
  }
  study["activities"] = std::move(items);
  put_extensions(study, def.extensions);

  ordered_json doc = ordered_json::object();
  doc[def.study_id] = std::move(study);
  return doc;
}

std::string canonical_serialize(const StudyDefinition& def) {
  return to_canonical_json(def).dump(2) + "\n";
}

}  // namespace visurvey
