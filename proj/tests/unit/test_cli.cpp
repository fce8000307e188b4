#include "support.hpp"
#include "visurvey/cli.hpp"
#include "visurvey/result_store.hpp"
#include "visurvey/wire.hpp"

#include <set>

using namespace visurvey;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string fx(const std::string& name) { return support::fixture(name).string(); }

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

/// Codes named in human output lines "<severity> <CODE> at <path>: ...".
std::vector<std::string> human_codes(const std::string& text) {
  std::vector<std::string> codes;
  for (const auto& line : lines(text)) {
    std::istringstream words(line);
    std::string severity, code, at;
    words >> severity >> code >> at;
    if ((severity == "error" || severity == "warning") && at == "at") codes.push_back(code);
  }
  return codes;
}

std::string with_tabs(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) out += (i ? "\t" : "") + fields[i];
  return out;
}

}  // namespace

TEST_CASE("validate exits 0 for a valid study and lists warnings") {
  const Run r = cli({"validate", fx("yadl.json")});
  CHECK(r.code == 0);
  CHECK(human_codes(r.out) == std::vector<std::string>{"MISSING_SCHEMA_VERSION"});
  CHECK(lines(r.out).back() == fx("yadl.json") + ": valid, 0 error(s), 1 warning(s)");
}

TEST_CASE("validate exits 1 and names duplicate identifiers") {
  const Run human = cli({"validate", fx("yadl_dup.json")});
  CHECK(human.code == 1);
  CHECK(human.out.find("error DUP_IDENTIFIER at YADL.activities[1].identifier") != std::string::npos);
  const Run machine = cli({"validate", fx("yadl_dup.json"), "--format", "json"});
  CHECK(machine.code == 1);
  const json report = json::parse(machine.out);
  CHECK(report["valid"] == false);
  std::vector<std::string> json_codes;
  for (const auto& d : report["diagnostics"]) json_codes.push_back(d["code"]);
  CHECK(json_codes == human_codes(human.out));
  CHECK(report == json::parse(wire::report_json(validate_study(load_study_definition(fx("yadl_dup.json")))).dump()));
}

TEST_CASE("validate exits 2 on unreadable or malformed input") {
  support::TempDir dir;
  support::spit(dir / "broken.json", "{\n  \"YADL\": {\n    \"full\": [,\n");
  const Run syntax = cli({"validate", (dir / "broken.json").string()});
  CHECK(syntax.code == 2);
  CHECK(syntax.err.find("SYNTAX") != std::string::npos);
  CHECK(syntax.err.find("broken.json:3:") != std::string::npos);
  const Run machine = cli({"validate", (dir / "broken.json").string(), "--format", "json"});
  CHECK(machine.code == 2);
  CHECK(json::parse(machine.out)["parseError"]["code"] == "SYNTAX");
  const Run missing = cli({"validate", (dir / "absent.json").string()});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("UNREADABLE") != std::string::npos);
}

TEST_CASE("validate checks assets against a directory or list") {
  support::TempDir dir;
  for (const char* f : {"Bathing.png", "BedToChair.png", "Toilet.png", "WalkingUpStairs.png", "first_tab.png"}) {
    support::spit(dir / f, "x");
  }
  CHECK(cli({"validate", fx("yadl.json"), "--assets", dir.path().string()}).code == 0);
  support::spit(dir / "assets.json", R"(["Bathing","Toilet","first_tab"])");
  const Run r = cli({"validate", fx("yadl.json"), "--assets", (dir / "assets.json").string()});
  CHECK(r.code == 1);
  CHECK(human_codes(r.out) == std::vector<std::string>{"MISSING_SCHEMA_VERSION", "UNRESOLVED_ASSET", "UNRESOLVED_ASSET"});
}

TEST_CASE("plan output matches the compiled plans") {
  const StudyDefinition def = support::yadl();
  const TaskPlan full = compile_full_task(def.assessments.front(), def.items, def.study_id);
  const Run text = cli({"plan", fx("yadl.json"), "--task", "full"});
  REQUIRE(text.code == 0);
  const auto out = lines(text.out);
  REQUIRE(out.size() == full.steps.size());
  CHECK(out[0] == with_tabs({"0", "singleChoiceImage", "YADL Full Identifier.Bathing",
                             "item=Bathing choices=easy,moderate,hard"}));
  CHECK(out[4] == with_tabs({"4", "summary", "YADL Full Identifier.summary", "summary=YADL Full Summary Identifier"}));
  CHECK(support::matches_golden("cli/plan_full.txt", text.out));

  const Run machine = cli({"plan", fx("yadl.json"), "--task", "full", "--format", "json"});
  CHECK(machine.out == wire::plan_json(full).dump(2) + "\n");

  support::TempDir dir;
  support::spit(dir / "active.json", R"(["Toilet","Bathing"])");
  const Run spot = cli({"plan", fx("yadl.json"), "--task", "spot", "--active", (dir / "active.json").string()});
  CHECK(spot.code == 0);
  CHECK(support::matches_golden("cli/plan_spot.txt", spot.out));
  const TaskPlan spot_plan = compile_spot_task(def.assessments.front(), ActiveItemSet{{"Toilet", "Bathing"}, "", {}},
                                               def.items, def.study_id);
  CHECK(lines(spot.out).size() == spot_plan.steps.size());

  const Run empty = cli({"plan", fx("yadl.json"), "--task", "spot"});
  CHECK(lines(empty.out) == std::vector<std::string>{with_tabs(
                                {"0", "summary", "YADL Spot Identifier.summary",
                                 "summary=YADL Spot No Activities Summary Identifier"})});
  const Run pam = cli({"plan", fx("yadl.json"), "--task", "pam", "--prompt", "Mood?"});
  CHECK(pam.code == 0);
  CHECK(support::matches_golden("cli/plan_pam.txt", pam.out));
}

TEST_CASE("plan exit codes") {
  CHECK(cli({"plan", fx("yadl.json"), "--task", "later"}).code == 2);
  CHECK(cli({"plan", fx("yadl_dup.json")}).code == 1);
  CHECK(cli({"plan", fx("yadl.json"), "--assessment", "Nope"}).code == 1);
  CHECK(cli({"plan", fx("yadl.json"), "--format", "yaml"}).code == 2);
}

TEST_CASE("simulate derives the spot grid from the full answers") {
  const Run hard = cli({"simulate", fx("yadl.json"), "--script", fx("script_hard_easy.json"), "--at",
                        "2016-09-01T09:00:00Z", "--seed", "7"});
  REQUIRE(hard.code == 0);
  const auto out = lines(hard.out);
  REQUIRE(out.size() == 3);
  CHECK(out[0].rfind("full: envelope env-", 0) == 0);
  CHECK(out[0].find(", 4 result(s)") != std::string::npos);
  CHECK(out[1] == "active: Bathing, Toilet");
  CHECK(out[2].find("1 result(s) (grid: Bathing, Toilet)") != std::string::npos);

  const Run easy = cli({"simulate", fx("yadl.json"), "--script", fx("script_all_easy.json")});
  REQUIRE(easy.code == 0);
  CHECK(lines(easy.out)[1] == "active: (none)");
  CHECK(lines(easy.out)[2].find("0 result(s) (no grid)") != std::string::npos);
}

TEST_CASE("simulate reports script mismatches with the step") {
  support::TempDir dir;
  support::spit(dir / "bad.json", R"({"full":["hard","severe"]})");
  const Run bad = cli({"simulate", fx("yadl.json"), "--script", (dir / "bad.json").string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("ANSWER_MISMATCH") != std::string::npos);
  CHECK(bad.err.find("YADL Full Identifier.BedToChair") != std::string::npos);
  support::spit(dir / "short.json", R"(["hard"])");
  const Run short_script = cli({"simulate", fx("yadl.json"), "--script", (dir / "short.json").string()});
  CHECK(short_script.code == 1);
  CHECK(short_script.err.find("SCRIPT_INCOMPLETE") != std::string::npos);
}

TEST_CASE("random scripts agree with an independent activation oracle") {
  std::mt19937_64 rng(99);
  const std::vector<std::string> values{"easy", "moderate", "hard"};
  const std::vector<std::string> items{"Bathing", "BedToChair", "Toilet", "WalkingUpStairs"};
  for (int round = 0; round < 40; ++round) {
    support::TempDir dir;
    json full = json::array();
    std::vector<std::string> active;
    for (const auto& item : items) {
      const std::string v = values[rng() % values.size()];
      full.push_back(v);
      if (v != "easy") active.push_back(item);
    }
    std::vector<std::string> chosen;
    for (const auto& a : active) {
      if (rng() % 2) chosen.push_back(a);
    }
    json script{{"participantId", "p" + std::to_string(round)}, {"full", full}};
    if (!active.empty()) script["spot"] = json::array({chosen});
    support::spit(dir / "script.json", script.dump());

    const Run r = cli({"simulate", fx("yadl.json"), "--script", (dir / "script.json").string(), "--out",
                       (dir / "out.ndjson").string(), "--at", "2016-09-01T09:00:00Z", "--seed",
                       std::to_string(round)});
    REQUIRE(r.code == 0);
    const auto records = read_record_file(dir / "out.ndjson");
    REQUIRE(records.size() == 2);
    const ResultEnvelope& full_env = records[0];
    const ResultEnvelope& spot_env = records[1];
    REQUIRE(full_env.results.size() == 4);
    for (std::size_t i = 0; i < items.size(); ++i) {
      CHECK(full_env.results[i].step_id == "YADL Full Identifier." + items[i]);
      CHECK(std::get<ChoiceAnswer>(full_env.results[i].answer).value == full[i]);
    }
    CHECK(full_env.participant_id == script["participantId"]);
    CHECK(spot_env.completed_at > full_env.completed_at);
    if (active.empty()) {
      CHECK(spot_env.results.empty());
      CHECK(lines(r.out)[1] == "active: (none)");
    } else {
      REQUIRE(spot_env.results.size() == 1);
      CHECK(std::get<ItemSetAnswer>(spot_env.results[0].answer).item_ids == chosen);
      std::string joined;
      for (const auto& a : active) joined += (joined.empty() ? "" : ", ") + a;
      CHECK(lines(r.out)[1] == "active: " + joined);
    }
  }
}

TEST_CASE("export prints filtered canonical records") {
  support::TempDir dir;
  const auto file = (dir / "records.ndjson").string();
  for (const char* who : {"p1", "p2", "p1"}) {
    support::spit(dir / "s.json", json{{"participantId", who}, {"full", {"hard", "easy", "easy", "easy"}},
                                   {"spot", json::array({json::array({"Bathing"})})}}
                                  .dump());
    REQUIRE(cli({"simulate", fx("yadl.json"), "--script", (dir / "s.json").string(), "--out", file, "--at",
                 "2016-09-01T09:00:00Z"})
                .code == 0);
  }
  const Run all = cli({"export", "--in", file});
  CHECK(all.code == 0);
  ManualClock clock(support::at("2016-09-10T00:00:00Z"));
  MemorySink memory(clock);
  for (const auto& env : read_record_file(file)) memory.append(env);
  std::string expected;
  for (const auto& env : export_results(memory)) expected += wire::envelope_record(env) + "\n";
  CHECK(all.out == expected);
  CHECK(lines(all.out).size() == 6);

  const Run p2 = cli({"export", "--in", file, "--participant", "p2"});
  CHECK(lines(p2.out).size() == 2);
  for (const auto& line : lines(p2.out)) CHECK(wire::parse_envelope_record(line).participant_id == "p2");

  const Run none = cli({"export", "--in", file, "--from", "2030-01-01T00:00:00Z"});
  CHECK(none.code == 0);
  CHECK(none.out.empty());

  support::spit(dir / "sink.json", R"({"kind":"file","path":"records.ndjson"})");
  CHECK(cli({"export", "--sink-config", (dir / "sink.json").string()}).out == all.out);

  support::spit(dir / "empty.ndjson", "");
  const Run empty = cli({"export", "--in", (dir / "empty.ndjson").string()});
  CHECK(empty.code == 0);
  CHECK(empty.out.empty());

  support::spit(dir / "corrupt.ndjson", "{\n");
  const Run corrupt = cli({"export", "--in", (dir / "corrupt.ndjson").string()});
  CHECK(corrupt.code == 2);
  CHECK(corrupt.err.find("CORRUPT_RECORD") != std::string::npos);
  CHECK(cli({"export"}).code == 2);
  CHECK(cli({"export", "--in", file, "--from", "soon"}).code == 2);
}

TEST_CASE("help text for every subcommand") {
  const Run top = cli({"--help"});
  CHECK(top.code == 0);
  CHECK(support::matches_golden("cli/help.txt", top.out));
  for (const char* sub : {"validate", "plan", "simulate", "serve", "export"}) {
    const Run r = cli({sub, "--help"});
    CAPTURE(sub);
    CHECK(r.code == 0);
    CHECK(support::matches_golden(std::string("cli/help_") + sub + ".txt", r.out));
  }
  CHECK(cli({"--version"}).out == "visurvey 0.1.0\n");
}

TEST_CASE("usage errors exit 2") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"validate"}).code == 2);
  CHECK(cli({"simulate", fx("yadl.json")}).code == 2);
  CHECK(cli({"serve"}).code == 2);
  const Run both = cli({"simulate", fx("yadl.json"), "--script", "s.json", "--out", "a", "--sink-config", "b"});
  CHECK(both.code == 2);
  CHECK(cli({"serve", "--config", fx("missing.json")}).code == 2);
}
