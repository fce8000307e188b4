// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 on any FAIL.

#include "visurvey/cli.hpp"
#include "visurvey/result_store.hpp"
#include "visurvey/schedule.hpp"
#include "visurvey/service.hpp"
#include "visurvey/session.hpp"
#include "visurvey/study.hpp"
#include "visurvey/wire.hpp"

#include <absl/time/civil_time.h>
#include <absl/time/time.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <thread>

using namespace visurvey;
using namespace std::chrono_literals;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Wall-clock limits per criterion.
constexpr auto kFixtureLimit = 1s;
constexpr auto kProtocolLimit = 5s;
constexpr auto kReplayLimit = 30s;
constexpr auto kSchedulerLimit = 30s;
constexpr auto kEndToEndLimit = 5s;
constexpr auto kServiceLimit = 60s;

// Sizes of the randomized checks.
constexpr int kReplaySequences = 1000;
constexpr std::size_t kReplayMaxDepth = 20;
constexpr int kSnoozeRuns = 2000;
constexpr int kConcurrentWorkers = 8;
constexpr int kConcurrentRounds = 20;

/// Thrown by `expect` with a description of the first violated condition.
struct Violation {
  std::string what;
};

void expect(bool condition, const std::string& what) {
  if (!condition) throw Violation{what};
}

std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(VISURVEY_FIXTURE_DIR) / name; }
std::filesystem::path golden(const std::string& name) { return std::filesystem::path(VISURVEY_GOLDEN_DIR) / name; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Timestamp at(const std::string& text) { return parse_timestamp(text); }

std::string error_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

/// Scratch directory removed on destruction.
class ScratchDir {
public:
  ScratchDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("visurvey-acceptance-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

// ---------------------------------------------------------------------------

void fixture_fidelity() {
  const std::string text = slurp(fixture("yadl.json"));
  const StudyDefinition def = parse_study_definition(text);
  const ValidationReport report = validate_study(def);
  expect(report.error_count() == 0, "reference document has validation errors");
  expect(def.assessments.size() == 1 && def.items.size() == 4, "reference document shape");
  const std::string once = canonical_serialize(def);
  const StudyDefinition back = parse_study_definition(once);
  expect(back == def, "canonical roundtrip is not model-equal");
  expect(canonical_serialize(back) == once, "second serialization differs");
}

// ---------------------------------------------------------------------------

void two_step_protocol() {
  const std::string text = slurp(fixture("yadl.json"));
  const json doc = json::parse(text)["YADL"];
  const StudyDefinition def = parse_study_definition(text);
  const AssessmentPair& pair = def.assessments.front();
  std::vector<std::string> values;
  for (const auto& c : doc["full"]["choices"]) values.push_back(c["value"]);
  std::vector<std::string> item_ids;
  for (const auto& a : doc["activities"]) item_ids.push_back(a["identifier"]);
  expect(values.size() == 3 && item_ids.size() == 4, "4 items with 3 choices");
  const std::string lowest = values.front();

  int empty_plans = 0;
  for (int code = 0; code < 81; ++code) {
    std::vector<std::string> answers;
    for (int i = 0, c = code; i < 4; ++i, c /= 3) answers.push_back(values[static_cast<std::size_t>(c % 3)]);

    ManualClock clock(at("2016-09-01T09:00:00Z"));
    SequentialIds ids;
    SurveySession full = SurveySession::start(compile_full_task(pair, def.items, def.study_id), "p1", clock, ids);
    for (const auto& a : answers) full.submit_answer(ChoiceAnswer{a}, clock);
    full.submit_answer(Acknowledge{}, clock);
    const ActiveItemSet active = derive_active_items(full.finalize(), pair, def.items);

    // Brute-force filter: every item whose answer is above the lowest choice, in authored order.
    std::vector<std::string> expected;
    for (std::size_t i = 0; i < item_ids.size(); ++i) {
      if (answers[i] != lowest) expected.push_back(item_ids[i]);
    }
    expect(active.item_ids == expected, "derived active items differ from the filter for script " + std::to_string(code));

    const TaskPlan spot = compile_spot_task(pair, active, def.items, def.study_id);
    const bool summary_only = spot.steps.size() == 1 && spot.steps[0].is_summary() &&
                              std::get<SummaryStep>(spot.steps[0].content).summary.identifier ==
                                  pair.spot.no_items_summary.identifier;
    const bool all_lowest = std::all_of(answers.begin(), answers.end(), [&](const auto& a) { return a == lowest; });
    expect(summary_only == all_lowest, "no-items plan emitted for the wrong script " + std::to_string(code));
    if (summary_only) ++empty_plans;
    if (!summary_only) {
      const auto& grid = std::get<ImageGridStep>(spot.steps[0].content);
      std::vector<std::string> grid_ids;
      for (const auto& item : grid.items) grid_ids.push_back(item.identifier);
      expect(grid_ids == expected, "spot grid differs from the active items");
    }
  }
  expect(empty_plans == 1, "exactly one script yields the no-items plan");
}

// ---------------------------------------------------------------------------

enum class Op { answer, ack, back };

struct Action {
  Op op;
  std::string value;
  Duration wait;
};

/// Last-write-wins model of a session.
struct ReplayModel {
  std::vector<Step> steps;
  Timestamp presented;
  std::size_t cursor = 0;
  bool completed = false;
  std::map<std::string, StepResult> answers;

  std::string apply(const Action& a, Timestamp now) {
    if (completed) return "NOT_IN_PROGRESS";
    if (a.op == Op::back) {
      if (cursor == 0) return "AT_FIRST_STEP";
      --cursor;
      presented = std::max(now, presented);
      return "";
    }
    const Step& step = steps[cursor];
    Answer answer;
    if (a.op == Op::ack) {
      if (!step.is_summary()) return "ANSWER_MISMATCH";
      answer = Acknowledge{};
    } else {
      const auto* choice = std::get_if<SingleChoiceImageStep>(&step.content);
      if (!choice) return "ANSWER_MISMATCH";
      if (std::none_of(choice->choices.begin(), choice->choices.end(), [&](const auto& c) { return c.value == a.value; })) {
        return "ANSWER_MISMATCH";
      }
      answer = ChoiceAnswer{a.value};
    }
    const Timestamp answered = std::max(now, presented);
    answers[step.step_id] = StepResult{step.step_id, answer, presented, answered};
    presented = answered;
    if (++cursor == steps.size()) completed = true;
    return "";
  }

  std::vector<StepResult> results() const {
    std::vector<StepResult> out;
    for (const auto& step : steps) {
      if (!step.is_summary()) out.push_back(answers.at(step.step_id));
    }
    return out;
  }
};

void session_replay() {
  const StudyDefinition def = parse_study_definition(slurp(fixture("yadl.json")));
  const std::vector<ItemDef> two(def.items.begin(), def.items.begin() + 2);
  const TaskPlan plan = compile_full_task(def.assessments.front(), two, def.study_id);
  expect(plan.steps.size() == 3, "3-step plan");
  const std::vector<std::string> values{"easy", "moderate", "hard", "severe"};

  std::mt19937_64 rng(20161001);
  int completed = 0;
  for (int run = 0; run < kReplaySequences; ++run) {
    ManualClock clock(at("2016-09-01T09:00:00Z"));
    SequentialIds ids;
    SurveySession session = SurveySession::start(plan, "p1", clock, ids);
    ReplayModel model{plan.steps, clock.now()};
    const std::size_t depth = 1 + rng() % kReplayMaxDepth;
    for (std::size_t i = 0; i < depth; ++i) {
      const auto roll = rng() % 10;
      const Action a{roll < 5 ? Op::answer : roll < 7 ? Op::ack : Op::back, values[rng() % values.size()],
                     Duration{static_cast<long>(rng() % 40)}};
      clock.advance(a.wait);
      const std::string expected = model.apply(a, clock.now());
      const std::string actual = error_code([&] {
        if (a.op == Op::back) {
          session.go_back(clock);
        } else if (a.op == Op::ack) {
          session.submit_answer(Acknowledge{}, clock);
        } else {
          session.submit_answer(ChoiceAnswer{a.value}, clock);
        }
      });
      expect(actual == expected, "run " + std::to_string(run) + ": outcome '" + actual + "' but model says '" + expected + "'");
      expect(session.cursor() == model.cursor, "cursor diverged in run " + std::to_string(run));
      expect(session.cursor() <= plan.steps.size(), "cursor out of bounds in run " + std::to_string(run));
    }
    expect((session.status() == SessionStatus::completed) == model.completed, "completion diverged");
    if (model.completed) {
      ++completed;
      expect(session.finalize().results == model.results(), "envelope differs from the replay model");
    }
  }
  expect(completed > 0, "some sequences complete");
}

// ---------------------------------------------------------------------------

absl::Time to_absl(Timestamp t) { return absl::FromUnixSeconds(t.time_since_epoch().count()); }
Timestamp from_absl(absl::Time t) { return Timestamp{Duration{absl::ToUnixSeconds(t)}}; }

bool day_matches(const Recurrence& r, absl::CivilDay day) {
  if (std::holds_alternative<Daily>(r)) return true;
  if (const auto* w = std::get_if<Weekly>(&r)) {
    // absl counts monday = 0; c_encoding counts sunday = 0.
    return static_cast<unsigned>((static_cast<int>(absl::GetWeekday(day)) + 1) % 7) == w->weekday.c_encoding();
  }
  if (const auto* m = std::get_if<Monthly>(&r)) return day.day() == static_cast<int>(m->day_of_month);
  return false;
}

/// Every minute of [from, to) whose local wall time is the anchor on a
/// matching day (first instance when repeated), or the first minute after a
/// jump that skipped such a wall time.
std::vector<Timestamp> enumerate_calendar(const ScheduleSpec& spec, Timestamp from, Timestamp to) {
  absl::TimeZone tz;
  expect(absl::LoadTimeZone(spec.timezone, &tz), "time zone " + spec.timezone);
  auto is_anchor = [&](absl::CivilMinute m) {
    return m.hour() == static_cast<int>(spec.anchor_time.hour) && m.minute() == static_cast<int>(spec.anchor_time.minute) &&
           day_matches(spec.recurrence, absl::CivilDay(m));
  };
  std::vector<Timestamp> out;
  std::set<absl::CivilMinute> fired;
  std::optional<absl::CivilMinute> previous;
  for (Timestamp t = from; t < to; t += 1min) {
    const absl::CivilMinute local(absl::ToCivilSecond(to_absl(t), tz));
    bool fire = false;
    if (previous) {
      for (absl::CivilMinute skipped = *previous + 1; skipped < local; ++skipped) {
        if (is_anchor(skipped) && fired.insert(skipped).second) fire = true;
      }
    }
    if (is_anchor(local) && fired.insert(local).second) fire = true;
    if (fire) out.push_back(t);
    previous = local;
  }
  return out;
}

ScheduleSpec make_spec(Recurrence r, LocalTimeOfDay anchor, std::string tz) {
  ScheduleSpec spec;
  spec.task = {"YADL Spot Identifier", TaskKind::spot};
  spec.recurrence = r;
  spec.anchor_time = anchor;
  spec.timezone = std::move(tz);
  return spec;
}

std::vector<Timestamp> iterate(const ScheduleSpec& spec, Timestamp from, Timestamp to) {
  std::vector<Timestamp> out;
  for (Timestamp t = next_occurrence(spec, from - 1s); t < to; t = next_occurrence(spec, t)) {
    expect(out.empty() || t > out.back(), "next_occurrence is not strictly increasing");
    out.push_back(t);
  }
  return out;
}

void scheduler() {
  // Both windows span a DST transition in the northern-hemisphere zones.
  const std::vector<std::pair<Timestamp, Timestamp>> windows = {
      {at("2016-02-20T00:00:00Z"), at("2016-04-20T00:00:00Z")},
      {at("2016-10-15T00:00:00Z"), at("2016-12-14T00:00:00Z")},
  };
  for (const auto& [from, to] : windows) {
    for (const char* tz : {"UTC", "America/New_York", "Europe/London"}) {
      for (LocalTimeOfDay anchor : {LocalTimeOfDay{9, 0}, LocalTimeOfDay{2, 30}, LocalTimeOfDay{1, 30}}) {
        for (const Recurrence& r : {Recurrence{Daily{}}, Recurrence{Weekly{std::chrono::Sunday}}, Recurrence{Monthly{13}}}) {
          const ScheduleSpec spec = make_spec(r, anchor, tz);
          const auto expected = enumerate_calendar(spec, from, to);
          expect(!expected.empty(), "oracle produced no instants");
          expect(iterate(spec, from, to) == expected,
                 std::string("calendar recurrence differs from the oracle in ") + tz + " at " + format_time_of_day(anchor));
        }
      }
      for (Duration interval : {Duration{24h}, Duration{90min}, Duration{36h}}) {
        ScheduleSpec spec = make_spec(Every{interval}, {8, 15}, tz);
        const absl::CivilDay start(absl::ToCivilDay(to_absl(from), absl::UTCTimeZone()) + 5);
        spec.start_date = std::chrono::year{static_cast<int>(start.year())} / start.month() / start.day();
        absl::TimeZone zone;
        absl::LoadTimeZone(tz, &zone);
        const Timestamp anchor = from_absl(zone.At(absl::CivilSecond(start.year(), start.month(), start.day(), 8, 15, 0)).pre);
        std::vector<Timestamp> expected;
        for (Timestamp t = from; t < to; t += 1min) {
          if (t >= anchor && (t - anchor) % interval == Duration::zero()) expected.push_back(t);
        }
        expect(iterate(spec, from, to) == expected, std::string("interval recurrence differs from the oracle in ") + tz);
      }
    }
  }

  std::mt19937_64 rng(17);
  for (int run = 0; run < kSnoozeRuns; ++run) {
    const ReminderPolicy policy{Duration{60 * (1 + static_cast<long>(rng() % 60))}, static_cast<int>(rng() % 6)};
    Occurrence occ;
    occ.occurrence_id = "o";
    occ.due_at = at("2016-09-01T09:00:00Z");
    occ.expires_at = occ.due_at + Duration{3600 * (1 + static_cast<long>(rng() % 24))};
    occ.remind_at = occ.due_at;
    Timestamp now = occ.due_at;
    for (int i = 0; i < 12; ++i) {
      now += Duration{static_cast<long>(rng() % 1800)};
      try {
        occ = apply_snooze(occ, now, policy);
        expect(occ.remind_at <= occ.expires_at, "snooze past expiry");
      } catch (const ScheduleError& e) {
        expect(e.code() == "SNOOZE_LIMIT" || e.code() == "EXPIRED", "unexpected snooze error " + e.code());
      }
      expect(occ.snooze_count <= policy.max_snoozes, "snooze count exceeds the policy limit");
    }
  }
}

// ---------------------------------------------------------------------------

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

void end_to_end() {
  ScratchDir dir;
  const std::string records = (dir / "records.ndjson").string();
  std::ostringstream out, err;
  const int sim = run_cli({"simulate", fixture("yadl.json").string(), "--script", fixture("script_hard_easy.json").string(),
                           "--out", records, "--at", "2016-09-01T09:00:00Z", "--seed", "1"},
                          out, err);
  expect(sim == 0, "simulate failed: " + err.str());
  const auto summary = lines_of(out.str());
  expect(summary.size() == 3 && summary[1] == "active: Bathing, Toilet", "simulate summary: " + out.str());

  std::ostringstream exported, export_err;
  expect(run_cli({"export", "--in", records}, exported, export_err) == 0, "export failed: " + export_err.str());
  const auto lines = lines_of(exported.str());
  expect(lines.size() == 2, "expected two envelopes, got " + std::to_string(lines.size()));
  const ResultEnvelope full = wire::parse_envelope_record(lines[0]);
  const ResultEnvelope spot = wire::parse_envelope_record(lines[1]);
  expect(full.task_kind == TaskKind::full && full.results.size() == 4, "full envelope");
  expect(spot.task_kind == TaskKind::spot && spot.results.size() == 1, "spot envelope");
  for (const auto& line : lines_of(slurp(records))) {
    expect(wire::envelope_record(wire::parse_envelope_record(line)) == line, "file sink line does not roundtrip");
  }

  ManualClock clock(at("2016-09-02T00:00:00Z"));
  FileSink sink(FileSinkConfig{records, 0}, clock);
  sink.append(full);
  expect(lines_of(slurp(records)).size() == 3, "duplicate append adds a line");
  std::ostringstream again, again_err;
  expect(run_cli({"export", "--in", records}, again, again_err) == 0, "second export failed");
  expect(again.str() == exported.str(), "duplicate append is not deduplicated on export");
}

// ---------------------------------------------------------------------------

/// One recorded exchange of a service transcript.
struct Exchange {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string authorization;
  std::string body;
  std::string expected;
};

struct Transcript {
  std::string token;
  std::vector<Exchange> exchanges;
};

Transcript read_transcript(const std::filesystem::path& file) {
  Transcript t;
  const auto lines = lines_of(slurp(file));
  std::size_t i = 0;
  if (i < lines.size() && lines[i].rfind("# bearer ", 0) == 0) {
    t.token = lines[i].substr(9);
    i += 2;
  }
  while (i < lines.size()) {
    Exchange ex;
    const std::string& request = lines[i++];
    const auto space = request.find(' ');
    ex.method = request.substr(0, space);
    std::string target = request.substr(space + 1);
    if (const auto q = target.find('?'); q != std::string::npos) {
      std::istringstream params(target.substr(q + 1));
      for (std::string kv; std::getline(params, kv, '&');) {
        const auto eq = kv.find('=');
        ex.query[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
      target = target.substr(0, q);
    }
    ex.path = target;
    if (i < lines.size() && lines[i].rfind("Authorization: ", 0) == 0) ex.authorization = lines[i++].substr(15);
    if (i < lines.size() && lines[i].rfind("-> ", 0) != 0) ex.body = lines[i++];
    while (i < lines.size() && !lines[i].empty()) ex.expected += lines[i++] + "\n";
    ++i;
    t.exchanges.push_back(std::move(ex));
  }
  return t;
}

std::string render(const ApiResponse& r) {
  std::string out = "-> " + std::to_string(r.status) + " " + r.content_type + "\n";
  out += r.content_type == "application/json" ? ordered_json::parse(r.body).dump(2) + "\n" : r.body;
  return out;
}

/// Route shape of a request path: literal segments kept, identifiers replaced.
std::string route_of(const std::string& method, const std::string& path) {
  std::vector<std::string> parts;
  std::istringstream in(path);
  for (std::string seg; std::getline(in, seg, '/');) {
    if (!seg.empty()) parts.push_back(seg);
  }
  static const std::set<std::string> literals = {"v1", "studies", "participants", "due", "occurrences", "sessions",
                                                 "step", "answers", "complete-ack", "snooze", "export", "debug", "clock"};
  std::string shape = method + " ";
  for (const auto& p : parts) shape += "/" + (literals.count(p) ? p : std::string("{id}"));
  return shape;
}

void service_contract() {
  const std::vector<std::string> files = {"api/full_then_spot.txt", "api/errors.txt", "api/snooze.txt"};
  std::set<std::string> routes_ok;
  bool saw_session_exists = false;
  bool saw_snooze_limit = false;
  for (const auto& name : files) {
    expect(std::filesystem::exists(golden(name)), "missing golden " + name);
    const Transcript t = read_transcript(golden(name));
    ManualClock clock(at("2016-09-02T01:00:00Z"));
    SequentialIds ids;
    ApiService service(load_deployment(fixture("deployment.json")), std::make_unique<MemorySink>(clock), clock, ids,
                       ServiceOptions{t.token, &clock});
    for (const auto& ex : t.exchanges) {
      const ApiResponse r = service.handle(ApiRequest{ex.method, ex.path, ex.query, ex.body, ex.authorization});
      expect(render(r) == ex.expected, name + ": response differs for " + ex.method + " " + ex.path);
      if (r.status < 300) routes_ok.insert(route_of(ex.method, ex.path));
      if (r.status == 409 && r.body.find("\"SESSION_EXISTS\"") != std::string::npos) saw_session_exists = true;
      if (r.status == 409 && r.body.find("\"SNOOZE_LIMIT\"") != std::string::npos) saw_snooze_limit = true;
    }
  }
  for (const char* route : {"GET /v1/studies/{id}", "GET /v1/participants/{id}/due",
                            "POST /v1/participants/{id}/occurrences/{id}/sessions", "GET /v1/sessions/{id}/step",
                            "POST /v1/sessions/{id}/answers", "POST /v1/sessions/{id}/complete-ack",
                            "POST /v1/occurrences/{id}/snooze", "GET /v1/export"}) {
    expect(routes_ok.count(route) == 1, std::string("no successful golden exchange for ") + route);
  }
  expect(saw_session_exists, "no 409 SESSION_EXISTS exchange");
  expect(saw_snooze_limit, "no SNOOZE_LIMIT exchange");

  // Concurrent answers: the accepted posts, ordered by the cursor they
  // produced, replayed sequentially must reproduce the final envelope.
  const std::vector<std::string> values{"easy", "moderate", "hard"};
  for (int round = 0; round < kConcurrentRounds; ++round) {
    ManualClock clock(at("2016-09-02T01:00:00Z"));
    SequentialIds ids;
    ApiService service(load_deployment(fixture("deployment.json")), std::make_unique<MemorySink>(clock), clock, ids);
    std::string occurrence;
    for (const auto& occ : service.get_due("p1")) {
      if (occ["task"]["kind"] == "full") occurrence = occ["occurrenceId"];
    }
    const std::string session = service.create_session("p1", occurrence)["session"]["sessionId"];
    std::mutex mutex;
    std::map<std::size_t, std::string> accepted;
    std::vector<std::thread> workers;
    for (int w = 0; w < kConcurrentWorkers; ++w) {
      workers.emplace_back([&, w] {
        const std::string value = values[static_cast<std::size_t>(w) % values.size()];
        const std::string body = json{{"answer", {{"type", "choice"}, {"value", value}}}}.dump();
        for (int i = 0; i < 3; ++i) {
          const ApiResponse r = service.handle({"POST", "/v1/sessions/" + session + "/answers", {}, body, ""});
          if (r.status != 200) continue;
          std::lock_guard lock(mutex);
          const std::size_t cursor = json::parse(r.body)["session"]["cursor"];
          expect(accepted.emplace(cursor, value).second, "two answers produced the same cursor");
        }
      });
    }
    for (auto& t : workers) t.join();
    expect(accepted.size() == 4, "expected four accepted answers, got " + std::to_string(accepted.size()));
    service.complete_ack(session);
    const auto envelopes = export_results(service.sink());
    expect(envelopes.size() == 1, "one envelope");

    const StudyDefinition& def = service.deployment().studies.front();
    ManualClock seq_clock(clock.now());
    SequentialIds seq_ids;
    SurveySession sequential =
        SurveySession::start(compile_full_task(def.assessments.front(), def.items, def.study_id), "p1", seq_clock, seq_ids);
    for (const auto& [cursor, value] : accepted) sequential.submit_answer(ChoiceAnswer{value}, seq_clock);
    sequential.submit_answer(Acknowledge{}, seq_clock);
    const auto expected = sequential.finalize().results;
    expect(envelopes[0].results.size() == expected.size(), "result count differs from the sequential interleaving");
    for (std::size_t i = 0; i < expected.size(); ++i) {
      expect(envelopes[0].results[i].step_id == expected[i].step_id &&
                 envelopes[0].results[i].answer == expected[i].answer,
             "final state differs from the sequential interleaving");
    }
  }
}

// ---------------------------------------------------------------------------

struct Criterion {
  const char* name;
  std::chrono::milliseconds limit;
  void (*run)();
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"reference document fidelity", kFixtureLimit, fixture_fidelity},
      {"two-step protocol oracle", kProtocolLimit, two_step_protocol},
      {"session replay oracle", kReplayLimit, session_replay},
      {"scheduler oracle", kSchedulerLimit, scheduler},
      {"end-to-end headless", kEndToEndLimit, end_to_end},
      {"service contract", kServiceLimit, service_contract},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    try {
      c.run();
    } catch (const Violation& v) {
      ok = false;
      detail = v.what;
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    if (ok && elapsed > c.limit) {
      ok = false;
      detail = "over the " + std::to_string(c.limit.count()) + " ms limit";
    }
    std::cout << (ok ? "PASS" : "FAIL") << "  " << c.name << "  (" << elapsed.count() << " ms / " << c.limit.count()
              << " ms)";
    if (!detail.empty()) std::cout << "  " << detail;
    std::cout << "\n";
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
