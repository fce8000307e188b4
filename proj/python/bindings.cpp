#include "visurvey/cli.hpp"
#include "visurvey/plan.hpp"
#include "visurvey/result_store.hpp"
#include "visurvey/schedule.hpp"
#include "visurvey/service.hpp"
#include "visurvey/study.hpp"
#include "visurvey/wire.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace visurvey;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

PyObject* g_error_type = nullptr;

const AssessmentPair& pair_for(const StudyDefinition& def, const std::string& assessment) {
  if (assessment.empty()) {
    if (def.assessments.empty()) throw CompileError("NO_ASSESSMENTS", "study has no assessments");
    return def.assessments.front();
  }
  const AssessmentPair* pair = def.find_assessment(assessment);
  if (!pair) throw CompileError("UNKNOWN_ASSESSMENT", "no assessment '" + assessment + "'");
  return *pair;
}

std::string validate(const std::string& study_text, const std::optional<std::vector<std::string>>& assets) {
  const StudyDefinition def = parse_study_definition(study_text);
  std::optional<AssetManifest> manifest;
  if (assets) manifest = AssetManifest::from_json(json(*assets).dump());
  return wire::report_json(validate_study(def, manifest ? &*manifest : nullptr)).dump();
}

std::string compile_plan(const std::string& study_text, const std::string& task, const std::string& active_json,
                         const std::string& assessment, const std::string& prompt) {
  const StudyDefinition def = parse_study_definition(study_text);
  const TaskKind kind = parse_task_kind(task);
  if (kind == TaskKind::pam) return wire::plan_json(compile_pam_task(def.items, prompt)).dump();
  const AssessmentPair& pair = pair_for(def, assessment);
  if (kind == TaskKind::full) return wire::plan_json(compile_full_task(pair, def.items, def.study_id)).dump();
  const ActiveItemSet active = active_json.empty() ? ActiveItemSet{} : wire::parse_active_items(json::parse(active_json));
  return wire::plan_json(compile_spot_task(pair, active, def.items, def.study_id)).dump();
}

std::vector<std::string> derive(const std::string& study_text, const std::string& envelope_record,
                                const std::string& assessment) {
  const StudyDefinition def = parse_study_definition(study_text);
  const ResultEnvelope env = wire::parse_envelope_record(envelope_record);
  return derive_active_items(env, pair_for(def, assessment.empty() ? env.assessment_id : assessment), def.items).item_ids;
}

/// Runs full, derive and spot from an answer script; returns both records.
std::vector<std::string> simulate(const std::string& study_text, const std::string& script_json, const std::string& start,
                                  std::uint64_t seed, const std::string& assessment) {
  const StudyDefinition def = parse_study_definition(study_text);
  const ValidationReport report = validate_study(def);
  if (!report.valid()) throw Error("INVALID_STUDY", "study has validation errors");
  const AnswerScript script = parse_answer_script(json::parse(script_json));
  const AssessmentPair& pair = pair_for(def, assessment);
  ManualClock clock(parse_timestamp(start));
  RandomIds ids(seed);
  SurveySession full = SurveySession::start(compile_full_task(pair, def.items, def.study_id), script.participant_id, clock, ids);
  replay_script(full, script.full, clock);
  const ResultEnvelope full_env = full.finalize();
  const ActiveItemSet active = derive_active_items(full_env, pair, def.items);
  clock.advance(std::chrono::seconds{1});
  SurveySession spot =
      SurveySession::start(compile_spot_task(pair, active, def.items, def.study_id), script.participant_id, clock, ids);
  replay_script(spot, script.spot, clock);
  return {wire::envelope_record(full_env), wire::envelope_record(spot.finalize())};
}

std::vector<std::string> occurrences(const std::string& schedules_json, const std::string& after, int count) {
  const json docs = json::parse(schedules_json);
  std::vector<std::string> out;
  for (const auto& doc : docs) {
    const ScheduleSpec spec = wire::parse_schedule(doc);
    Timestamp t = parse_timestamp(after);
    for (int i = 0; i < count; ++i) {
      t = next_occurrence(spec, t);
      out.push_back(format_timestamp(t));
    }
  }
  return out;
}

std::vector<std::string> export_file(const std::string& path, const std::optional<std::string>& study,
                                     const std::optional<std::string>& participant, const std::optional<std::string>& from,
                                     const std::optional<std::string>& to) {
  SystemClock clock;
  MemorySink sink(clock);
  for (const auto& env : read_record_file(path)) sink.append(env);
  ExportFilter filter;
  filter.study_id = study;
  filter.participant_id = participant;
  if (from) filter.from = parse_timestamp(*from);
  if (to) filter.to = parse_timestamp(*to);
  std::vector<std::string> out;
  for (const auto& env : export_results(sink, filter)) out.push_back(wire::envelope_record(env));
  return out;
}

py::tuple cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return py::make_tuple(code, out.str(), err.str());
}

/// An in-process /v1 service over a deployment with a manual clock and
/// sequential identifiers, for driving the API without sockets.
class Service {
public:
  Service(const std::string& deployment_path, const std::string& start, const std::string& token)
      : clock_(parse_timestamp(start)),
        service_(load_deployment(deployment_path), std::make_unique<MemorySink>(clock_), clock_, ids_,
                 ServiceOptions{token, &clock_}) {}

  py::tuple handle(const std::string& method, const std::string& path, const std::string& body,
                   const std::map<std::string, std::string>& query, const std::string& authorization) {
    ApiResponse r;
    {
      py::gil_scoped_release release;
      r = service_.handle(ApiRequest{method, path, query, body, authorization});
    }
    return py::make_tuple(r.status, r.content_type, r.body);
  }

  std::string now() const { return format_timestamp(clock_.now()); }
  void set_now(const std::string& t) { clock_.set(parse_timestamp(t)); }
  void advance(const std::string& by) { clock_.advance(parse_duration(by)); }

private:
  ManualClock clock_;
  SequentialIds ids_;
  ApiService service_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Visual self-report survey engine";

  // The module attribute keeps the exception type alive.
  g_error_type = py::exception<Error>(m, "VisurveyError", PyExc_ValueError).ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::object exc = py::reinterpret_borrow<py::object>(g_error_type)(e.code(), e.what());
      PyErr_SetObject(g_error_type, exc.ptr());
    } catch (const json::exception& e) {
      PyErr_SetString(g_error_type, e.what());
    }
  });

  m.def("validate_study", &validate, py::arg("study_text"), py::arg("assets") = std::nullopt,
        "Validation report as JSON text.");
  m.def("canonical_serialize", [](const std::string& text) { return canonical_serialize(parse_study_definition(text)); },
        py::arg("study_text"));
  m.def("compile_plan", &compile_plan, py::arg("study_text"), py::arg("task"), py::arg("active_json") = "",
        py::arg("assessment") = "", py::arg("prompt") = "How do you feel right now?", "Compiled plan as JSON text.");
  m.def("derive_active_items", &derive, py::arg("study_text"), py::arg("envelope_record"), py::arg("assessment") = "");
  m.def("simulate", &simulate, py::arg("study_text"), py::arg("script_json"), py::arg("start"), py::arg("seed") = 1,
        py::arg("assessment") = "", "Full and spot envelope records.");
  m.def("next_occurrences", &occurrences, py::arg("schedules_json"), py::arg("after"), py::arg("count"));
  m.def("export_records", &export_file, py::arg("path"), py::arg("study") = std::nullopt,
        py::arg("participant") = std::nullopt, py::arg("from_") = std::nullopt, py::arg("to") = std::nullopt);
  m.def("run_cli", &cli, py::arg("args"), "(exit code, stdout, stderr)");

  py::class_<Service>(m, "Service")
      .def(py::init<const std::string&, const std::string&, const std::string&>(), py::arg("deployment_path"),
           py::arg("start"), py::arg("token") = "")
      .def("handle", &Service::handle, py::arg("method"), py::arg("path"), py::arg("body") = "",
           py::arg("query") = std::map<std::string, std::string>{}, py::arg("authorization") = "")
      .def_property("now", &Service::now, &Service::set_now)
      .def("advance", &Service::advance, py::arg("by"));
}
