import json
import pathlib

import pytest

import visurvey

FIXTURES = pathlib.Path(__file__).resolve().parents[1] / "fixtures"
STUDY = (FIXTURES / "yadl.json").read_text()


def test_reference_study_is_valid():
    report = visurvey.validate_study(STUDY)
    assert report["valid"] is True
    assert report["errors"] == 0
    assert [d["code"] for d in report["diagnostics"]] == ["MISSING_SCHEMA_VERSION"]


def test_duplicate_identifier_is_reported():
    report = visurvey.validate_study((FIXTURES / "yadl_dup.json").read_text())
    assert report["valid"] is False
    assert "DUP_IDENTIFIER" in [d["code"] for d in report["diagnostics"]]


def test_canonical_form_is_stable():
    once = visurvey.canonical_serialize(STUDY)
    assert visurvey.canonical_serialize(once) == once
    assert json.loads(once)["YADL"]["full"]["choices"][2]["color"] == "#F38630"


def test_syntax_errors_raise_with_a_code():
    with pytest.raises(visurvey.VisurveyError) as info:
        visurvey.validate_study("{")
    assert info.value.args[0] == "SYNTAX"


def test_full_plan_starts_with_bathing():
    plan = visurvey.compile_plan(STUDY, "full")
    steps = plan["steps"]
    assert len(steps) == 5
    assert steps[0]["stepId"] == "YADL Full Identifier.Bathing"
    assert steps[-1]["type"] == "summary"


def test_spot_plan_follows_active_items():
    plan = visurvey.compile_plan(STUDY, "spot", active=["Toilet", "Bathing"])
    grid = plan["steps"][0]
    assert [i["identifier"] for i in grid["items"]] == ["Bathing", "Toilet"]
    empty = visurvey.compile_plan(STUDY, "spot")
    assert [s["type"] for s in empty["steps"]] == ["summary"]


def test_simulate_derives_the_spot_grid():
    script = json.loads((FIXTURES / "script_hard_easy.json").read_text())
    full, spot = visurvey.simulate(STUDY, script, "2016-09-01T09:00:00Z", seed=3)
    assert [r["answer"]["value"] for r in full["results"]] == ["hard", "easy", "moderate", "easy"]
    assert visurvey.derive_active_items(STUDY, full) == ["Bathing", "Toilet"]
    assert spot["results"][0]["answer"] == {"type": "items", "items": ["Toilet"]}


def test_next_occurrences_cross_daylight_saving():
    schedule = {
        "task": {"assessment": "YADL Spot Identifier", "kind": "spot"},
        "recurrence": {"type": "daily"},
        "anchorTime": "02:30",
        "timezone": "America/New_York",
    }
    assert visurvey.next_occurrences(schedule, "2016-03-12T12:00:00Z", 2) == [
        "2016-03-13T07:00:00Z",
        "2016-03-14T06:30:00Z",
    ]


def test_service_runs_a_full_session():
    service = visurvey.Service(FIXTURES / "deployment.json", "2016-09-02T01:00:00Z")
    status, due = service.request("GET", "/v1/participants/p1/due")
    assert status == 200
    full = next(o for o in due if o["task"]["kind"] == "full")
    status, created = service.request("POST", f"/v1/participants/p1/occurrences/{full['occurrenceId']}/sessions")
    assert status == 201
    session = created["session"]["sessionId"]
    status, again = service.request("POST", f"/v1/participants/p1/occurrences/{full['occurrenceId']}/sessions")
    assert (status, again["code"]) == (409, "SESSION_EXISTS")
    for value in ["hard", "easy", "easy", "easy"]:
        status, _ = service.request(
            "POST", f"/v1/sessions/{session}/answers", {"answer": {"type": "choice", "value": value}}
        )
        assert status == 200
    status, done = service.request("POST", f"/v1/sessions/{session}/complete-ack")
    assert done["completion"]["activeItems"] == ["Bathing"]
    service.advance("1h")
    assert service.now == "2016-09-02T02:00:00Z"
    status, records = service.request("GET", "/v1/export")
    assert status == 200
    assert [r["envelopeId"] for r in records] == [f"env-{session}"]


def test_cli_and_export(tmp_path):
    out = tmp_path / "records.ndjson"
    code, stdout, _ = visurvey.run_cli(
        ["simulate", str(FIXTURES / "yadl.json"), "--script", str(FIXTURES / "script_hard_easy.json"),
         "--out", str(out), "--at", "2016-09-01T09:00:00Z"]
    )
    assert code == 0
    assert "active: Bathing, Toilet" in stdout
    records = visurvey.export_records(str(out))
    assert [r["taskKind"] for r in records] == ["full", "spot"]
    assert visurvey.export_records(str(out), from_="2030-01-01T00:00:00Z") == []
    code, _, _ = visurvey.run_cli(["validate", str(FIXTURES / "yadl_dup.json")])
    assert code == 1
