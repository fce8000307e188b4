"""Python bindings for the visual self-report survey engine."""

import json

from . import _core
from ._core import VisurveyError, canonical_serialize, run_cli

__all__ = [
    "VisurveyError",
    "Service",
    "canonical_serialize",
    "compile_plan",
    "derive_active_items",
    "export_records",
    "next_occurrences",
    "run_cli",
    "simulate",
    "validate_study",
]


def validate_study(study_text, assets=None):
    """Returns the validation report as a dict."""
    return json.loads(_core.validate_study(study_text, assets))


def compile_plan(study_text, task, active=None, assessment="", prompt="How do you feel right now?"):
    """Returns the compiled plan for "full", "spot" or "pam" as a dict."""
    active_json = "" if active is None else json.dumps(active)
    return json.loads(_core.compile_plan(study_text, task, active_json, assessment, prompt))


def derive_active_items(study_text, envelope, assessment=""):
    """Item identifiers activated by a completed full-assessment envelope."""
    record = envelope if isinstance(envelope, str) else json.dumps(envelope, separators=(",", ":"))
    return _core.derive_active_items(study_text, record, assessment)


def simulate(study_text, script, start, seed=1, assessment=""):
    """Runs full, derive and spot from an answer script; returns both envelopes."""
    records = _core.simulate(study_text, json.dumps(script), start, seed, assessment)
    return [json.loads(r) for r in records]


def next_occurrences(schedule, after, count):
    """The next `count` due times of one schedule after an RFC 3339 instant."""
    return _core.next_occurrences(json.dumps([schedule]), after, count)


def export_records(path, study=None, participant=None, from_=None, to=None):
    """Deduplicated, ordered envelopes from a record file."""
    return [json.loads(r) for r in _core.export_records(path, study, participant, from_, to)]


class Service:
    """In-process /v1 API over a deployment, with a manual clock."""

    def __init__(self, deployment_path, start, token=""):
        self._core = _core.Service(str(deployment_path), start, token)

    def request(self, method, path, body=None, query=None, authorization=""):
        """Returns (status, parsed body). NDJSON bodies become lists of dicts."""
        text = "" if body is None else (body if isinstance(body, str) else json.dumps(body))
        status, content_type, payload = self._core.handle(method, path, text, query or {}, authorization)
        if content_type == "application/x-ndjson":
            return status, [json.loads(line) for line in payload.splitlines() if line]
        return status, json.loads(payload)

    @property
    def now(self):
        return self._core.now

    @now.setter
    def now(self, value):
        self._core.now = value

    def advance(self, by):
        self._core.advance(by)
