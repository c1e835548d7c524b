"""Generation record schema and JSONL input/output.

One line of a corpus file holds one model generation::

    {"record_id": "r1", "task": "line_completion", "generated_text": "x = 1",
     "token_logprobs": [-0.1, -0.02], "reference_text": "x = 1",
     "test_report": {"passed": 3, "failed": 0, "syntax_ok": true},
     "verbalized_responses": ["80%"],
     "tf_response": {"positions": [[{"token": " True", "logprob": -0.2}]]},
     "generated_length_chars": 5}

Structural problems (bad JSON, wrong types, missing required fields) raise
:class:`RecordFormatError` while loading. Semantic invariants such as
non-positive log-probabilities are checked separately by
:func:`validate_record`, so that a corpus can be loaded and audited.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable, Optional

logger = logging.getLogger(__name__)


class Task(str, Enum):
    FUNCTION_SYNTHESIS = "function_synthesis"
    LINE_COMPLETION = "line_completion"
    PROGRAM_REPAIR = "program_repair"


class RecordFormatError(ValueError):
    """A corpus line could not be turned into a record."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class TestReport:
    passed: int
    failed: int
    syntax_ok: bool

    __test__ = False  # keep pytest from collecting this class


@dataclass(frozen=True)
class TfResponse:
    """Top-k candidates for the first response positions of a True/False query.

    ``positions[i]`` is a tuple of ``(token_text, logprob)`` pairs.
    """

    positions: tuple[tuple[tuple[str, float], ...], ...]

    @classmethod
    def from_lists(cls, positions: Iterable[Iterable[tuple[str, float]]]) -> "TfResponse":
        return cls(tuple(tuple((str(t), float(lp)) for t, lp in pos) for pos in positions))


@dataclass(frozen=True)
class GenerationRecord:
    record_id: str
    task: Task
    generated_text: str
    generated_length_chars: int
    token_logprobs: Optional[tuple[float, ...]] = None
    reference_text: Optional[str] = None
    test_report: Optional[TestReport] = None
    verbalized_responses: Optional[tuple[str, ...]] = None
    tf_response: Optional[TfResponse] = None

    @classmethod
    def build(cls, record_id: str, task: Task | str, generated_text: str, **kwargs: Any) -> "GenerationRecord":
        """Convenience constructor that fills in the length and coerces containers."""
        kwargs.setdefault("generated_length_chars", len(generated_text))
        if kwargs.get("token_logprobs") is not None:
            kwargs["token_logprobs"] = tuple(float(v) for v in kwargs["token_logprobs"])
        if kwargs.get("verbalized_responses") is not None:
            kwargs["verbalized_responses"] = tuple(kwargs["verbalized_responses"])
        tf = kwargs.get("tf_response")
        if tf is not None and not isinstance(tf, TfResponse):
            kwargs["tf_response"] = TfResponse.from_lists(tf)
        return cls(record_id=record_id, task=Task(task), generated_text=generated_text, **kwargs)


KNOWN_FIELDS = frozenset(
    {
        "record_id",
        "task",
        "generated_text",
        "token_logprobs",
        "reference_text",
        "test_report",
        "verbalized_responses",
        "tf_response",
        "generated_length_chars",
    }
)


def validate_record(r: GenerationRecord) -> list[str]:
    """Return one description per violated invariant; empty when the record is sound."""
    violations = []
    if r.token_logprobs is not None:
        for i, lp in enumerate(r.token_logprobs):
            if math.isnan(lp) or lp > 0:
                violations.append(f"token_logprobs[{i}]: {lp!r} is not a log-probability (must be <= 0)")
    if r.generated_length_chars < 0:
        violations.append("generated_length_chars: must be nonnegative")
    elif r.generated_length_chars != len(r.generated_text):
        violations.append(
            f"generated_length_chars: {r.generated_length_chars} != len(generated_text) = {len(r.generated_text)}"
        )
    rep = r.test_report
    if rep is not None:
        if rep.passed < 0 or rep.failed < 0:
            violations.append("test_report: passed/failed counts must be nonnegative")
        if not rep.syntax_ok and rep.passed > 0:
            violations.append(f"test_report: syntax_ok is false but passed = {rep.passed}")
    if r.tf_response is not None:
        for i, pos in enumerate(r.tf_response.positions):
            lps = [lp for _, lp in pos]
            if any(math.isnan(lp) or lp > 0 for lp in lps):
                violations.append(f"tf_response.positions[{i}]: logprobs must be <= 0")
            if any(a < b for a, b in zip(lps, lps[1:])):
                violations.append(f"tf_response.positions[{i}]: candidates not sorted by descending logprob")
    return violations


def _expect(cond: bool, message: str, line: int) -> None:
    if not cond:
        raise RecordFormatError(message, line)


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _is_count(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def record_from_dict(obj: dict, line: int = 0) -> tuple[GenerationRecord, int]:
    """Parse one decoded JSON object. Returns the record and its unknown-field count."""
    _expect(isinstance(obj, dict), "record must be a JSON object", line)
    for name in ("record_id", "task", "generated_text"):
        _expect(name in obj and obj[name] is not None, f"missing required field '{name}'", line)
    _expect(isinstance(obj["record_id"], str), "record_id must be a string", line)
    _expect(isinstance(obj["generated_text"], str), "generated_text must be a string", line)
    try:
        task = Task(obj["task"])
    except ValueError:
        raise RecordFormatError(f"unknown task {obj['task']!r}", line) from None

    length = obj.get("generated_length_chars")
    if length is None:
        length = len(obj["generated_text"])
    _expect(_is_count(length), "generated_length_chars must be an integer", line)

    logprobs = obj.get("token_logprobs")
    if logprobs is not None:
        _expect(
            isinstance(logprobs, list) and all(_is_number(v) for v in logprobs),
            "token_logprobs must be a list of numbers",
            line,
        )
        logprobs = tuple(float(v) for v in logprobs)

    reference = obj.get("reference_text")
    _expect(reference is None or isinstance(reference, str), "reference_text must be a string", line)

    report = obj.get("test_report")
    if report is not None:
        _expect(isinstance(report, dict), "test_report must be an object", line)
        for key in ("passed", "failed"):
            _expect(_is_count(report.get(key)), f"test_report.{key} must be an integer", line)
        _expect(isinstance(report.get("syntax_ok"), bool), "test_report.syntax_ok must be a boolean", line)
        report = TestReport(report["passed"], report["failed"], report["syntax_ok"])

    verbal = obj.get("verbalized_responses")
    if verbal is not None:
        _expect(
            isinstance(verbal, list) and all(isinstance(v, str) for v in verbal),
            "verbalized_responses must be a list of strings",
            line,
        )
        verbal = tuple(verbal)

    tf = obj.get("tf_response")
    if tf is not None:
        positions = tf.get("positions") if isinstance(tf, dict) else None
        _expect(isinstance(positions, list), "tf_response.positions must be a list", line)
        parsed = []
        for pos in positions:
            _expect(isinstance(pos, list), "each tf_response position must be a list", line)
            cands = []
            for cand in pos:
                _expect(
                    isinstance(cand, dict) and isinstance(cand.get("token"), str) and _is_number(cand.get("logprob")),
                    "tf_response candidates need a string 'token' and numeric 'logprob'",
                    line,
                )
                cands.append((cand["token"], float(cand["logprob"])))
            parsed.append(tuple(cands))
        tf = TfResponse(tuple(parsed))

    record = GenerationRecord(
        record_id=obj["record_id"],
        task=task,
        generated_text=obj["generated_text"],
        generated_length_chars=length,
        token_logprobs=logprobs,
        reference_text=reference,
        test_report=report,
        verbalized_responses=verbal,
        tf_response=tf,
    )
    return record, len(set(obj) - KNOWN_FIELDS)


def record_to_dict(r: GenerationRecord) -> dict:
    out: dict[str, Any] = {
        "record_id": r.record_id,
        "task": r.task.value,
        "generated_text": r.generated_text,
    }
    if r.token_logprobs is not None:
        out["token_logprobs"] = list(r.token_logprobs)
    if r.reference_text is not None:
        out["reference_text"] = r.reference_text
    if r.test_report is not None:
        out["test_report"] = {
            "passed": r.test_report.passed,
            "failed": r.test_report.failed,
            "syntax_ok": r.test_report.syntax_ok,
        }
    if r.verbalized_responses is not None:
        out["verbalized_responses"] = list(r.verbalized_responses)
    if r.tf_response is not None:
        out["tf_response"] = {
            "positions": [[{"token": t, "logprob": lp} for t, lp in pos] for pos in r.tf_response.positions]
        }
    out["generated_length_chars"] = r.generated_length_chars
    return out


def load_records(path: str | os.PathLike, format: str = "jsonl") -> list[GenerationRecord]:
    """Read a corpus file, preserving line order.

    Blank lines are skipped. Unknown fields are ignored; their total count is
    logged as a warning.

    Raises
    ------
    FileNotFoundError
        If ``path`` does not exist.
    RecordFormatError
        On a malformed line or a duplicated ``record_id``.
    """
    if format != "jsonl":
        raise ValueError(f"unsupported record format {format!r}")
    records = []
    seen: dict[str, int] = {}
    unknown = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise RecordFormatError(f"invalid JSON ({exc.msg})", lineno) from None
            record, n_unknown = record_from_dict(obj, lineno)
            if record.record_id in seen:
                raise RecordFormatError(
                    f"duplicate record_id {record.record_id!r} (first seen on line {seen[record.record_id]})",
                    lineno,
                )
            seen[record.record_id] = lineno
            unknown += n_unknown
            records.append(record)
    if unknown:
        logger.warning("%s: ignored %d unknown field(s)", path, unknown)
    return records


def save_records(records: Iterable[GenerationRecord], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(record_to_dict(r), ensure_ascii=False))
            fh.write("\n")
