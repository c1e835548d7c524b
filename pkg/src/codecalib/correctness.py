"""Correctness labels: exact match against a reference, or all tests passing."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .records import GenerationRecord, TestReport


class Notion(str, Enum):
    EXACT_MATCH = "exact_match"
    ALL_PASS = "all_pass"


class MissingLabelError(ValueError):
    pass


@dataclass(frozen=True)
class CorrectnessLabel:
    notion: Notion
    correct: bool


def exact_match(generated: str, reference: str) -> bool:
    """Whole-string equality after trimming outer whitespace; inner whitespace counts."""
    return generated.strip() == reference.strip()


def all_pass(report: TestReport) -> bool:
    return report.syntax_ok and report.failed == 0 and report.passed >= 1


def label_record(r: GenerationRecord, notion: Notion | str) -> CorrectnessLabel:
    notion = Notion(notion)
    if notion is Notion.EXACT_MATCH:
        if r.reference_text is None:
            raise MissingLabelError(f"record {r.record_id!r}: reference_text missing (needed for exact_match)")
        return CorrectnessLabel(notion, exact_match(r.generated_text, r.reference_text))
    if r.test_report is None:
        raise MissingLabelError(f"record {r.record_id!r}: test_report missing (needed for all_pass)")
    return CorrectnessLabel(notion, all_pass(r.test_report))


def label_records(records: Sequence[GenerationRecord], notion: Notion | str) -> np.ndarray:
    return np.array([label_record(r, notion).correct for r in records], dtype=bool)


@dataclass(frozen=True)
class CrossTab:
    """Exact-match (rows) by all-pass (columns) counts; index 0 is False, 1 is True."""

    counts: tuple[tuple[int, int], tuple[int, int]]

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def cell(self, exact: bool, passed: bool) -> int:
        return self.counts[int(exact)][int(passed)]

    @property
    def possible_flakes(self) -> int:
        """Exact matches whose tests still failed."""
        return self.cell(True, False)

    def percentages(self) -> np.ndarray:
        """3x3 array of percentages: cells, row totals (last column), column totals (last row)."""
        c = np.array(self.counts, dtype=np.float64)
        full = np.zeros((3, 3))
        full[:2, :2] = c
        full[:2, 2] = c.sum(axis=1)
        full[2, :2] = c.sum(axis=0)
        full[2, 2] = c.sum()
        return 100.0 * full / self.total

    def _rows(self) -> list[list[str]]:
        pct = self.percentages()
        names = ["False", "True", "Total"]
        return [[names[i]] + [f"{pct[i, j]:.2f}%" for j in range(3)] for i in range(3)]

    def to_markdown(self) -> str:
        header = "| Exact-Match \\ All Pass@1 | False | True | Total |"
        lines = [header, "|---|---:|---:|---:|"]
        lines += ["| " + " | ".join(row) + " |" for row in self._rows()]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(["exact_match", "all_pass_false", "all_pass_true", "total"])
        writer.writerows(self._rows())
        return buf.getvalue()


def cross_tab(records: Sequence[GenerationRecord]) -> CrossTab:
    if not records:
        raise ValueError("cross_tab needs at least one record")
    counts = [[0, 0], [0, 0]]
    for r in records:
        if r.reference_text is None or r.test_report is None:
            raise MissingLabelError(f"record {r.record_id!r} lacks reference_text or test_report")
        em = exact_match(r.generated_text, r.reference_text)
        counts[int(em)][int(all_pass(r.test_report))] += 1
    return CrossTab((tuple(counts[0]), tuple(counts[1])))
