"""Report tables, reliability-plot SVGs and graduated decision bands."""

from __future__ import annotations

import bisect
import csv
import io
import os
from dataclasses import dataclass
from typing import Mapping, Optional
from xml.sax.saxutils import escape

from .metrics import CalibrationReport, ReliabilityBins

# unskilled rows with |SS| under this print as 0.00 and get the ECE caveat
UNSKILLED_TOL = 0.005


def fmt2(x: Optional[float]) -> str:
    if x is None:
        return ""
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


def fmt_signed(x: Optional[float]) -> str:
    if x is None:
        return ""
    s = fmt2(x)
    return s if s.startswith("-") or s == "0.00" else "+" + s


def _label(part) -> str:
    return getattr(part, "value", str(part))


COLUMNS = ["measure", "notion", "scaled", "B", "B_ref", "SS", "ECE", "AUC", "n"]


def _table_rows(reports: Mapping[tuple, CalibrationReport], full_precision: bool):
    rows, notes = [], []
    note_ids: dict[str, int] = {}

    def mark(text: str) -> str:
        if text not in note_ids:
            note_ids[text] = len(note_ids) + 1
            notes.append(text)
        return f"[{note_ids[text]}]"

    num = (lambda v: "" if v is None else repr(float(v))) if full_precision else fmt2
    ss = (lambda v: "" if v is None else repr(float(v))) if full_precision else fmt_signed
    for key, rep in reports.items():
        measure, notion = _label(key[0]), _label(key[1])
        ece_cell = num(rep.ece)
        if rep.ece_omitted_reason:
            ece_cell = mark(rep.ece_omitted_reason)
        elif rep.ece is not None and rep.skill is not None and abs(rep.skill) < UNSKILLED_TOL:
            ece_cell = f"{ece_cell} " + mark(
                "ECE near zero is misleading here: the skill score shows no improvement over "
                "always predicting the base rate."
            )
        skill_cell = ss(rep.skill) if rep.skill is not None else "n/a"
        rows.append(
            [
                measure,
                notion,
                "yes" if rep.rescaled else "no",
                num(rep.brier),
                num(rep.brier_ref),
                skill_cell,
                ece_cell,
                num(rep.auc) if rep.auc is not None else "n/a",
                str(rep.n),
            ]
        )
    return rows, notes


def render_report_table(
    reports: Mapping[tuple, CalibrationReport], format: str = "markdown", full_precision: bool = False
) -> str:
    """One row per (measure, notion[, ...]) key, in mapping order.

    Values are rounded to two decimals unless ``full_precision`` is set
    (CSV only). Footnotes explain blank or suspicious ECE cells.
    """
    if format not in ("markdown", "csv"):
        raise ValueError(f"unknown table format {format!r}")
    rows, notes = _table_rows(reports, full_precision and format == "csv")
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(COLUMNS)
        writer.writerows(rows)
        for i, text in enumerate(notes, start=1):
            writer.writerow([f"[{i}]", text])
        return buf.getvalue()

    widths = [max(len(c), *(len(r[j]) for r in rows)) if rows else len(c) for j, c in enumerate(COLUMNS)]
    numeric = [False, False, False] + [True] * 6

    def line(cells):
        return "| " + " | ".join(c.rjust(w) if num else c.ljust(w) for c, w, num in zip(cells, widths, numeric)) + " |"

    out = [line(COLUMNS)]
    out.append("|" + "|".join(("-" * (w + 1) + ":") if num else ("-" * (w + 2)) for w, num in zip(widths, numeric)) + "|")
    out += [line(r) for r in rows]
    if notes:
        out.append("")
        out += [f"[{i}] {text}" for i, text in enumerate(notes, start=1)]
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class PlotSpec:
    bins: ReliabilityBins
    brier: float
    brier_ref: float
    ece: Optional[float]
    skill: Optional[float]
    title: str = ""
    quantile_overlay: Optional[ReliabilityBins] = None

    @classmethod
    def from_report(
        cls, rep: CalibrationReport, title: str = "", quantile_overlay: Optional[ReliabilityBins] = None
    ) -> "PlotSpec":
        if rep.bins is None:
            raise ValueError("report carries no bins")
        return cls(rep.bins, rep.brier, rep.brier_ref, rep.ece, rep.skill, title, quantile_overlay)


@dataclass(frozen=True)
class PlotLayout:
    width: int = 420
    height: int = 420
    left: int = 60
    top: int = 40
    size: int = 320

    def x(self, v: float) -> float:
        return self.left + v * self.size

    def y(self, v: float) -> float:
        return self.top + (1.0 - v) * self.size


def _n(v: float) -> str:
    s = f"{v:.2f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def reliability_svg(spec: PlotSpec, layout: PlotLayout = PlotLayout()) -> str:
    if not spec.bins.bins:
        raise ValueError("nothing to plot: no bins")
    L = layout
    x0, y0, x1, y1 = L.x(0), L.y(0), L.x(1), L.y(1)
    parts = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{L.width}" height="{L.height}" '
        f'viewBox="0 0 {L.width} {L.height}" font-family="sans-serif" font-size="11">',
        f'<title>{escape(spec.title)}</title>',
        f'<rect class="frame" x="{_n(x0)}" y="{_n(y1)}" width="{_n(L.size)}" height="{_n(L.size)}" '
        'fill="white" stroke="black"/>',
    ]
    for t in range(0, 11, 2):
        v = t / 10
        parts.append(f'<text class="xtick" x="{_n(L.x(v))}" y="{_n(y0 + 14)}" text-anchor="middle">{v:.1f}</text>')
        parts.append(f'<text class="ytick" x="{_n(x0 - 6)}" y="{_n(L.y(v) + 4)}" text-anchor="end">{v:.1f}</text>')
    parts.append(f'<text x="{_n(L.x(0.5))}" y="{_n(y0 + 32)}" text-anchor="middle">confidence</text>')
    parts.append(
        f'<text x="{_n(x0 - 40)}" y="{_n(L.y(0.5))}" text-anchor="middle" '
        f'transform="rotate(-90 {_n(x0 - 40)} {_n(L.y(0.5))})">fraction correct</text>'
    )
    for b in spec.bins.bins:
        top = L.y(b.corr) if b.count else y0
        height = y0 - top
        parts.append(
            f'<rect class="bar" x="{_n(L.x(b.lo))}" y="{_n(top)}" width="{_n((b.hi - b.lo) * L.size)}" '
            f'height="{_n(height)}" data-count="{b.count}" fill="#4c78a8" fill-opacity="0.7" stroke="white"/>'
        )
        parts.append(
            f'<text class="count" x="{_n(L.x((b.lo + b.hi) / 2))}" y="{_n(y0 - 3)}" '
            f'text-anchor="middle" font-size="9">{b.count}</text>'
        )
    for b in spec.bins.bins:
        if b.count:
            parts.append(
                f'<circle class="gap" cx="{_n(L.x(b.conf))}" cy="{_n(L.y(b.corr))}" r="2.5" fill="black"/>'
            )
    parts.append(
        f'<line class="diagonal" x1="{_n(x0)}" y1="{_n(y0)}" x2="{_n(x1)}" y2="{_n(y1)}" '
        'stroke="gray" stroke-dasharray="4 3"/>'
    )
    if spec.quantile_overlay is not None:
        pts = " ".join(
            f"{_n(L.x(b.conf))},{_n(L.y(b.corr))}" for b in spec.quantile_overlay.bins if b.count
        )
        parts.append(f'<polyline class="quantile" points="{pts}" fill="none" stroke="#d62728" stroke-width="1.5"/>')
    notes = [
        f"B_ref = {fmt2(spec.brier_ref)}",
        f"ECE = {fmt2(spec.ece) if spec.ece is not None else 'omitted'}",
        f"B = {fmt2(spec.brier)}",
        f"SS = {fmt_signed(spec.skill) if spec.skill is not None else 'n/a'}",
    ]
    bx, by = x0 + 8, y1 + 8
    parts.append(
        f'<rect class="annotation" x="{_n(bx)}" y="{_n(by)}" width="110" height="{14 * len(notes) + 8}" '
        'fill="white" fill-opacity="0.85" stroke="gray"/>'
    )
    for i, text in enumerate(notes):
        parts.append(f'<text class="annotation" x="{_n(bx + 6)}" y="{_n(by + 16 + 14 * i)}">{escape(text)}</text>')
    if spec.title:
        parts.append(
            f'<text class="title" x="{_n(L.width / 2)}" y="20" text-anchor="middle" font-size="13">'
            f"{escape(spec.title)}</text>"
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_reliability_plot(spec: PlotSpec, path: str | os.PathLike, layout: PlotLayout = PlotLayout()) -> None:
    svg = reliability_svg(spec, layout)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)


@dataclass(frozen=True)
class DecisionBands:
    """Confidence thresholds mapped to review actions, most cautious first."""

    bands: tuple[tuple[float, str], ...]

    def __post_init__(self):
        lowers = [lo for lo, _ in self.bands]
        if not lowers or lowers[0] != 0.0:
            raise ValueError("the first band must start at 0")
        if any(b <= a for a, b in zip(lowers, lowers[1:])):
            raise ValueError("band lower bounds must be strictly increasing")
        if lowers[-1] > 1.0:
            raise ValueError("band lower bounds must lie in [0, 1]")

    @property
    def lowers(self) -> list[float]:
        return [lo for lo, _ in self.bands]


DEFAULT_BANDS = DecisionBands(((0.0, "reject"), (0.10, "careful review"), (0.70, "self review"), (0.90, "accept")))


def apply_bands(bands: DecisionBands, c: float) -> str:
    """Action of the band with the greatest lower bound <= c."""
    if not 0.0 <= c <= 1.0:
        raise ValueError("confidence must be in [0, 1]")
    i = bisect.bisect_right(bands.lowers, c) - 1
    return bands.bands[i][1]
