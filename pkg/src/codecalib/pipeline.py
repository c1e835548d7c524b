"""End-to-end analysis: records -> confidences -> labels -> metrics -> files."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .confidence import ALL_MEASURES, ConfidenceScorer, Measure, MissingFieldError
from .correctness import MissingLabelError, Notion, cross_tab, label_records
from .metrics import QUANTILE_BINS, CalibrationReport, Scheme, bin_samples, report
from .records import GenerationRecord
from .report import PlotSpec, emit_reliability_plot, render_report_table
from .rescale import DEFAULT_COLLAPSE_THRESHOLD, DEFAULT_EPSILON, DEFAULT_FOLDS, cross_fold_rescale

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    inputs: tuple[str, ...] = ()
    measures: tuple[Measure, ...] = ALL_MEASURES
    notion: Notion = Notion.ALL_PASS
    bins: int = 10
    scheme: Scheme = Scheme.EQUAL_WIDTH
    folds: int = DEFAULT_FOLDS
    seed: int = 0
    collapse_threshold: float = DEFAULT_COLLAPSE_THRESHOLD
    out: str = "calibration-out"
    epsilon: float = DEFAULT_EPSILON
    format: str = "markdown"
    feature: str = "ln_prob"

    def check(self) -> None:
        if self.folds < 2:
            raise ConfigError("--folds must be >= 2")
        if self.bins < 1:
            raise ConfigError("--bins must be >= 1")
        if not 0.0 < self.epsilon < 0.5:
            raise ConfigError("--epsilon must lie in (0, 0.5)")
        if self.format not in ("markdown", "csv"):
            raise ConfigError("--format must be markdown or csv")
        if not self.measures:
            raise ConfigError("no measures requested")


@dataclass
class AnalysisResult:
    reports: dict[tuple[str, str, str], CalibrationReport] = field(default_factory=dict)
    skipped: dict[str, str] = field(default_factory=dict)
    files: list[Path] = field(default_factory=list)
    fallback_counts: dict[str, int] = field(default_factory=dict)


def _report_json(rep: CalibrationReport) -> dict:
    return {
        "brier": rep.brier,
        "brier_ref": rep.brier_ref,
        "skill": rep.skill,
        "ece": rep.ece,
        "auc": rep.auc,
        "base_rate": rep.base_rate,
        "n": rep.n,
        "rescaled": rep.rescaled,
        "ece_omitted_reason": rep.ece_omitted_reason,
    }


def analyze(records: Sequence[GenerationRecord], config: RunConfig, write: bool = True) -> AnalysisResult:
    """Raw and cross-fold rescaled metrics for every requested measure.

    Measures whose required fields are missing are skipped with a warning.

    Raises
    ------
    MissingLabelError
        If some record cannot be labelled under ``config.notion``.
    """
    config.check()
    if not records:
        raise ValueError("empty corpus")
    correct = label_records(records, config.notion)
    result = AnalysisResult()
    out = Path(config.out)
    if write:
        out.mkdir(parents=True, exist_ok=True)
    notion = config.notion.value
    summary = {}

    for measure in config.measures:
        name = Measure(measure).value
        try:
            scorer = ConfidenceScorer(name).fit(records)
            scores = scorer.score_records(records)
        except MissingFieldError as exc:
            logger.warning("skipping measure %s: %s", name, exc)
            result.skipped[name] = str(exc)
            continue
        conf = np.array([s.value for s in scores])
        result.fallback_counts[name] = sum(s.fallback_used for s in scores)

        raw = report(conf, correct, config.scheme, config.bins)
        result.reports[(name, notion, "raw")] = raw
        raw_overlay = bin_samples(conf, correct, Scheme.QUANTILE, QUANTILE_BINS)
        plots = [("raw", raw, raw_overlay)]
        try:
            scaled_conf = cross_fold_rescale(
                conf, correct, k=config.folds, seed=config.seed, epsilon=config.epsilon, feature=config.feature
            )
        except ValueError as exc:
            logger.warning("no rescaled metrics for %s: %s", name, exc)
            result.skipped[f"{name}/scaled"] = str(exc)
        else:
            scaled = report(
                scaled_conf,
                correct,
                config.scheme,
                config.bins,
                rescaled=True,
                collapse_threshold=config.collapse_threshold,
            )
            result.reports[(name, notion, "scaled")] = scaled
            plots.append(("scaled", scaled, bin_samples(scaled_conf, correct, Scheme.QUANTILE, QUANTILE_BINS)))

        if write:
            for tag, rep, overlay in plots:
                path = out / f"reliability_{name}_{notion}_{tag}.svg"
                emit_reliability_plot(PlotSpec.from_report(rep, f"{name} / {notion} ({tag})", overlay), path)
                result.files.append(path)
        summary[name] = {tag: _report_json(rep) for tag, rep, _ in plots}
        summary[name]["fallback_used"] = result.fallback_counts[name]

    if write:
        ext = "md" if config.format == "markdown" else "csv"
        table_path = out / f"calibration_table.{ext}"
        table_path.write_text(render_report_table(result.reports, config.format), encoding="utf-8", newline="\n")
        result.files.append(table_path)

        json_path = out / "calibration_report.json"
        payload = {
            "notion": notion,
            "n": len(records),
            "config": {
                "bins": config.bins,
                "scheme": config.scheme.value,
                "folds": config.folds,
                "seed": config.seed,
                "collapse_threshold": config.collapse_threshold,
                "epsilon": config.epsilon,
                "feature": config.feature,
            },
            "measures": summary,
            "skipped": result.skipped,
        }
        json_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")
        result.files.append(json_path)

        try:
            tab = cross_tab(records)
        except MissingLabelError:
            pass
        else:
            tab_path = out / f"correctness_crosstab.{ext}"
            tab_path.write_text(
                tab.to_markdown() if ext == "md" else tab.to_csv(), encoding="utf-8", newline="\n"
            )
            result.files.append(tab_path)
    return result
