"""Calibration metrics over (confidence, correct) samples.

Every function takes two parallel 1-D arrays: ``confidence`` in [0, 1] and
boolean ``correct``. :func:`check_scores` is the shared validator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

DEFAULT_BINS = 10
QUANTILE_BINS = 5


class Scheme(str, Enum):
    EQUAL_WIDTH = "equal_width"
    QUANTILE = "quantile"


@dataclass(frozen=True)
class ScoredSample:
    confidence: float
    correct: bool

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence!r} outside [0, 1]")


def samples_to_arrays(samples: Iterable[ScoredSample]) -> tuple[np.ndarray, np.ndarray]:
    samples = list(samples)
    return (
        np.array([s.confidence for s in samples], dtype=np.float64),
        np.array([s.correct for s in samples], dtype=bool),
    )


def check_scores(confidence, correct, allow_empty: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Validate and coerce a (confidence, correct) pair of arrays."""
    conf = np.asarray(confidence, dtype=np.float64)
    corr = np.asarray(correct)
    if conf.ndim != 1 or corr.ndim != 1:
        raise ValueError("confidence and correct must be 1-D")
    if conf.shape != corr.shape:
        raise ValueError(f"length mismatch: {conf.size} confidences, {corr.size} labels")
    if not allow_empty and conf.size == 0:
        raise ValueError("need at least one sample")
    if np.isnan(conf).any() or (conf < 0).any() or (conf > 1).any():
        raise ValueError("confidences must lie in [0, 1]")
    if corr.dtype != bool:
        if not np.isin(corr, (0, 1)).all():
            raise ValueError("correct must be boolean or 0/1")
        corr = corr.astype(bool)
    return conf, corr


@dataclass(frozen=True)
class Bin:
    lo: float
    hi: float
    count: int
    conf: float
    corr: float


@dataclass(frozen=True)
class ReliabilityBins:
    scheme: Scheme
    m: int
    bins: tuple[Bin, ...]

    @property
    def n(self) -> int:
        return sum(b.count for b in self.bins)


def equal_width_index(conf: np.ndarray, m: int) -> np.ndarray:
    """Bin ``i`` holds [i/m, (i+1)/m); the last bin also takes 1.0."""
    idx = np.minimum(np.floor(conf * m).astype(np.int64), m - 1)
    # floor(c*m) can be off by one near edges; settle against the exact i/m boundaries
    lower = idx / m
    idx = np.where((conf < lower) & (idx > 0), idx - 1, idx)
    upper = (idx + 1) / m
    idx = np.where((conf >= upper) & (idx < m - 1), idx + 1, idx)
    return idx


def quantile_cuts(sorted_conf: np.ndarray, m: int) -> list[int]:
    """Split positions (into the sorted sample) for ``m`` equal-count bins.

    The ideal cut ``floor(i*n/m)`` is moved to the nearer edge of the tie
    group it would split (the lower edge on a draw), so equal confidences
    always share a bin.
    """
    n = sorted_conf.size
    cuts = [0]
    for i in range(1, m):
        c = (i * n) // m
        if 0 < c < n and sorted_conf[c - 1] == sorted_conf[c]:
            v = sorted_conf[c]
            start = int(np.searchsorted(sorted_conf, v, side="left"))
            end = int(np.searchsorted(sorted_conf, v, side="right"))
            c = start if c - start <= end - c else end
        cuts.append(max(c, cuts[-1]))
    cuts.append(n)
    return cuts


def _summarize(conf: np.ndarray, corr: np.ndarray, lo: float, hi: float) -> Bin:
    k = conf.size
    if k == 0:
        return Bin(lo, hi, 0, 0.0, 0.0)
    return Bin(lo, hi, k, float(conf.sum() / k), float(corr.sum() / k))


def bin_samples(confidence, correct, scheme: Scheme | str = Scheme.EQUAL_WIDTH, m: int = DEFAULT_BINS) -> ReliabilityBins:
    conf, corr = check_scores(confidence, correct)
    scheme = Scheme(scheme)
    if m < 1:
        raise ValueError("bin count m must be >= 1")
    bins = []
    if scheme is Scheme.EQUAL_WIDTH:
        idx = equal_width_index(conf, m)
        for i in range(m):
            mask = idx == i
            bins.append(_summarize(conf[mask], corr[mask], i / m, (i + 1) / m))
    else:
        order = np.argsort(conf, kind="stable")
        sc, sy = conf[order], corr[order]
        cuts = quantile_cuts(sc, m)
        prev_hi = 0.0
        for a, b in zip(cuts, cuts[1:]):
            if b > a:
                lo, hi = float(sc[a]), float(sc[b - 1])
                prev_hi = hi
            else:
                lo = hi = prev_hi
            bins.append(_summarize(sc[a:b], sy[a:b], lo, hi))
    return ReliabilityBins(scheme, m, tuple(bins))


def ece(bins: ReliabilityBins, n: Optional[int] = None) -> float:
    """Count-weighted mean of |corr - conf| over bins; empty bins weigh nothing."""
    if n is None:
        n = bins.n
    if n != bins.n:
        raise ValueError(f"bin counts sum to {bins.n}, expected {n}")
    return float(sum(b.count / n * abs(b.corr - b.conf) for b in bins.bins if b.count))


def brier(confidence, correct) -> float:
    conf, corr = check_scores(confidence, correct)
    return float(np.mean((conf - corr) ** 2))


def brier_ref(base_rate: float) -> float:
    """Brier score of always predicting the base rate."""
    if not 0.0 <= base_rate <= 1.0:
        raise ValueError("base_rate must be in [0, 1]")
    return base_rate * (1.0 - base_rate)


def skill_score(brier_actual: float, brier_ref_val: float) -> float:
    if brier_ref_val <= 0:
        raise ValueError("skill score undefined for a zero reference Brier (single-class corpus)")
    return (brier_ref_val - brier_actual) / brier_ref_val


def auc_roc(confidence, correct) -> float:
    """Area under the ROC curve via the rank-sum statistic, ties counted half."""
    conf, corr = check_scores(confidence, correct)
    n_pos = int(corr.sum())
    n_neg = corr.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC undefined: need both correct and incorrect samples")
    ranks = rankdata(conf, method="average")
    u = ranks[corr].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass(frozen=True)
class CalibrationReport:
    brier: float
    brier_ref: float
    skill: Optional[float]
    ece: Optional[float]
    auc: Optional[float]
    base_rate: float
    n: int
    ece_omitted_reason: Optional[str] = None
    rescaled: bool = False
    bins: Optional[ReliabilityBins] = field(default=None, compare=False, repr=False)


def report(
    confidence,
    correct,
    scheme: Scheme | str = Scheme.EQUAL_WIDTH,
    m: int = DEFAULT_BINS,
    rescaled: bool = False,
    collapse_threshold: float = 0.05,
) -> CalibrationReport:
    """All metrics for one (measure, notion) pair.

    When ``rescaled`` is set, the collapse rule decides whether the ECE is
    reported: below ``collapse_threshold`` skill it is withheld.
    """
    from .rescale import detect_collapse

    conf, corr = check_scores(confidence, correct)
    n = conf.size
    base_rate = float(corr.mean())
    b = brier(conf, corr)
    ref = brier_ref(base_rate)
    skill = skill_score(b, ref) if ref > 0 else None
    auc = auc_roc(conf, corr) if 0 < corr.sum() < n else None
    bins = bin_samples(conf, corr, scheme, m)
    ece_val: Optional[float] = ece(bins, n)
    reason = None
    if rescaled:
        collapsed, reason = detect_collapse(conf, base_rate, skill if skill is not None else 0.0, collapse_threshold)
        if collapsed:
            ece_val = None
    return CalibrationReport(b, ref, skill, ece_val, auc, base_rate, n, reason, rescaled, bins)


def report_from_samples(samples: Sequence[ScoredSample], **kwargs) -> CalibrationReport:
    return report(*samples_to_arrays(samples), **kwargs)
