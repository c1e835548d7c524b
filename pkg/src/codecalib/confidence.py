"""Per-record confidence measures.

Intrinsic measures read the generator's own token log-probabilities;
reflective measures read the answers the model gave when asked about its
output (a verbalized percentage, or the probability of a True token).
A length baseline is provided for comparison.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .records import GenerationRecord, TfResponse

VERBALIZED_DEFAULT = 0.5
TF_DEFAULT = 0.5


class Measure(str, Enum):
    AVG_PROB = "avg_prob"
    TOTAL_PROB = "total_prob"
    VERBALIZE = "verbalize"
    ASK_TF = "ask_tf"
    ASK_TF_NORM = "ask_tf_norm"
    LENGTH_BASELINE = "length_baseline"


ALL_MEASURES = tuple(Measure)


class MissingFieldError(ValueError):
    """The record lacks the field a confidence measure needs."""

    def __init__(self, measure: Measure, field: str):
        self.measure = measure
        self.field = field
        super().__init__(f"{field} missing (required by measure {measure.value})")


@dataclass(frozen=True)
class ConfidenceScore:
    measure: Measure
    value: float
    fallback_used: bool = False
    # how the value was obtained, e.g. "percent", "bare_percent", "bare_fraction", "default"
    provenance: str = ""

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"confidence {self.value!r} outside [0, 1]")
        if self.fallback_used and self.measure not in (Measure.VERBALIZE, Measure.ASK_TF, Measure.ASK_TF_NORM):
            raise ValueError(f"measure {self.measure.value} has no fallback rule")


@dataclass(frozen=True)
class CorpusLengthStats:
    min_chars: int
    max_chars: int

    def __post_init__(self):
        if not 0 <= self.min_chars <= self.max_chars:
            raise ValueError("need 0 <= min_chars <= max_chars")

    @classmethod
    def from_records(cls, records: Sequence[GenerationRecord]) -> "CorpusLengthStats":
        if not records:
            raise ValueError("cannot derive length statistics from an empty corpus")
        lengths = [r.generated_length_chars for r in records]
        return cls(min(lengths), max(lengths))


def _check_logprobs(logprobs: Sequence[float]) -> np.ndarray:
    arr = np.asarray(logprobs, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("need a nonempty sequence of token log-probabilities")
    return arr


def avg_token_probability(logprobs: Sequence[float]) -> float:
    """Arithmetic mean of the per-token probabilities."""
    arr = _check_logprobs(logprobs)
    return min(1.0, math.fsum(math.exp(v) for v in arr.tolist()) / arr.size)


def total_sequence_probability(logprobs: Sequence[float]) -> float:
    """Probability of the whole sequence, summed in log space then exponentiated."""
    arr = _check_logprobs(logprobs)
    return float(min(1.0, math.exp(math.fsum(arr.tolist()))))


# a number directly followed by a percent sign, e.g. "80%", "80.00 %"
_PERCENT = re.compile(r"(?<![\d.])(\d+(?:\.\d+)?)\s*%")
# any bare decimal number; a trailing sentence period is not part of it
_NUMBER = re.compile(r"(?<![\d.])(\d+(?:\.\d+)?|\.\d+)(?![\d])")
_CONFIDENCE_WORDS = re.compile(
    r"\b(probab\w*|confiden\w*|likel\w*|chance\w*|certain\w*|sure|percent\w*|estimate\w*|correct\w*)\b",
    re.IGNORECASE,
)
_WORD = re.compile(r"[A-Za-z]{2,}")


def _parse_one(text: str) -> Optional[tuple[float, str]]:
    text = text.strip()
    m = _PERCENT.search(text)
    if m:
        value = float(m.group(1))
        if value > 100:
            return None
        return value / 100.0, "percent"
    m = _NUMBER.search(text)
    if m is None:
        return None
    # bare numbers only count when the text is about confidence, or is just the number
    if _WORD.search(text) and not _CONFIDENCE_WORDS.search(text):
        return None
    value = float(m.group(1))
    if value > 100:
        return None
    if value > 1:
        return value / 100.0, "bare_percent"
    return value, "bare_fraction"


def parse_verbalized_detail(responses: Sequence[str]) -> tuple[float, bool, str]:
    """Like :func:`parse_verbalized` but also reports which rule matched."""
    for text in responses:
        parsed = _parse_one(text)
        if parsed is not None:
            return parsed[0], False, parsed[1]
    return VERBALIZED_DEFAULT, True, "default"


def parse_verbalized(responses: Sequence[str]) -> tuple[float, bool]:
    """Extract a verbalized confidence from retry responses, in order.

    A percent-suffixed number wins over a bare one. Bare numbers above 1 are
    read as percentages, at most 1 as probabilities. Numbers above 100 are
    rejected. If no response yields a value, returns ``(0.5, True)``.
    """
    value, fallback, _ = parse_verbalized_detail(responses)
    return value, fallback


def _best_label(resp: TfResponse, label: str) -> Optional[float]:
    best = None
    for pos in resp.positions:
        for token, logprob in pos:
            if label in token.strip().lower():
                p = math.exp(logprob)
                if best is None or p > best:
                    best = p
    return best


def ask_tf_probability(resp: TfResponse, normalized: bool = False) -> tuple[float, bool]:
    """Confidence from the candidate tokens of a True/False answer.

    The most probable candidate containing "true" (and "false") across the
    listed positions is taken. The raw variant returns p(True); the
    normalized one p(True) / (p(True) + p(False)).
    """
    if not resp.positions or not any(resp.positions):
        raise ValueError("tf_response has no candidate tokens")
    p_true = _best_label(resp, "true")
    if p_true is None:
        return TF_DEFAULT, True
    p_true = min(p_true, 1.0)
    if not normalized:
        return p_true, False
    p_false = _best_label(resp, "false")
    if p_false is None:
        return p_true, True
    return p_true / (p_true + p_false), False


def length_baseline(len_chars: int, stats: CorpusLengthStats) -> float:
    """Shortest generation in the corpus scores 1, the longest 0."""
    span = stats.max_chars - stats.min_chars
    if span == 0:
        return 1.0
    value = 1.0 - (len_chars - stats.min_chars) / span
    return min(1.0, max(0.0, value))


def score_record(
    r: GenerationRecord, measure: Measure | str, stats: Optional[CorpusLengthStats] = None
) -> ConfidenceScore:
    measure = Measure(measure)
    if measure in (Measure.AVG_PROB, Measure.TOTAL_PROB):
        if not r.token_logprobs:
            raise MissingFieldError(measure, "token_logprobs")
        fn = avg_token_probability if measure is Measure.AVG_PROB else total_sequence_probability
        return ConfidenceScore(measure, fn(r.token_logprobs), provenance="logprobs")
    if measure is Measure.VERBALIZE:
        if r.verbalized_responses is None:
            raise MissingFieldError(measure, "verbalized_responses")
        value, fallback, how = parse_verbalized_detail(r.verbalized_responses)
        return ConfidenceScore(measure, value, fallback, how)
    if measure in (Measure.ASK_TF, Measure.ASK_TF_NORM):
        if r.tf_response is None or not any(r.tf_response.positions):
            raise MissingFieldError(measure, "tf_response")
        value, fallback = ask_tf_probability(r.tf_response, normalized=measure is Measure.ASK_TF_NORM)
        return ConfidenceScore(measure, value, fallback, "default" if fallback else "tf_tokens")
    if stats is None:
        raise MissingFieldError(measure, "stats")
    return ConfidenceScore(measure, length_baseline(r.generated_length_chars, stats), provenance="length")


class ConfidenceScorer(TransformerMixin, BaseEstimator):
    """Map a sequence of records to one confidence measure.

    ``fit`` only matters for the length baseline, whose scale is set by the
    shortest and longest generation in the fitted corpus.

    Parameters
    ----------
    measure : str
        One of the :class:`Measure` values.
    """

    def __init__(self, measure: str = "avg_prob"):
        self.measure = measure

    def fit(self, X: Sequence[GenerationRecord], y=None) -> "ConfidenceScorer":
        self.measure_ = Measure(self.measure)
        self.length_stats_ = CorpusLengthStats.from_records(X) if self.measure_ is Measure.LENGTH_BASELINE else None
        return self

    def score_records(self, X: Sequence[GenerationRecord]) -> list[ConfidenceScore]:
        if not hasattr(self, "measure_"):
            from sklearn.exceptions import NotFittedError

            raise NotFittedError("ConfidenceScorer is not fitted yet; call fit first")
        return [score_record(r, self.measure_, self.length_stats_) for r in X]

    def transform(self, X: Sequence[GenerationRecord]) -> np.ndarray:
        return np.array([s.value for s in self.score_records(X)], dtype=np.float64)
