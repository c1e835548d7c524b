"""Synthetic record corpora with known calibration behaviour.

Each record gets a latent confidence ``p`` (uniform on [0.01, 0.99]). Its
token log-probabilities are all ``ln p``, so the average token probability
equals ``p``. The all-pass label then follows the profile:

``calibrated``
    correct with probability ``p``
``overconfident``
    correct with probability ``p**2``
``uninformative``
    correct with probability 0.4, independent of ``p``

The reflective fields (verbalized answers, True/False candidates) are noisy
functions of ``p``; about one record in ten has no parseable verbalized
answer, exercising the fallback path.
"""

from __future__ import annotations

import math
import os
from enum import Enum

from .records import GenerationRecord, TestReport, Task, save_records
from .rng import LinearRng

UNINFORMATIVE_RATE = 0.4
_IDENTS = ("x", "y", "total", "count", "result", "items", "value", "node", "buf", "idx")
_UNPARSEABLE = ("I cannot say.", "It depends on the tests.", "n/a")


class Profile(str, Enum):
    CALIBRATED = "calibrated"
    OVERCONFIDENT = "overconfident"
    UNINFORMATIVE = "uninformative"


def _code_line(rng: LinearRng) -> str:
    lhs = _IDENTS[rng.below(len(_IDENTS))]
    terms = [_IDENTS[rng.below(len(_IDENTS))] for _ in range(1 + rng.below(6))]
    return f"{lhs} = " + " + ".join(terms)


def _verbalized(rng: LinearRng, p: float) -> list[str]:
    if rng.random() < 0.1:
        return list(_UNPARSEABLE)
    v = min(1.0, max(0.0, 0.5 * p + 0.5 * rng.random()))
    style = rng.below(3)
    if style == 0:
        answer = f"{round(100 * v)}%"
    elif style == 1:
        answer = f"{100 * v:.2f}%"
    else:
        answer = f"The probability is about {round(100 * v)}."
    # occasionally the first retry fails and a later one succeeds
    if rng.random() < 0.2:
        return [_UNPARSEABLE[rng.below(len(_UNPARSEABLE))], answer]
    return [answer]


def _tf_candidates(rng: LinearRng, p: float) -> list[list[tuple[str, float]]]:
    p_true = 0.9 * min(1.0, max(0.02, p + 0.2 * (rng.random() - 0.5)))
    p_false = 0.9 - p_true + 0.01
    first = [(" True", math.log(p_true)), (" False", math.log(p_false)), (" ", math.log(0.04))]
    first.sort(key=lambda c: -c[1])
    second = [("\n", math.log(0.6)), (".", math.log(0.3))]
    return [first, second]


def synth_record(i: int, rng: LinearRng, profile: Profile) -> GenerationRecord:
    p = rng.uniform(0.01, 0.99)
    u = rng.random()
    if profile is Profile.CALIBRATED:
        correct = u < p
    elif profile is Profile.OVERCONFIDENT:
        correct = u < p * p
    else:
        correct = u < UNINFORMATIVE_RATE

    generated = _code_line(rng)
    if correct:
        reference = generated if rng.random() < 0.7 else generated + " + 0"
        report = TestReport(passed=1 + rng.below(5), failed=0, syntax_ok=True)
    else:
        reference = generated if rng.random() < 0.05 else _code_line(rng) + " - 1"
        if rng.random() < 0.9:
            report = TestReport(passed=rng.below(5), failed=1 + rng.below(3), syntax_ok=True)
        else:
            report = TestReport(passed=0, failed=rng.below(4), syntax_ok=False)

    n_tokens = 1 + rng.below(20)
    return GenerationRecord.build(
        f"synth-{i:06d}",
        Task.LINE_COMPLETION,
        generated,
        token_logprobs=[math.log(p)] * n_tokens,
        reference_text=reference,
        test_report=report,
        verbalized_responses=_verbalized(rng, p),
        tf_response=_tf_candidates(rng, p),
    )


def synth_corpus(n: int, seed: int = 0, profile: Profile | str = Profile.CALIBRATED) -> list[GenerationRecord]:
    if n < 1:
        raise ValueError("n must be positive")
    profile = Profile(profile)
    rng = LinearRng(seed)
    return [synth_record(i, rng, profile) for i in range(n)]


def write_synth_corpus(path: str | os.PathLike, n: int, seed: int = 0, profile: Profile | str = "calibrated") -> int:
    records = synth_corpus(n, seed, profile)
    save_records(records, path)
    return len(records)
