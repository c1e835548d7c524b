"""Platt rescaling with k-fold cross-fitting.

A two-parameter logistic model ``sigmoid(slope * f(p) + intercept)`` maps
a raw confidence ``p`` to a rescaled one. The feature ``f`` is ``ln p`` by
default; ``"logit"`` uses ``ln(p / (1 - p))`` instead. Inputs are clamped
to ``[epsilon, 1 - epsilon]`` first so both features stay finite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit, log_expit
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .metrics import check_scores
from .rng import LinearRng

DEFAULT_EPSILON = 1e-9
DEFAULT_FOLDS = 5
DEFAULT_COLLAPSE_THRESHOLD = 0.05
FEATURES = ("ln_prob", "logit")
_TINY = np.finfo(np.float64).tiny
_ONE_BELOW = np.nextafter(1.0, 0.0)


class PlattFitError(RuntimeError):
    """Newton iterations did not converge; carries the last iterate."""

    def __init__(self, message: str, slope: float, intercept: float, grad_norm: float, iterations: int):
        self.slope = slope
        self.intercept = intercept
        self.grad_norm = grad_norm
        self.iterations = iterations
        super().__init__(
            f"{message} (slope={slope:.6g}, intercept={intercept:.6g}, |grad|={grad_norm:.3g}, iter={iterations})"
        )


def platt_feature(p, epsilon: float = DEFAULT_EPSILON, feature: str = "ln_prob") -> np.ndarray:
    q = np.clip(np.asarray(p, dtype=np.float64), epsilon, 1.0 - epsilon)
    if feature == "ln_prob":
        return np.log(q)
    if feature == "logit":
        return np.log(q) - np.log1p(-q)
    raise ValueError(f"unknown Platt feature {feature!r}; expected one of {FEATURES}")


@dataclass(frozen=True)
class PlattModel:
    slope: float
    intercept: float
    feature: str = "ln_prob"
    epsilon: float = DEFAULT_EPSILON
    iterations: int = 0

    def __call__(self, p):
        return apply_platt(self, p)


def apply_platt(model: PlattModel, p):
    """Rescale one confidence or an array of them."""
    z = model.slope * platt_feature(p, model.epsilon, model.feature) + model.intercept
    # keep saturated outputs strictly inside (0, 1)
    out = np.clip(expit(z), _TINY, _ONE_BELOW)
    return float(out) if np.ndim(out) == 0 else out


def _penalized_loglik(w: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float) -> float:
    z = X @ w
    ll = np.mean(y * log_expit(z) + (1.0 - y) * log_expit(-z))
    return float(ll - 0.5 * l2 * (w @ w))


def fit_platt(
    confidence,
    correct,
    epsilon: float = DEFAULT_EPSILON,
    feature: str = "ln_prob",
    l2: float = 1e-6,
    tol: float = 1e-8,
    max_iter: int = 100,
) -> PlattModel:
    """Maximum-likelihood Platt parameters by damped Newton steps.

    The objective is the mean Bernoulli log-likelihood minus
    ``l2/2 * (slope**2 + intercept**2)``; the penalty keeps separable data
    finite. Steps are halved until the objective does not decrease.
    """
    conf, corr = check_scores(confidence, correct)
    if corr.all() or not corr.any():
        raise ValueError("Platt fit needs both correct and incorrect samples")
    y = corr.astype(np.float64)
    X = np.column_stack([platt_feature(conf, epsilon, feature), np.ones_like(conf)])
    n = conf.size
    w = np.zeros(2)
    # start at the base-rate intercept
    rate = y.mean()
    w[1] = np.log(rate / (1.0 - rate))
    obj = _penalized_loglik(w, X, y, l2)
    grad_norm = np.inf
    for it in range(1, max_iter + 1):
        mu = expit(X @ w)
        grad = X.T @ (y - mu) / n - l2 * w
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm < tol:
            return PlattModel(float(w[0]), float(w[1]), feature, epsilon, it - 1)
        s = mu * (1.0 - mu)
        hess = (X * s[:, None]).T @ X / n + l2 * np.eye(2)
        step = np.linalg.solve(hess, grad)
        t = 1.0
        while True:
            cand = w + t * step
            cand_obj = _penalized_loglik(cand, X, y, l2)
            if cand_obj >= obj or t < 1e-10:
                break
            t *= 0.5
        if cand_obj < obj:
            break
        w, obj = cand, cand_obj
    mu = expit(X @ w)
    grad_norm = float(np.linalg.norm(X.T @ (y - mu) / n - l2 * w))
    if grad_norm < tol:
        return PlattModel(float(w[0]), float(w[1]), feature, epsilon, max_iter)
    raise PlattFitError("Platt fit did not converge", float(w[0]), float(w[1]), grad_norm, max_iter)


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: tuple[int, ...]
    seed: int

    @classmethod
    def make(cls, n: int, k: int, seed: int = 0) -> "FoldPlan":
        """Seeded shuffle of ``range(n)``, then round-robin fold ids."""
        if k < 2:
            raise ValueError("need k >= 2 folds")
        if n < k:
            raise ValueError(f"cannot split {n} samples into {k} folds")
        order = list(range(n))
        LinearRng(seed).shuffle(order)
        assignment = [0] * n
        for pos, idx in enumerate(order):
            assignment[idx] = pos % k
        return cls(k, tuple(assignment), seed)

    def fold_sizes(self) -> list[int]:
        return np.bincount(self.assignment, minlength=self.k).tolist()


def cross_fold_rescale(
    confidence,
    correct,
    k: int = DEFAULT_FOLDS,
    seed: int = 0,
    epsilon: float = DEFAULT_EPSILON,
    feature: str = "ln_prob",
    return_models: bool = False,
):
    """Rescale every sample with a model fitted on the other folds.

    Output order matches input order. With ``return_models`` also returns
    the per-fold :class:`PlattModel` list and the :class:`FoldPlan`.
    """
    conf, corr = check_scores(confidence, correct)
    plan = FoldPlan.make(conf.size, k, seed)
    folds = np.asarray(plan.assignment)
    out = np.empty_like(conf)
    models = []
    for f in range(k):
        held = folds == f
        train_y = corr[~held]
        if train_y.all() or not train_y.any():
            raise ValueError(f"fold {f}: training split contains a single class")
        model = fit_platt(conf[~held], train_y, epsilon=epsilon, feature=feature)
        out[held] = apply_platt(model, conf[held])
        models.append(model)
    if return_models:
        return out, models, plan
    return out


def detect_collapse(
    rescaled, base_rate: float, skill: float, threshold: float = DEFAULT_COLLAPSE_THRESHOLD
) -> tuple[bool, Optional[str]]:
    """Flag rescaled scores whose skill is too low for ECE to mean anything.

    ``rescaled`` and ``base_rate`` are accepted for diagnostics; the decision
    uses ``skill < threshold`` only.
    """
    if skill < threshold:
        spread = float(np.ptp(np.asarray(rescaled, dtype=np.float64))) if np.size(rescaled) else 0.0
        shown = f"{skill:.2f}".replace("-0.00", "0.00")
        reason = (
            f"ECE omitted: skill score {shown} is below {threshold:.2f}. "
            f"A measure without signal rescales to roughly the base rate ({base_rate:.2f}; "
            f"rescaled spread {spread:.2f}) and so appears as one well calibrated bin "
            f"with ECE near zero, which carries no information."
        )
        return True, reason
    return False, None


class PlattScaler(ClassifierMixin, TransformerMixin, BaseEstimator):
    """Estimator wrapper around :func:`fit_platt`.

    ``X`` is a 1-D array (or a single-column 2-D array) of raw confidences
    and ``y`` the boolean correctness labels. ``transform`` and
    ``predict_proba[:, 1]`` return rescaled confidences.
    """

    def __init__(self, feature: str = "ln_prob", epsilon: float = DEFAULT_EPSILON, l2: float = 1e-6):
        self.feature = feature
        self.epsilon = epsilon
        self.l2 = l2

    @staticmethod
    def _column(X) -> np.ndarray:
        arr = np.asarray(X, dtype=np.float64)
        if arr.ndim == 2 and arr.shape[1] == 1:
            arr = arr[:, 0]
        if arr.ndim != 1:
            raise ValueError("PlattScaler expects a single confidence column")
        return arr

    def fit(self, X, y) -> "PlattScaler":
        conf, corr = check_scores(self._column(X), y)
        self.model_ = fit_platt(conf, corr, epsilon=self.epsilon, feature=self.feature, l2=self.l2)
        self.classes_ = np.array([False, True])
        self.n_features_in_ = 1
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        return np.asarray(apply_platt(self.model_, self._column(X)), dtype=np.float64)

    def predict_proba(self, X) -> np.ndarray:
        p = self.transform(X)
        return np.column_stack([1.0 - p, p])

    def predict(self, X) -> np.ndarray:
        return self.transform(X) >= 0.5
