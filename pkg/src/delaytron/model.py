"""Linear multiclass model with bandit exploration.

Labels are 1-based throughout the public API (``1..K``); weight rows are
indexed ``label - 1``.
"""
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import _kernel
from .errors import ConfigError, ShapeError

GAMMA_LOW, GAMMA_HIGH = 0.0, 0.5


@dataclass(frozen=True)
class ModelShape:
    num_classes: int
    num_features: int

    def __post_init__(self):
        if self.num_classes < 2:
            raise ConfigError(f"need at least 2 classes, got {self.num_classes}")
        if self.num_features < 1:
            raise ConfigError(f"need at least 1 feature, got {self.num_features}")

    @property
    def dims(self):
        return (self.num_classes, self.num_features)


class Example(NamedTuple):
    features: np.ndarray
    label: Optional[int] = None


@dataclass(frozen=True)
class PredictionDistribution:
    """Exploration distribution over labels for one round.

    ``probs[greedy_label - 1] == 1 - gamma + gamma / K`` and every other
    entry equals ``gamma / K``.
    """

    greedy_label: int
    probs: np.ndarray
    gamma: float

    @property
    def num_classes(self):
        return len(self.probs)

    def prob(self, label: int) -> float:
        return float(self.probs[label - 1])


class BanditOutcome(NamedTuple):
    sampled_label: int
    correct: bool


@dataclass(frozen=True)
class UpdateMatrix:
    """Sparse bandit update: row ``r`` equals ``coef[r] * x``.

    At most two entries of ``coef`` are nonzero (the sampled and the greedy
    label), so the dense K x d matrix is never stored unless requested.
    """

    shape: ModelShape
    features: np.ndarray
    coef: np.ndarray

    @property
    def rows(self):
        return np.flatnonzero(self.coef)

    def dense(self) -> np.ndarray:
        return np.outer(self.coef, self.features)

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.coef) * np.linalg.norm(self.features))


def zero_weights(shape: ModelShape) -> np.ndarray:
    return np.zeros(shape.dims, dtype=np.float64)


def check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not (GAMMA_LOW < gamma < GAMMA_HIGH):
        raise ConfigError(f"gamma must lie in the open interval (0, 0.5), got {gamma}")
    return gamma


def _features(x) -> np.ndarray:
    if isinstance(x, Example):
        x = x.features
    return np.asarray(x, dtype=np.float64)


def scores(w: np.ndarray, x) -> np.ndarray:
    """Raw class scores ``W @ x`` (no exploration).

    Summed left to right over the nonzero features, the same order the
    compiled loop uses: exact ties are common on sparse binary data and a
    BLAS product can break them differently.
    """
    x = _features(x)
    if w.ndim != 2 or x.ndim != 1 or w.shape[1] != x.shape[0]:
        raise ShapeError(f"weights {w.shape} incompatible with features {x.shape}")
    nz = np.flatnonzero(x)
    out = np.empty(w.shape[0])
    _kernel._row_scores(np.ascontiguousarray(w, dtype=np.float64), nz, x[nz], out)
    return out


def greedy_label(s: Sequence[float]) -> int:
    """Arg-max label; ties go to the lowest class index."""
    s = np.asarray(s, dtype=np.float64)
    if s.size == 0 or not np.all(np.isfinite(s)):
        raise ValueError("scores must be a nonempty finite vector")
    return int(np.argmax(s)) + 1


def distribution_from_scores(s, gamma: float) -> PredictionDistribution:
    gamma = check_gamma(gamma)
    k = len(s)
    y_hat = greedy_label(s)
    probs = np.full(k, gamma / k)
    probs[y_hat - 1] = (1.0 - gamma) + gamma / k
    return PredictionDistribution(y_hat, probs, gamma)


def predict_distribution(w: np.ndarray, x, gamma: float) -> PredictionDistribution:
    return distribution_from_scores(scores(w, x), gamma)


def sample_label(p: PredictionDistribution, rng: np.random.Generator) -> int:
    """Draw a label from ``p`` by inverting the CDF with one uniform draw."""
    return label_from_uniform(p.probs, rng.random())


def label_from_uniform(probs: np.ndarray, u: float) -> int:
    cdf = np.cumsum(probs)
    idx = int(np.searchsorted(cdf, u, side="right"))
    return min(idx, len(probs) - 1) + 1


def bandit_outcome(sampled_label: int, true_label: int) -> BanditOutcome:
    return BanditOutcome(sampled_label, sampled_label == true_label)


def update_matrix(x, y_hat: int, y_tilde: int, correct: bool,
                  p: PredictionDistribution) -> UpdateMatrix:
    """Importance-weighted update built from a single bandit feedback.

    Row ``r`` is ``x * (I[correct] I[y_tilde == r] / P(r) - I[y_hat == r])``
    where ``P`` is the distribution ``y_tilde`` was drawn from.
    """
    x = _features(x)
    k = p.num_classes
    coef = np.zeros(k)
    if correct:
        coef[y_tilde - 1] += 1.0 / p.probs[y_tilde - 1]
    coef[y_hat - 1] -= 1.0
    return UpdateMatrix(ModelShape(k, x.shape[0]), x, coef)


def expected_update(x, y: int, y_hat: int, p: PredictionDistribution) -> UpdateMatrix:
    """Expectation of :func:`update_matrix` over the sampled label.

    Computed by exact enumeration of all K outcomes weighted by ``p``.
    """
    x = _features(x)
    k = p.num_classes
    coef = np.zeros(k)
    for y_tilde in range(1, k + 1):
        u = update_matrix(x, y_hat, y_tilde, y_tilde == y, p)
        coef += p.probs[y_tilde - 1] * u.coef
    return UpdateMatrix(ModelShape(k, x.shape[0]), x, coef)


def hinge_loss(w: np.ndarray, x, y: int) -> float:
    """Multiclass hinge loss ``max(0, 1 - s_y + max_{j != y} s_j)``."""
    s = scores(w, x)
    return hinge_from_scores(s, y)


def hinge_from_scores(s: np.ndarray, y: int) -> float:
    rival = np.max(np.delete(s, y - 1))
    return max(0.0, 1.0 - s[y - 1] + rival)


def apply_updates(w: np.ndarray, updates: Sequence[UpdateMatrix], eta: float) -> np.ndarray:
    """Return ``W + eta * sum(updates)``; the batch is summed before scaling."""
    if not eta > 0:
        raise ConfigError(f"step size must be positive, got {eta}")
    total = np.zeros_like(w)
    for u in updates:
        if u.shape.dims != w.shape:
            raise ShapeError(f"update {u.shape.dims} does not match weights {w.shape}")
        for r in u.rows:
            total[r] += u.coef[r] * u.features
    return w + eta * total
