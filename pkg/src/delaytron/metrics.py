"""Per-round run instrumentation, hindsight comparator and empirical regret."""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import _kernel
from .datasets import Dataset
from .delays import DelaySchedule
from .errors import ConfigError, UsageError
from .rng import rng_stream

ROUND_COLUMNS = ("round", "mistakes", "error_rate", "feedbacks_received",
                 "missing_so_far", "epoch", "eta", "cum_hinge_loss")


@dataclass(frozen=True, eq=False)
class RunMetrics:
    """Per-round traces of a single run plus schedule-level scalars.

    ``mistakes``, ``feedbacks_received``, ``missing_sum`` and
    ``cum_hinge_loss`` are cumulative; ``missing_so_far`` is ``m_t``, the
    number of rounds up to ``t`` whose feedback has not arrived yet.
    """

    mistakes: np.ndarray
    feedbacks_received: np.ndarray
    missing_so_far: np.ndarray
    missing_sum: np.ndarray
    epoch: np.ndarray
    eta: np.ndarray
    hinge_loss: np.ndarray
    num_missing: int
    sum_delays: int
    sum_delays_delivered: int

    @property
    def rounds(self) -> np.ndarray:
        return np.arange(1, len(self.mistakes) + 1)

    @property
    def horizon(self) -> int:
        return len(self.mistakes)

    @property
    def error_rate(self) -> np.ndarray:
        return self.mistakes / self.rounds

    @property
    def cum_hinge_loss(self) -> np.ndarray:
        return np.cumsum(self.hinge_loss)

    @property
    def final_error(self) -> float:
        return float(self.error_rate[-1])

    @property
    def total_mistakes(self) -> int:
        return int(self.mistakes[-1])

    def columns(self) -> Dict[str, np.ndarray]:
        """Per-round table in the fixed CSV column order."""
        cols = (self.rounds, self.mistakes, self.error_rate, self.feedbacks_received,
                self.missing_so_far, self.epoch, self.eta, self.cum_hinge_loss)
        return dict(zip(ROUND_COLUMNS, cols))


def schedule_scalars(schedule: DelaySchedule):
    T = schedule.horizon
    delivered = schedule.delivery_rounds() <= T
    return (int(T - delivered.sum()), int(schedule.delays.sum()),
            int(schedule.delays[delivered].sum()))


class MetricsTracker:
    """Builds :class:`RunMetrics` one :class:`RoundRecord` at a time."""

    def __init__(self):
        self._t = 0
        self._mistakes = 0
        self._received = 0
        self._missing_sum = 0
        self._cols = {k: [] for k in ("mistakes", "feedbacks_received", "missing_so_far",
                                      "missing_sum", "epoch", "eta", "hinge_loss")}

    def track(self, record, true_label: int, model_loss: float) -> None:
        if record.round != self._t + 1:
            raise UsageError(f"expected round {self._t + 1}, got {record.round}")
        if record.mistake != (record.y_tilde != true_label):
            raise UsageError(f"round {record.round}: mistake flag disagrees with label")
        self._t = record.round
        self._mistakes += int(record.mistake)
        self._received += len(record.applied)
        m_t = self._t - self._received
        self._missing_sum += m_t
        for key, value in (("mistakes", self._mistakes), ("feedbacks_received", self._received),
                           ("missing_so_far", m_t), ("missing_sum", self._missing_sum),
                           ("epoch", record.epoch), ("eta", record.eta),
                           ("hinge_loss", model_loss)):
            self._cols[key].append(value)

    def result(self, schedule: DelaySchedule) -> RunMetrics:
        ints = ("mistakes", "feedbacks_received", "missing_so_far", "missing_sum", "epoch")
        arrays = {k: np.asarray(v, dtype=np.int64 if k in ints else np.float64)
                  for k, v in self._cols.items()}
        return RunMetrics(**arrays, **dict(zip(
            ("num_missing", "sum_delays", "sum_delays_delivered"), schedule_scalars(schedule))))


@dataclass(frozen=True, eq=False)
class ComparatorResult:
    weights: np.ndarray
    losses: np.ndarray
    trace: Dict[str, object] = field(default_factory=dict)

    @property
    def total_loss(self) -> float:
        return float(self.losses.sum())

    @classmethod
    def from_weights(cls, w: np.ndarray, dataset: Dataset, **trace) -> "ComparatorResult":
        return cls(w, dataset_hinge_losses(w, dataset), trace)


def dataset_hinge_losses(w: np.ndarray, dataset: Dataset) -> np.ndarray:
    s = dataset.features @ w.T
    rows = np.arange(len(dataset))
    true = s[rows, dataset.labels - 1]
    s[rows, dataset.labels - 1] = -np.inf
    return np.maximum(0.0, 1.0 - true + s.max(axis=1))


def fit_comparator(dataset: Dataset, passes: int = 20, seed: int = 0,
                   grid: Sequence[float] = (0.1, 1.0, 10.0)) -> ComparatorResult:
    """Approximate ``argmin_W sum_t hinge(W, x_t, y_t)``.

    Averaged per-example subgradient descent with step ``c / sqrt(k)``; every
    ``c`` in ``grid`` is tried on the same visiting order and the averaged
    iterate with the lowest total loss wins.
    """
    if passes < 1:
        raise ConfigError(f"passes must be >= 1, got {passes}")
    rng = rng_stream(seed, "comparator")
    n = len(dataset)
    order = np.concatenate([rng.permutation(n) for _ in range(passes)]).astype(np.int64)
    indptr, indices, values = dataset.csr
    labels0 = dataset.labels - 1

    best: Optional[ComparatorResult] = None
    objectives = {}
    for c in grid:
        _, avg = _kernel.averaged_subgradient(indptr, indices, values, labels0,
                                              dataset.num_classes, dataset.num_features,
                                              order, float(c))
        cand = ComparatorResult.from_weights(avg, dataset)
        objectives[float(c)] = cand.total_loss
        if best is None or cand.total_loss < best.total_loss:
            best = cand
            best_c = float(c)
    best.trace.update(passes=passes, step_scale=best_c, objectives=objectives,
                      final_objective=best.total_loss)
    return best


def empirical_regret(metrics: RunMetrics, comparator: ComparatorResult) -> np.ndarray:
    """Cumulative learner hinge loss minus cumulative comparator loss, per round."""
    if len(comparator.losses) != metrics.horizon:
        raise UsageError(f"comparator covers {len(comparator.losses)} examples, "
                         f"run has {metrics.horizon} rounds")
    return metrics.cum_hinge_loss - np.cumsum(comparator.losses)


def seed_summary(values: Sequence[float]):
    """Mean and population standard deviation across seeds."""
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())
