"""Delaytron, Adaptive Delaytron and Banditron run loops.

Every round: build the exploration distribution from ``W^t``, sample and
predict a label, queue that round's bandit feedback, collect the feedbacks
due this round and apply their updates as one batch. Banditron is the same
loop with every delay forced to 1.

Two engines execute the loop. ``"reference"`` drives the object-level API
(:class:`~delaytron.delays.FeedbackQueue`, :func:`~delaytron.model.update_matrix`,
:func:`~delaytron.model.apply_updates`) one round at a time; ``"fast"`` runs
the compiled equivalent and is what sweeps use.
"""
import math
from collections.abc import Sequence
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from . import _kernel
from .datasets import Dataset
from .delays import DelaySchedule, FeedbackEvent, FeedbackQueue, constant_schedule
from .errors import ConfigError, InputError
from .metrics import MetricsTracker, RunMetrics, schedule_scalars
from .model import (Example, ModelShape, apply_updates, bandit_outcome, check_gamma,
                    distribution_from_scores, hinge_from_scores, sample_label, scores,
                    update_matrix, zero_weights)
from .rng import rng_stream

ALGORITHMS = ("delaytron", "adaptive_delaytron", "banditron")


@dataclass(frozen=True)
class LearnerConfig:
    algorithm: str = "delaytron"
    gamma: float = 0.05
    eta: float = 1.0
    seed: int = 0
    # multiplies the epoch step size 2^{-e/2}; adaptive mode only
    eta_scale: float = 1.0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        check_gamma(self.gamma)
        if not (self.eta > 0 and math.isfinite(self.eta)):
            raise ConfigError(f"step size must be positive, got {self.eta}")
        if not (self.eta_scale > 0 and math.isfinite(self.eta_scale)):
            raise ConfigError(f"eta_scale must be positive, got {self.eta_scale}")

    @property
    def adaptive(self) -> bool:
        return self.algorithm == "adaptive_delaytron"


@dataclass(frozen=True)
class EpochState:
    epoch: int = 0
    cumulative_missing_sum: int = 0
    current_missing: int = 0
    eta: float = 1.0


@dataclass(frozen=True)
class RoundRecord:
    round: int
    example_index: int
    y_hat: int
    y_tilde: int
    mistake: bool
    applied: Tuple[int, ...]
    epoch: int
    eta: float


class RoundLog(Sequence):
    """Columnar store of :class:`RoundRecord` rows; indexing builds records lazily."""

    def __init__(self, y_hat, y_tilde, mistake, applied_ptr, applied_origins, epoch, eta):
        self.y_hat = np.asarray(y_hat, dtype=np.int64)
        self.y_tilde = np.asarray(y_tilde, dtype=np.int64)
        self.mistake = np.asarray(mistake, dtype=bool)
        self.applied_ptr = np.asarray(applied_ptr, dtype=np.int64)
        self.applied_origins = np.asarray(applied_origins, dtype=np.int64)
        self.epoch = np.asarray(epoch, dtype=np.int64)
        self.eta = np.asarray(eta, dtype=np.float64)

    @classmethod
    def from_records(cls, records):
        ptr = np.zeros(len(records) + 1, dtype=np.int64)
        ptr[1:] = np.cumsum([len(r.applied) for r in records])
        origins = [s for r in records for s in r.applied]
        return cls([r.y_hat for r in records], [r.y_tilde for r in records],
                   [r.mistake for r in records], ptr, origins,
                   [r.epoch for r in records], [r.eta for r in records])

    def __len__(self):
        return len(self.y_hat)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        lo, hi = self.applied_ptr[i], self.applied_ptr[i + 1]
        return RoundRecord(i + 1, i, int(self.y_hat[i]), int(self.y_tilde[i]),
                           bool(self.mistake[i]),
                           tuple(int(s) for s in self.applied_origins[lo:hi]),
                           int(self.epoch[i]), float(self.eta[i]))

    def applied_counts(self) -> np.ndarray:
        return np.diff(self.applied_ptr)

    def equals(self, other: "RoundLog") -> bool:
        """Bitwise equality of every column."""
        return all(np.array_equal(getattr(self, k), getattr(other, k))
                   for k in ("y_hat", "y_tilde", "mistake", "applied_ptr",
                             "applied_origins", "epoch", "eta"))


@dataclass(frozen=True, eq=False)
class RunResult:
    weights: np.ndarray
    metrics: RunMetrics
    records: RoundLog
    schedule: DelaySchedule

    def __iter__(self):
        return iter((self.weights, self.metrics, self.records))


def missing_count_update(t: int, total_feedbacks_so_far: int) -> int:
    """Rounds up to ``t`` whose feedback has not arrived by the end of round ``t``."""
    m = t - total_feedbacks_so_far
    if m < 0:
        raise AssertionError(f"round {t}: {total_feedbacks_so_far} feedbacks exceed rounds")
    return m


def epoch_advance(state: EpochState) -> EpochState:
    """Advance the epoch while the missing-count sum reaches ``2^e``.

    One round can push the sum past several powers of two, so this loops
    rather than stepping once.
    """
    e = state.epoch
    while state.cumulative_missing_sum >= 2 ** e:
        e += 1
    return replace(state, epoch=e, eta=2.0 ** (-e / 2))


STEP_SIZE_VARIANTS = ("case1", "bounded_loss", "bounded_loss_total", "unbounded_loss")


def theoretical_step_size(variant: str, w_norm: float, num_classes: int, max_norm: float,
                          gamma: float, horizon: int, sum_delays: float = 0.0,
                          num_missing: int = 0, loss_bound: Optional[float] = None) -> float:
    """Constant step size minimising the matching regret bound.

    ``case1``           no delay: ``|W| / sqrt(K T R^2 / gamma)``
    ``bounded_loss``    ``|W| / sqrt(2K R^2/gamma * (T/2 + 2 S))`` with ``S`` the
                        delay sum over delivered rounds
    ``bounded_loss_total``  as above with ``(2 + L^2 / (R^2 |W|^2)) S`` and ``S``
                        the delay sum over all rounds; needs ``loss_bound``
    ``unbounded_loss``  adds ``|M| T`` inside the bracket

    Pure calculator: ``w_norm``, the delay sums and ``|M|`` are not known
    online, so runs never call this on their own.
    """
    if variant not in STEP_SIZE_VARIANTS:
        raise ConfigError(f"unknown step-size variant {variant!r}")
    for name, value in (("w_norm", w_norm), ("num_classes", num_classes),
                        ("max_norm", max_norm), ("gamma", gamma), ("horizon", horizon)):
        if not value > 0:
            raise ConfigError(f"{name} must be positive, got {value}")
    if sum_delays < 0 or num_missing < 0:
        raise ConfigError("delay sum and missing count must be nonnegative")
    scale = num_classes * max_norm ** 2 / gamma
    if variant == "case1":
        return w_norm / math.sqrt(scale * horizon)
    if variant == "bounded_loss":
        bracket = horizon / 2 + 2 * sum_delays
    elif variant == "unbounded_loss":
        bracket = horizon / 2 + 2 * sum_delays + num_missing * horizon
    else:
        if loss_bound is None or loss_bound < 0:
            raise ConfigError("bounded_loss_total needs a nonnegative loss_bound")
        bracket = horizon / 2 + (2 + loss_bound ** 2 / (max_norm ** 2 * w_norm ** 2)) * sum_delays
    return w_norm / math.sqrt(2 * scale * bracket)


def run(config: LearnerConfig, dataset: Dataset, schedule: DelaySchedule,
        engine: str = "fast") -> RunResult:
    """Run ``schedule.horizon`` rounds over the first examples of ``dataset``.

    Returns final weights, :class:`RunMetrics` and the per-round log. The
    result depends only on the arguments; label sampling draws from the
    ``labels`` stream of ``config.seed``.
    """
    T = schedule.horizon
    if len(dataset) < T:
        raise InputError(f"dataset has {len(dataset)} examples, schedule needs {T}")
    if config.algorithm == "banditron":
        schedule = constant_schedule(T, 1)
    if engine == "fast":
        return _run_fast(config, dataset, schedule)
    if engine == "reference":
        return _run_reference(config, dataset, schedule)
    raise ConfigError(f"unknown engine {engine!r}")


def _run_fast(config, dataset, schedule):
    T = schedule.horizon
    indptr, indices, values = dataset.csr
    uniforms = rng_stream(config.seed, "labels").random(T)
    labels0 = dataset.labels[:T] - 1
    (w, y_hat, y_tilde, loss, received, epochs, etas, missing_sum,
     applied_ptr, applied_origins) = _kernel.run_loop(
        indptr, indices, values, labels0, dataset.num_classes, dataset.num_features,
        schedule.delays, uniforms, float(config.gamma), float(config.eta),
        config.adaptive, float(config.eta_scale))
    mistake = y_tilde != labels0
    log = RoundLog(y_hat + 1, y_tilde + 1, mistake, applied_ptr, applied_origins + 1, epochs, etas)
    rounds = np.arange(1, T + 1)
    metrics = RunMetrics(
        mistakes=np.cumsum(mistake, dtype=np.int64), feedbacks_received=received,
        missing_so_far=rounds - received, missing_sum=missing_sum, epoch=epochs, eta=etas,
        hinge_loss=loss, **dict(zip(("num_missing", "sum_delays", "sum_delays_delivered"),
                                    schedule_scalars(schedule))))
    return RunResult(w, metrics, log, schedule)


def _run_reference(config, dataset, schedule):
    T = schedule.horizon
    shape = ModelShape(dataset.num_classes, dataset.num_features)
    w = zero_weights(shape)
    rng = rng_stream(config.seed, "labels")
    queue = FeedbackQueue(T)
    tracker = MetricsTracker()
    state = EpochState()
    records = []
    for t in range(1, T + 1):
        x, y = dataset[t - 1]
        s = scores(w, x)
        p = distribution_from_scores(s, config.gamma)
        loss = hinge_from_scores(s, y)
        outcome = bandit_outcome(sample_label(p, rng), y)
        queue.enqueue(FeedbackEvent(t, outcome, p, Example(x)), schedule.delay(t))

        events = queue.drain(t)
        m_t = missing_count_update(t, queue.total_delivered())
        state = replace(state, current_missing=m_t,
                        cumulative_missing_sum=state.cumulative_missing_sum + m_t)
        if config.adaptive:
            state = epoch_advance(state)
            eta = config.eta_scale * state.eta
        else:
            eta = config.eta
        if events:
            updates = [update_matrix(e.example.features, e.snapshot.greedy_label,
                                     e.outcome.sampled_label, e.outcome.correct, e.snapshot)
                       for e in events]
            w = apply_updates(w, updates, eta)

        rec = RoundRecord(t, t - 1, p.greedy_label, outcome.sampled_label, not outcome.correct,
                          tuple(e.origin_round for e in events), state.epoch, eta)
        tracker.track(rec, y, loss)
        records.append(rec)
    return RunResult(w, tracker.result(schedule), RoundLog.from_records(records), schedule)
