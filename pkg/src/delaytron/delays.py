"""Delay schedules and the round-indexed feedback queue.

Round numbers are 1-based. Feedback produced at round ``s`` with delay ``d_s``
becomes visible at round ``s + d_s`` and is missing if that exceeds ``T``.
"""
import bisect
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .errors import ConfigError, InputError, ParseError, UsageError
from .model import BanditOutcome, Example, PredictionDistribution

MODES = ("constant", "uniform", "file")


@dataclass(frozen=True)
class DelaySchedule:
    delays: np.ndarray
    mode: str = "constant"

    def __post_init__(self):
        d = np.asarray(self.delays, dtype=np.int64)
        if d.ndim != 1 or d.size == 0:
            raise ConfigError("a delay schedule needs at least one round")
        if np.any(d < 1):
            raise ConfigError("every delay must be >= 1")
        d.setflags(write=False)
        object.__setattr__(self, "delays", d)

    @property
    def horizon(self) -> int:
        return int(self.delays.size)

    def delay(self, t: int) -> int:
        return int(self.delays[t - 1])

    def delivery_rounds(self) -> np.ndarray:
        return np.arange(1, self.horizon + 1) + self.delays


def constant_schedule(T: int, d: int = 1) -> DelaySchedule:
    return DelaySchedule(np.full(T, d, dtype=np.int64), "constant")


def make_schedule(mode: str, T: int, max_delay: Optional[int] = None,
                  rng: Optional[np.random.Generator] = None,
                  path=None) -> DelaySchedule:
    """Build a delay schedule of horizon ``T``.

    ``constant`` sets every delay to ``max_delay``; ``uniform`` draws each
    delay independently from ``{1, ..., max_delay}``; ``file`` reads one
    integer per line, clamping values below 1 up to 1.
    """
    if T < 1:
        raise ConfigError(f"horizon must be >= 1, got {T}")
    if mode == "file":
        if path is None:
            raise ConfigError("file mode needs a path")
        return DelaySchedule(read_delay_file(path, T), "file")
    if mode not in MODES:
        raise ConfigError(f"unknown delay mode {mode!r}")
    if max_delay is None or max_delay < 1:
        raise ConfigError(f"max delay must be >= 1, got {max_delay}")
    if mode == "constant":
        return DelaySchedule(np.full(T, max_delay, dtype=np.int64), mode)
    if rng is None:
        raise ConfigError("uniform mode needs a random stream")
    return DelaySchedule(rng.integers(1, max_delay, size=T, endpoint=True, dtype=np.int64), mode)


def read_delay_file(path, T: int) -> np.ndarray:
    lines = Path(path).read_text().splitlines()
    values = []
    for lineno, raw in enumerate(lines, start=1):
        if len(values) == T:
            break
        try:
            values.append(max(1, int(raw.strip())))
        except ValueError:
            raise ParseError(f"not an integer: {raw!r}", line=lineno) from None
    if len(values) < T:
        raise InputError(f"delay file {path} has {len(values)} entries, need {T}")
    return np.asarray(values, dtype=np.int64)


def write_delay_file(schedule: DelaySchedule, path) -> None:
    Path(path).write_text("".join(f"{d}\n" for d in schedule.delays))


@dataclass(frozen=True)
class FeedbackEvent:
    """Bandit feedback of one round, carried until its delivery round.

    ``snapshot`` is the distribution the label was sampled from; the update
    built on delivery must use it rather than anything current.
    """

    origin_round: int
    outcome: Optional[BanditOutcome] = None
    snapshot: Optional[PredictionDistribution] = None
    example: Optional[Example] = None


class FeedbackQueue:
    def __init__(self, horizon: int):
        self.horizon = horizon
        self.pending: Dict[int, List[FeedbackEvent]] = {}
        self.delivered_count: Dict[int, int] = {}
        self.delivered: List[int] = []
        self.missing = set()
        self._last_drained = 0

    def enqueue(self, event: FeedbackEvent, d: int) -> None:
        due = event.origin_round + d
        if due > self.horizon:
            self.missing.add(event.origin_round)
            return
        bucket = self.pending.setdefault(due, [])
        bisect.insort(bucket, event, key=lambda e: e.origin_round)

    def drain(self, t: int) -> List[FeedbackEvent]:
        """Pop the events due at round ``t`` in ascending origin order."""
        if t <= self._last_drained:
            raise UsageError(f"round {t} drained after round {self._last_drained}")
        self._last_drained = t
        events = self.pending.pop(t, [])
        self.delivered_count[t] = len(events)
        self.delivered.extend(e.origin_round for e in events)
        return events

    def total_delivered(self) -> int:
        return len(self.delivered)


def replay(schedule: DelaySchedule) -> List[List[int]]:
    """Delivery sets ``S_1..S_T`` (origin rounds) obtained by running the queue."""
    T = schedule.horizon
    q = FeedbackQueue(T)
    sets = []
    for t in range(1, T + 1):
        q.enqueue(FeedbackEvent(t), schedule.delay(t))
        sets.append([e.origin_round for e in q.drain(t)])
    return sets


def missing_set(schedule: DelaySchedule) -> set:
    T = schedule.horizon
    return {t for t in range(1, T + 1) if t + schedule.delay(t) > T}


def delay_count_lhs(schedule: DelaySchedule) -> int:
    """Delay-count sum ``sum_t sum_{s in S_t} (|S_{t,s}| + sum_{r=s}^{t-1} |S_r|)``.

    ``S_{t,s}`` holds the feedbacks of ``S_t`` with origin before ``s``.
    """
    sets = replay(schedule)
    sizes = np.array([len(s) for s in sets], dtype=np.int64)
    # prefix[r] = |S_1| + ... + |S_r|
    prefix = np.concatenate(([0], np.cumsum(sizes)))
    total = 0
    for t, delivered in enumerate(sets, start=1):
        for rank, s in enumerate(delivered):
            total += rank + int(prefix[t - 1] - prefix[s - 1])
    return total


def delay_count_bound(schedule: DelaySchedule) -> int:
    """Right-hand side ``2 * sum_{t not in M} d_t``."""
    delivered = schedule.delivery_rounds() <= schedule.horizon
    return 2 * int(schedule.delays[delivered].sum())
