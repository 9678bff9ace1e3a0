"""Synthetic streams and CSV ingestion.

SynSep simulates short text documents over a 400-word vocabulary: the
vocabulary is split into 9 class-exclusive blocks of 40 words plus 40 shared
words. Every document activates 10 words of its class block and 10 shared
words and is scaled to unit norm, so the block-indicator matrix separates the
classes with margin ``10 / sqrt(20)``.
"""
import csv
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import List, Optional

import numpy as np

from .errors import ConfigError, InputError, ParseError
from .model import Example

NORM_SLACK = 1e-12


@dataclass(frozen=True)
class SyntheticSpec:
    num_samples: int = 100_000
    noise_rate: float = 0.0
    seed: int = 0
    num_classes: int = 9
    vocab_size: int = 400
    block_size: int = 40
    active_words: int = 10

    def __post_init__(self):
        if self.num_samples < 1:
            raise ConfigError("num_samples must be positive")
        if not 0.0 <= self.noise_rate < 1.0:
            raise ConfigError(f"noise_rate must lie in [0, 1), got {self.noise_rate}")
        if (self.num_classes + 1) * self.block_size != self.vocab_size:
            raise ConfigError("vocabulary must hold one block per class plus a shared block")


@dataclass(frozen=True)
class DatasetStats:
    max_norm: float
    num_classes: int
    num_features: int
    num_examples: int


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable example stream; ``labels`` are 1-based."""

    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    name: str = "dataset"
    original_labels: Optional[List[str]] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.ascontiguousarray(self.features, dtype=np.float64)
        y = np.ascontiguousarray(self.labels, dtype=np.int64)
        if x.ndim != 2 or y.shape != (x.shape[0],):
            raise InputError(f"features {x.shape} and labels {y.shape} disagree")
        if x.shape[0] == 0:
            raise InputError("dataset is empty")
        if not np.all(np.isfinite(x)):
            raise InputError("features must be finite")
        if y.min() < 1 or y.max() > self.num_classes:
            raise InputError(f"labels must lie in 1..{self.num_classes}")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    def __len__(self):
        return self.features.shape[0]

    def __getitem__(self, i) -> Example:
        return Example(self.features[i], int(self.labels[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    @cached_property
    def stats(self) -> DatasetStats:
        norms = np.linalg.norm(self.features, axis=1)
        return DatasetStats(float(norms.max()), self.num_classes, self.num_features, len(self))

    @cached_property
    def csr(self):
        """``(indptr, indices, values)`` of the nonzero feature entries."""
        rows, cols = np.nonzero(self.features)
        indptr = np.zeros(len(self) + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=len(self)), out=indptr[1:])
        return indptr, cols.astype(np.int64), self.features[rows, cols]

    def head(self, n: int) -> "Dataset":
        return replace(self, features=self.features[:n], labels=self.labels[:n])

    def shuffled(self, rng: np.random.Generator) -> "Dataset":
        order = rng.permutation(len(self))
        return replace(self, features=self.features[order], labels=self.labels[order])


def gen_synthetic(spec: SyntheticSpec, rng: np.random.Generator) -> Dataset:
    n, k, b, a = spec.num_samples, spec.num_classes, spec.block_size, spec.active_words
    labels = rng.integers(1, k, size=n, endpoint=True)
    # rank-select `a` distinct words per document within each 40-word block
    own = np.argsort(rng.random((n, b)), axis=1)[:, :a]
    shared = np.argsort(rng.random((n, b)), axis=1)[:, :a]
    x = np.zeros((n, spec.vocab_size))
    rows = np.arange(n)[:, None]
    x[rows, (labels[:, None] - 1) * b + own] = 1.0
    x[rows, k * b + shared] = 1.0
    x /= np.sqrt(2 * a)

    clean = labels.copy()
    if spec.noise_rate > 0:
        flip = rng.random(n) < spec.noise_rate
        shift = rng.integers(1, k, size=n)
        labels = np.where(flip, (labels - 1 + shift) % k + 1, labels)
    name = "synnonsep" if spec.noise_rate > 0 else "synsep"
    meta = {"seed": spec.seed, "noise_rate": spec.noise_rate, "clean_labels": clean}
    return Dataset(x, labels, k, name=name, meta=meta)


def gen_synsep(spec: SyntheticSpec, rng: np.random.Generator) -> Dataset:
    if spec.noise_rate != 0:
        raise ConfigError("SynSep is noise free; use gen_synnonsep")
    return gen_synthetic(spec, rng)


def gen_synnonsep(spec: SyntheticSpec, rng: np.random.Generator) -> Dataset:
    return gen_synthetic(spec, rng)


def block_indicator_weights(spec: SyntheticSpec = SyntheticSpec()) -> np.ndarray:
    """Separating matrix for SynSep: row ``c`` marks the words of class ``c``."""
    w = np.zeros((spec.num_classes, spec.vocab_size))
    for c in range(spec.num_classes):
        w[c, c * spec.block_size:(c + 1) * spec.block_size] = 1.0
    return w


def load_csv(path, has_header: bool = False, label_column=0, name: Optional[str] = None) -> Dataset:
    """Read a numeric CSV with one label column.

    Labels are remapped to ``1..K`` in order of first appearance; the original
    strings are kept in ``original_labels``. ``label_column`` is an index or,
    with a header, a column name.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    start = 1 if has_header else 0
    header = rows[0] if has_header and rows else None
    body = [(i, r) for i, r in enumerate(rows[start:], start=start + 1) if r]
    if not body:
        raise ParseError(f"{path} holds no data rows")

    width = len(body[0][1])
    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        if header is None or label_column not in header:
            raise ParseError(f"unknown label column {label_column!r}", line=1 if header else None)
        col = header.index(label_column)
    else:
        col = int(label_column)
        if not -width <= col < width:
            raise ParseError(f"label column {col} out of range for {width} columns", line=body[0][0])
        col %= width

    codes, order = {}, []
    features, labels = [], []
    for lineno, row in body:
        if len(row) != width:
            raise ParseError(f"expected {width} cells, found {len(row)}", line=lineno)
        raw = row[col].strip()
        if raw not in codes:
            codes[raw] = len(codes) + 1
            order.append(raw)
        labels.append(codes[raw])
        try:
            features.append([float(v) for j, v in enumerate(row) if j != col])
        except ValueError as exc:
            raise ParseError(f"non-numeric cell ({exc})", line=lineno) from None
    if len(codes) < 2:
        raise ParseError(f"{path} has a single label; need at least 2 classes")
    return Dataset(np.array(features), np.array(labels), len(codes),
                   name=name or path.stem, original_labels=order)


def save_csv(dataset: Dataset, path, header: bool = True) -> None:
    """Write label-first CSV readable by :func:`load_csv`."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow(["label"] + [f"f{j}" for j in range(dataset.num_features)])
        for x, y in zip(dataset.features, dataset.labels):
            w.writerow([int(y)] + [repr(float(v)) for v in x])


def normalize(dataset: Dataset, mode: str = "max_norm_scale") -> Dataset:
    """Rescale features so the stats' ``max_norm`` bounds every example.

    ``unit_norm`` scales rows to norm 1 and leaves zero rows alone,
    ``max_norm_scale`` divides everything by the largest row norm.
    """
    x = dataset.features
    if mode == "none":
        return dataset
    norms = np.linalg.norm(x, axis=1)
    if mode == "unit_norm":
        scale = np.where(norms > 0, norms, 1.0)
        x = x / scale[:, None]
    elif mode == "max_norm_scale":
        top = norms.max()
        x = x / top if top > 0 else x.copy()
    else:
        raise ConfigError(f"unknown normalization {mode!r}")
    out = replace(dataset, features=x, meta={**dataset.meta, "normalization": mode})
    if out.stats.max_norm > 1.0 + NORM_SLACK:
        raise AssertionError("normalization left a row above unit norm")
    return out
