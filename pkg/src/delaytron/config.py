"""Flat ``key = value`` run configuration.

One pair per line, ``#`` starts a comment. Command-line flags override file
values key by key.
"""
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Tuple

from .errors import ConfigError
from .learners import ALGORITHMS, STEP_SIZE_VARIANTS
from .model import check_gamma

DEFAULT_GAMMAS = (0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.45)
SYNTHETIC = ("synsep", "synnonsep")
NORMALIZATIONS = ("unit_norm", "max_norm_scale", "none")


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _gammas(text: str) -> Tuple[float, ...]:
    items = [s for s in text.replace(" ", "").split(",") if s]
    if not items:
        raise ValueError("empty gamma list")
    return tuple(float(s) for s in items)


def _optional_int(text: str) -> Optional[int]:
    return None if text.strip().lower() in ("", "none") else int(text)


def _optional_str(text: str) -> Optional[str]:
    return None if text.strip().lower() in ("", "none") else text


def _optional_float(text: str) -> Optional[float]:
    return None if text.strip().lower() in ("", "none") else float(text)


@dataclass(frozen=True)
class RunConfig:
    algorithm: str = "delaytron"
    dataset: str = "synsep"
    dataset_size: int = 100_000
    dataset_seed: int = 0
    csv_header: bool = False
    label_column: str = "0"
    normalization: str = "max_norm_scale"
    rounds: Optional[int] = None
    gamma: Tuple[float, ...] = DEFAULT_GAMMAS
    eta: str = "1.0"
    eta_w_norm: Optional[float] = None
    eta_sum_delays: Optional[float] = None
    eta_num_missing: int = 0
    eta_loss_bound: Optional[float] = None
    eta_scale: float = 1.0
    delay_mode: str = "uniform"
    max_delay: int = 1
    delay_file: Optional[str] = None
    seeds: int = 20
    base_seed: int = 0
    out: str = "results"
    plot: bool = True
    workers: int = 1

    def validate(self) -> "RunConfig":
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.dataset not in SYNTHETIC and not Path(self.dataset).is_file():
            raise ConfigError(f"dataset {self.dataset!r} is neither synthetic nor an existing file")
        if self.normalization not in NORMALIZATIONS:
            raise ConfigError(f"unknown normalization {self.normalization!r}")
        if not self.gamma:
            raise ConfigError("gamma sweep is empty")
        for g in self.gamma:
            check_gamma(g)
        if len(set(self.gamma)) != len(self.gamma):
            raise ConfigError("gamma sweep lists a value twice")
        if self.rounds is not None and self.rounds < 1:
            raise ConfigError("rounds must be >= 1")
        if self.dataset_size < 1:
            raise ConfigError("dataset_size must be >= 1")
        if self.seeds < 1:
            raise ConfigError("need at least one seed")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.delay_mode not in ("constant", "uniform", "file"):
            raise ConfigError(f"unknown delay mode {self.delay_mode!r}")
        if self.delay_mode == "file":
            if not self.delay_file or not Path(self.delay_file).is_file():
                raise ConfigError(f"delay file {self.delay_file!r} does not exist")
        elif self.max_delay < 1:
            raise ConfigError("max_delay must be >= 1")
        if self.eta.startswith("theoretical:"):
            variant = self.eta.split(":", 1)[1]
            if variant not in STEP_SIZE_VARIANTS:
                raise ConfigError(f"unknown step-size variant {variant!r}")
            if self.eta_w_norm is None:
                raise ConfigError("theoretical step size needs eta_w_norm")
            if variant != "case1" and self.eta_sum_delays is None:
                raise ConfigError(f"{variant} step size needs eta_sum_delays")
        else:
            try:
                eta = float(self.eta)
            except ValueError:
                raise ConfigError(f"eta must be a number or theoretical:<variant>, got {self.eta!r}") from None
            if not eta > 0:
                raise ConfigError("eta must be positive")
        return self


_PARSERS = {
    "dataset_size": int, "dataset_seed": int, "csv_header": _bool, "rounds": _optional_int,
    "gamma": _gammas, "eta_w_norm": _optional_float, "eta_sum_delays": _optional_float,
    "eta_num_missing": int, "eta_loss_bound": _optional_float, "eta_scale": float,
    "max_delay": int, "delay_file": _optional_str, "seeds": int, "base_seed": int, "plot": _bool, "workers": int,
}
KEYS = tuple(f.name for f in fields(RunConfig))


def parse_pairs(text: str, source: str = "<config>") -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def build_config(pairs: dict, base: RunConfig = RunConfig()) -> RunConfig:
    values = {}
    for key, raw in pairs.items():
        if key not in KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        if not isinstance(raw, str):
            values[key] = raw
            continue
        try:
            values[key] = _PARSERS.get(key, str)(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
    return replace(base, **values)


def load_config(path=None, overrides: Optional[dict] = None) -> RunConfig:
    pairs = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file {path} not found")
        pairs = parse_pairs(path.read_text(), str(path))
    pairs.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return build_config(pairs).validate()


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for key in KEYS:
        value = getattr(cfg, key)
        if isinstance(value, tuple):
            value = ",".join(repr(v) for v in value)
        lines.append(f"{key} = {'none' if value is None else value}")
    return "\n".join(lines) + "\n"
