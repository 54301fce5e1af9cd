"""Flat ``key = value`` run configuration.

Grammar: one ``key = value`` per line; ``#`` starts a comment; blank lines
are ignored; keys are case-sensitive; lists are comma-separated; the value
``auto`` selects the documented automatic behaviour where one exists.
Unknown keys are an error.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields

from .channel import ChannelParams, InvalidInputError, dbm_to_watts
from .cluster import ThresholdSchedule

ENV_CONFIG = "D2DMCAST_CONFIG"

ALGORITHMS = ("channel_gain", "cluster", "optimal", "bs_broadcast")


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"config key {key!r}: {message}")


def normalize_algorithm(name: str) -> str:
    norm = name.strip().replace("-", "_")
    if norm not in ALGORITHMS:
        raise InvalidInputError(f"unknown algorithm {name!r}; choose from {', '.join(ALGORITHMS)}")
    return norm


@dataclass
class RunConfig:
    # channel
    radius_m: float = 500.0
    n0_dbm: float = -100.0
    k_db: float = -31.54
    beta: float = 3.0
    d0_m: float = 1.0
    sigma_shadow_db: float = 8.0
    # grouping
    r_min: float = 10.0
    h_max_cluster: int = 10
    h_max_optimal: int | None = None  # auto: C
    oracle_cap: int = 8
    threshold_initial_db: float | None = None  # auto: gain at radius/4 over N0
    threshold_step_db: float = 1.0
    threshold_retry_budget: int = 256
    threshold_sweep: bool = True
    # experiments
    master_seed: int = 1
    trials: int = 1000
    c_values: tuple[int, ...] | None = None  # auto: per-experiment grid
    algorithms: tuple[str, ...] | None = None  # auto: per-experiment set
    output_dir: str = "results"
    threads: int = 0  # 0: machine parallelism

    @property
    def params(self) -> ChannelParams:
        return ChannelParams(
            k_db=self.k_db,
            beta=self.beta,
            d0_m=self.d0_m,
            sigma_shadow_db=self.sigma_shadow_db,
            n0_w=dbm_to_watts(self.n0_dbm),
        )

    @property
    def schedule(self) -> ThresholdSchedule:
        return ThresholdSchedule(
            initial_db=self.threshold_initial_db,
            step_db=self.threshold_step_db,
            retry_budget=self.threshold_retry_budget,
            sweep=self.threshold_sweep,
        )

    def check(self) -> "RunConfig":
        """Raise :class:`ConfigError` on the first out-of-range value."""
        positive = ("radius_m", "d0_m", "beta", "r_min", "threshold_step_db")
        for key in positive:
            if not getattr(self, key) > 0:
                raise ConfigError(key, "must be > 0")
        for key in ("h_max_cluster", "trials"):
            if getattr(self, key) < 1:
                raise ConfigError(key, "must be >= 1")
        if self.h_max_optimal is not None and self.h_max_optimal < 1:
            raise ConfigError("h_max_optimal", "must be >= 1 or auto")
        if self.sigma_shadow_db < 0:
            raise ConfigError("sigma_shadow_db", "must be >= 0")
        if self.threshold_retry_budget < 0:
            raise ConfigError("threshold_retry_budget", "must be >= 0")
        if self.threads < 0:
            raise ConfigError("threads", "must be >= 0")
        if self.c_values is not None and any(c < 0 for c in self.c_values):
            raise ConfigError("c_values", "counts must be >= 0")
        if self.algorithms is not None:
            try:
                self.algorithms = tuple(normalize_algorithm(a) for a in self.algorithms)
            except InvalidInputError as exc:
                raise ConfigError("algorithms", str(exc)) from None
        return self

    def to_lines(self) -> list[str]:
        out = []
        for f in fields(self):
            out.append(f"{f.name} = {_format(getattr(self, f.name))}")
        return out

    def to_dict(self) -> dict:
        return {f.name: (list(v) if isinstance(v := getattr(self, f.name), tuple) else v) for f in fields(self)}


def _format(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int_list(text: str) -> tuple[int, ...]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return tuple(out)


_PARSERS = {
    "int": int,
    "float": float,
    "bool": _parse_bool,
    "str": str,
    "ints": _int_list,
    "strs": lambda t: tuple(p.strip() for p in t.split(",") if p.strip()),
}

_KINDS = {
    "radius_m": "float", "n0_dbm": "float", "k_db": "float", "beta": "float", "d0_m": "float",
    "sigma_shadow_db": "float", "r_min": "float", "h_max_cluster": "int", "h_max_optimal": "int",
    "oracle_cap": "int", "threshold_initial_db": "float", "threshold_step_db": "float",
    "threshold_retry_budget": "int", "threshold_sweep": "bool", "master_seed": "int", "trials": "int",
    "c_values": "ints", "algorithms": "strs", "output_dir": "str", "threads": "int",
}
_AUTO_OK = {"h_max_optimal", "threshold_initial_db", "c_values", "algorithms"}


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    cfg = base or RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(line, f"line {lineno} is not 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        set_value(cfg, key, value)
    return cfg.check()


def set_value(cfg: RunConfig, key: str, value: str) -> None:
    if key not in _KINDS:
        raise ConfigError(key, "unknown key")
    if value == "auto":
        if key not in _AUTO_OK:
            raise ConfigError(key, "does not accept 'auto'")
        setattr(cfg, key, None)
        return
    try:
        setattr(cfg, key, _PARSERS[_KINDS[key]](value))
    except ValueError as exc:
        raise ConfigError(key, f"bad value {value!r} ({exc})") from None


def load_config(path: str | None = None) -> RunConfig:
    """Defaults, overlaid by ``path`` or else the file named in ``$D2DMCAST_CONFIG``."""
    path = path or os.environ.get(ENV_CONFIG)
    if not path:
        return RunConfig().check()
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)
