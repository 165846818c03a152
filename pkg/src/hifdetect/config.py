"""Pipeline configuration: every threshold in one place, with defaults."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import ParameterError
from .signal import DEFAULT_CUTOFF, DEFAULT_F0, DEFAULT_FS, NeutralType

# guard margin, interval length, flat tolerance and the M-shape thresholds
# are not fixed by the method itself; the defaults below are choices.
DEFAULTS = {
    "fs": DEFAULT_FS,
    "f0": DEFAULT_F0,
    "fc": DEFAULT_CUTOFF,
    "l": None,
    "d": None,
    "trigger_threshold": 4,
    "window": (4, 20),
    "rho": 0.3,
    "epsilon_M": 0.15,
    "flat_tol": 0.05,
    "refit": True,
    "clean_first": False,
    "neutral": None,
    "seed": 0,
}


@dataclass(frozen=True)
class PipelineConfig:
    """Settings of one detection/identification run.

    ``l`` and ``d`` default to ``N_T/8`` and ``N_T/16`` of the record's
    samples per cycle.  ``neutral=None`` takes the neutral type from the
    record.
    """

    fs: float = DEFAULTS["fs"]
    f0: float = DEFAULTS["f0"]
    fc: float = DEFAULTS["fc"]
    l: int | None = None
    d: int | None = None
    trigger_threshold: int = DEFAULTS["trigger_threshold"]
    window: tuple = DEFAULTS["window"]
    rho: float = DEFAULTS["rho"]
    epsilon_M: float = DEFAULTS["epsilon_M"]
    flat_tol: float = DEFAULTS["flat_tol"]
    refit: bool = True
    clean_first: bool = False
    neutral: str | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "window", tuple(int(w) for w in self.window))
        if self.neutral is not None:
            object.__setattr__(self, "neutral", NeutralType.parse(self.neutral).value)
        if len(self.window) != 2 or min(self.window) < 0:
            raise ParameterError("window must be two non-negative cycle counts")
        if self.trigger_threshold < 1:
            raise ParameterError("trigger_threshold must be at least 1")
        if not 0 < self.fc < self.fs / 2:
            raise ParameterError(f"cutoff {self.fc} Hz outside (0, fs/2)")
        if not 0 <= self.epsilon_M < 1 or self.rho < 0 or not 0 <= self.flat_tol < 1:
            raise ParameterError("M-shape thresholds out of range")

    @property
    def samples_per_cycle(self) -> int:
        return int(round(self.fs / self.f0))

    def resolved(self, samples_per_cycle: int | None = None) -> "PipelineConfig":
        """Copy with ``l`` and ``d`` filled in from the cycle length."""
        n_t = samples_per_cycle or self.samples_per_cycle
        return replace(
            self,
            l=self.l if self.l is not None else n_t // 8,
            d=self.d if self.d is not None else n_t // 16,
        )

    def to_dict(self) -> dict:
        out = asdict(self)
        out["window"] = list(self.window)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ParameterError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    def merged(self, overrides: dict) -> "PipelineConfig":
        """Copy with non-None entries of ``overrides`` applied."""
        clean = {k: v for k, v in overrides.items() if v is not None}
        return self.from_dict({**self.to_dict(), **clean})
