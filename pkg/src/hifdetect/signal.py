"""Waveform containers and the generic signal operations built on them."""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from .errors import AlignmentError, ParameterError, RangeError

DEFAULT_FS = 6400.0
DEFAULT_F0 = 50.0
DEFAULT_CUTOFF = 1500.0
FILTER_ORDER = 4


class NeutralType(str, enum.Enum):
    ISOLATED = "isolated"
    RESONANT = "resonant"
    LOW_RESISTOR = "low_resistor"

    @classmethod
    def parse(cls, value) -> "NeutralType":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_").replace(" ", "_")
        aliases = {"lowresistor": "low_resistor", "low_resistance": "low_resistor"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ParameterError(f"unknown neutral type {value!r}") from None


@dataclass(frozen=True, eq=False)
class SampleSeries:
    """A uniformly sampled channel.

    ``fs / f0`` must be an integer number of samples per cycle.
    """

    values: np.ndarray
    fs: float = DEFAULT_FS
    f0: float = DEFAULT_F0
    t0: float = 0.0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1:
            raise ParameterError("values must be one-dimensional")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.fs <= 0 or self.f0 <= 0:
            raise ParameterError("fs and f0 must be positive")
        ratio = self.fs / self.f0
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ParameterError(f"fs/f0 = {ratio} is not an integer")

    @property
    def samples_per_cycle(self) -> int:
        return int(round(self.fs / self.f0))

    @property
    def n_cycles(self) -> int:
        return len(self.values) // self.samples_per_cycle

    @property
    def time(self) -> np.ndarray:
        return self.t0 + np.arange(len(self.values)) / self.fs

    def __len__(self):
        return len(self.values)

    def with_values(self, values) -> "SampleSeries":
        return SampleSeries(values, self.fs, self.f0, self.t0)

    def same_grid(self, other: "SampleSeries") -> bool:
        return (
            len(self) == len(other)
            and self.fs == other.fs
            and self.f0 == other.f0
            and self.t0 == other.t0
        )

    def __eq__(self, other):
        if not isinstance(other, SampleSeries):
            return NotImplemented
        return self.same_grid(other) and np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SynchronizedRecord:
    """Bus zero-sequence voltage plus every feeder's zero-sequence current.

    ``feeders`` is an ordered tuple of ``(feeder_id, SampleSeries)``; the
    transformer channel is an ordinary entry in it.
    """

    u0b: SampleSeries
    feeders: tuple
    neutral: NeutralType
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        feeders = tuple((str(fid), s) for fid, s in self.feeders)
        object.__setattr__(self, "feeders", feeders)
        object.__setattr__(self, "neutral", NeutralType.parse(self.neutral))
        ids = [fid for fid, _ in feeders]
        if len(set(ids)) != len(ids):
            raise AlignmentError(f"duplicate feeder ids in {ids}")
        if not feeders:
            raise AlignmentError("record has no feeder channels")
        for fid, s in feeders:
            if not s.same_grid(self.u0b):
                raise AlignmentError(f"channel {fid!r} is not synchronous with u0b")

    @property
    def feeder_ids(self) -> list:
        return [fid for fid, _ in self.feeders]

    @property
    def fs(self) -> float:
        return self.u0b.fs

    @property
    def f0(self) -> float:
        return self.u0b.f0

    @property
    def samples_per_cycle(self) -> int:
        return self.u0b.samples_per_cycle

    def __len__(self):
        return len(self.u0b)

    def channel(self, feeder_id) -> SampleSeries:
        for fid, s in self.feeders:
            if fid == str(feeder_id):
                return s
        raise KeyError(feeder_id)

    def current_matrix(self) -> np.ndarray:
        return np.vstack([s.values for _, s in self.feeders])

    def map_channels(self, fn) -> "SynchronizedRecord":
        """Apply ``fn(name, series) -> series`` to u0b and every feeder."""
        u0b = fn("u0b", self.u0b)
        feeders = tuple((fid, fn(fid, s)) for fid, s in self.feeders)
        return SynchronizedRecord(u0b, feeders, self.neutral, dict(self.meta))

    def __eq__(self, other):
        if not isinstance(other, SynchronizedRecord):
            return NotImplemented
        return (
            self.neutral == other.neutral
            and self.u0b == other.u0b
            and self.feeder_ids == other.feeder_ids
            and all(a == b for (_, a), (_, b) in zip(self.feeders, other.feeders))
        )

    __hash__ = None


def zero_sequence(ia: SampleSeries, ib: SampleSeries, ic: SampleSeries) -> SampleSeries:
    """Symmetrical-component zero sequence, (a + b + c) / 3."""
    if not (ia.same_grid(ib) and ia.same_grid(ic)):
        raise AlignmentError("phase channels are not aligned")
    return ia.with_values((ia.values + ib.values + ic.values) / 3.0)


def lowpass_sos(fs: float, fc: float = DEFAULT_CUTOFF, order: int = FILTER_ORDER):
    if not 0 < fc < fs / 2:
        raise ParameterError(f"cutoff {fc} Hz must lie in (0, {fs / 2})")
    return sps.butter(order, fc, btype="low", fs=fs, output="sos")


def lowpass_rows(values, fs: float, samples_per_cycle: int, fc: float = DEFAULT_CUTOFF) -> np.ndarray:
    """:func:`lowpass` applied along the last axis of an array of channels."""
    sos = lowpass_sos(fs, fc)
    x = np.asarray(values, dtype=float)
    pad = min(samples_per_cycle, x.shape[-1] - 1)
    if pad > 0:
        widths = [(0, 0)] * (x.ndim - 1) + [(pad, pad)]
        x = np.pad(x, widths, mode="reflect")
    y = sps.sosfiltfilt(sos, x, axis=-1, padtype=None)
    return y[..., pad:-pad] if pad > 0 else y


def lowpass(s: SampleSeries, fc: float = DEFAULT_CUTOFF) -> SampleSeries:
    """Zero-phase Butterworth low-pass.

    The series is reflect-padded by one cycle on each side and run forward
    and backward, so the effective magnitude response is ``|H|**2`` and
    the group delay is zero.
    """
    return s.with_values(lowpass_rows(s.values, s.fs, s.samples_per_cycle, fc))


def lowpass_gain(fs: float, fc: float, freqs) -> np.ndarray:
    """Magnitude response of :func:`lowpass` (forward-backward, so squared)."""
    sos = lowpass_sos(fs, fc)
    _, h = sps.sosfreqz(sos, worN=np.atleast_1d(np.asarray(freqs, float)), fs=fs)
    return np.abs(h) ** 2


@functools.lru_cache(maxsize=None)
def _dft_row(n: int) -> np.ndarray:
    row = np.exp(-2j * np.pi * np.arange(n) / n)
    row.setflags(write=False)
    return row


def phasor_of(values: np.ndarray) -> tuple:
    """Single-bin DFT of exactly one cycle, cosine reference.

    ``A*cos(2*pi*n/N + phase)`` maps to ``(A, phase)``.
    """
    n = len(values)
    x = (2.0 / n) * np.dot(values, _dft_row(n))
    amp = float(abs(x))
    if amp <= 1e-15 * max(1.0, float(np.max(np.abs(values)))):
        return 0.0, 0.0
    phase = float(np.angle(x))
    if phase <= -np.pi:
        phase = np.pi
    return amp, phase


def fundamental_phasor(s: SampleSeries, cycle_index: int) -> tuple:
    """Amplitude and phase of the power-frequency component in one cycle.

    The phase is measured from the first sample of the cycle and lies in
    ``(-pi, pi]``; an all-zero cycle reports phase 0.
    """
    n = s.samples_per_cycle
    start = cycle_index * n
    if cycle_index < 0 or start + n > len(s):
        raise RangeError(f"cycle {cycle_index} outside series of {len(s)} samples")
    return phasor_of(s.values[start : start + n])
