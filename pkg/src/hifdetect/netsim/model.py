"""Circuit constants and the piecewise fault-distortion waveform."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError
from ..signal import DEFAULT_F0, DEFAULT_FS, NeutralType, SampleSeries

OMEGA = 2 * math.pi * DEFAULT_F0
# largest faulty-feeder capacitance share that keeps negative superposition
# for every admissible detuning
RESONANT_SHARE_LIMIT = 0.738
TRANSFORMER_ID = "T"


def feeder_id(i: int) -> str:
    return f"F{i + 1}"


@dataclass(frozen=True)
class NetworkParams:
    """Zero-sequence constants of a multi-feeder network.

    ``C0`` lists feeder capacitances (F); ``faulty`` indexes the faulted
    feeder in it.  Resonant networks are parameterised by the detuning
    ``v = 1 - 1/(w^2 L C0sum)``; ``L`` is derived from it when omitted.
    """

    C0: tuple
    faulty: int
    neutral: NeutralType = NeutralType.RESONANT
    v: float | None = None
    L: float | None = None
    R_N: float | None = None
    C0L: float = 0.0
    omega: float = OMEGA

    def __post_init__(self):
        object.__setattr__(self, "C0", tuple(float(c) for c in self.C0))
        object.__setattr__(self, "neutral", NeutralType.parse(self.neutral))
        if len(self.C0) < 2:
            raise ParameterError("need at least two feeders")
        if any(c <= 0 for c in self.C0) or self.C0L < 0:
            raise ParameterError("capacitances must be positive")
        if not 0 <= self.faulty < len(self.C0):
            raise ParameterError(f"faulty index {self.faulty} out of range")
        if self.neutral is NeutralType.RESONANT:
            if self.L is None and self.v is None:
                raise ParameterError("resonant network needs v or L")
            if self.L is None:
                if not -0.1 <= self.v < 0:
                    raise ParameterError(f"detuning v={self.v} outside [-0.1, 0)")
                L = 1.0 / ((1.0 - self.v) * self.omega ** 2 * self.C0_sum)
                object.__setattr__(self, "L", L)
            else:
                if self.L <= 0:
                    raise ParameterError("L must be positive")
                v = 1.0 - 1.0 / (self.omega ** 2 * self.L * self.C0_sum)
                if self.v is not None and abs(v - self.v) > 1e-9:
                    raise ParameterError("L and v are inconsistent")
                if not -0.1 <= v < 0:
                    raise ParameterError(f"detuning v={v} outside [-0.1, 0)")
                object.__setattr__(self, "v", v)
            if self.C0L > 0.05 * self.C0_sum:
                raise ParameterError("transformer capacitance is not negligible")
        elif self.neutral is NeutralType.LOW_RESISTOR:
            if self.R_N is None or self.R_N <= 0:
                raise ParameterError("low-resistor network needs R_N > 0")

    @property
    def n_feeders(self) -> int:
        return len(self.C0)

    @property
    def C0_sum(self) -> float:
        return sum(self.C0)

    @property
    def share(self) -> float:
        """Faulty feeder's share of the total feeder capacitance."""
        return self.C0[self.faulty] / self.C0_sum

    @property
    def resonance(self) -> float:
        """``w^2 L C0sum``."""
        return self.omega ** 2 * self.L * self.C0_sum

    @property
    def theta(self) -> float:
        """Lag of the fault current behind the capacitive currents (low resistor)."""
        return math.atan(1.0 / (self.omega * self.R_N * self.C0_sum))

    @property
    def channel_ids(self) -> list:
        return [feeder_id(i) for i in range(self.n_feeders)] + [TRANSFORMER_ID]

    @property
    def faulty_id(self) -> str:
        return feeder_id(self.faulty)


@dataclass(frozen=True)
class DistortionSpec:
    """Shape of the periodic zero-crossing distortion of the fault current.

    ``tau`` is the decay constant of the exponential envelope (1/s),
    ``offset_delta`` moves the mirror axis of each half-cycle away from the
    sinusoid peak (0 gives the symmetric shape).
    """

    I_fM: float
    I_fM_dist: float
    tau: float = -0.5
    phi: float = 0.0
    offset_delta: float = 0.0
    theta: float | None = None

    def __post_init__(self):
        if self.I_fM <= 0:
            raise ParameterError("I_fM must be positive")
        if not 0 <= self.I_fM_dist <= self.I_fM:
            raise ParameterError("need 0 <= I_fM_dist <= I_fM")
        if not -1 < self.tau < 0:
            raise ParameterError(f"tau={self.tau} outside (-1, 0)")
        if not abs(self.offset_delta) < math.pi / 2:
            raise ParameterError("offset_delta must lie in (-pi/2, pi/2)")
        if self.theta is not None and not 0 < self.theta < math.pi / 2:
            raise ParameterError("theta must lie in (0, pi/2)")


def _half_cycle(x, spec: DistortionSpec, omega: float):
    """Distortion and its x-derivative on ``x in [0, pi)``."""
    m = math.pi / 2 + spec.offset_delta
    rising = x < m
    u = np.where(rising, x, math.pi - x)
    width = np.where(rising, m, math.pi - m)
    env = np.exp(spec.tau / omega * u)
    arg = math.pi * u / width
    f = -env * spec.I_fM_dist * np.sin(arg)
    du = -env * spec.I_fM_dist * ((spec.tau / omega) * np.sin(arg) + (math.pi / width) * np.cos(arg))
    df = np.where(rising, du, -du)
    return f, df


def distortion_wave(x, spec: DistortionSpec, omega: float = OMEGA, derivative: bool = False):
    """Distortion as a function of the phase angle ``x = w*t + phase``.

    On the first quarter ``x in [0, pi/2)`` this is
    ``-exp(tau/w * x) * I_fM_dist * sin(2x)``; the second quarter mirrors
    it about the (possibly offset) axis, and the next half-cycle is the
    negative of the first, so ``f(x + pi) = -f(x)`` always holds.  With
    ``derivative=True`` returns ``df/dx`` instead.
    """
    x = np.mod(np.asarray(x, dtype=float), 2 * math.pi)
    second = x >= math.pi
    h = np.where(second, x - math.pi, x)
    f, df = _half_cycle(h, spec, omega)
    out = df if derivative else f
    return np.where(second, -out, out)


def sample_times(fs: float, cycles: float, f0: float = DEFAULT_F0, t0: float = 0.0) -> np.ndarray:
    n = int(round(cycles * fs / f0))
    return t0 + np.arange(n) / fs


def synth_fault_distortion(
    spec: DistortionSpec,
    fs: float = DEFAULT_FS,
    cycles: float = 10,
    f0: float = DEFAULT_F0,
    phase: float | None = None,
) -> SampleSeries:
    """Sampled fault-current distortion.

    ``phase`` is the phase of the fault current; it defaults to
    ``phi - pi`` (resonant and isolated forms).
    """
    if phase is None:
        phase = spec.phi - math.pi
    omega = 2 * math.pi * f0
    t = sample_times(fs, cycles, f0)
    return SampleSeries(distortion_wave(omega * t + phase, spec, omega), fs, f0)
