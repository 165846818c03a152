"""Measurement noise, arcing impulses and switching transients."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ParameterError
from ..signal import SynchronizedRecord


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(x)))) if len(x) else 0.0


def impulse_positions(rng: np.random.Generator, n: int, per_cycle: int, rate: float) -> np.ndarray:
    """Poisson-distributed sample positions, ``rate`` impulses per cycle on average."""
    if rate <= 0:
        return np.zeros(0, dtype=int)
    count = rng.poisson(rate * n / per_cycle)
    return np.sort(rng.integers(0, n, size=count))


def add_noise(
    record: SynchronizedRecord,
    snr_db: float = math.inf,
    impulse_rate: float = 0.0,
    impulse_gain: float = 10.0,
    seed: int = 0,
) -> SynchronizedRecord:
    """Add white Gaussian noise and single-sample impulses to every channel.

    Noise power is set per channel from that channel's RMS so each one has
    the requested SNR.  Impulses land at Poisson-distributed samples
    (``impulse_rate`` per cycle on average, independently per channel)
    with magnitude ``impulse_gain`` times the channel peak and random
    sign.  ``snr_db = inf`` with ``impulse_rate = 0`` returns the record
    unchanged.
    """
    if not snr_db > 0:
        raise ParameterError("snr_db must be positive")
    if impulse_rate < 0 or impulse_gain < 0:
        raise ParameterError("impulse rate and gain must be non-negative")
    if math.isinf(snr_db) and impulse_rate == 0:
        return record
    rng = np.random.default_rng(seed)
    n_t = record.samples_per_cycle

    def perturb(_name, s):
        x = np.array(s.values)
        if not math.isinf(snr_db):
            sigma = _rms(s.values) / 10.0 ** (snr_db / 20.0)
            x = x + rng.normal(0.0, sigma, len(x))
        pos = impulse_positions(rng, len(x), n_t, impulse_rate)
        if len(pos):
            peak = float(np.max(np.abs(s.values)))
            x[pos] += impulse_gain * peak * rng.choice([-1.0, 1.0], size=len(pos))
        return s.with_values(x)

    return record.map_channels(perturb)


def periodic_impulses(record: SynchronizedRecord, gain: float = 10.0, seed: int = 0, channels=None) -> SynchronizedRecord:
    """One single-sample impulse per cycle at a random offset in each cycle.

    ``channels`` restricts the impulses to those feeder ids (default all
    feeders, never u0b).
    """
    rng = np.random.default_rng(seed)
    n_t = record.samples_per_cycle
    wanted = set(record.feeder_ids if channels is None else channels)

    def hit(name, s):
        if name not in wanted:
            return s
        x = np.array(s.values)
        n_c = len(x) // n_t
        pos = np.arange(n_c) * n_t + rng.integers(0, n_t, size=n_c)
        peak = float(np.max(np.abs(s.values)))
        x[pos] += gain * peak * rng.choice([-1.0, 1.0], size=n_c)
        return s.with_values(x)

    return record.map_channels(hit)


def measured_snr_db(clean: np.ndarray, noisy: np.ndarray) -> float:
    """SNR of ``noisy`` against its clean reference, in dB."""
    noise = _rms(np.asarray(noisy) - np.asarray(clean))
    return 20.0 * math.log10(_rms(clean) / noise) if noise > 0 else math.inf


def switching_step(
    record: SynchronizedRecord,
    at_cycle: float,
    feeder: str,
    step: float = 0.2,
    ring_hz: float = 600.0,
    ring_cycles: float = 1.0,
    seed: int = 0,
) -> SynchronizedRecord:
    """Capacitor-switching-like event on ``feeder``.

    From ``at_cycle`` on the feeder current is scaled by ``1 + step`` and
    a damped oscillation at ``ring_hz`` is superposed; the transformer
    channel (the last channel) absorbs the opposite current, so KCL still
    holds.
    """
    rng = np.random.default_rng(seed)
    fs, n_t = record.fs, record.samples_per_cycle
    n = len(record)
    k0 = int(round(at_cycle * n_t))
    if not 0 <= k0 < n:
        raise ParameterError("switching instant outside the record")
    src = record.channel(feeder).values
    k = np.arange(n) - k0
    after = k >= 0
    t = np.where(after, k, 0) / fs
    amp = step * float(np.max(np.abs(src))) * (1.0 + rng.uniform(0.0, 1.0))
    tau = ring_cycles / record.f0 / 3.0
    ring = amp * np.exp(-t / tau) * np.sin(2 * math.pi * ring_hz * t + rng.uniform(0, 2 * math.pi))
    extra = np.where(after, step * src + ring, 0.0)
    sink = record.feeder_ids[-1]
    if sink == feeder:
        raise ParameterError("the switched feeder cannot be the balancing channel")

    def apply(name, s):
        if name == feeder:
            return s.with_values(s.values + extra)
        if name == sink:
            return s.with_values(s.values - extra)
        return s

    return record.map_channels(apply)
