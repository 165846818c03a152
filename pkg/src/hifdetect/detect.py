"""M-shape recognition per half-cycle and the consecutive-cycle trigger."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .distortion import IntervalSlopeSeries
from .errors import SequencingError

DEFAULT_RHO = 0.3
DEFAULT_EPSILON_M = 0.15
DEFAULT_TRIGGER = 4
DEFAULT_FLAT_TOL = 0.05


@dataclass(frozen=True)
class HalfCycleFeature:
    """Extrema of ``|IS|`` found between two slope zero-crossings.

    Indices are absolute sample positions; they are ``-1`` when the
    half-cycle has no usable pattern.
    """

    bounds: tuple
    d: int
    n_max1: int = -1
    n_min: int = -1
    n_max2: int = -1
    is_m_shape: bool = False
    prominence: float = 0.0
    reason: str = ""


def guard_margin(samples_per_cycle: int) -> int:
    return samples_per_cycle // 16


def local_extrema(a: np.ndarray, tolerance: float = 0.0) -> tuple:
    """Maxima and minima of ``a`` by sign change of its first difference.

    Excursions no larger than ``tolerance`` are treated as flat, and a flat
    run is collapsed to its midpoint.  An end point counts as a maximum
    when the curve falls away from it; end points never count as minima.
    Returns ``(maxima, minima)`` as index arrays into ``a``.
    """
    n = len(a)
    maxima, minima = [], []

    def centre(i):
        j = i
        while j + 1 < n and a[j + 1] == a[i]:
            j += 1
        return (i + j) // 2

    direction = 0
    hi = lo = ext = 0
    for i in range(1, n):
        if direction == 0:
            if a[i] > a[hi]:
                hi = i
            if a[i] < a[lo]:
                lo = i
            if a[i] - a[lo] > tolerance:
                direction, ext = 1, hi
            elif a[hi] - a[i] > tolerance:
                maxima.append(centre(hi))
                direction, ext = -1, lo
            continue
        if direction > 0:
            if a[i] > a[ext]:
                ext = i
            elif a[ext] - a[i] > tolerance:
                maxima.append(centre(ext))
                direction, ext = -1, i
        else:
            if a[i] < a[ext]:
                ext = i
            elif a[i] - a[ext] > tolerance:
                minima.append(centre(ext))
                direction, ext = 1, i
    if direction > 0:
        maxima.append(centre(ext))
    return np.array(maxima, int), np.array(minima, int)


def m_shape_half_cycle(
    iss: IntervalSlopeSeries,
    N0: int,
    N1: int,
    d: int | None = None,
    rho: float = DEFAULT_RHO,
    epsilon_m: float = DEFAULT_EPSILON_M,
    flat_tol: float = DEFAULT_FLAT_TOL,
) -> HalfCycleFeature:
    """Decide whether ``|IS|`` on ``[N0 + d, N1 - d]`` is an M shape.

    Requires a valley (the deepest interior minimum) flanked on each side
    by a maximum, every other interior minimum inside the two maxima and
    within ``rho`` (relative to the mean maximum) of the valley, and a
    valley depth of at least ``epsilon_m`` of the mean maximum.
    """
    if d is None:
        d = guard_margin(iss.samples_per_cycle)
    bounds, d = (int(N0), int(N1)), int(d)

    def verdict(reason, ext=(-1, -1, -1), prominence=0.0):
        return HalfCycleFeature(bounds, d, *ext, is_m_shape=not reason,
                                prominence=prominence, reason=reason)

    lo, hi = bounds[0] + d, bounds[1] - d
    if N1 - N0 < 2 * d + 3 or lo < 0 or hi >= len(iss):
        return verdict("degenerate")
    a = np.abs(iss.slopes[lo : hi + 1])
    if not np.isfinite(a.sum()):
        return verdict("undefined")
    tol = flat_tol * float(a.max())
    # a recorded minimum needs a drop of more than tol before it and a
    # rise of more than tol after it; skip the scan when no sample has both
    before = np.maximum.accumulate(a) - a
    after = np.maximum.accumulate(a[::-1])[::-1] - a
    if not np.any((before > tol) & (after > tol)):
        return verdict("no valley")
    maxima, minima = local_extrema(a, tol)
    if len(minima) == 0 or len(maxima) < 2:
        return verdict("no valley")
    i_min = minima[np.argmin(a[minima])]
    left = maxima[maxima < i_min]
    right = maxima[maxima > i_min]
    if len(left) == 0 or len(right) == 0:
        return verdict("unflanked")
    i1 = left[np.argmax(a[left])]
    i2 = right[np.argmax(a[right])]
    mean_max = 0.5 * (a[i1] + a[i2])
    ext = (lo + int(i1), lo + int(i_min), lo + int(i2))
    if mean_max <= 0:
        return verdict("flat", ext)
    others = minima[minima != i_min]
    if np.any((others < i1) | (others > i2)):
        return verdict("outer minimum", ext)
    if np.any(np.abs(a[others] - a[i_min]) > rho * mean_max):
        return verdict("uneven minima", ext)
    prominence = float((mean_max - a[i_min]) / mean_max)
    return verdict("shallow" if prominence < epsilon_m else "", ext, prominence)


def cycle_is_faulty(f1: HalfCycleFeature, f2: HalfCycleFeature) -> bool:
    """A cycle is faulty when both of its half-cycles are M shapes."""
    return bool(f1.is_m_shape and f2.is_m_shape)


@dataclass(frozen=True)
class DetectionState:
    """Consecutive faulty-cycle counter of one feeder stream."""

    trigger_threshold: int = DEFAULT_TRIGGER
    consecutive_faulty: int = 0
    triggered_at: int | None = None
    last_cycle: int | None = None


def update_detection(state: DetectionState, faulty: bool, cycle_index: int) -> DetectionState:
    """Advance the counter by one cycle.

    The counter resets on a non-faulty cycle; ``triggered_at`` is latched
    the first time it reaches the threshold.
    """
    if state.last_cycle is not None and cycle_index <= state.last_cycle:
        raise SequencingError(f"cycle {cycle_index} presented after {state.last_cycle}")
    count = state.consecutive_faulty + 1 if faulty else 0
    trig = state.triggered_at
    if trig is None and count >= state.trigger_threshold:
        trig = cycle_index
    return replace(state, consecutive_faulty=count, triggered_at=trig, last_cycle=cycle_index)


@dataclass
class CycleFeatures:
    """The two half-cycle features of one power cycle."""

    cycle: int
    halves: tuple
    faulty: bool


@dataclass
class ChannelScan:
    """Per-cycle M-shape verdicts for one channel."""

    cycles: list = field(default_factory=list)

    def by_cycle(self) -> dict:
        return {c.cycle: c for c in self.cycles}

    @property
    def flags(self) -> dict:
        return {c.cycle: c.faulty for c in self.cycles}


def scan_half_cycles(
    iss: IntervalSlopeSeries,
    d: int | None = None,
    rho: float = DEFAULT_RHO,
    epsilon_m: float = DEFAULT_EPSILON_M,
    flat_tol: float = DEFAULT_FLAT_TOL,
    skip_edges: bool = True,
) -> ChannelScan:
    """Group slope zero-crossings into cycles and test each half-cycle.

    A half-cycle belongs to the cycle containing its starting crossing;
    cycles need both half-cycles closed by a following crossing.  The first
    and last cycles of the record are skipped when ``skip_edges``.
    """
    n_t = iss.samples_per_cycle
    z = list(iss.zero_crossings)
    n_cycles = len(iss) // n_t
    by_cycle: dict = {}
    for k in range(len(z) - 1):
        by_cycle.setdefault(z[k] // n_t, []).append((z[k], z[k + 1]))
    scan = ChannelScan()
    first, last = (1, n_cycles - 2) if skip_edges else (0, n_cycles - 1)
    for c in sorted(by_cycle):
        if c < first or c > last:
            continue
        spans = by_cycle[c]
        if len(spans) < 2:
            continue
        halves = tuple(m_shape_half_cycle(iss, a, b, d, rho, epsilon_m, flat_tol) for a, b in spans[:2])
        scan.cycles.append(CycleFeatures(c, halves, cycle_is_faulty(*halves)))
    return scan


def detect_stream(flags, trigger_threshold: int = DEFAULT_TRIGGER) -> DetectionState:
    """Run :func:`update_detection` over ``(cycle, faulty)`` pairs.

    Cycles missing from the stream count as non-faulty.
    """
    state = DetectionState(trigger_threshold=trigger_threshold)
    prev = None
    for cycle, faulty in sorted(flags):
        if prev is not None and cycle > prev + 1:
            state = update_detection(state, False, cycle - 1)
        state = update_detection(state, faulty, cycle)
        prev = cycle
    return state
