"""Interval-slope extraction of zero-crossing distortions.

Each sample's interval slope is the least-squares slope of the ``l``
samples centred on it, computed after the interval has been cleaned by an
iterative Grubbs test and refit by robust local linear regression
(tricube kernel, bisquare reweighting).  Everything operates on stacks of
windows so a full channel is processed with a handful of array ops.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import stats

from .errors import ParameterError, RangeError
from .signal import DEFAULT_CUTOFF, SampleSeries, _dft_row, lowpass, lowpass_rows

GRUBBS_ALPHA = 0.05
ROBUST_ITERATIONS = 2
BISQUARE_C = 6.0


@dataclass(frozen=True, eq=False)
class IntervalSlopeSeries:
    """Per-sample interval slopes of one channel.

    ``slopes[n]`` is NaN where the centred interval does not fit inside the
    source series.  Units are signal units per sample.
    """

    slopes: np.ndarray
    l: int
    samples_per_cycle: int
    source_id: str = ""
    zero_crossings: tuple = field(default=())

    def __post_init__(self):
        s = np.array(self.slopes, dtype=float)
        s.setflags(write=False)
        object.__setattr__(self, "slopes", s)
        object.__setattr__(self, "zero_crossings", tuple(int(z) for z in self.zero_crossings))

    def __len__(self):
        return len(self.slopes)

    @property
    def defined(self) -> np.ndarray:
        return np.isfinite(self.slopes)

    def with_crossings(self, crossings) -> "IntervalSlopeSeries":
        return IntervalSlopeSeries(self.slopes, self.l, self.samples_per_cycle,
                                   self.source_id, tuple(crossings))


def default_interval(samples_per_cycle: int) -> int:
    return samples_per_cycle // 8


def check_interval(l: int) -> int:
    l = int(l)
    if l < 4 or l % 2:
        raise ParameterError(f"interval length must be even and >= 4, got {l}")
    return l


def llsf_slope(values) -> np.ndarray:
    """Least-squares line slope over the last axis.

    Direct form of the closed-form expression
    ``(l*sum(n*i) - sum(n)*sum(i)) / (l*sum(n^2) - sum(n)^2)`` with ``n``
    counted from the start of the interval (the slope does not depend on
    the origin of ``n``, and a local origin avoids cancellation).
    """
    y = np.asarray(values, dtype=float)
    l = y.shape[-1]
    n = np.arange(l, dtype=float)
    sn = n.sum()
    snn = (n * n).sum()
    num = l * (y @ n) - sn * y.sum(axis=-1)
    return num / (l * snn - sn * sn)


# -- Grubbs outlier screening ------------------------------------------------


@lru_cache(maxsize=None)
def grubbs_critical(n: int, alpha: float = GRUBBS_ALPHA) -> float:
    """Two-sided Grubbs critical value for ``n`` observations."""
    if n < 3:
        return np.inf
    t = stats.t.ppf(1.0 - alpha / (2.0 * n), n - 2)
    return (n - 1) / np.sqrt(n) * np.sqrt(t * t / (n - 2 + t * t))


def _weighted_line(y, w, x):
    s0 = w.sum(axis=-1)
    s1 = (w * x).sum(axis=-1)
    s2 = (w * x * x).sum(axis=-1)
    sy = (w * y).sum(axis=-1)
    sxy = (w * x * y).sum(axis=-1)
    det = s0 * s2 - s1 * s1
    with np.errstate(invalid="ignore", divide="ignore"):
        b = np.where(det > 0, (s0 * sxy - s1 * sy) / det, 0.0)
        a = np.where(s0 > 0, (sy - b * s1) / s0, 0.0)
    return a, b


@lru_cache(maxsize=None)
def _residual_maker(l: int) -> np.ndarray:
    """``I - P`` for the projection ``P`` onto affine sequences of length ``l``."""
    x = np.vander(np.arange(l, dtype=float) - (l - 1) / 2.0, 2)
    m = np.eye(l) - x @ np.linalg.pinv(x)
    m.setflags(write=False)
    return m


def grubbs_mask(windows, alpha: float = GRUBBS_ALPHA, max_removals=None) -> np.ndarray:
    """Keep-mask after iterative Grubbs screening of affine-fit residuals.

    At most ``max_removals`` (default ``l // 4``) samples are dropped per
    window; screening of a window stops at its first non-rejection.
    """
    y = np.atleast_2d(np.asarray(windows, dtype=float))
    m, l = y.shape
    if max_removals is None:
        max_removals = l // 4
    x = np.arange(l, dtype=float) - (l - 1) / 2.0
    keep = np.ones((m, l), dtype=bool)
    crit = np.array([grubbs_critical(k, alpha) for k in range(l + 1)])
    scale = np.max(np.abs(y), axis=1) + 1e-300
    rows = np.arange(m)
    # first pass: every sample kept, residuals through a fixed matrix
    r = y @ _residual_maker(l)
    r -= r.mean(axis=1, keepdims=True)
    dev = np.abs(r)
    n = np.full(m, float(l))
    for k in range(max_removals):
        if k:
            ys, w = y[rows], keep[rows].astype(float)
            a, b = _weighted_line(ys, w, x)
            r = (ys - (a[:, None] + b[:, None] * x)) * w
            n = w.sum(axis=1)
            dev = np.abs(r - (r.sum(axis=1) / n)[:, None]) * w
        sd = np.sqrt(np.einsum("ij,ij->i", dev, dev) / np.maximum(n - 1, 1))
        idx = np.argmax(dev, axis=1)
        gmax = dev[np.arange(len(rows)), idx]
        ok = sd > 1e-12 * scale[rows]
        g = np.where(ok, gmax / np.where(ok, sd, 1.0), 0.0)
        reject = ok & (n > 3) & (g > crit[n.astype(int)])
        rows, idx = rows[reject], idx[reject]
        keep[rows, idx] = False
        if len(rows) == 0:
            break
    return keep


# -- robust local regression -------------------------------------------------


@lru_cache(maxsize=None)
def tricube_kernel(l: int) -> np.ndarray:
    """``l x l`` tricube weights; reaches ``l // 2`` samples either side."""
    h = l // 2 + 1
    d = np.abs(np.subtract.outer(np.arange(l), np.arange(l))) / h
    k = np.clip(1.0 - d ** 3, 0.0, None) ** 3
    k.setflags(write=False)
    return k


@lru_cache(maxsize=None)
def _unit_hat(l: int) -> np.ndarray:
    """Transposed smoother matrix of the unweighted local linear fit."""
    x = np.arange(l, dtype=float) - (l - 1) / 2.0
    h = _local_linear(np.eye(l), np.ones((l, l)), tricube_kernel(l), x)
    # row k of h is the fit of the unit impulse at k, i.e. column k of the smoother
    h.setflags(write=False)
    return h


def _local_linear(y, w, kernel, x):
    # kernel is symmetric, so row j of (w @ kernel) sums kernel[j, k] * w[k]
    m, l = y.shape
    mom = np.empty((5, m, l))
    np.multiply(w, x, out=mom[1])
    np.multiply(w, y, out=mom[3])
    mom[0] = w
    np.multiply(mom[1], x, out=mom[2])
    np.multiply(mom[3], x, out=mom[4])
    s0, s1, s2, sy, sxy = (mom.reshape(-1, l) @ kernel).reshape(5, m, l)
    det = s0 * s2 - s1 * s1
    bad = det <= 1e-9 * s0 * s0
    any_bad = bad.any()
    if any_bad:
        det[bad] = 1.0
        s0[bad] = 1.0
    b = (s0 * sxy - s1 * sy) / det
    fit = (sy - b * s1) / s0 + b * x
    if any_bad:
        # too few effective points around j: fall back to the window line
        ga, gb = _weighted_line(y, w, x)
        fallback = ga[:, None] + gb[:, None] * x
        fit[bad] = fallback[bad]
    return fit


def _kept_median(values, keep):
    """Row medians over the kept entries (every row keeps at least one)."""
    # sorting short rows beats np.median's partition
    if keep.all():
        v = np.sort(values, axis=1)
        l = v.shape[1]
        return 0.5 * (v[:, (l - 1) // 2] + v[:, l // 2])
    v = np.where(keep, values, np.inf)
    v.sort(axis=1)
    n = keep.sum(axis=1)
    r = np.arange(len(v))
    return 0.5 * (v[r, (n - 1) // 2] + v[r, n // 2])


def rlrs(windows, keep=None, iterations: int = ROBUST_ITERATIONS) -> np.ndarray:
    """Robust local linear smoothing of each window.

    Samples excluded by ``keep`` get zero weight throughout and are
    replaced by the local fit.  Affine windows are reproduced exactly.
    """
    y = np.atleast_2d(np.asarray(windows, dtype=float))
    m, l = y.shape
    if keep is None:
        keep = np.ones_like(y, dtype=bool)
    x = np.arange(l, dtype=float) - (l - 1) / 2.0
    kernel = tricube_kernel(l)
    base = keep.astype(float)
    scale = np.max(np.abs(y), axis=1) + 1e-300
    fit = y @ _unit_hat(l)
    partial = ~keep.all(axis=1)
    if partial.any():
        fit[partial] = _local_linear(y[partial], base[partial], kernel, x)
    for _ in range(iterations):
        resid = np.abs(y - fit)
        mad = np.maximum(_kept_median(resid, keep), 1e-12 * scale)[:, None]
        u = resid / (BISQUARE_C * mad)
        w = np.square(np.clip(1.0 - u * u, 0.0, None)) * base
        fit = _local_linear(y, w, kernel, x)
    return fit


def refit_windows(windows, alpha: float = GRUBBS_ALPHA, block: int = 512) -> np.ndarray:
    """Grubbs screening followed by robust local regression, row-wise.

    Screening runs on all rows at once; the smoothing runs in blocks so
    its temporaries stay cache-sized.
    """
    y = np.atleast_2d(np.asarray(windows, dtype=float))
    keep = grubbs_mask(y, alpha)
    out = np.empty_like(y)
    for i in range(0, len(y), block):
        out[i : i + block] = rlrs(y[i : i + block], keep[i : i + block])
    return out


def refit_interval(window) -> np.ndarray:
    """Refit one interval; outliers are replaced by robust local fits."""
    w = np.asarray(window, dtype=float)
    if w.ndim != 1 or len(w) < 4:
        raise ParameterError("refit needs a one-dimensional window of at least 4 samples")
    return refit_windows(w[None, :])[0]


# -- slope series ------------------------------------------------------------


def interval_bounds(n_s: int, l: int) -> tuple:
    """Half-open sample range of the interval centred on ``n_s``."""
    return n_s - l // 2, n_s + l // 2


def interval_slope(s: SampleSeries, n_s: int, l=None, refit: bool = True) -> float:
    """Interval slope at one sample of the raw series."""
    l = check_interval(l if l is not None else default_interval(s.samples_per_cycle))
    lo, hi = interval_bounds(int(n_s), l)
    if lo < 0 or hi > len(s):
        raise RangeError(f"interval [{lo}, {hi}) outside series of {len(s)} samples")
    w = s.values[lo:hi]
    if refit:
        w = refit_interval(w)
    return float(llsf_slope(w))


def slopes_of(values, l: int, refit: bool = True) -> np.ndarray:
    """Interval slopes of a raw array; undefined boundary samples are NaN."""
    values = np.asarray(values, dtype=float)
    out = np.full(len(values), np.nan)
    if len(values) < l:
        return out
    win = sliding_window_view(values, l)
    if refit:
        win = refit_windows(win)
    out[l // 2 : l // 2 + len(win)] = llsf_slope(win)
    return out


def interval_slope_series(
    s: SampleSeries,
    l=None,
    fc=DEFAULT_CUTOFF,
    refit: bool = True,
    source_id: str = "",
    clean_first: bool = False,
) -> IntervalSlopeSeries:
    """Low-pass, refit each interval, take its LLSF slope, locate crossings.

    ``fc=None`` skips the low-pass stage and ``refit=False`` skips the
    Grubbs/robust-regression stage (both used for comparisons only).
    ``clean_first`` is described in :func:`interval_slope_batch`.
    """
    n_t = s.samples_per_cycle
    l = check_interval(l if l is not None else default_interval(n_t))
    if len(s) < 2 * n_t:
        raise ParameterError("interval slopes need at least two cycles of data")
    if refit and clean_first:
        s = s.with_values(despike(s.values, l))
    src = lowpass(s, fc) if fc is not None else s
    iss = IntervalSlopeSeries(slopes_of(src.values, l, refit and not clean_first), l, n_t, source_id)
    return iss.with_crossings(is_zero_crossings(iss))


def _sign_changes(x: np.ndarray) -> np.ndarray:
    """Interpolated positions where a finite series changes sign."""
    a, b = x[:-1], x[1:]
    ok = np.isfinite(a) & np.isfinite(b)
    strict = ok & (a * b < 0)
    idx = np.nonzero(strict)[0]
    pos = idx + a[idx] / (a[idx] - b[idx])
    zeros = np.nonzero(x == 0.0)[0].astype(float)
    return np.sort(np.concatenate([pos, zeros]))


def is_zero_crossings(iss: IntervalSlopeSeries) -> list:
    """Zero-crossings of the slope series, one pair per fully defined cycle.

    Nominal positions come from the cycle's fundamental phasor; each is
    moved to the nearest actual sign change within ``N_T/16`` samples when
    one exists.
    """
    x = iss.slopes
    n_t = iss.samples_per_cycle
    tol = n_t / 16.0
    n_c = len(x) // n_t
    cyc = x[: n_c * n_t].reshape(n_c, n_t)
    rows = np.nonzero(np.all(np.isfinite(cyc), axis=1))[0]
    if len(rows) == 0:
        return []
    # fundamental phasor of every usable cycle at once (see phasor_of)
    ph = (2.0 / n_t) * (cyc[rows] @ _dft_row(n_t))
    peak = np.maximum(1.0, np.max(np.abs(cyc[rows]), axis=1))
    live = np.abs(ph) > 1e-15 * peak
    rows, phase = rows[live], np.angle(ph[live])
    first = ((np.pi / 2 - phase) / (2 * np.pi) * n_t) % (n_t / 2.0)
    nominal = (rows * n_t + first)[:, None] + np.array([0.0, n_t / 2.0])
    nominal = nominal.ravel()
    pos = nominal
    changes = _sign_changes(x)
    if len(changes):
        j = np.searchsorted(changes, nominal)
        lo = changes[np.clip(j - 1, 0, len(changes) - 1)]
        hi = changes[np.clip(j, 0, len(changes) - 1)]
        best = np.where(np.abs(lo - nominal) <= np.abs(hi - nominal), lo, hi)
        pos = np.where(np.abs(best - nominal) <= tol, best, nominal)
    return sorted(set(np.floor(pos + 0.5).astype(int).tolist()))


def despike(values, l: int, alpha: float = GRUBBS_ALPHA) -> np.ndarray:
    """Replace samples screened out of their own centred interval.

    Each sample is tested by Grubbs screening of the interval centred on
    it; rejected samples take the robust local fit of that interval.
    Samples within ``l/2`` of either end are left alone.
    """
    v = np.array(values, dtype=float)
    l = check_interval(l)
    if len(v) < l:
        return v
    win = sliding_window_view(v, l)
    c = l // 2
    keep = grubbs_mask(win, alpha)
    rows = np.nonzero(~keep[:, c])[0]
    if len(rows):
        fit = rlrs(win[rows], keep[rows])
        v[rows + c] = fit[:, c]
    return v


def interval_slope_batch(
    series,
    l=None,
    fc=DEFAULT_CUTOFF,
    refit: bool = True,
    source_ids=None,
    clean_first: bool = False,
) -> list:
    """:func:`interval_slope_series` for several synchronous channels at once.

    All windows go through one refit call, which is noticeably cheaper
    than channel-by-channel processing.  Results agree with the single
    channel path to rounding.

    ``clean_first`` swaps the stage order: raw samples are despiked with
    the Grubbs/robust-regression screen before the low-pass, and the
    filtered intervals are not refit again.
    """
    series = list(series)
    if not series:
        return []
    ids = list(source_ids) if source_ids is not None else [""] * len(series)
    n_t = series[0].samples_per_cycle
    l = check_interval(l if l is not None else default_interval(n_t))
    for s in series:
        if len(s) < 2 * n_t:
            raise ParameterError("interval slopes need at least two cycles of data")
    if refit and clean_first:
        series = [s.with_values(despike(s.values, l)) for s in series]
    if fc is not None and len({len(s) for s in series}) == 1:
        src = list(lowpass_rows(np.vstack([s.values for s in series]), series[0].fs, n_t, fc))
    else:
        src = [lowpass(s, fc).values if fc is not None else s.values for s in series]
    wins = [sliding_window_view(v, l) for v in src]
    stacked = np.concatenate(wins)
    if refit and not clean_first:
        stacked = refit_windows(stacked)
    slopes = llsf_slope(stacked)
    out, pos = [], 0
    for v, w, sid in zip(src, wins, ids):
        arr = np.full(len(v), np.nan)
        arr[l // 2 : l // 2 + len(w)] = slopes[pos : pos + len(w)]
        pos += len(w)
        iss = IntervalSlopeSeries(arr, l, n_t, sid)
        out.append(iss.with_crossings(is_zero_crossings(iss)))
    return out
