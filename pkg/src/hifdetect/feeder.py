"""Faulty-feeder identification from per-half-cycle INDEX values.

Within each half-cycle recorded as an M shape, a feeder's INDEX compares
the interval slope at the two maxima with the slope at the valley and
weights the result by a direction coefficient taken from the bus
zero-sequence voltage.  Means over the identification window decide the
faulty feeder.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .detect import ChannelScan, scan_half_cycles
from .distortion import IntervalSlopeSeries, interval_slope_batch
from .errors import RangeError, SequencingError
from .signal import NeutralType

DEFAULT_WINDOW = (4, 20)

# direction-coefficient forms
DERIVATIVE = "derivative"
LEVEL = "level"

_FORMS = {
    NeutralType.RESONANT: ((DERIVATIVE, 1.0), (LEVEL, -1.0)),
    NeutralType.ISOLATED: ((DERIVATIVE, -1.0),),
    NeutralType.LOW_RESISTOR: ((LEVEL, -1.0),),
}


def c_dir_variants(neutral) -> tuple:
    """Names of the direction-coefficient forms used for a neutral type."""
    return tuple(name for name, _ in _FORMS[NeutralType.parse(neutral)])


def _raw_form(slopes: np.ndarray, variant: str, sign: float) -> np.ndarray:
    if variant == LEVEL:
        return sign * slopes
    d = np.full_like(slopes, np.nan)
    d[1:-1] = 0.5 * (slopes[2:] - slopes[:-2])
    return sign * d


def direction_series(u0b_iss: IntervalSlopeSeries, neutral, variant=None, span=None) -> np.ndarray:
    """Per-unit direction coefficient at every sample.

    The form is scaled by its largest magnitude over ``span`` (a half-open
    sample range, default the whole series), so values inside the span lie
    in ``[-1, 1]``.  NaN marks samples where the form is undefined.
    """
    neutral = NeutralType.parse(neutral)
    forms = dict(_FORMS[neutral])
    if variant is None:
        variant = _FORMS[neutral][0][0]
    if variant not in forms:
        raise ValueError(f"variant {variant!r} not used for {neutral.value} networks")
    raw = _raw_form(np.asarray(u0b_iss.slopes, float), variant, forms[variant])
    lo, hi = span if span is not None else (0, len(raw))
    part = raw[max(lo, 0) : min(hi, len(raw))]
    finite = part[np.isfinite(part)]
    peak = float(np.max(np.abs(finite))) if finite.size else 0.0
    if peak == 0.0:
        return np.zeros_like(raw)
    return raw / peak


def c_dir(u0b_iss: IntervalSlopeSeries, n_min: int, neutral, variant=None, span=None) -> float:
    """Direction coefficient at the valley sample ``n_min``."""
    series = direction_series(u0b_iss, neutral, variant, span)
    if not 0 <= n_min < len(series) or not np.isfinite(series[n_min]):
        raise RangeError(f"sample {n_min} is outside the defined slope region")
    return float(series[n_min])


def compute_index(iss: IntervalSlopeSeries, feature, cdir: float, peak: float | None = None) -> float:
    """INDEX of one half-cycle.

    ``cdir * (mean(IS at the maxima) - IS(n_min)) / |mean(IS at the maxima)|``,
    or 0 when the half-cycle is not an M shape or the mean of the maxima is
    negligible against ``peak`` (default: the channel's largest |IS|).
    """
    if not feature.is_m_shape:
        return 0.0
    s = iss.slopes
    mean_max = 0.5 * (s[feature.n_max1] + s[feature.n_max2])
    if peak is None:
        finite = s[np.isfinite(s)]
        peak = float(np.max(np.abs(finite))) if finite.size else 0.0
    if not np.isfinite(mean_max) or abs(mean_max) <= 1e-12 * peak:
        return 0.0
    return float(cdir * (mean_max - s[feature.n_min]) / abs(mean_max))


@dataclass(frozen=True)
class IndexSample:
    feeder_id: str
    half_cycle_index: int
    index_value: float
    c_dir_variant: str


@dataclass
class IdentificationReport:
    """Outcome of identification over one window.

    ``mean_index`` maps each direction-coefficient variant to a
    ``{feeder_id: mean}`` dict.  ``chosen_feeder`` is None when no feeder
    has a strictly positive, strictly largest mean (possibly a bus-side
    fault).
    """

    trigger_cycle: int
    window: tuple
    mean_index: dict
    chosen_feeder: str | None
    chosen_variant: str
    short_window: bool = False
    samples: list = field(default_factory=list)

    def means(self, variant: str | None = None) -> dict:
        return self.mean_index[variant or self.chosen_variant]


def _choose(means: dict):
    ranked = sorted(means.items(), key=lambda kv: kv[1], reverse=True)
    top_id, top = ranked[0]
    runner = ranked[1][1] if len(ranked) > 1 else -np.inf
    margin = top - runner
    chosen = top_id if top > 0 and top > runner else None
    return chosen, margin


def index_stream(iss, scan: ChannelScan, cdir_series, cycles, feeder_id, variant) -> list:
    """IndexSamples for every half-cycle of ``cycles`` (zero where not faulty)."""
    by_cycle = scan.by_cycle()
    finite = iss.slopes[np.isfinite(iss.slopes)]
    peak = float(np.max(np.abs(finite))) if finite.size else 0.0
    out = []
    for c in cycles:
        cf = by_cycle.get(c)
        for h in range(2):
            value = 0.0
            if cf is not None and cf.faulty:
                feat = cf.halves[h]
                cd = cdir_series[feat.n_min]
                if np.isfinite(cd):
                    value = compute_index(iss, feat, float(cd), peak)
            out.append(IndexSample(feeder_id, 2 * c + h, value, variant))
    return out


def identify_from_scans(
    slopes: dict,
    scans: dict,
    u0b_iss: IntervalSlopeSeries,
    neutral,
    trigger_cycle: int | None,
    n_cycles: int,
    window: tuple = DEFAULT_WINDOW,
) -> IdentificationReport:
    """Identification from precomputed slope series and M-shape scans.

    ``slopes`` and ``scans`` are keyed by feeder id in channel order.
    """
    if trigger_cycle is None:
        raise SequencingError("identification needs a detection trigger")
    neutral = NeutralType.parse(neutral)
    pre, post = window
    start = max(trigger_cycle - pre, 0)
    end = min(trigger_cycle + post, n_cycles - 1)
    short = trigger_cycle + post > n_cycles - 1 or trigger_cycle - pre < 0
    cycles = range(start, end + 1)
    n_t = u0b_iss.samples_per_cycle
    span = (start * n_t, (end + 1) * n_t)

    mean_index, samples, margins, choices = {}, [], {}, {}
    for variant in c_dir_variants(neutral):
        cd = direction_series(u0b_iss, neutral, variant, span)
        means = {}
        for fid, iss in slopes.items():
            stream = index_stream(iss, scans[fid], cd, cycles, fid, variant)
            samples.extend(stream)
            means[fid] = float(np.mean([s.index_value for s in stream])) if stream else 0.0
        mean_index[variant] = means
        choices[variant], margins[variant] = _choose(means)
    best = max(margins, key=lambda v: margins[v])
    return IdentificationReport(
        trigger_cycle=int(trigger_cycle),
        window=(start, end),
        mean_index=mean_index,
        chosen_feeder=choices[best],
        chosen_variant=best,
        short_window=short,
        samples=samples,
    )


def channel_slopes(record, config) -> tuple:
    """Interval slopes of u0b and every feeder channel, plus M-shape scans."""
    cfg = config.resolved(record.samples_per_cycle)
    ids = record.feeder_ids
    series = [record.u0b] + [s for _, s in record.feeders]
    out = interval_slope_batch(series, cfg.l, cfg.fc, cfg.refit, ["u0b"] + ids, cfg.clean_first)
    u0b_iss, rest = out[0], dict(zip(ids, out[1:]))
    scans = {
        fid: scan_half_cycles(iss, cfg.d, cfg.rho, cfg.epsilon_M, cfg.flat_tol)
        for fid, iss in rest.items()
    }
    return u0b_iss, rest, scans


def identify(record, trigger_cycle: int | None, config=None) -> IdentificationReport:
    """Name the faulty feeder of ``record`` given the detection trigger cycle."""
    from .config import PipelineConfig

    config = config or PipelineConfig(fs=record.fs, f0=record.f0)
    if trigger_cycle is None:
        raise SequencingError("identification needs a detection trigger")
    neutral = config.neutral or record.neutral
    u0b_iss, slopes, scans = channel_slopes(record, config)
    n_cycles = len(record) // record.samples_per_cycle
    return identify_from_scans(slopes, scans, u0b_iss, neutral, trigger_cycle, n_cycles, config.window)
