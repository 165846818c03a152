import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hifdetect.detect import local_extrema, scan_half_cycles
from hifdetect.distortion import (
    grubbs_critical,
    grubbs_mask,
    interval_slope,
    interval_slope_batch,
    interval_slope_series,
    llsf_slope,
    refit_interval,
    refit_windows,
    slopes_of,
)
from hifdetect.errors import ParameterError, RangeError
from hifdetect.netsim.noise import add_noise
from hifdetect.signal import SampleSeries

from conftest import NT, fault_record, resonant_params, sine


def normal_equation_slope(y):
    x = np.vstack([np.arange(len(y), dtype=float), np.ones(len(y))]).T
    return np.linalg.solve(x.T @ x, x.T @ y)[0]


def test_llsf_matches_normal_equations():
    rng = np.random.default_rng(0)
    for _ in range(200):
        y = rng.normal(size=16) * rng.uniform(0.1, 100)
        assert llsf_slope(y) == pytest.approx(normal_equation_slope(y), abs=1e-12)


def test_llsf_on_affine_input():
    n = np.arange(16.0)
    assert llsf_slope(2 * n + 3) == pytest.approx(2.0, abs=1e-13)
    assert llsf_slope(np.full(16, 7.0)) == 0.0


def test_interval_slope_of_a_line():
    s = SampleSeries(2.0 * np.arange(512) + 3.0)
    assert interval_slope(s, 100) == pytest.approx(2.0, abs=1e-9)
    assert interval_slope(s, 100, refit=False) == pytest.approx(2.0, abs=1e-12)


def test_interval_slope_range():
    s = SampleSeries(np.zeros(256))
    with pytest.raises(RangeError):
        interval_slope(s, 3)
    with pytest.raises(RangeError):
        interval_slope(s, 250)
    with pytest.raises(ParameterError):
        interval_slope(s, 100, l=7)


def test_grubbs_critical_known_value():
    # tabulated two-sided value for n = 16, alpha = 0.05
    assert grubbs_critical(16) == pytest.approx(2.586, abs=2e-3)


def test_grubbs_flags_single_outlier():
    y = np.sin(np.linspace(0, 0.5, 16))
    y[5] += 50.0
    keep = grubbs_mask(y[None, :])[0]
    assert not keep[5]
    assert keep.sum() == 15


def test_refit_reproduces_a_ramp():
    y = 0.3 * np.arange(16) - 1.0
    assert np.max(np.abs(refit_interval(y) - y)) < 1e-9


def test_refit_restores_outlier():
    base = np.sin(2 * math.pi * np.arange(16) / NT + 0.3)
    y = base.copy()
    y[7] = 100 * np.max(np.abs(base))
    fixed = refit_interval(y)
    assert abs(fixed[7] - base[7]) < 0.05 * np.max(np.abs(base))
    assert llsf_slope(fixed) == pytest.approx(llsf_slope(base), rel=0.05)


def test_refit_reduces_slope_variance():
    rng = np.random.default_rng(3)
    base = np.sin(2 * math.pi * np.arange(16) / NT)
    noisy = base + rng.normal(0, 0.02, (1000, 16))
    hits = rng.random((1000, 16)) < 0.05
    noisy[hits] += rng.choice([-1.0, 1.0], hits.sum()) * 0.5
    raw_err = llsf_slope(noisy) - llsf_slope(base)
    fit_err = llsf_slope(refit_windows(noisy)) - llsf_slope(base)
    assert np.var(fit_err) < 0.5 * np.var(raw_err)


def test_undefined_boundaries_are_nan():
    iss = interval_slope_series(SampleSeries(sine(4)))
    assert np.isnan(iss.slopes[:8]).all()
    assert np.isnan(iss.slopes[-7:]).all()
    assert np.isfinite(iss.slopes[8:-7]).all()


def test_sine_crossings_at_signal_peaks():
    for phase, first_peak in ((0.0, 32), (math.pi / 2, 0), (math.pi / 4, 16)):
        iss = interval_slope_series(SampleSeries(sine(6, phase=phase)))
        z = np.array(iss.zero_crossings)
        expected = first_peak + NT + 64 * np.arange(len(z)) + 0.5
        assert np.max(np.abs(z - expected)) <= 1.0


def test_noisy_crossings_stay_close():
    rec = fault_record(resonant_params(), cycles=12)
    noisy = add_noise(rec, 30.0, seed=5)
    # noise is sized from the whole record, so skip the weak pre-fault
    # segment and the onset ramp
    start = 6 * NT
    for fid in rec.feeder_ids:
        a = [z for z in interval_slope_series(rec.channel(fid)).zero_crossings if z >= start]
        b = [z for z in interval_slope_series(noisy.channel(fid)).zero_crossings if z >= start - 4]
        b = b[len(b) - len(a):]
        assert np.max(np.abs(np.array(a) - np.array(b))) <= 4


def test_sinusoid_slope_has_single_hump_per_half_cycle():
    iss = interval_slope_series(SampleSeries(sine(6)))
    scan = scan_half_cycles(iss)
    for cf in scan.cycles:
        for h in cf.halves:
            lo, hi = h.bounds[0] + h.d, h.bounds[1] - h.d
            maxima, minima = local_extrema(np.abs(iss.slopes[lo : hi + 1]))
            assert len(minima) == 0 and len(maxima) == 1
    assert not any(scan.flags.values())


def test_faulty_channel_shows_m_shapes(resonant_record):
    rec = resonant_record
    iss = interval_slope_series(rec.channel(rec.meta["faulty_feeder"]))
    flags = scan_half_cycles(iss).flags
    assert sum(flags[c] for c in range(6, 28)) == 22


@settings(max_examples=20, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(-1e3, 1e3))
def test_scale_and_offset(a, b):
    x = sine(4, phase=0.3) + 0.2 * sine(4, phase=1.1) ** 3
    base = interval_slope_series(SampleSeries(x))
    moved = interval_slope_series(SampleSeries(a * x + b))
    ok = base.defined
    assert np.allclose(moved.slopes[ok], a * base.slopes[ok], rtol=1e-7, atol=1e-9 * a)


def test_batch_agrees_with_single(resonant_record):
    rec = resonant_record
    series = [rec.u0b] + [s for _, s in rec.feeders]
    for clean in (False, True):
        batch = interval_slope_batch(series, clean_first=clean)
        for s, b in zip(series, batch):
            one = interval_slope_series(s, clean_first=clean)
            ok = one.defined
            assert np.array_equal(ok, b.defined)
            assert np.allclose(one.slopes[ok], b.slopes[ok], rtol=1e-12, atol=1e-12)
            assert one.zero_crossings == b.zero_crossings


def test_slopes_of_short_input():
    assert np.isnan(slopes_of(np.zeros(10), 16)).all()
    with pytest.raises(ParameterError):
        interval_slope_series(SampleSeries(np.zeros(200)))


def impulse_change(record, clean_first):
    """Worst |IS| change from one 10x impulse per cycle, over each channel's peak |IS|."""
    from hifdetect.netsim.noise import periodic_impulses

    hit = periodic_impulses(record, gain=10.0, seed=11)
    worst = 0.0
    for fid in record.feeder_ids:
        a = interval_slope_series(record.channel(fid), clean_first=clean_first).slopes
        b = interval_slope_series(hit.channel(fid), clean_first=clean_first).slopes
        inner = slice(2 * NT, -2 * NT)
        peak = np.nanmax(np.abs(a[inner]))
        worst = max(worst, np.nanmax(np.abs(np.abs(b[inner]) - np.abs(a[inner]))) / peak)
    return worst


def test_impulse_robust_is_with_despiking_first(resonant_record):
    assert impulse_change(resonant_record, clean_first=True) < 0.2


def test_impulse_robust_is_default_order(resonant_record):
    # the low-pass smears a single-sample impulse over many samples before
    # any interval sees it, so the refit cannot isolate it; kept as a
    # visible failure of the target behaviour (see the decision ledger)
    assert impulse_change(resonant_record, clean_first=False) < 0.2
