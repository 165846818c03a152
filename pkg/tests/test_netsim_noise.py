import math

import numpy as np
import pytest

from hifdetect.errors import ParameterError
from hifdetect.netsim.model import DistortionSpec
from hifdetect.netsim.noise import add_noise, measured_snr_db, periodic_impulses, switching_step
from hifdetect.netsim.solvers import solve

from conftest import NT, fault_record, resonant_params


@pytest.fixture(scope="module")
def steady():
    return solve(resonant_params(), DistortionSpec(I_fM=10.0, I_fM_dist=6.0, phi=0.2), cycles=30)


def test_infinite_snr_is_identity(steady):
    assert add_noise(steady, math.inf, 0.0) is steady


@pytest.mark.parametrize("snr", [25.0, 30.0, 40.0])
def test_measured_snr_close_to_request(steady, snr):
    noisy = add_noise(steady, snr, seed=4)
    for fid, s in steady.feeders:
        clean, dirty = s.values, noisy.channel(fid).values
        for c in range(0, 30, 10):
            w = slice(c * NT, (c + 10) * NT)
            assert measured_snr_db(clean[w], dirty[w]) == pytest.approx(snr, abs=0.5)


def test_same_seed_same_output(steady):
    a = add_noise(steady, 30.0, 0.5, 3.0, seed=9)
    b = add_noise(steady, 30.0, 0.5, 3.0, seed=9)
    c = add_noise(steady, 30.0, 0.5, 3.0, seed=10)
    for fid in steady.feeder_ids:
        assert a.channel(fid).values.tobytes() == b.channel(fid).values.tobytes()
        assert not np.array_equal(a.channel(fid).values, c.channel(fid).values)


def test_impulse_rate_and_size(steady):
    noisy = add_noise(steady, math.inf, impulse_rate=2.0, impulse_gain=5.0, seed=1)
    s = steady.channel("F1")
    diff = noisy.channel("F1").values - s.values
    hits = np.nonzero(diff)[0]
    assert 30 <= len(hits) <= 95
    assert np.allclose(np.abs(diff[hits]), 5.0 * np.max(np.abs(s.values)))


def test_periodic_impulses_one_per_cycle(steady):
    hit = periodic_impulses(steady, gain=10.0, seed=2)
    for fid, s in steady.feeders:
        diff = hit.channel(fid).values - s.values
        per_cycle = np.count_nonzero(diff.reshape(30, NT), axis=1)
        assert np.all(per_cycle == 1)
    assert np.array_equal(hit.u0b.values, steady.u0b.values)


def test_switching_step_keeps_kcl():
    rec = fault_record(resonant_params())
    switched = switching_step(rec, 10.5, "F1", step=0.3)
    total = sum(s.values for _, s in switched.feeders)
    assert np.max(np.abs(total)) < 1e-9 * max(np.max(np.abs(s.values)) for _, s in rec.feeders)
    assert not np.array_equal(switched.channel("F1").values, rec.channel("F1").values)
    with pytest.raises(ParameterError):
        switching_step(rec, 99.0, "F1")
    with pytest.raises(ParameterError):
        switching_step(rec, 5.0, "T")


def test_noise_argument_checks(steady):
    with pytest.raises(ParameterError):
        add_noise(steady, 0.0)
    with pytest.raises(ParameterError):
        add_noise(steady, 30.0, impulse_rate=-1.0)
