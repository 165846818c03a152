import math

import numpy as np
import pytest

from hifdetect.errors import ParameterError
from hifdetect.netsim.model import RESONANT_SHARE_LIMIT, DistortionSpec, NetworkParams
from hifdetect.netsim.solvers import (
    network_components,
    resonant_coefficients,
    solve,
    superposition_sign,
)
from hifdetect.signal import SampleSeries, fundamental_phasor

from conftest import isolated_params, low_resistor_params, resonant_params

W = 2 * math.pi * 50


def kcl_residual(record):
    total = sum(s.values for _, s in record.feeders)
    peak = max(np.max(np.abs(s.values)) for _, s in record.feeders)
    return np.max(np.abs(total)) / peak


def random_resonant(rng):
    while True:
        k = int(rng.integers(3, 6))
        C0 = rng.uniform(1e-6, 6e-6, k)
        n = int(rng.integers(k))
        C0[n] *= rng.uniform(0.05, 3.0)
        if C0[n] / C0.sum() < RESONANT_SHARE_LIMIT:
            return NetworkParams(C0=tuple(C0), faulty=n, neutral="resonant", v=float(rng.uniform(-0.1, -1e-3)))


def random_spec(rng, offset=True):
    amp = float(rng.uniform(1, 40))
    return DistortionSpec(
        I_fM=amp, I_fM_dist=amp * float(rng.uniform(0.1, 0.9)),
        tau=float(rng.uniform(-0.9, -0.1)), phi=float(rng.uniform(0, 2 * math.pi)),
        offset_delta=float(rng.uniform(-0.3, 0.3)) if offset else 0.0,
    )


def test_resonant_sign_structure():
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = random_resonant(rng)
        assert 4 * p.resonance > 1
        coef = resonant_coefficients(p)
        assert coef["A_L"] > 0
        assert all(a < 0 for a in coef["A_C"])


@pytest.mark.parametrize("make", [resonant_params, isolated_params, low_resistor_params])
def test_zero_distortion_gives_pure_sinusoids(make):
    spec = DistortionSpec(I_fM=10.0, I_fM_dist=0.0, phi=0.3)
    rec = solve(make(), spec, cycles=4)
    assert kcl_residual(rec) < 1e-9
    for _, s in rec.feeders:
        amp, _ = fundamental_phasor(s, 1)
        assert np.max(np.abs(s.values)) == pytest.approx(amp, rel=1e-3)


@pytest.mark.parametrize("make", [resonant_params, isolated_params, low_resistor_params])
def test_kcl_with_distortion_and_onset(make):
    spec = DistortionSpec(I_fM=10.0, I_fM_dist=6.0, phi=0.3, offset_delta=0.1)
    rec = solve(make(), spec, cycles=10, onset_cycle=3, ramp_cycles=2, prefault_level=0.02)
    assert kcl_residual(rec) < 1e-9


def test_resonant_fault_current_balance():
    p = resonant_params()
    spec = DistortionSpec(I_fM=12.0, I_fM_dist=5.0, phi=0.8)
    c = network_components(p, spec, cycles=2)
    # I_ML - sum of the capacitive peaks equals the fault-current peak
    assert c.constants["I_ML"] - sum(c.constants["I_MC"]) == pytest.approx(12.0)
    assert c.constants["I_ML"] > sum(c.constants["I_MC"])


def test_resonant_superposition_signs():
    rng = np.random.default_rng(1)
    for _ in range(100):
        p, spec = random_resonant(rng), random_spec(rng)
        c = network_components(p, spec, cycles=2)
        for fid in c.channel_ids:
            s, d = c.sinusoid[fid], c.distortion[fid]
            grows = np.max(np.abs(s + d)) > np.max(np.abs(s))
            if fid == p.faulty_id:
                assert not grows and superposition_sign(s, d) < 0
            else:
                assert grows and superposition_sign(s, d) > 0


def test_isolated_phase_opposition():
    spec = DistortionSpec(I_fM=10.0, I_fM_dist=0.0, phi=1.3)
    rec = solve(isolated_params(faulty=2), spec, cycles=3)
    _, faulty = fundamental_phasor(rec.channel("F3"), 1)
    for fid, s in rec.feeders:
        # the transformer channel is empty when C0L = 0
        if fid == "F3" or not np.any(s.values):
            continue
        _, ph = fundamental_phasor(s, 1)
        diff = abs((ph - faulty) % (2 * math.pi) - math.pi)
        assert diff < 0.01


def test_isolated_negative_superposition_everywhere():
    rng = np.random.default_rng(2)
    for _ in range(100):
        k = int(rng.integers(3, 6))
        C0 = rng.uniform(1e-6, 6e-6, k)
        C0L = float(rng.uniform(0.0, 0.05)) * C0.sum() if rng.random() < 0.5 else 0.0
        p = NetworkParams(C0=tuple(C0), faulty=int(rng.integers(k)), neutral="isolated", C0L=C0L)
        c = network_components(p, random_spec(rng), cycles=2)
        for fid in c.channel_ids:
            s, d = c.sinusoid[fid], c.distortion[fid]
            if not np.any(s):
                continue
            assert np.max(np.abs(s + d)) < np.max(np.abs(s))
            assert superposition_sign(s, d) < 0


def test_low_resistor_healthy_coefficient():
    p = low_resistor_params(faulty=0)
    c = network_components(p, DistortionSpec(I_fM=5.0, I_fM_dist=2.0), cycles=2)
    for i, cap in enumerate(p.C0):
        assert c.constants["A_C"][i] == pytest.approx(2 * W * p.R_N * cap)
    ratio = c.distortion["F2"] / c.distortion["F3"]
    assert np.allclose(ratio[np.abs(c.distortion["F3"]) > 1e-9], p.C0[1] / p.C0[2])


def test_low_resistor_faulty_angle():
    rng = np.random.default_rng(4)
    for _ in range(50):
        theta = float(rng.uniform(math.pi / 4 + 0.01, math.pi / 2 - 0.01))
        p = low_resistor_params(faulty=int(rng.integers(3)), theta=theta)
        spec = DistortionSpec(I_fM=5.0, I_fM_dist=0.0, phi=float(rng.uniform(0, 2 * math.pi)))
        c = network_components(p, spec, cycles=3)
        t, tp = c.constants["theta"], c.constants["theta_prime"]
        assert t == pytest.approx(theta)
        assert t < tp < math.pi / 2
        # fundamental of the faulty channel sits at phi - theta' - pi
        _, ph = fundamental_phasor(SampleSeries(c.sinusoid[p.faulty_id]), 1)
        expect = spec.phi - tp - math.pi - math.pi / 2
        assert abs((ph - expect + math.pi) % (2 * math.pi) - math.pi) < 1e-9


def test_low_resistor_distortion_leads_zero_crossings():
    # for the symmetric shape the distortion's fundamental crosses zero at
    # the fault-current zero crossings; on the faulty feeder those come
    # ahead of the channel's own sinusoid
    rng = np.random.default_rng(5)
    for _ in range(100):
        theta = float(rng.uniform(math.pi / 4 + 0.01, math.pi / 2 - 0.01))
        p = low_resistor_params(faulty=int(rng.integers(3)), theta=theta)
        c = network_components(p, random_spec(rng, offset=False), cycles=3)
        _, pd = fundamental_phasor(SampleSeries(c.distortion[p.faulty_id]), 1)
        _, ps = fundamental_phasor(SampleSeries(c.sinusoid[p.faulty_id]), 1)
        lead = (pd - ps + math.pi / 2) % math.pi - math.pi / 2
        assert 0 < lead < math.pi / 2


def test_low_resistor_angle_bounds():
    with pytest.raises(ParameterError):
        solve(low_resistor_params(theta=0.5), DistortionSpec(I_fM=1.0, I_fM_dist=0.1))


def test_solver_neutral_mismatch():
    from hifdetect.netsim.solvers import isolated_components, low_resistor_components, resonant_components

    spec = DistortionSpec(I_fM=1.0, I_fM_dist=0.1)
    with pytest.raises(ParameterError):
        resonant_components(isolated_params(), spec)
    with pytest.raises(ParameterError):
        isolated_components(resonant_params(), spec)
    with pytest.raises(ParameterError):
        low_resistor_components(resonant_params(), spec)


def test_bus_voltage_phase():
    spec = DistortionSpec(I_fM=10.0, I_fM_dist=0.0, phi=0.9)
    for make in (resonant_params, isolated_params):
        c = network_components(make(), spec, cycles=3)
        _, pu = fundamental_phasor(SampleSeries(c.u0b_sinusoid), 1)
        expect = 0.9 - math.pi / 2 - math.pi / 2
        assert abs((pu - expect + math.pi) % (2 * math.pi) - math.pi) < 1e-9
