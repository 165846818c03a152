"""Closed-form zero-sequence waveforms for the three neutral groundings.

Every channel is a sinusoid plus a distortion term proportional to the
fault-current distortion (or its derivative).  The faulty-feeder channel is
always closed through Kirchhoff's current law at the bus, so the measured
channels sum to zero sample by sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from ..errors import ParameterError
from ..signal import DEFAULT_F0, DEFAULT_FS, NeutralType, SampleSeries, SynchronizedRecord
from .model import (
    TRANSFORMER_ID,
    DistortionSpec,
    NetworkParams,
    distortion_wave,
    feeder_id,
    sample_times,
)


@dataclass
class Components:
    """Sinusoidal and distorted parts of every channel, before assembly."""

    time: np.ndarray
    omega: float
    sinusoid: dict
    distortion: dict
    u0b_sinusoid: np.ndarray
    u0b_distortion: np.ndarray
    fault_sinusoid: np.ndarray
    fault_distortion: np.ndarray
    constants: dict = field(default_factory=dict)

    @property
    def channel_ids(self) -> list:
        return list(self.sinusoid)


def _integrate(x: np.ndarray, fs: float, n_t: int) -> np.ndarray:
    """Running trapezoidal integral with each cycle's mean removed."""
    y = cumulative_trapezoid(x, dx=1.0 / fs, initial=0.0)
    full = len(y) // n_t
    if full == 0:
        return y - y.mean()
    means = y[: full * n_t].reshape(full, n_t).mean(axis=1)
    per_sample = np.repeat(means, n_t)
    tail = len(y) - full * n_t
    if tail:
        per_sample = np.concatenate([per_sample, np.full(tail, means[-1])])
    return y - per_sample


def _check_spec(spec: DistortionSpec):
    if not isinstance(spec, DistortionSpec):
        raise ParameterError("spec must be a DistortionSpec")


def resonant_coefficients(params: NetworkParams) -> dict:
    """Distortion transfer ratios of the coil and each feeder capacitance.

    ``A_L/I`` and ``A_C0i/I`` are the particular-solution amplitudes of the
    second-order equation per unit fault distortion; ``faulty`` is the
    ratio applied to the faulty feeder.
    """
    w, L = params.omega, params.L
    den = 1.0 - 4.0 * w * w * L * params.C0_sum
    c_n = params.C0[params.faulty]
    return {
        "A_L": -1.0 / den,
        "A_C": [4.0 * w * w * L * c / den for c in params.C0],
        "faulty": (1.0 - 4.0 * w * w * L * (params.C0_sum - c_n)) / den,
    }


def resonant_components(params, spec, fs=DEFAULT_FS, cycles=10, f0=DEFAULT_F0) -> Components:
    if params.neutral is not NeutralType.RESONANT:
        raise ParameterError("resonant solver needs a resonant network")
    _check_spec(spec)
    w = 2 * math.pi * f0
    t = sample_times(fs, cycles, f0)
    L, C, n = params.L, params.C0, params.faulty
    i_ml_minus_ic = 1.0 / (w * L) - w * params.C0_sum
    if i_ml_minus_ic <= 0:
        raise ParameterError("coil current does not exceed the capacitive current")
    U = spec.I_fM / i_ml_minus_ic
    I_ML = U / (w * L)
    I_MC = [w * c * U for c in C]
    coef = resonant_coefficients(params)

    base = np.sin(w * t + spec.phi)
    d_fault = distortion_wave(w * t + spec.phi - math.pi, spec, w)
    d_phi = -d_fault

    sinus, dist = {}, {}
    for i in range(params.n_feeders):
        fid = feeder_id(i)
        if i == n:
            amp = I_ML - sum(I_MC[k] for k in range(len(C)) if k != n)
            sinus[fid] = amp * base
            dist[fid] = coef["faulty"] * d_phi
        else:
            sinus[fid] = I_MC[i] * base
            dist[fid] = coef["A_C"][i] * d_phi
    sinus[TRANSFORMER_ID] = -I_ML * base
    dist[TRANSFORMER_ID] = -coef["A_L"] * d_fault

    cap_total = sum(coef["A_C"]) * d_phi
    n_t = int(round(fs / f0))
    comps = Components(
        time=t,
        omega=w,
        sinusoid=sinus,
        distortion=dist,
        u0b_sinusoid=U * np.sin(w * t + spec.phi - math.pi / 2),
        u0b_distortion=_integrate(cap_total, fs, n_t) / params.C0_sum,
        fault_sinusoid=spec.I_fM * np.sin(w * t + spec.phi - math.pi),
        fault_distortion=d_fault,
        constants={"U_M": U, "I_ML": I_ML, "I_MC": I_MC, **coef},
    )
    comps.constants["cap_distortion"] = cap_total
    return comps


def isolated_components(params, spec, fs=DEFAULT_FS, cycles=10, f0=DEFAULT_F0) -> Components:
    if params.neutral is not NeutralType.ISOLATED:
        raise ParameterError("isolated solver needs an isolated network")
    _check_spec(spec)
    w = 2 * math.pi * f0
    t = sample_times(fs, cycles, f0)
    caps = list(params.C0) + [params.C0L]
    total = sum(caps)
    n = params.faulty
    U = spec.I_fM / (w * total)
    base = np.sin(w * t + spec.phi)
    d_phi = distortion_wave(w * t + spec.phi, spec, w)

    ids = [feeder_id(i) for i in range(params.n_feeders)] + [TRANSFORMER_ID]
    sinus, dist = {}, {}
    for i, (fid, c) in enumerate(zip(ids, caps)):
        if i == n:
            rest = total - c
            sinus[fid] = -w * rest * U * base
            dist[fid] = -(rest / total) * d_phi
        else:
            sinus[fid] = w * c * U * base
            dist[fid] = (c / total) * d_phi
    n_t = int(round(fs / f0))
    return Components(
        time=t,
        omega=w,
        sinusoid=sinus,
        distortion=dist,
        u0b_sinusoid=U * np.sin(w * t + spec.phi - math.pi / 2),
        u0b_distortion=_integrate(d_phi, fs, n_t) / total,
        fault_sinusoid=spec.I_fM * base,
        fault_distortion=d_phi,
        constants={"U_M": U, "C_total": total},
    )


def low_resistor_components(params, spec, fs=DEFAULT_FS, cycles=10, f0=DEFAULT_F0) -> Components:
    if params.neutral is not NeutralType.LOW_RESISTOR:
        raise ParameterError("low-resistor solver needs a low-resistor network")
    _check_spec(spec)
    w = 2 * math.pi * f0
    R, C, n = params.R_N, params.C0, params.faulty
    theta = math.atan(1.0 / (w * R * params.C0_sum))
    if not math.pi / 4 < theta < math.pi / 2:
        raise ParameterError(f"theta={theta:.4f} rad outside (pi/4, pi/2)")
    if spec.theta is not None and abs(spec.theta - theta) > 1e-9:
        raise ParameterError("spec.theta disagrees with the network admittance angle")
    rest = params.C0_sum - C[n]
    theta_p = math.atan(1.0 / (w * R * rest))
    if not theta < theta_p < math.pi / 2:
        raise ParameterError("faulty-feeder phase angle out of range")

    t = sample_times(fs, cycles, f0)
    U = spec.I_fM / math.hypot(1.0 / R, w * params.C0_sum)
    x_f = w * t + spec.phi - theta
    d_f = distortion_wave(x_f, spec, w)
    dd_f = w * distortion_wave(x_f, spec, w, derivative=True)
    # capacitive distortion: the derivative of a double-frequency wave is
    # the same wave advanced by a quarter of its period
    d_cap = distortion_wave(x_f + math.pi / 4, spec, w)

    sinus, dist = {}, {}
    sinus[TRANSFORMER_ID] = (U / R) * np.sin(w * t + spec.phi - math.pi / 2)
    dist[TRANSFORMER_ID] = d_f
    healthy_sin = np.zeros_like(t)
    healthy_dist = np.zeros_like(t)
    for i, c in enumerate(C):
        if i == n:
            continue
        fid = feeder_id(i)
        sinus[fid] = w * c * U * np.sin(w * t + spec.phi)
        dist[fid] = 2 * w * R * c * d_cap
        healthy_sin += sinus[fid]
        healthy_dist += dist[fid]
    sinus[feeder_id(n)] = -(sinus[TRANSFORMER_ID] + healthy_sin)
    dist[feeder_id(n)] = -(dist[TRANSFORMER_ID] + healthy_dist)
    order = [feeder_id(i) for i in range(params.n_feeders)] + [TRANSFORMER_ID]
    sinus = {k: sinus[k] for k in order}
    dist = {k: dist[k] for k in order}
    return Components(
        time=t,
        omega=w,
        sinusoid=sinus,
        distortion=dist,
        u0b_sinusoid=R * sinus[TRANSFORMER_ID],
        u0b_distortion=R * dist[TRANSFORMER_ID],
        fault_sinusoid=spec.I_fM * np.sin(w * t + spec.phi - theta),
        fault_distortion=d_f + R * params.C0_sum * dd_f,
        constants={
            "U_M": U,
            "theta": theta,
            "theta_prime": theta_p,
            "A_C": [2 * w * R * c for c in C],
        },
    )


_COMPONENTS = {
    NeutralType.RESONANT: resonant_components,
    NeutralType.ISOLATED: isolated_components,
    NeutralType.LOW_RESISTOR: low_resistor_components,
}


def network_components(params, spec, fs=DEFAULT_FS, cycles=10, f0=DEFAULT_F0) -> Components:
    return _COMPONENTS[params.neutral](params, spec, fs, cycles, f0)


def assemble(
    params: NetworkParams,
    comps: Components,
    fs: float,
    f0: float,
    onset_cycle: float = 0,
    prefault_level: float = 0.0,
    ramp_cycles: float = 0.0,
) -> SynchronizedRecord:
    """Sum components into a record, optionally with a pre-fault segment.

    Before ``onset_cycle`` the sinusoids are scaled by ``prefault_level``
    and the distortion is absent; both grow to full size over
    ``ramp_cycles`` along a raised-cosine envelope.  Each part satisfies
    KCL on its own, so the gating keeps the channel sum at zero.
    """
    n = len(comps.time)
    onset = int(round(onset_cycle * fs / f0))
    ramp = max(int(round(ramp_cycles * fs / f0)), 0)
    k = np.arange(n) - onset
    if ramp:
        d_env = 0.5 - 0.5 * np.cos(np.pi * np.clip(k / ramp, 0.0, 1.0))
    else:
        d_env = (k >= 0).astype(float)
    s_env = prefault_level + (1.0 - prefault_level) * d_env
    feeders = []
    for fid in comps.channel_ids:
        v = comps.sinusoid[fid] * s_env + comps.distortion[fid] * d_env
        feeders.append((fid, SampleSeries(v, fs, f0)))

    if params.neutral is NeutralType.LOW_RESISTOR:
        u_dist = comps.u0b_distortion * d_env
    elif np.any(d_env < 1.0):
        n_t = int(round(fs / f0))
        src = comps.constants.get("cap_distortion", comps.fault_distortion)
        if params.neutral is NeutralType.RESONANT:
            u_dist = _integrate(src * d_env, fs, n_t) / params.C0_sum
        else:
            u_dist = _integrate(src * d_env, fs, n_t) / comps.constants["C_total"]
    else:
        u_dist = comps.u0b_distortion
    u0b = SampleSeries(comps.u0b_sinusoid * s_env + u_dist, fs, f0)

    fault = comps.fault_sinusoid + comps.fault_distortion
    n_t = int(round(fs / f0))
    meta = {
        "faulty_feeder": params.faulty_id,
        "neutral": params.neutral.value,
        "onset_cycle": onset_cycle,
        "fault_rms": float(np.sqrt(np.mean(fault[:n_t] ** 2))) if n >= n_t else float("nan"),
        "U_M": comps.constants["U_M"],
    }
    for key in ("theta", "theta_prime"):
        if key in comps.constants:
            meta[key] = comps.constants[key]
    return SynchronizedRecord(u0b, tuple(feeders), params.neutral, meta)


def solve_resonant(params, spec, fs=DEFAULT_FS, cycles=10, f0=DEFAULT_F0, **kw) -> SynchronizedRecord:
    return assemble(params, resonant_components(params, spec, fs, cycles, f0), fs, f0, **kw)


def solve_isolated(params, spec, fs=DEFAULT_FS, cycles=10, f0=DEFAULT_F0, **kw) -> SynchronizedRecord:
    return assemble(params, isolated_components(params, spec, fs, cycles, f0), fs, f0, **kw)


def solve_low_resistor(params, spec, fs=DEFAULT_FS, cycles=10, f0=DEFAULT_F0, **kw) -> SynchronizedRecord:
    return assemble(params, low_resistor_components(params, spec, fs, cycles, f0), fs, f0, **kw)


def solve(params, spec, fs=DEFAULT_FS, cycles=10, f0=DEFAULT_F0, **kw) -> SynchronizedRecord:
    """Dispatch on ``params.neutral``."""
    return assemble(params, network_components(params, spec, fs, cycles, f0), fs, f0, **kw)


def superposition_sign(sinusoid: np.ndarray, distortion: np.ndarray) -> int:
    """+1 when the distortion enlarges the sinusoid, -1 when it shrinks it.

    Decided by the sign of their inner product over the supplied span,
    i.e. whether the RMS of the composite exceeds that of the sinusoid to
    first order.
    """
    return 1 if float(np.dot(sinusoid, distortion)) > 0 else -1
