"""Direct numerical integration of the neutral-path equations.

Used as an independent check on the closed-form distorted components:
the coil (resonant) or neutral-resistor (low-resistor) distortion current
is integrated from rest with a fixed-step classical Runge-Kutta scheme.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from ..errors import OracleError, ParameterError
from ..signal import DEFAULT_F0, DEFAULT_FS, NeutralType, SampleSeries
from .model import TRANSFORMER_ID, DistortionSpec, NetworkParams, synth_fault_distortion
from .solvers import network_components

OVERSAMPLE = 8
DISCARD_CYCLES = 2
# growth beyond this multiple of the forcing peak counts as divergence
BLOW_UP = 1e6


def _system(params: NetworkParams, neutral: NeutralType):
    """State matrix ``A`` and input vector ``b`` of ``x' = A x + b f``."""
    if neutral is NeutralType.RESONANT:
        k = 1.0 / (params.L * params.C0_sum)
        return np.array([[0.0, 1.0], [-k, 0.0]]), np.array([0.0, k])
    if neutral is NeutralType.LOW_RESISTOR:
        k = 1.0 / (params.R_N * params.C0_sum)
        return np.array([[-k]]), np.array([k])
    raise ParameterError(f"no differential equation for {neutral.value} networks")


def rk4_step_matrices(A: np.ndarray, b: np.ndarray, h: float) -> tuple:
    """One classical RK4 step of ``x' = A x + b f`` written as
    ``x_next = M x + g0 f(t) + gm f(t + h/2) + g1 f(t + h)``.

    The system is linear, so the four stages collapse into fixed
    matrices; applying them is the same arithmetic as stepping.
    """
    n = len(b)

    def step(x, f0, fm, f1):
        k1 = A @ x + b * f0
        k2 = A @ (x + 0.5 * h * k1) + b * fm
        k3 = A @ (x + 0.5 * h * k2) + b * fm
        k4 = A @ (x + h * k3) + b * f1
        return x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    zero = np.zeros(n)
    M = np.column_stack([step(e, 0.0, 0.0, 0.0) for e in np.eye(n)])
    return M, step(zero, 1.0, 0.0, 0.0), step(zero, 0.0, 1.0, 0.0), step(zero, 0.0, 0.0, 1.0)


def integrate(params: NetworkParams, forcing: SampleSeries, neutral=None, oversample: int = OVERSAMPLE) -> np.ndarray:
    """RK4 solution from rest at every forcing sample (no transient discard).

    The step is ``1/(oversample*fs)`` and the forcing is interpolated
    linearly between its samples.
    """
    neutral = NeutralType.parse(neutral if neutral is not None else params.neutral)
    A, b = _system(params, neutral)
    f = np.asarray(forcing.values, dtype=float)
    h = 1.0 / (forcing.fs * oversample)
    M, g0, gm, g1 = rk4_step_matrices(A, b, h)
    # forcing on the half-step grid of the fine steps
    fine = np.interp(
        np.arange(2 * oversample * (len(f) - 1) + 1) / (2.0 * oversample),
        np.arange(len(f)),
        f,
    )
    u = np.outer(g0, fine[0:-1:2]) + np.outer(gm, fine[1::2]) + np.outer(g1, fine[2::2])
    # decouple x_{k+1} = M x_k + u_k into scalar modes and run each as a
    # first-order recursive filter
    lam, V = np.linalg.eig(M)
    if np.any(np.abs(lam) > 1.0 + 1e-12):
        raise OracleError(f"step is unstable (|eigenvalue| = {np.max(np.abs(lam)):.6f})")
    w = np.linalg.solve(V, u.astype(complex))
    z = np.vstack([lfilter([0.0, 1.0], [1.0, -lm], row) for lm, row in zip(lam, w)])
    # lfilter with a one-step delay gives z_k from u_0 .. u_{k-1}; append the last step
    last = lam * z[:, -1] + w[:, -1]
    z = np.column_stack([z, last])
    x0 = (V @ z)[0].real
    y = x0[::oversample]
    limit = BLOW_UP * max(float(np.max(np.abs(f))), 1e-300)
    if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > limit:
        raise OracleError("integration diverged")
    return y


def ode_oracle(params: NetworkParams, forcing: SampleSeries, neutral=None) -> SampleSeries:
    """Neutral-path distortion current driven by ``forcing``.

    Resonant: ``i + L*C0sum*i'' = f``; low-resistor: ``i + R_N*C0sum*i' = f``.
    Starts from rest and drops the first two cycles as transient; the
    returned series starts at the corresponding later time.
    """
    n_t = forcing.samples_per_cycle
    skip = DISCARD_CYCLES * n_t
    if len(forcing) <= skip:
        raise ParameterError("forcing must be longer than the discarded transient")
    y = integrate(params, forcing, neutral)
    return SampleSeries(y[skip:], forcing.fs, forcing.f0, forcing.t0 + skip / forcing.fs)


@dataclass
class OracleComparison:
    """Closed-form neutral-path distortion against direct integration.

    Both series cover the same samples (the oracle's post-transient part).
    ``relative_error`` is the largest absolute difference over the forcing
    peak.
    """

    closed_form: SampleSeries
    integrated: SampleSeries
    forcing: SampleSeries
    neutral: str

    @property
    def max_error(self) -> float:
        return float(np.max(np.abs(self.closed_form.values - self.integrated.values)))

    @property
    def forcing_peak(self) -> float:
        return float(np.max(np.abs(self.forcing.values)))

    @property
    def relative_error(self) -> float:
        peak = self.forcing_peak
        return self.max_error / peak if peak > 0 else 0.0


def compare_closed_form(
    params: NetworkParams,
    spec: DistortionSpec,
    fs: float = DEFAULT_FS,
    cycles: float = 10,
    f0: float = DEFAULT_F0,
    forcing: str = "fault",
) -> OracleComparison:
    """Integrate the neutral-path equation and compare with the solver.

    The closed form is the distorted part of the transformer channel (the
    coil or neutral-resistor current).  ``forcing="fault"`` drives the
    equation with the fault-current distortion wave at the fault-current
    phase; ``forcing="simulator"`` uses the fault distortion the solver
    itself implies (differs only for low-resistor networks, where the
    solver's transformer channel is the wave and the fault current is
    reconstructed from it).
    """
    if forcing not in ("fault", "simulator"):
        raise ParameterError(f"unknown forcing {forcing!r}")
    comps = network_components(params, spec, fs, cycles, f0)
    if forcing == "simulator":
        drive = SampleSeries(comps.fault_distortion, fs, f0)
    else:
        phase = None
        if params.neutral is NeutralType.LOW_RESISTOR:
            phase = spec.phi - comps.constants["theta"]
        drive = synth_fault_distortion(spec, fs, cycles, f0, phase=phase)
    ode = ode_oracle(params, drive)
    skip = len(drive) - len(ode)
    closed = SampleSeries(comps.distortion[TRANSFORMER_ID][skip:], fs, f0, ode.t0)
    cut = SampleSeries(drive.values[skip:], fs, f0, ode.t0)
    return OracleComparison(closed, ode, cut, params.neutral.value)


def random_draw(rng: np.random.Generator, neutral) -> tuple:
    """A random ``(params, spec)`` pair over the documented parameter ranges.

    Resonant draws take ``v`` in ``[-0.1, 0)``; low-resistor draws take the
    admittance angle in ``(pi/4, pi/2)``.
    """
    neutral = NeutralType.parse(neutral)
    k = int(rng.integers(3, 6))
    C0 = tuple(float(c) for c in rng.uniform(1e-6, 6e-6, k))
    faulty = int(rng.integers(0, k))
    amp = float(rng.uniform(5.0, 40.0))
    spec = DistortionSpec(
        I_fM=amp,
        I_fM_dist=amp * float(rng.uniform(0.2, 0.8)),
        tau=float(rng.uniform(-0.9, -0.1)),
        phi=float(rng.uniform(0, 2 * math.pi)),
    )
    if neutral is NeutralType.RESONANT:
        v = float(rng.uniform(-0.1, 0.0))
        if v == 0.0:
            v = -1e-3
        params = NetworkParams(C0=C0, faulty=faulty, neutral=neutral, v=v)
    elif neutral is NeutralType.LOW_RESISTOR:
        theta = float(rng.uniform(math.pi / 4, math.pi / 2))
        theta = min(max(theta, math.pi / 4 + 1e-3), math.pi / 2 - 1e-3)
        w = 2 * math.pi * DEFAULT_F0
        R = 1.0 / (math.tan(theta) * w * sum(C0))
        params = NetworkParams(C0=C0, faulty=faulty, neutral=neutral, R_N=R)
    else:
        raise ParameterError("oracle draws exist for resonant and low-resistor networks only")
    return params, spec
