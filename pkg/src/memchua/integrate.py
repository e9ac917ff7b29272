"""Time integration of the circuit equations with safe-window monitoring.

Both integrators emit an event whenever v1 crosses out of the device
window (the voltage range where the device acts as a static nonlinearity)
and flag divergence when any state magnitude exceeds 1000x its natural
scale; the physical circuit would saturate, so the model fails loudly
instead. Under the "abort" policy integration stops at the first window
crossing. All work is in SI units.
"""

import csv
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from . import kernels
from .circuit import CircuitParams, vector_field
from .errors import IntegrationError

_KIND_NAMES = {
    kernels.KIND_SOA_LOW: "soa_low",
    kernels.KIND_SOA_HIGH: "soa_high",
    kernels.KIND_DIVERGED: "diverged",
}

DIVERGENCE_FACTOR = 1e3


@dataclass(frozen=True)
class IntegrationConfig:
    """Shared configuration for the fixed-step and adaptive integrators.

    dt applies to the fixed-step path; abs_tol (applied to every component,
    volts or amps alike) and rel_tol drive the adaptive controller.
    States are recorded every record_stride-th accepted step once past
    t_transient.
    """

    dt: float = 1e-6
    t_end: float = 0.5
    t_transient: float = 0.1
    record_stride: int = 10
    soa_policy: str = "warn"
    abs_tol: float = 1e-9
    rel_tol: float = 1e-7
    max_steps: int = 20_000_000

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (0.0 <= self.t_transient < self.t_end):
            raise ValueError(
                f"need 0 <= t_transient < t_end, got {self.t_transient}, {self.t_end}")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        if self.soa_policy not in ("warn", "abort"):
            raise ValueError(f"unknown soa_policy {self.soa_policy!r}")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass(frozen=True)
class Event:
    time: float
    kind: str  # soa_low | soa_high | diverged
    value: float


@dataclass
class Trajectory:
    """Recorded samples (times strictly increasing) plus the event log."""

    times: np.ndarray
    states: np.ndarray
    events: Tuple[Event, ...]
    status: int

    @property
    def v1(self):
        return self.states[:, 0]

    @property
    def diverged(self) -> bool:
        return self.status == kernels.STATUS_DIVERGED

    @property
    def aborted_on_soa(self) -> bool:
        return self.status == kernels.STATUS_SOA_ABORT

    @property
    def final_state(self):
        return self.states[-1]


def _steps_for(duration: float, dt: float) -> int:
    x = duration / dt
    r = round(x)
    if abs(x - r) <= 1e-9 * max(1.0, abs(x)):
        return int(r)
    return int(math.ceil(x))


def _divergence_bounds(params: CircuitParams):
    return (DIVERGENCE_FACTOR * params.voltage_scale,
            DIVERGENCE_FACTOR * params.current_scale)


def _init_tuple(init):
    v = np.asarray(init, dtype=float)
    if v.shape != (3,):
        raise ValueError("initial state must have exactly 3 components")
    if not np.isfinite(v).all():
        raise ValueError("initial state must be finite")
    return float(v[0]), float(v[1]), float(v[2])


def _build(times, states, ev_t, ev_k, ev_v, status) -> Trajectory:
    events = tuple(Event(float(t), _KIND_NAMES[int(k)], float(v))
                   for t, k, v in zip(ev_t, ev_k, ev_v))
    return Trajectory(times=times, states=states, events=events, status=status)


def step_rk4(params: CircuitParams, state, dt: float):
    """One classical RK4 step; raises IntegrationError on non-finite output."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    y = np.asarray(state, dtype=float)
    k1 = vector_field(params, y)
    k2 = vector_field(params, y + 0.5 * dt * k1)
    k3 = vector_field(params, y + 0.5 * dt * k2)
    k4 = vector_field(params, y + dt * k3)
    out = y + dt * (k1 + 2.0 * (k2 + k3) + k4) / 6.0
    if not np.isfinite(out).all():
        raise IntegrationError(f"state diverged within a single step of {dt} s")
    return out


def integrate(params: CircuitParams, init, cfg: IntegrationConfig) -> Trajectory:
    """Fixed-step RK4 over [0, t_end]; deterministic for identical inputs."""
    v1, v2, il = _init_tuple(init)
    n_steps = _steps_for(cfg.t_end, cfg.dt)
    rec_start = _steps_for(cfg.t_transient, cfg.dt)
    v_div, i_div = _divergence_bounds(params)
    d = params.device
    out = kernels.rk4_trajectory(
        *params.kernel_args, v1, v2, il, cfg.dt, n_steps, rec_start,
        cfg.record_stride, d.v_min, d.v_max, v_div, i_div,
        cfg.soa_policy == "abort")
    return _build(*out)


def integrate_adaptive(params: CircuitParams, init,
                       cfg: IntegrationConfig) -> Trajectory:
    """Embedded 5(4) pair with the standard step-size controller.

    Raises IntegrationError on step underflow (stiffness) or when the
    iteration cap is hit; the partial trajectory rides on the exception's
    `trajectory` attribute.
    """
    v1, v2, il = _init_tuple(init)
    v_div, i_div = _divergence_bounds(params)
    d = params.device
    h_max = cfg.t_end / 50.0
    h0 = min(h_max, cfg.t_end * 1e-4)
    out = kernels.dopri_trajectory(
        *params.kernel_args, v1, v2, il, cfg.t_end, cfg.t_transient,
        cfg.record_stride, cfg.abs_tol, cfg.rel_tol, h0, h_max,
        d.v_min, d.v_max, v_div, i_div, cfg.soa_policy == "abort",
        cfg.max_steps)
    traj = _build(*out)
    if traj.status == kernels.STATUS_STEP_UNDERFLOW:
        t_reached = traj.times[-1] if len(traj.times) else 0.0
        exc = IntegrationError(
            f"step size underflow below 1e-15 s near t={t_reached:.6e} s; "
            "the problem is too stiff for the explicit pair")
        exc.trajectory = traj
        raise exc
    if traj.status == kernels.STATUS_STEP_LIMIT:
        exc = IntegrationError(
            f"exceeded max_steps={cfg.max_steps} before reaching t_end")
        exc.trajectory = traj
        raise exc
    return traj


def write_trajectory_csv(path, traj: Trajectory):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_s", "v1_V", "v2_V", "iL_A"])
        for t, row in zip(traj.times, traj.states):
            writer.writerow([repr(float(t)), repr(float(row[0])),
                             repr(float(row[1])), repr(float(row[2]))])


def write_events_csv(path, traj: Trajectory):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_s", "kind", "value"])
        for ev in traj.events:
            writer.writerow([repr(ev.time), ev.kind, repr(ev.value)])
