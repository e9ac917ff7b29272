"""The oscillator as a dynamical system.

State variables are the two capacitor voltages and the inductor current,
(v1, v2, iL), in SI units. The nonlinear block current is the device
current minus an ideal negative conductance, i_R(v) = i_dev(v) - g_n*v.
Equilibria solve i_R(v1) + g*v1 = 0 with v2 = 0 and iL = -g*v1; besides
the origin they are real roots of the deflated quartic

    q(v) = p5 v^4 + p4 v^3 + p3 v^2 + p2 v + (p1 + g - g_n).

Eigenvalues of the 3x3 Jacobian come from its closed-form characteristic
cubic solved by a trigonometric/Cardano branch with a Newton polish, so no
general eigensolver is needed for this fixed tiny size.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .device import DevicePoly, eval_current, eval_differential_conductance

class StateVector(NamedTuple):
    """Circuit state (v1 volts, v2 volts, iL amps)."""

    v1: float
    v2: float
    i_l: float

@dataclass(frozen=True)
class CircuitParams:
    """All constants of the state equations plus the device polynomial.

    g and g_n are conductances (1/R and 1/R_N). They may be zero to express
    the degenerate linear fixtures used in testing (pure LC, no negative
    converter); physical designs always have both positive.
    """

    c1: float
    c2: float
    l: float
    g: float
    g_n: float
    device: DevicePoly

    def __post_init__(self):
        if not (self.c1 > 0 and self.c2 > 0 and self.l > 0):
            raise ValueError("c1, c2 and l must be positive")
        if self.g < 0 or self.g_n < 0:
            raise ValueError("g and g_n must be nonnegative")

    @property
    def voltage_scale(self) -> float:
        """Natural voltage scale: the wider side of the device window."""
        return max(-self.device.v_min, self.device.v_max)

    @property
    def current_scale(self) -> float:
        """Natural current scale g*v_max, or the LC characteristic
        admittance times the voltage scale when g is zero."""
        s = self.g * self.device.v_max
        if s > 0:
            return s
        return self.voltage_scale * math.sqrt(self.c2 / self.l)

    @property
    def time_unit(self) -> float:
        """R*C2, the customary time normalization (LC fallback for g=0)."""
        if self.g > 0:
            return self.c2 / self.g
        return math.sqrt(self.l * self.c2)

    @property
    def kernel_args(self):
        d = self.device
        return (d.p1, d.p2, d.p3, d.p4, d.p5,
                self.g, self.g_n, self.c1, self.c2, self.l)

def nonlinear_current(params: CircuitParams, v):
    """Total nonlinear block current i_R(v) = i_dev(v) - g_n*v."""
    return eval_current(params.device, v) - params.g_n * v

def nonlinear_slope(params: CircuitParams, v):
    """d i_R / dv at voltage v."""
    return eval_differential_conductance(params.device, v) - params.g_n

def existence_condition(params: CircuitParams) -> bool:
    """True when the off-origin equilibria can exist: p1 - g_n < -g."""
    return params.device.p1 - params.g_n < -params.g

def vector_field(params: CircuitParams, state):
    """Time derivative of (v1, v2, iL) at the given state."""
    v1, v2, il = float(state[0]), float(state[1]), float(state[2])
    return np.array([
        ((v2 - v1) * params.g - nonlinear_current(params, v1)) / params.c1,
        ((v1 - v2) * params.g + il) / params.c2,
        -v2 / params.l,
    ])

def jacobian(params: CircuitParams, state):
    """3x3 Jacobian of the vector field; only entry (0,0) is state dependent."""
    v1 = float(state[0])
    return np.array([
        [(-params.g - nonlinear_slope(params, v1)) / params.c1,
         params.g / params.c1, 0.0],
        [params.g / params.c2, -params.g / params.c2, 1.0 / params.c2],
        [0.0, -1.0 / params.l, 0.0],
    ])

def jacobian_trace(params: CircuitParams, v1: float) -> float:
    return (-params.g - nonlinear_slope(params, v1)) / params.c1 \
        - params.g / params.c2

def cubic_roots(b: float, c: float, d: float) -> np.ndarray:
    """Three complex roots of the monic cubic x^3 + b x^2 + c x + d.

    Scaled depressed-cubic solution (trigonometric branch for three real
    roots, cancellation-safe Cardano otherwise) followed by two complex
    Newton polish iterations on the original cubic.
    """
    s = max(abs(b), math.sqrt(abs(c)), abs(d) ** (1.0 / 3.0))
    if s == 0.0:
        return np.zeros(3, dtype=complex)
    bs = b / s
    cs = c / (s * s)
    ds = d / (s * s * s)

    p = cs - bs * bs / 3.0
    q = 2.0 * bs ** 3 / 27.0 - bs * cs / 3.0 + ds
    shift = -bs / 3.0

    if p == 0.0 and q == 0.0:
        ts = [0.0 + 0.0j] * 3
    elif p == 0.0:
        r0 = math.copysign(abs(q) ** (1.0 / 3.0), -q)
        rot = complex(-0.5, math.sqrt(3.0) / 2.0)
        ts = [complex(r0), r0 * rot, r0 * rot.conjugate()]
    else:
        disc = -4.0 * p ** 3 - 27.0 * q * q
        if disc >= 0.0 and p < 0.0:
            m = 2.0 * math.sqrt(-p / 3.0)
            arg = 3.0 * q / (p * m)
            arg = min(1.0, max(-1.0, arg))
            theta = math.acos(arg) / 3.0
            ts = [complex(m * math.cos(theta - 2.0 * math.pi * k / 3.0))
                  for k in range(3)]
        else:
            dd = math.sqrt(max(q * q / 4.0 + p ** 3 / 27.0, 0.0))
            if q <= 0.0:
                u = (-q / 2.0 + dd) ** (1.0 / 3.0)
            else:
                u = -((q / 2.0 + dd) ** (1.0 / 3.0))
            v = -p / (3.0 * u)
            t1 = u + v
            half = complex(-t1 / 2.0, math.sqrt(3.0) / 2.0 * (u - v))
            ts = [complex(t1), half, half.conjugate()]

    roots = np.array([s * (t + shift) for t in ts], dtype=complex)
    for _ in range(2):
        f = ((roots + b) * roots + c) * roots + d
        fp = (3.0 * roots + 2.0 * b) * roots + c
        ok = np.abs(fp) > 0
        roots = np.where(ok, roots - f / np.where(ok, fp, 1.0), roots)
    return roots

def eigenvalues_at(params: CircuitParams, v1: float) -> np.ndarray:
    """Jacobian eigenvalues at an equilibrium voltage, via the closed cubic."""
    a = (-params.g - nonlinear_slope(params, v1)) / params.c1
    bb = params.g / params.c1
    cc = params.g / params.c2
    dd = -params.g / params.c2
    ee = 1.0 / params.c2
    ff = -1.0 / params.l
    tr = a + dd
    m = a * dd - bb * cc - ee * ff
    det = -a * ee * ff
    return cubic_roots(-tr, m, -det)

@dataclass(frozen=True)
class StabilityVerdict:
    unstable: bool
    saddle_focus: bool
    max_real_part: float

@dataclass(frozen=True)
class EquilibriumPoint:
    """An equilibrium with its spectrum. v2 is 0 and iL = -g*v1 exactly."""

    state: StateVector
    label: str  # "P0", "P+" or "P-"
    eigenvalues: tuple
    stable: bool
    in_window: bool
    residual: float

def classify_stability(eq_or_eigs) -> StabilityVerdict:
    """Instability check with tolerance 1e-9 relative to the spectral radius.

    Also flags the saddle-focus pattern: one real eigenvalue and a complex
    pair whose real parts have opposite signs.
    """
    eigs = np.asarray(getattr(eq_or_eigs, "eigenvalues", eq_or_eigs),
                      dtype=complex)
    radius = float(np.max(np.abs(eigs)))
    tol = 1e-9 * radius
    unstable = bool(np.any(eigs.real > tol))

    order = np.argsort(np.abs(eigs.imag))
    real_eig, pair_a, pair_b = eigs[order[0]], eigs[order[1]], eigs[order[2]]
    saddle_focus = (abs(real_eig.imag) <= tol
                    and abs(pair_a.imag) > tol
                    and abs(pair_b.imag) > tol
                    and abs(real_eig.real) > tol
                    and abs(pair_a.real) > tol
                    and real_eig.real * pair_a.real < 0)
    return StabilityVerdict(unstable=unstable, saddle_focus=saddle_focus,
                            max_real_part=float(np.max(eigs.real)))

_SCAN_POINTS = 4096
_BISECT_WIDTH = 1e-14
_ORIGIN_MERGE = 1e-9
_RESIDUAL_TOL = 1e-12

def _equilibrium_residual(params, v):
    return nonlinear_current(params, v) + params.g * v

def find_equilibria(params: CircuitParams) -> list:
    """All equilibria on the padded device window, origin always included.

    Off-origin candidates come from a sign-change scan of the deflated
    quartic over the window padded by 10% of its width, refined by bisection
    to 1e-14 V and polished with Newton on the full residual. Roots within
    1e-9 V of zero merge into the origin point; roots outside the unpadded
    window are kept but flagged via in_window=False.
    """
    d = params.device
    q0 = d.p1 + params.g - params.g_n

    def q(v):
        return ((((d.p5 * v + d.p4) * v + d.p3) * v + d.p2) * v + q0)

    width = d.v_max - d.v_min
    lo = d.v_min - 0.1 * width
    hi = d.v_max + 0.1 * width
    grid = np.linspace(lo, hi, _SCAN_POINTS)
    qv = q(grid)

    roots = []
    for k in range(_SCAN_POINTS - 1):
        qa, qb = qv[k], qv[k + 1]
        if qa == 0.0:
            roots.append(grid[k])
            continue
        if qa * qb < 0.0:
            a, b = grid[k], grid[k + 1]
            fa = qa
            while b - a > _BISECT_WIDTH:
                mid = 0.5 * (a + b)
                fm = q(mid)
                if fm == 0.0:
                    a = b = mid
                    break
                if fa * fm < 0.0:
                    b = mid
                else:
                    a, fa = mid, fm
            roots.append(0.5 * (a + b))
    if qv[-1] == 0.0:
        roots.append(grid[-1])

    polished = []
    for v in roots:
        for _ in range(3):
            h = _equilibrium_residual(params, v)
            if abs(h) <= _RESIDUAL_TOL:
                break
            hp = nonlinear_slope(params, v) + params.g
            if hp == 0.0:
                break
            v = v - h / hp
        if abs(v) < _ORIGIN_MERGE:
            continue
        if any(abs(v - u) < _ORIGIN_MERGE for u in polished):
            continue
        polished.append(v)

    def make_point(v, label):
        v = float(v)
        eigs = eigenvalues_at(params, v)
        return EquilibriumPoint(
            state=StateVector(v, 0.0, -params.g * v),
            label=label,
            eigenvalues=tuple(complex(x) for x in eigs),
            stable=not classify_stability(eigs).unstable,
            in_window=bool(d.v_min <= v <= d.v_max),
            residual=float(abs(_equilibrium_residual(params, v))),
        )

    points = [make_point(0.0, "P0")]
    for v in polished:
        points.append(make_point(v, "P+" if v > 0 else "P-"))
    points.sort(key=lambda p: p.state.v1)
    return points
