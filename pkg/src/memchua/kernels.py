"""Hot integration kernels.

Everything here is written as scalar-unrolled loops over the three circuit
state variables so that numba can compile it to tight machine code. When
numba is unavailable, or when the environment variable ``MEMCHUA_NUMBA`` is
set to ``0``/``false``/``off``/``no``, the same functions run as plain
Python over numpy storage (correct but much slower). The undecorated
implementations stay importable via ``PURE_KERNELS`` so the benchmark can
time both paths in one process.

Kernels return flat numpy arrays plus integer status/event codes; the
wrapper layer in :mod:`memchua.integrate` and :mod:`memchua.analysis` turns
those into the public result types.
"""

import math
import os

import numpy as np

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency normally
    numba = None
    _HAVE_NUMBA = False

_FLAG = os.environ.get("MEMCHUA_NUMBA", "1").strip().lower()
USE_NUMBA = _HAVE_NUMBA and _FLAG not in ("0", "false", "off", "no")

# integration outcome codes
STATUS_OK = 0
STATUS_SOA_ABORT = 1
STATUS_DIVERGED = 2
STATUS_STEP_UNDERFLOW = 3
STATUS_STEP_LIMIT = 4
STATUS_SHADOW_FAIL = 5

# event kind codes (match the wire order soa_low/soa_high/diverged)
KIND_SOA_LOW = 0
KIND_SOA_HIGH = 1
KIND_DIVERGED = 2

# events are rare by construction (emitted on window crossings, not per
# sample); the buffer cap just bounds worst-case memory
_EV_CAP = 4096


def _rk4_trajectory(p1, p2, p3, p4, p5, g, gn, c1, c2, l,
                    v1, v2, il, dt, n_steps, rec_start, stride,
                    v_min, v_max, v_div, i_div, abort_on_soa):
    """Fixed-step classical RK4 over the circuit equations.

    Records every `stride`-th step with index >= rec_start. Emits an event
    when v1 crosses out of [v_min, v_max] and stops early on divergence
    (any state magnitude beyond its v_div/i_div ceiling) or, under the
    abort policy, at the first window crossing.
    """

    def f(a, b, c):
        ir = a * (p1 + a * (p2 + a * (p3 + a * (p4 + a * p5)))) - gn * a
        return ((b - a) * g - ir) / c1, ((a - b) * g + c) / c2, -b / l

    n_rec = (n_steps - rec_start) // stride + 1 if n_steps >= rec_start else 0
    times = np.empty(n_rec)
    states = np.empty((n_rec, 3))
    ev_t = np.empty(_EV_CAP)
    ev_k = np.empty(_EV_CAP, np.int64)
    ev_v = np.empty(_EV_CAP)
    nev = 0
    j = 0
    status = STATUS_OK

    inside = v_min <= v1 <= v_max
    if not inside:
        ev_t[nev] = 0.0
        ev_k[nev] = KIND_SOA_LOW if v1 < v_min else KIND_SOA_HIGH
        ev_v[nev] = v1
        nev += 1
        if abort_on_soa:
            status = STATUS_SOA_ABORT
    if status == STATUS_OK and rec_start == 0:
        times[j] = 0.0
        states[j, 0] = v1
        states[j, 1] = v2
        states[j, 2] = il
        j += 1

    if status == STATUS_OK:
        for k in range(1, n_steps + 1):
            k1a, k1b, k1c = f(v1, v2, il)
            x = v1 + 0.5 * dt * k1a
            y = v2 + 0.5 * dt * k1b
            z = il + 0.5 * dt * k1c
            k2a, k2b, k2c = f(x, y, z)
            x = v1 + 0.5 * dt * k2a
            y = v2 + 0.5 * dt * k2b
            z = il + 0.5 * dt * k2c
            k3a, k3b, k3c = f(x, y, z)
            x = v1 + dt * k3a
            y = v2 + dt * k3b
            z = il + dt * k3c
            k4a, k4b, k4c = f(x, y, z)
            v1 = v1 + dt * (k1a + 2.0 * (k2a + k3a) + k4a) / 6.0
            v2 = v2 + dt * (k1b + 2.0 * (k2b + k3b) + k4b) / 6.0
            il = il + dt * (k1c + 2.0 * (k2c + k3c) + k4c) / 6.0
            t = k * dt

            if (not (math.isfinite(v1) and math.isfinite(v2) and math.isfinite(il))
                    or abs(v1) > v_div or abs(v2) > v_div or abs(il) > i_div):
                if nev < _EV_CAP:
                    ev_t[nev] = t
                    ev_k[nev] = KIND_DIVERGED
                    ev_v[nev] = v1
                    nev += 1
                status = STATUS_DIVERGED
                break

            now_inside = v_min <= v1 <= v_max
            if inside and not now_inside:
                if nev < _EV_CAP:
                    ev_t[nev] = t
                    ev_k[nev] = KIND_SOA_LOW if v1 < v_min else KIND_SOA_HIGH
                    ev_v[nev] = v1
                    nev += 1
                if abort_on_soa:
                    status = STATUS_SOA_ABORT
                    break
            inside = now_inside

            if k >= rec_start and (k - rec_start) % stride == 0:
                times[j] = t
                states[j, 0] = v1
                states[j, 1] = v2
                states[j, 2] = il
                j += 1

    return (times[:j].copy(), states[:j].copy(),
            ev_t[:nev].copy(), ev_k[:nev].copy(), ev_v[:nev].copy(), status)


def _dopri_trajectory(p1, p2, p3, p4, p5, g, gn, c1, c2, l,
                      v1, v2, il, t_end, t_transient, stride,
                      abs_tol, rel_tol, h0, h_max,
                      v_min, v_max, v_div, i_div, abort_on_soa, max_steps):
    """Adaptive Dormand-Prince 5(4) pair with the standard step controller.

    Accepts a step when each component's embedded error estimate is below
    abs_tol + rel_tol*|state|. Records every `stride`-th accepted step whose
    end time is past t_transient. Event semantics match the fixed-step
    kernel; additionally reports step underflow (h < 1e-15 s) and an
    iteration cap.
    """

    def f(a, b, c):
        ir = a * (p1 + a * (p2 + a * (p3 + a * (p4 + a * p5)))) - gn * a
        return ((b - a) * g - ir) / c1, ((a - b) * g + c) / c2, -b / l

    cap = 1024
    times = np.empty(cap)
    states = np.empty((cap, 3))
    ev_t = np.empty(_EV_CAP)
    ev_k = np.empty(_EV_CAP, np.int64)
    ev_v = np.empty(_EV_CAP)
    nev = 0
    j = 0
    status = STATUS_OK

    inside = v_min <= v1 <= v_max
    if not inside:
        ev_t[nev] = 0.0
        ev_k[nev] = KIND_SOA_LOW if v1 < v_min else KIND_SOA_HIGH
        ev_v[nev] = v1
        nev += 1
        if abort_on_soa:
            status = STATUS_SOA_ABORT

    rec_count = -1
    if status == STATUS_OK and t_transient <= 0.0:
        times[j] = 0.0
        states[j, 0] = v1
        states[j, 1] = v2
        states[j, 2] = il
        j += 1
        rec_count = 0

    t = 0.0
    h = h0
    iters = 0
    while status == STATUS_OK and t < t_end:
        iters += 1
        if iters > max_steps:
            status = STATUS_STEP_LIMIT
            break
        if h < 1e-15:
            status = STATUS_STEP_UNDERFLOW
            break
        if t + h > t_end:
            h = t_end - t

        k1a, k1b, k1c = f(v1, v2, il)
        x = v1 + h * 0.2 * k1a
        y = v2 + h * 0.2 * k1b
        z = il + h * 0.2 * k1c
        k2a, k2b, k2c = f(x, y, z)
        x = v1 + h * (0.075 * k1a + 0.225 * k2a)
        y = v2 + h * (0.075 * k1b + 0.225 * k2b)
        z = il + h * (0.075 * k1c + 0.225 * k2c)
        k3a, k3b, k3c = f(x, y, z)
        x = v1 + h * ((44.0 / 45.0) * k1a - (56.0 / 15.0) * k2a + (32.0 / 9.0) * k3a)
        y = v2 + h * ((44.0 / 45.0) * k1b - (56.0 / 15.0) * k2b + (32.0 / 9.0) * k3b)
        z = il + h * ((44.0 / 45.0) * k1c - (56.0 / 15.0) * k2c + (32.0 / 9.0) * k3c)
        k4a, k4b, k4c = f(x, y, z)
        x = v1 + h * ((19372.0 / 6561.0) * k1a - (25360.0 / 2187.0) * k2a
                      + (64448.0 / 6561.0) * k3a - (212.0 / 729.0) * k4a)
        y = v2 + h * ((19372.0 / 6561.0) * k1b - (25360.0 / 2187.0) * k2b
                      + (64448.0 / 6561.0) * k3b - (212.0 / 729.0) * k4b)
        z = il + h * ((19372.0 / 6561.0) * k1c - (25360.0 / 2187.0) * k2c
                      + (64448.0 / 6561.0) * k3c - (212.0 / 729.0) * k4c)
        k5a, k5b, k5c = f(x, y, z)
        x = v1 + h * ((9017.0 / 3168.0) * k1a - (355.0 / 33.0) * k2a
                      + (46732.0 / 5247.0) * k3a + (49.0 / 176.0) * k4a
                      - (5103.0 / 18656.0) * k5a)
        y = v2 + h * ((9017.0 / 3168.0) * k1b - (355.0 / 33.0) * k2b
                      + (46732.0 / 5247.0) * k3b + (49.0 / 176.0) * k4b
                      - (5103.0 / 18656.0) * k5b)
        z = il + h * ((9017.0 / 3168.0) * k1c - (355.0 / 33.0) * k2c
                      + (46732.0 / 5247.0) * k3c + (49.0 / 176.0) * k4c
                      - (5103.0 / 18656.0) * k5c)
        k6a, k6b, k6c = f(x, y, z)
        nv1 = v1 + h * ((35.0 / 384.0) * k1a + (500.0 / 1113.0) * k3a
                        + (125.0 / 192.0) * k4a - (2187.0 / 6784.0) * k5a
                        + (11.0 / 84.0) * k6a)
        nv2 = v2 + h * ((35.0 / 384.0) * k1b + (500.0 / 1113.0) * k3b
                        + (125.0 / 192.0) * k4b - (2187.0 / 6784.0) * k5b
                        + (11.0 / 84.0) * k6b)
        nil = il + h * ((35.0 / 384.0) * k1c + (500.0 / 1113.0) * k3c
                        + (125.0 / 192.0) * k4c - (2187.0 / 6784.0) * k5c
                        + (11.0 / 84.0) * k6c)
        k7a, k7b, k7c = f(nv1, nv2, nil)
        e1 = h * ((71.0 / 57600.0) * k1a - (71.0 / 16695.0) * k3a
                  + (71.0 / 1920.0) * k4a - (17253.0 / 339200.0) * k5a
                  + (22.0 / 525.0) * k6a - 0.025 * k7a)
        e2 = h * ((71.0 / 57600.0) * k1b - (71.0 / 16695.0) * k3b
                  + (71.0 / 1920.0) * k4b - (17253.0 / 339200.0) * k5b
                  + (22.0 / 525.0) * k6b - 0.025 * k7b)
        e3 = h * ((71.0 / 57600.0) * k1c - (71.0 / 16695.0) * k3c
                  + (71.0 / 1920.0) * k4c - (17253.0 / 339200.0) * k5c
                  + (22.0 / 525.0) * k6c - 0.025 * k7c)

        r = abs(e1) / (abs_tol + rel_tol * abs(v1))
        r2 = abs(e2) / (abs_tol + rel_tol * abs(v2))
        r3 = abs(e3) / (abs_tol + rel_tol * abs(il))
        if r2 > r:
            r = r2
        if r3 > r:
            r = r3
        if not math.isfinite(r):
            r = 2.0

        if r <= 1.0:
            t = t + h
            v1, v2, il = nv1, nv2, nil

            if (not (math.isfinite(v1) and math.isfinite(v2) and math.isfinite(il))
                    or abs(v1) > v_div or abs(v2) > v_div or abs(il) > i_div):
                if nev < _EV_CAP:
                    ev_t[nev] = t
                    ev_k[nev] = KIND_DIVERGED
                    ev_v[nev] = v1
                    nev += 1
                status = STATUS_DIVERGED
                break

            now_inside = v_min <= v1 <= v_max
            if inside and not now_inside:
                if nev < _EV_CAP:
                    ev_t[nev] = t
                    ev_k[nev] = KIND_SOA_LOW if v1 < v_min else KIND_SOA_HIGH
                    ev_v[nev] = v1
                    nev += 1
                if abort_on_soa:
                    status = STATUS_SOA_ABORT
                    break
            inside = now_inside

            if t >= t_transient:
                rec_count += 1
                if rec_count % stride == 0:
                    if j >= cap:
                        ncap = cap * 2
                        nt = np.empty(ncap)
                        nt[:cap] = times
                        times = nt
                        ns = np.empty((ncap, 3))
                        ns[:cap] = states
                        states = ns
                        cap = ncap
                    times[j] = t
                    states[j, 0] = v1
                    states[j, 1] = v2
                    states[j, 2] = il
                    j += 1

            if r == 0.0:
                fac = 5.0
            else:
                fac = 0.9 * r ** -0.2
                if fac > 5.0:
                    fac = 5.0
                elif fac < 0.2:
                    fac = 0.2
            h = h * fac
            if h > h_max:
                h = h_max
        else:
            fac = 0.9 * r ** -0.2
            if fac < 0.2:
                fac = 0.2
            h = h * fac

    return (times[:j].copy(), states[:j].copy(),
            ev_t[:nev].copy(), ev_k[:nev].copy(), ev_v[:nev].copy(), status)


def _benettin_lyapunov(p1, p2, p3, p4, p5, g, gn, c1, c2, l,
                       v1, v2, il, dt, n_steps, renorm_every, transient_steps,
                       d0, v_div, i_div):
    """Two-trajectory (shadow) exponent estimator.

    The shadow starts offset by d0 on v1, is renormalized back to distance
    d0 every `renorm_every` steps, and log stretch factors are accumulated
    for intervals that start at or after `transient_steps`. Returns
    (sum of log ratios, number of intervals, status).
    """

    def f(a, b, c):
        ir = a * (p1 + a * (p2 + a * (p3 + a * (p4 + a * p5)))) - gn * a
        return ((b - a) * g - ir) / c1, ((a - b) * g + c) / c2, -b / l

    w1 = v1 + d0
    w2 = v2
    wl = il
    acc = 0.0
    ni = 0
    status = STATUS_OK

    for k in range(1, n_steps + 1):
        k1a, k1b, k1c = f(v1, v2, il)
        x = v1 + 0.5 * dt * k1a
        y = v2 + 0.5 * dt * k1b
        z = il + 0.5 * dt * k1c
        k2a, k2b, k2c = f(x, y, z)
        x = v1 + 0.5 * dt * k2a
        y = v2 + 0.5 * dt * k2b
        z = il + 0.5 * dt * k2c
        k3a, k3b, k3c = f(x, y, z)
        x = v1 + dt * k3a
        y = v2 + dt * k3b
        z = il + dt * k3c
        k4a, k4b, k4c = f(x, y, z)
        v1 = v1 + dt * (k1a + 2.0 * (k2a + k3a) + k4a) / 6.0
        v2 = v2 + dt * (k1b + 2.0 * (k2b + k3b) + k4b) / 6.0
        il = il + dt * (k1c + 2.0 * (k2c + k3c) + k4c) / 6.0

        k1a, k1b, k1c = f(w1, w2, wl)
        x = w1 + 0.5 * dt * k1a
        y = w2 + 0.5 * dt * k1b
        z = wl + 0.5 * dt * k1c
        k2a, k2b, k2c = f(x, y, z)
        x = w1 + 0.5 * dt * k2a
        y = w2 + 0.5 * dt * k2b
        z = wl + 0.5 * dt * k2c
        k3a, k3b, k3c = f(x, y, z)
        x = w1 + dt * k3a
        y = w2 + dt * k3b
        z = wl + dt * k3c
        k4a, k4b, k4c = f(x, y, z)
        w1 = w1 + dt * (k1a + 2.0 * (k2a + k3a) + k4a) / 6.0
        w2 = w2 + dt * (k1b + 2.0 * (k2b + k3b) + k4b) / 6.0
        wl = wl + dt * (k1c + 2.0 * (k2c + k3c) + k4c) / 6.0

        if (not (math.isfinite(v1) and math.isfinite(v2) and math.isfinite(il))
                or abs(v1) > v_div or abs(v2) > v_div or abs(il) > i_div):
            status = STATUS_DIVERGED
            break

        if k % renorm_every == 0:
            dx = w1 - v1
            dy = w2 - v2
            dz = wl - il
            d = math.sqrt(dx * dx + dy * dy + dz * dz)
            if not math.isfinite(d) or d <= 0.0:
                status = STATUS_SHADOW_FAIL
                break
            if k - renorm_every >= transient_steps:
                acc += math.log(d / d0)
                ni += 1
            s = d0 / d
            w1 = v1 + dx * s
            w2 = v2 + dy * s
            wl = il + dz * s

    return acc, ni, status


PURE_KERNELS = {
    "rk4_trajectory": _rk4_trajectory,
    "dopri_trajectory": _dopri_trajectory,
    "benettin_lyapunov": _benettin_lyapunov,
}

if USE_NUMBA:
    rk4_trajectory = numba.njit(cache=True)(_rk4_trajectory)
    dopri_trajectory = numba.njit(cache=True)(_dopri_trajectory)
    benettin_lyapunov = numba.njit(cache=True)(_benettin_lyapunov)
else:
    rk4_trajectory = _rk4_trajectory
    dopri_trajectory = _dopri_trajectory
    benettin_lyapunov = _benettin_lyapunov
