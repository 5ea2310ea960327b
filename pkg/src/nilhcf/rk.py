"""Dormand-Prince 5(4) stepper with PI step-size control.

Works on complex arrays of any shape.  The driver is a generator yielding
every accepted state, so callers can run their own checks, projections and
stopping rules between steps.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import StepFailure

# Butcher tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# 5th order weights minus the embedded 4th order weights
E1, E3, E4, E5, E6, E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

SAFETY = 0.9
FAC_MIN, FAC_MAX = 0.2, 10.0
BETA = 0.04
ALPHA = 0.2 - 0.75 * BETA


def _err_norm(err, y, ynew, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
    return math.sqrt(float(np.mean((np.abs(err) / scale) ** 2)))


def initial_step(f, t, y, f0, rtol, atol):
    scale = atol + rtol * np.abs(y)
    d0 = math.sqrt(float(np.mean((np.abs(y) / scale) ** 2)))
    d1 = math.sqrt(float(np.mean((np.abs(f0) / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = f(t + h0, y + h0 * f0)
    d2 = math.sqrt(float(np.mean((np.abs(f1 - f0) / scale) ** 2))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def dopri5(
    f,
    t0,
    y0,
    t_end,
    *,
    rtol=1e-9,
    atol=1e-12,
    h0=None,
    max_step=math.inf,
    max_steps=1_000_000,
    stops=(),
    project=None,
):
    """Yield ``(t, y, dy, hit)`` after each accepted step.

    ``stops`` are times the integrator lands on exactly (``hit`` is True
    there); ``t_end`` is always one of them.  ``project`` maps an accepted
    state to a corrected one (the derivative is then re-evaluated).
    Raises ``StepFailure`` on step-size underflow or too many steps.
    """
    t = float(t0)
    y = np.array(y0, dtype=np.complex128)
    k1 = f(t, y)
    targets = sorted({float(s) for s in stops if t0 < s < t_end} | {float(t_end)})
    ti = 0
    h = h0 if h0 is not None else initial_step(f, t, y, k1, rtol, atol)
    h = min(h, max_step)
    err_old = 1e-4
    steps = 0
    while ti < len(targets):
        target = targets[ti]
        if steps >= max_steps:
            raise StepFailure(f"maximum number of steps ({max_steps}) reached at t = {t:.6g}")
        if h < 10 * np.finfo(float).eps * max(1.0, abs(t)):
            raise StepFailure(f"step size underflow at t = {t:.6g} (h = {h:.3e})")
        h_try = h
        landing = t + h_try >= target * (1 - 1e-14)
        if landing:
            h_try = target - t
        k2 = f(t + C2 * h_try, y + h_try * (A21 * k1))
        k3 = f(t + C3 * h_try, y + h_try * (A31 * k1 + A32 * k2))
        k4 = f(t + C4 * h_try, y + h_try * (A41 * k1 + A42 * k2 + A43 * k3))
        k5 = f(t + C5 * h_try, y + h_try * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
        k6 = f(t + h_try, y + h_try * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
        ynew = y + h_try * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
        k7 = f(t + h_try, ynew)
        err_vec = h_try * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        err = _err_norm(err_vec, y, ynew, rtol, atol)
        steps += 1
        if not np.isfinite(err):
            h = h_try * FAC_MIN
            continue
        if err <= 1.0:
            fac = SAFETY * err ** (-ALPHA) * err_old**BETA if err > 0 else FAC_MAX
            fac = min(FAC_MAX, max(FAC_MIN, fac))
            err_old = max(err, 1e-4)
            t = target if landing else t + h_try
            y = ynew
            if project is not None:
                y = project(y)
                k1 = f(t, y)
            else:
                k1 = k7
            if landing:
                ti += 1
                # keep the natural step unless the landing step was the limiting one
                h = min(max(h, h_try * fac) if h_try < h else h_try * fac, max_step)
            else:
                h = min(h_try * fac, max_step)
            yield t, y, k1, landing
        else:
            fac = max(FAC_MIN, SAFETY * err ** (-ALPHA))
            h = h_try * fac
