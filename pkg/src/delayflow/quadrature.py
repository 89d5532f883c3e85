"""Adaptive Simpson quadrature with a Richardson error estimate.

Small, dependency-free and deterministic: the spectral primitives integrate
eigenvalue curves through sign changes, so the local tolerance is budgeted
over subintervals and every accepted panel contributes its extrapolation
error to the reported estimate.
"""

from __future__ import annotations

import math
from typing import Callable

from .errors import NumericalError


def _panel(x0: float, x2: float, f0: float, f1: float, f2: float) -> float:
    return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2)


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-8, max_evals: int = 200_000) -> tuple[float, float]:
    """Integrate f over [a, b]; returns (value, error_estimate).

    Panels are bisected until the Richardson estimate |S2 - S1| / 15 meets
    the locally budgeted tolerance; accepted panels use the extrapolated
    value, so the result is effectively sixth-order on smooth stretches.
    """
    if a == b:
        return 0.0, 0.0
    sign = 1.0
    if b < a:
        a, b = b, a
        sign = -1.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    evals = 3
    total = 0.0
    err = 0.0
    span = b - a
    stack = [(a, b, fa, fm, fb, _panel(a, b, fa, fm, fb), tol)]
    while stack:
        x0, x2, f0, f1, f2, s_whole, loc_tol = stack.pop()
        xm = 0.5 * (x0 + x2)
        xl = 0.5 * (x0 + xm)
        xr = 0.5 * (xm + x2)
        fl, fr = f(xl), f(xr)
        evals += 2
        if evals > max_evals:
            raise NumericalError(
                f"quadrature exceeded {max_evals} evaluations on [{a}, {b}]")
        s_left = _panel(x0, xm, f0, fl, f1)
        s_right = _panel(xm, x2, f1, fr, f2)
        delta = s_left + s_right - s_whole
        if abs(delta) <= 15.0 * loc_tol or (x2 - x0) <= 1e-13 * span:
            total += s_left + s_right + delta / 15.0
            err += abs(delta) / 15.0
        else:
            stack.append((x0, xm, f0, fl, f1, s_left, 0.5 * loc_tol))
            stack.append((xm, x2, f1, fr, f2, s_right, 0.5 * loc_tol))
    if not math.isfinite(total):
        raise NumericalError(f"non-finite quadrature value on [{a}, {b}]")
    return sign * total, err


def composite_simpson(f: Callable[[float], float], a: float, b: float,
                      segments: int = 8) -> float:
    """Fixed composite Simpson rule with `segments` panels (no adaptivity)."""
    if a == b:
        return 0.0
    n = 2 * max(1, int(segments))
    h = (b - a) / n
    total = f(a) + f(b)
    for k in range(1, n):
        total += (4.0 if k % 2 else 2.0) * f(a + k * h)
    return total * h / 3.0
