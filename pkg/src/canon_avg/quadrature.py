"""Adaptive integrals of complex integrands, cumulative and single-shot."""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad, solve_ivp

QUAD_TOL = 1e-10


def cumulative(fun, t, size: int = 1, tol: float = QUAD_TOL, y0=None, max_step: float = np.inf) -> np.ndarray:
    """Running integrals ``Y(t) = y0 + int_0^t fun(s) ds`` sampled at ``t``.

    ``fun(s, y)`` receives the running value so coupled integrals (an inner
    integral feeding an outer one) can be carried in one pass.  ``fun`` returns
    a complex vector of length ``size``.  Times must be non-negative; they need not be sorted.
    """
    t = np.atleast_1d(np.asarray(t, float))
    if np.any(t < 0):
        raise ValueError("cumulative integrals start at t = 0")
    order = np.argsort(t)
    ts = t[order]
    start = np.zeros(size, complex) if y0 is None else np.asarray(y0, complex).ravel()
    if ts[-1] == 0.0:
        return np.broadcast_to(start, (t.size, start.size)).copy()

    def rhs(s, y):
        return np.atleast_1d(np.asarray(fun(s, y.view(complex)), complex)).view(float)

    sol = solve_ivp(
        rhs,
        (0.0, float(ts[-1])),
        start.view(float).copy(),
        method="DOP853",
        t_eval=ts,
        rtol=tol,
        atol=tol,
        max_step=max_step,
    )
    if sol.status != 0:
        raise RuntimeError(f"cumulative quadrature failed: {sol.message}")
    vals = np.ascontiguousarray(sol.y.T).view(complex)
    out = np.empty_like(vals)
    out[order] = vals
    return out


def integrate_complex(fun, a: float, b: float, period: float | None = None, tol: float = QUAD_TOL) -> complex:
    """``int_a^b fun(s) ds`` with adaptive Gauss-Kronrod, split into panels of one ``period``."""
    if b == a:
        return 0j
    edges = [a, b] if period is None else list(np.arange(a, b, period)) + [b]
    total = 0j
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        re, e1 = quad(lambda s: complex(fun(s)).real, lo, hi, epsabs=tol, epsrel=tol, limit=200)
        im, e2 = quad(lambda s: complex(fun(s)).imag, lo, hi, epsabs=tol, epsrel=tol, limit=200)
        if max(e1, e2) > 100 * tol * max(1.0, abs(re) + abs(im)):
            raise RuntimeError(f"quadrature on [{lo}, {hi}] reached only {max(e1, e2):.3g}")
        total += re + 1j * im
    return total
