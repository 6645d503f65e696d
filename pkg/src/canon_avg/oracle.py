"""Brute-force reference: direct integration of the truncated amplitude equations.

Nothing here touches the averaging code.  The right-hand side is rebuilt from
the raw coupling and spectrum at every step.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import IntegrationError
from .system import PerturbationProblem

DEFAULT_TOL = 1e-10
MAX_NORM_DRIFT = 1e-6
POINTS_PER_PERIOD = 40


@dataclass(frozen=True)
class Trajectory:
    """Oracle samples in the bare frame (phases ``exp(-i w_n t)`` factored out)."""

    times: np.ndarray
    states: np.ndarray
    norm_drift: float
    nfev: int = 0

    def __post_init__(self):
        if self.times.ndim != 1 or self.states.shape[0] != self.times.size:
            raise ValueError("times and states disagree in length")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(self.states)):
            raise ValueError("trajectory contains non-finite amplitudes")

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.states) ** 2

    def to_csv(self, path=None) -> str:
        """Columns ``t, re_c0, im_c0, ..., norm``; returns the text and writes it if ``path`` is given."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        N = self.states.shape[1]
        header = ["t"]
        for k in range(N):
            header += [f"re_c{k}", f"im_c{k}"]
        w.writerow(header + ["norm"])
        norms = np.sum(self.populations, axis=1)
        for t, c, nrm in zip(self.times, self.states, norms):
            row = [repr(float(t))]
            for z in c:
                row += [repr(float(z.real)), repr(float(z.imag))]
            w.writerow(row + [repr(float(nrm))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _rhs_stationary(problem: PerturbationProblem):
    eps = problem.epsilon
    w = problem.spectrum.omega0
    cp = problem.coupling
    N = problem.N
    if cp.kind == "constant":
        V = np.asarray(cp.entries)

        def coupling(t):
            return V

    else:
        nus, mats = cp.entries.components()

        def coupling(t):
            return np.tensordot(np.exp(1j * nus * t), mats, axes=(0, 0))

    def rhs(t, y):
        c = y.view(complex)
        ph = np.exp(1j * w * t)
        dc = -1j * eps * ph * (coupling(t) @ (np.conj(ph) * c))
        return dc.view(float)

    return rhs, N


def _rhs_slow(problem: PerturbationProblem):
    eps = problem.epsilon
    N = problem.N
    spec = problem.spectrum
    cp = problem.coupling

    # state: N complex amplitudes followed by N real accumulated phases
    def rhs(t, y):
        c = y[: 2 * N].view(complex)
        theta = y[2 * N :]
        tau = eps * t
        ph = np.exp(1j * theta)
        dc = -1j * eps * ph * (cp._slow_eval(tau) @ (np.conj(ph) * c))
        return np.concatenate((dc.view(float), spec.at(tau)))

    return rhs, N


def integrate(
    problem: PerturbationProblem,
    t_end: float,
    tol: float = DEFAULT_TOL,
    t_eval=None,
    max_step: float | None = None,
) -> Trajectory:
    """Integrate from ``t = 0`` to ``t_end`` with DOP853 and sample at ``t_eval``.

    Complex amplitudes are integrated as interleaved real pairs.  Raises
    :class:`IntegrationError` on solver failure or if the norm drifts by more
    than ``1e-6``.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    if t_eval is None:
        t_eval = default_sample_times(problem, t_end)
    t_eval = np.asarray(t_eval, float)
    if t_eval[0] < 0 or t_eval[-1] > t_end * (1 + 1e-12):
        raise ValueError("sample times outside [0, t_end]")
    c0 = np.array(problem.initial, dtype=complex)
    if problem.is_slow:
        rhs, N = _rhs_slow(problem)
        y0 = np.concatenate((c0.view(float), np.zeros(N)))
    else:
        rhs, N = _rhs_stationary(problem)
        y0 = c0.view(float).copy()
    kw = {} if max_step is None else {"max_step": max_step}
    sol = solve_ivp(rhs, (0.0, float(t_end)), y0, method="DOP853", t_eval=t_eval, rtol=tol, atol=tol, **kw)
    if sol.status != 0:
        raise IntegrationError(f"integrator failed at t={sol.t[-1] if sol.t.size else 0.0}: {sol.message}")
    states = np.ascontiguousarray(sol.y[: 2 * N].T).view(complex)
    drift = float(np.max(np.abs(np.sum(np.abs(states) ** 2, axis=1) - np.sum(np.abs(c0) ** 2))))
    if drift > MAX_NORM_DRIFT:
        raise IntegrationError(
            f"norm drift {drift:.3g} exceeds {MAX_NORM_DRIFT:g}; increase the mode count or tighten tol"
        )
    return Trajectory(sol.t.copy(), states, drift, int(sol.nfev))


def fastest_frequency(problem: PerturbationProblem, slow_samples: int = 33) -> float:
    """Largest phase rate ``|w_n - w_m + nu|`` over pairs the coupling actually connects."""
    cp = problem.coupling
    top = 0.0
    if cp.kind == "constant":
        w = problem.spectrum.omega0
        V = np.asarray(cp.entries)
        n, m = np.nonzero(np.abs(V) > 0)
        if n.size:
            top = float(np.max(np.abs(w[n] - w[m])))
    elif cp.kind == "trig":
        w = problem.spectrum.omega0
        for nu, mat in zip(*cp.entries.components()):
            n, m = np.nonzero(np.abs(mat) > 0)
            if n.size:
                top = max(top, float(np.max(np.abs(w[n] - w[m] + nu))))
    else:
        # slow time runs over [0, eps t]; the caller only knows t_end, so probe a unit window
        for tau in np.linspace(0.0, 1.0, slow_samples):
            w = np.asarray(problem.spectrum.at(tau), float)
            n, m = np.nonzero(np.abs(cp._slow_eval(tau)) > 0)
            if n.size:
                top = max(top, float(np.max(np.abs(w[n] - w[m]))))
        if top == 0.0:
            w = problem.spectrum.omega0
            top = float(np.max(w) - np.min(w))
    return max(top, 1e-3)


def sample_times(t_end: float, fastest: float, features=(), per_period: int = POINTS_PER_PERIOD) -> np.ndarray:
    """Uniform grid with ``per_period`` points per fastest period, merged with feature times."""
    period = 2 * np.pi / fastest
    n = max(2, int(np.ceil(t_end / period * per_period)) + 1)
    grid = np.linspace(0.0, t_end, n)
    feats = [f for f in features if 0.0 <= f <= t_end]
    return np.unique(np.concatenate((grid, feats)))


def default_sample_times(problem: PerturbationProblem, t_end: float, features=()) -> np.ndarray:
    return sample_times(t_end, fastest_frequency(problem), features)


def l2_distance(a, b) -> np.ndarray | float:
    """Euclidean distance between coefficient vectors along the last axis; the shorter is zero-padded."""
    a = np.asarray(a, complex)
    b = np.asarray(b, complex)
    n = max(a.shape[-1], b.shape[-1])
    pad = lambda x: np.concatenate((x, np.zeros(x.shape[:-1] + (n - x.shape[-1],), complex)), axis=-1)
    d = np.sqrt(np.sum(np.abs(pad(a) - pad(b)) ** 2, axis=-1))
    return float(d) if d.ndim == 0 else d


def error_curve(traj: Trajectory, approx, horizon: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Distance between the oracle and ``approx.coeff_fn`` at each sample time up to ``horizon``."""
    mask = np.ones(traj.times.size, bool) if horizon is None else traj.times <= horizon * (1 + 1e-12)
    t = traj.times[mask]
    coeff = approx.coeff_fn if hasattr(approx, "coeff_fn") else approx
    return t, l2_distance(traj.states[mask], coeff(t))


def sup_error(traj: Trajectory, approx, horizon: float | None = None) -> float:
    """Largest oracle-to-approximation distance over sampled ``t <= horizon``."""
    return float(np.max(error_curve(traj, approx, horizon)[1]))
