"""Truncated mode systems: spectrum, Hermitian coupling, small parameter.

Amplitudes follow ``dc_n/dt = -i eps sum_m v_nm(t) c_m exp(i w_nm t)`` with
``w_nm = w_n - w_m``.  :func:`build_h1` packs ``v_nm exp(i w_nm t)`` into a
:class:`~canon_avg.harmonic.HarmonicMatrix` so the equation reads
``dc/dt = -i eps M(t) c``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .harmonic import HarmonicMatrix, TrigSum, average

NORM_TOL = 1e-10
HERM_TOL = 1e-12
RHO_RES = 3.0

BARE = "bare"
RENORMALIZED = "renormalized"


def _as_real_vector(x, name) -> np.ndarray:
    arr = np.asarray(x, dtype=float).ravel()
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


@dataclass(frozen=True)
class SpectrumModel:
    """Unperturbed frequencies, optionally varying in slow time.

    ``slow_omega(tau)`` returns the instantaneous frequencies; when it is set,
    ``omega0`` holds their values at ``tau = 0``.
    """

    omega0: np.ndarray
    slow_omega: Callable[[float], Sequence[float]] | None = None

    def __post_init__(self):
        w = _as_real_vector(self.omega0, "omega0")
        if w.size < 2:
            raise ValueError("spectrum needs at least two modes")
        object.__setattr__(self, "omega0", w)

    @property
    def N(self) -> int:
        return self.omega0.size

    def at(self, tau: float) -> np.ndarray:
        if self.slow_omega is None:
            return self.omega0
        w = _as_real_vector(self.slow_omega(tau), "slow_omega(tau)")
        if w.size != self.N:
            raise ValueError("slow_omega returned the wrong number of modes")
        return w


def _hermitian_defect(mat: np.ndarray) -> float:
    return float(np.max(np.abs(mat - mat.conj().T))) if mat.size else 0.0


@dataclass(frozen=True)
class CouplingModel:
    """Hermitian coupling ``v_mn``.

    ``kind`` is ``"constant"`` (an N x N matrix), ``"trig"`` (a HarmonicMatrix
    in fast time) or ``"slow"`` (a callback ``tau -> N x N`` matrix).
    """

    kind: str
    entries: object
    dim: int = field(init=False)

    def __post_init__(self):
        if self.kind == "constant":
            mat = np.array(self.entries, dtype=complex)
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
                raise ValueError("constant coupling must be a square matrix")
            if not np.all(np.isfinite(mat)):
                raise ValueError("coupling has non-finite entries")
            bad = _hermitian_defect(mat)
            if bad > HERM_TOL:
                raise ValueError(f"coupling is not Hermitian (defect {bad:.3g})")
            mat.setflags(write=False)
            object.__setattr__(self, "entries", mat)
            object.__setattr__(self, "dim", mat.shape[0])
        elif self.kind == "trig":
            if not isinstance(self.entries, HarmonicMatrix):
                raise TypeError("trig coupling needs a HarmonicMatrix")
            bad = self.entries.hermitian_defect()
            if bad > HERM_TOL:
                raise ValueError(f"coupling is not Hermitian (defect {bad:.3g})")
            object.__setattr__(self, "dim", self.entries.dim)
        elif self.kind == "slow":
            if not callable(self.entries):
                raise TypeError("slow coupling needs a callable tau -> matrix")
            mat = self._slow_eval(0.0)
            object.__setattr__(self, "dim", mat.shape[0])
        else:
            raise ValueError(f"unknown coupling kind {self.kind!r}")

    @classmethod
    def constant(cls, mat) -> "CouplingModel":
        return cls("constant", mat)

    @classmethod
    def trig(cls, H: HarmonicMatrix) -> "CouplingModel":
        return cls("trig", H)

    @classmethod
    def slow(cls, fn: Callable[[float], np.ndarray]) -> "CouplingModel":
        return cls("slow", fn)

    def _slow_eval(self, tau: float) -> np.ndarray:
        mat = np.asarray(self.entries(tau), dtype=complex)
        bad = _hermitian_defect(mat)
        if bad > HERM_TOL:
            raise ValueError(f"slow coupling not Hermitian at tau={tau} (defect {bad:.3g})")
        return mat

    def at(self, t: float, epsilon: float) -> np.ndarray:
        """Dense ``v(t)``; slow couplings are evaluated at ``tau = epsilon * t``."""
        if self.kind == "constant":
            return self.entries
        if self.kind == "trig":
            return self.entries.evaluate(t)
        return self._slow_eval(epsilon * t)


@dataclass(frozen=True)
class PerturbationProblem:
    spectrum: SpectrumModel
    coupling: CouplingModel
    epsilon: float
    initial: np.ndarray
    phase_convention: str = RENORMALIZED

    def __post_init__(self):
        eps = float(self.epsilon)
        if not (0.0 < eps < 1.0):
            raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
        object.__setattr__(self, "epsilon", eps)
        c0 = np.array(self.initial, dtype=complex).ravel()
        if c0.size != self.spectrum.N or self.coupling.dim != self.spectrum.N:
            raise ValueError(
                f"size mismatch: spectrum {self.spectrum.N}, coupling {self.coupling.dim}, "
                f"initial {c0.size}"
            )
        norm = float(np.sum(np.abs(c0) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"initial amplitudes not normalized (sum |c|^2 = {norm!r})")
        c0.setflags(write=False)
        object.__setattr__(self, "initial", c0)
        if self.phase_convention not in (BARE, RENORMALIZED):
            raise ValueError(f"unknown phase convention {self.phase_convention!r}")

    @property
    def N(self) -> int:
        return self.spectrum.N

    @property
    def is_slow(self) -> bool:
        return self.coupling.kind == "slow"

    def with_initial(self, c0) -> "PerturbationProblem":
        return PerturbationProblem(self.spectrum, self.coupling, self.epsilon, c0, self.phase_convention)

    def with_epsilon(self, epsilon: float) -> "PerturbationProblem":
        return PerturbationProblem(self.spectrum, self.coupling, epsilon, self.initial, self.phase_convention)


def _coupling_trig(problem: PerturbationProblem) -> HarmonicMatrix:
    cp = problem.coupling
    if cp.kind == "constant":
        return HarmonicMatrix.from_dense(cp.entries)
    if cp.kind == "trig":
        return cp.entries
    raise ValueError("build_h1 needs a constant or trig coupling; slow couplings use frozen_h1")


def diagonal_dc(problem: PerturbationProblem) -> np.ndarray:
    """Mean diagonal coupling ``<v_nn>`` (real for Hermitian couplings)."""
    V = _coupling_trig(problem)
    return np.array([average(V[n, n]).real for n in range(problem.N)])


def reference_frequencies(problem: PerturbationProblem) -> np.ndarray:
    """Phase frequencies used by :func:`build_h1`.

    Bare: ``w0``.  Renormalized: ``w0 + eps <v_nn>``.
    """
    w = problem.spectrum.omega0
    if problem.phase_convention == BARE or problem.is_slow:
        return w.copy()
    return w + problem.epsilon * diagonal_dc(problem)


def build_h1(problem: PerturbationProblem) -> HarmonicMatrix:
    """Interaction matrix with entries ``v_nm(t) exp(i W_nm t)``.

    In the renormalized convention the mean diagonal is removed and ``W`` are
    the shifted frequencies from :func:`reference_frequencies`.
    """
    V = _coupling_trig(problem)
    W = reference_frequencies(problem)
    renorm = problem.phase_convention == RENORMALIZED
    out = {}
    for (n, m), f in V.items():
        if renorm and n == m:
            f = f - average(f)
        out[(n, m)] = f.shift(W[n] - W[m])
    return HarmonicMatrix(problem.N, out, hermitian=True)


def frozen_h1(problem: PerturbationProblem, tau: float) -> tuple[HarmonicMatrix, np.ndarray]:
    """Slow-coupling interaction matrix with ``tau`` held fixed.

    Entries are ``u_nm(tau) exp(i W_nm t)`` with ``W_n = w_n(tau) + eps u_nn(tau)``;
    the diagonal is folded into ``W`` and left out of the matrix.
    """
    if not problem.is_slow:
        raise ValueError("frozen_h1 is for slow couplings")
    u = problem.coupling._slow_eval(tau)
    W = problem.spectrum.at(tau) + problem.epsilon * np.real(np.diag(u))
    N = problem.N
    entries = {
        (n, m): TrigSum.from_arrays([u[n, m]], [W[n] - W[m]])
        for n in range(N)
        for m in range(N)
        if n != m and u[n, m] != 0
    }
    return HarmonicMatrix(N, entries, hermitian=True), W


def renormalized_to_bare(problem: PerturbationProblem, t, c) -> np.ndarray:
    """Map amplitudes from the :func:`build_h1` frame back to the bare frame."""
    t = np.asarray(t, float)
    dW = reference_frequencies(problem) - problem.spectrum.omega0
    return np.asarray(c) * np.exp(-1j * np.multiply.outer(t, dW))


class ActionAngleState(NamedTuple):
    actions: np.ndarray
    angles: np.ndarray


def to_action_angle(c) -> ActionAngleState:
    """``c_n = sqrt(I_n) exp(-i psi_n)``; the angle of a zero amplitude is 0."""
    c = np.asarray(c, dtype=complex)
    actions = np.abs(c) ** 2
    angles = np.where(c == 0, 0.0, -np.angle(c))
    return ActionAngleState(actions, angles)


def from_action_angle(state: ActionAngleState) -> np.ndarray:
    actions = np.asarray(state.actions, float)
    if np.any(actions < 0):
        raise ValueError("actions must be non-negative")
    return np.sqrt(actions) * np.exp(-1j * np.asarray(state.angles, float))


class Resonance(NamedTuple):
    m: int
    n: int
    label: str
    nu: float | None = None


def detect_resonances(
    spectrum: SpectrumModel,
    drive_freqs: Sequence[float] = (),
    epsilon: float = 0.1,
    rho_res: float = RHO_RES,
) -> set[Resonance]:
    """Principal, internal (``|w_mn| <= rho eps``) and external (``|w_mn +- nu| <= rho eps``) resonances."""
    if rho_res <= 0:
        raise ValueError("rho_res must be positive")
    w = spectrum.omega0
    width = rho_res * epsilon
    found = {Resonance(k, k, "principal") for k in range(w.size)}
    for m in range(w.size):
        for n in range(w.size):
            if m == n:
                continue
            wmn = w[m] - w[n]
            if abs(wmn) <= width:
                found.add(Resonance(m, n, "internal"))
            for nu in drive_freqs:
                nu = abs(float(nu))
                if nu > width and min(abs(wmn - nu), abs(wmn + nu)) <= width:
                    found.add(Resonance(m, n, "external", nu))
    return found


def auto_truncation(c0, headroom: int = 4, tol: float = 1e-8, minimum: int = 2) -> int:
    """Smallest N capturing ``1 - tol`` of the initial norm, plus headroom."""
    p = np.cumsum(np.abs(np.asarray(c0, complex)) ** 2)
    total = p[-1]
    k = int(np.searchsorted(p, total * (1 - tol))) + 1
    return max(minimum, k + headroom)


def horizon(epsilon: float, c_h: float = 1.0) -> float:
    if epsilon <= 0 or not math.isfinite(c_h) or c_h <= 0:
        raise ValueError("need epsilon > 0 and a positive horizon constant")
    return c_h / epsilon

