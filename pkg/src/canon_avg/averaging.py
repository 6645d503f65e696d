"""Canonical averaging of the amplitude equations to second order.

With ``dc/dt = -i eps M(t) c`` and ``M`` from :func:`canon_avg.system.build_h1`,
the near-identity change ``c = (1 + eps B(t)) cbar`` with ``B = -i {M}``
removes the oscillating part of ``M`` to first order and leaves

    dcbar/dt = -i eps (<M> + eps K2) cbar,   K2 = -i <M~ {M}>

``K2`` is Hermitian; in a non-degenerate spectrum both ``<M>`` and ``K2`` are
diagonal and their entries are the frequency corrections.  All coefficient
functions returned here are in the bare frame, i.e. relative to the phases
``exp(-i w0_n t)`` (or ``exp(-i int w_n(eps t) dt)`` for slow problems), so they
compare directly with the oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import LevelCrossingError, ResonanceError
from .harmonic import (
    HarmonicMatrix,
    average,
    matrix_average,
    matrix_brace,
    matrix_fluctuation,
    matrix_mul,
)
from .quadrature import cumulative
from .system import (
    BARE,
    RHO_RES,
    PerturbationProblem,
    build_h1,
    frozen_h1,
    reference_frequencies,
)

OFFDIAG_TOL = 1e-13
HORIZON_CONST = 1.0


@dataclass(frozen=True)
class AveragedHamiltonians:
    h1: HarmonicMatrix
    h1_bar: HarmonicMatrix
    h1_brace: HarmonicMatrix
    h2_bar: HarmonicMatrix
    epsilon: float
    rho_dc: float
    folded: np.ndarray | None = None

    def generator(self) -> np.ndarray:
        """Dense ``<M> + eps K2`` driving the averaged amplitudes."""
        return self.h1_bar.dc(self.rho_dc) + self.epsilon * self.h2_bar.dc(self.rho_dc)

    def offdiagonal_norm(self) -> float:
        K = self.generator()
        return float(np.max(np.abs(K - np.diag(np.diag(K))))) if K.size else 0.0


def averaged_hamiltonians(
    H1: HarmonicMatrix,
    epsilon: float,
    rho_dc: float | None = None,
    nonresonant: bool = True,
    folded=None,
) -> AveragedHamiltonians:
    """Mean, zero-mean antiderivative and second-order mean of ``H1``.

    ``rho_dc`` defaults to ``RHO_RES * epsilon``.  ``folded`` carries any
    first-order shift already moved into the reference frequencies so that
    :func:`frequency_shifts` can report the full correction.
    """
    if rho_dc is None:
        rho_dc = RHO_RES * epsilon
    h1_bar = matrix_average(H1, rho_dc)
    if nonresonant:
        for (i, j), f in h1_bar.items():
            if i != j and abs(average(f, rho_dc)) > OFFDIAG_TOL:
                raise ResonanceError(
                    f"modes {i} and {j} are resonant (|w_ij| <= {rho_dc:.3g}); "
                    "reduce the pair with two_level_reduce"
                )
    h1_brace = matrix_brace(H1, rho_dc)
    product = matrix_mul(matrix_fluctuation(H1, rho_dc), h1_brace)
    h2_bar = matrix_average(product, rho_dc) * (-1j)
    fold = None if folded is None else np.asarray(folded, float)
    return AveragedHamiltonians(H1, h1_bar, h1_brace, h2_bar, float(epsilon), float(rho_dc), fold)


def average_problem(problem: PerturbationProblem, rho_dc: float | None = None, nonresonant: bool = True):
    """:func:`averaged_hamiltonians` for a stationary or harmonically driven problem."""
    H1 = build_h1(problem)
    folded = reference_frequencies(problem) - problem.spectrum.omega0
    return averaged_hamiltonians(H1, problem.epsilon, rho_dc, nonresonant, folded)


def frequency_shifts(avg: AveragedHamiltonians) -> np.ndarray:
    """Corrections ``dw_k = eps <v_kk> + eps^2 sum_l' |v_kl|^2 / w_kl``."""
    K = avg.generator()
    off = K - np.diag(np.diag(K))
    if off.size and np.max(np.abs(off)) > OFFDIAG_TOL:
        raise ResonanceError("averaged Hamiltonian is not diagonal; the spectrum has a resonant pair")
    d = np.diag(K)
    if np.max(np.abs(d.imag), initial=0.0) > 1e-12:
        raise ValueError("frequency shifts came out complex; coupling is not Hermitian")
    shifts = avg.epsilon * d.real
    if avg.folded is not None:
        shifts = shifts + avg.folded
    return shifts


@dataclass(frozen=True)
class ApproxSolution:
    """Approximate amplitudes ``c_k(t)`` and what produced them.

    ``coeff_fn(t)`` takes a scalar or array and returns shape ``(N,)`` or
    ``(len(t), N)``.  ``phase_fn(t)`` gives the reference phases ``theta_k(t)``
    so that ``Psi = sum_k c_k(t) psi_k exp(-i theta_k(t))``.
    """

    order: int
    Omega: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    coeff_fn: Callable
    valid_horizon: float
    phase_fn: Callable
    label: str = ""

    @property
    def A(self) -> np.ndarray:
        return self.A2 if self.order == 2 else self.A1

    def __call__(self, t):
        return self.coeff_fn(t)

    def wavefunction(self, x, t, basis_fn: Callable) -> np.ndarray:
        """``Psi(x, t)`` given ``basis_fn(x, t) -> (N, len(x))`` eigenfunctions."""
        c = self.coeff_fn(t) * np.exp(-1j * self.phase_fn(t))
        return c @ basis_fn(x, t)


def _vectorize(fn):
    def wrapped(t):
        t = np.asarray(t, float)
        out = fn(np.atleast_1d(t))
        return out[0] if t.ndim == 0 else out

    return wrapped


def _stationary_phase_fn(problem: PerturbationProblem):
    w = problem.spectrum.omega0
    return _vectorize(lambda t: np.multiply.outer(t, w))


def _check_stationary(problem: PerturbationProblem):
    if problem.is_slow:
        raise ValueError("slow-coupling problems go through post_adiabatic")


def apply_initial_conditions(B0: np.ndarray, c0, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    """Constants so that ``A2 + eps B(0) A1`` equals ``c0`` exactly; ``A1 = c0``."""
    c0 = np.asarray(c0, complex)
    A1 = c0.copy()
    A2 = c0 - epsilon * (np.asarray(B0) @ A1)
    return A1, A2


def solve_first_order(problem: PerturbationProblem, avg: AveragedHamiltonians | None = None,
                      c_h: float = HORIZON_CONST) -> ApproxSolution:
    """Averaged amplitudes with first-order frequencies ``w0_k + eps <v_kk>``."""
    if problem.is_slow:
        return _slow_first_order(problem, c_h)
    if avg is None:
        avg = average_problem(problem)
    K1 = avg.h1_bar.dc(avg.rho_dc)
    if np.max(np.abs(K1 - np.diag(np.diag(K1))), initial=0.0) > OFFDIAG_TOL:
        raise ResonanceError("first-order mean coupling is not diagonal; use two_level_reduce")
    shift = problem.epsilon * np.real(np.diag(K1))
    if avg.folded is not None:
        shift = shift + avg.folded
    c0 = np.array(problem.initial)

    def coeff(t):
        return c0 * np.exp(-1j * np.multiply.outer(t, shift))

    return ApproxSolution(1, problem.spectrum.omega0 + shift, c0, c0, _vectorize(coeff),
                          c_h / problem.epsilon, _stationary_phase_fn(problem), "first order")


def solve_second_order(problem: PerturbationProblem, avg: AveragedHamiltonians | None = None,
                       c_h: float = HORIZON_CONST) -> ApproxSolution:
    """Second-order coefficients for a non-degenerate stationary or driven problem.

    ``c(t) = A2 e^{-i dW t} + eps B(t) (A1 e^{-i dW t})`` in the frame of
    :func:`build_h1`, mapped back to the bare frame.  ``A1, A2`` come from
    :func:`apply_initial_conditions`, so ``c(0)`` equals the initial state.
    """
    _check_stationary(problem)
    if avg is None:
        avg = average_problem(problem)
    eps = problem.epsilon
    dW = eps * np.real(np.diag(avg.generator()))
    frequency_shifts(avg)  # raises on resonant pairs
    W = reference_frequencies(problem)
    fold = W - problem.spectrum.omega0
    brace = avg.h1_brace
    A1, A2 = apply_initial_conditions(-1j * brace.evaluate(0.0), problem.initial, eps)

    def coeff(t):
        rot = np.exp(-1j * np.multiply.outer(t, dW))
        B = -1j * brace.evaluate(t)
        c = A2 * rot + eps * np.einsum("tkm,tm->tk", B, A1 * rot)
        return c * np.exp(-1j * np.multiply.outer(t, fold))

    return ApproxSolution(2, W + dW, A1, A2, _vectorize(coeff), c_h / eps,
                          _stationary_phase_fn(problem), "second order")


def standard_pt_coefficient(problem: PerturbationProblem, t) -> np.ndarray:
    """Textbook first-order coefficients ``c0 - i eps int M c0`` with the indefinite
    (zero-mean) antiderivative; kept only as a baseline, it does not satisfy
    ``c(0) = c0`` and carries no frequency correction.
    """
    _check_stationary(problem)
    bare = PerturbationProblem(problem.spectrum, problem.coupling, problem.epsilon, problem.initial, BARE)
    H1 = build_h1(bare)
    t = np.asarray(t, float)
    tt = np.atleast_1d(t)
    mean = H1.dc(0.0)
    integral = np.multiply.outer(tt, mean) + matrix_brace(H1, 0.0).evaluate(tt)
    c0 = np.asarray(problem.initial)
    out = c0 - 1j * problem.epsilon * (integral @ c0)
    return out[0] if t.ndim == 0 else out


# --- two-level reduction ---------------------------------------------------------


@dataclass(frozen=True)
class TwoLevelSystem:
    alpha: int
    beta: int
    delta0: float
    g: complex
    v_aa: float
    v_bb: float
    epsilon: float

    @property
    def delta(self) -> float:
        return self.delta0 + self.v_aa - self.v_bb

    @property
    def Delta(self) -> float:
        return math.sqrt(self.delta ** 2 + 4 * abs(self.g) ** 2)

    @property
    def Omega1(self) -> float:
        return 0.5 * (self.delta + self.Delta)

    @property
    def Omega2(self) -> float:
        return 0.5 * (self.delta - self.Delta)

    @property
    def period(self) -> float:
        """Return time in slow units ``tau = eps t``."""
        return 2 * math.pi / self.Delta


def two_level_reduce(problem: PerturbationProblem, pair: tuple[int, int], delta0: float | None = None,
                     rho_res: float = RHO_RES) -> TwoLevelSystem:
    """Isolate a resonant pair.

    The coupling term whose frequency in ``v_ab exp(i w_ab t)`` lies within
    ``rho_res * eps`` of zero supplies ``g``; its frequency divided by ``eps``
    is the detuning ``delta0`` unless one is given.  This covers close levels
    and a single-frequency drive near a transition alike.
    """
    _check_stationary(problem)
    a, b = pair
    if a == b:
        raise ValueError("pair must name two different modes")
    eps = problem.epsilon
    bare = PerturbationProblem(problem.spectrum, problem.coupling, eps, problem.initial, BARE)
    H1 = build_h1(bare)
    f = H1[a, b]
    near = np.abs(f.frequencies) <= rho_res * eps
    if not np.any(near):
        raise ResonanceError(f"modes {a} and {b} have no coupling term within {rho_res * eps:.3g} of resonance")
    k = np.flatnonzero(near)[np.argmin(np.abs(f.frequencies[near]))]
    g = complex(f.amplitudes[k])
    d0 = float(f.frequencies[k]) / eps if delta0 is None else float(delta0)
    v_aa = average(H1[a, a]).real
    v_bb = average(H1[b, b]).real
    sys = TwoLevelSystem(a, b, d0, g, v_aa, v_bb, eps)
    if sys.Delta == 0.0:
        raise ResonanceError(f"modes {a} and {b} are not coupled (g = 0 and zero detuning)")
    return sys


def two_level_closed_form(sys: TwoLevelSystem, tau, c0=(1.0, 0.0)) -> tuple[np.ndarray, np.ndarray]:
    """Averaged pair amplitudes at slow time ``tau``.

    Starting in ``alpha``:
    ``ca = (W1 e^{i W2 tau} - W2 e^{i W1 tau})/D`` and
    ``cb = g* (e^{-i W1 tau} - e^{-i W2 tau})/D``.  Other starts use the
    2x2 propagator.
    """
    if sys.Delta == 0.0:
        raise ResonanceError("pair is not coupled")
    tau = np.asarray(tau, float)
    a0, b0 = complex(c0[0]), complex(c0[1])
    D, W1, W2 = sys.Delta, sys.Omega1, sys.Omega2
    if a0 == 1.0 and b0 == 0.0:
        ca = (W1 * np.exp(1j * W2 * tau) - W2 * np.exp(1j * W1 * tau)) / D
        cb = np.conj(sys.g) / D * (np.exp(-1j * W1 * tau) - np.exp(-1j * W2 * tau))
        return ca, cb
    return _two_level_propagate(sys, tau, a0, b0)


def _two_level_propagate(sys: TwoLevelSystem, tau, a0: complex, b0: complex):
    # in the frame a = ca e^{-i d tau/2}, b = cb e^{i d tau/2} the pair is time independent
    d, g, D = sys.delta, sys.g, sys.Delta
    H = np.array([[d / 2, g], [np.conj(g), -d / 2]])
    tau = np.asarray(tau, float)
    ct, st = np.cos(D * tau / 2), np.sin(D * tau / 2)
    I = np.eye(2)
    U = ct[..., None, None] * I - 1j * (st / (D / 2))[..., None, None] * H
    ab = U @ np.array([a0, b0])
    ca = ab[..., 0] * np.exp(1j * d * tau / 2)
    cb = ab[..., 1] * np.exp(-1j * d * tau / 2)
    return ca, cb


def two_level_propagator(sys: TwoLevelSystem, tau: float) -> np.ndarray:
    """Matrix exponential route to the same 2x2 evolution, for cross-checks."""
    d, g = sys.delta, sys.g
    H = np.array([[d / 2, g], [np.conj(g), -d / 2]])
    frame = np.diag([np.exp(1j * d * tau / 2), np.exp(-1j * d * tau / 2)])
    return frame @ expm(-1j * H * tau)


def two_level_solution(problem: PerturbationProblem, sys: TwoLevelSystem,
                       c_h: float | None = None) -> ApproxSolution:
    """Full-mode first-order solution around a resonant pair, in the bare frame.

    The pair follows :func:`two_level_closed_form`; every other mode keeps its
    initial amplitude with the first-order phase ``eps <v_nn>``.
    """
    eps = problem.epsilon
    bare = PerturbationProblem(problem.spectrum, problem.coupling, eps, problem.initial, BARE)
    H1 = build_h1(bare)
    vdiag = np.array([average(H1[n, n]).real for n in range(problem.N)])
    c0 = np.array(problem.initial)
    a, b = sys.alpha, sys.beta
    horizon = sys.period / eps if c_h is None else c_h / eps

    def coeff(t):
        out = c0 * np.ones((t.size, 1), complex)
        ca, cb = two_level_closed_form(sys, eps * t, (c0[a], c0[b]))
        out[:, a] = ca
        out[:, b] = cb
        return out * np.exp(-1j * eps * np.multiply.outer(t, vdiag))

    Omega = problem.spectrum.omega0 + eps * vdiag
    return ApproxSolution(1, Omega, c0, c0, _vectorize(coeff), horizon, _stationary_phase_fn(problem),
                          "two-level")


def degenerate_shifts(v_aa: float, v_bb: float, v_ab: complex, epsilon: float) -> tuple[float, float]:
    """First-order splitting of a degenerate pair: eigenvalues of ``eps [[v_aa, v_ab], [v_ab*, v_bb]]``."""
    mean = 0.5 * (v_aa + v_bb)
    half = 0.5 * math.sqrt((v_aa - v_bb) ** 2 + 4 * abs(v_ab) ** 2)
    return epsilon * (mean + half), epsilon * (mean - half)


def dressed_frequencies(problem: PerturbationProblem, sys: TwoLevelSystem) -> tuple[float, float]:
    """Perturbed frequencies of a close pair: ``(W_a + W_b)/2 +- sqrt((W_a - W_b)^2 + 4 eps^2 |g|^2)/2``."""
    eps = problem.epsilon
    w = problem.spectrum.omega0
    Wa = w[sys.alpha] + eps * sys.v_aa
    Wb = w[sys.beta] + eps * sys.v_bb
    mid = 0.5 * (Wa + Wb)
    half = 0.5 * math.sqrt((Wa - Wb) ** 2 + 4 * eps * eps * abs(sys.g) ** 2)
    return mid + half, mid - half


# --- resonant ladder ---------------------------------------------------------------


def resonant_ladder_solve(epsilon1: float, detune: float, t, N: int,
                          envelope: Callable[[np.ndarray], np.ndarray] | None = None,
                          tol: float = 1e-11) -> np.ndarray:
    """Averaged ladder amplitudes for a drive ``epsilon1 cos((1 - detune) t)`` from the ground state.

    The averaged equations ``dc_k/dt = i G [sqrt(k+1) c_{k+1} + sqrt(k) c_{k-1}]``-type
    (with ``G = (xi/sqrt2) e^{-i detune t}``) are solved by a coherent state:
    ``c_k = (-delta)^k / sqrt(k!) exp(S)`` with
    ``delta = -(i/sqrt2) int xi e^{i detune z} dz`` and
    ``S = -(i/sqrt2) int xi e^{-i detune z} delta dz``.  ``envelope`` overrides
    the slowly varying amplitude ``xi`` (default ``epsilon1/2``).
    Returns shape ``(len(t), N)``.
    """
    t = np.atleast_1d(np.asarray(t, float))
    sq2 = math.sqrt(2.0)
    if envelope is None and detune == 0.0:
        a = 1j * epsilon1 * t / (2 * sq2)
        damp = np.exp(-(epsilon1 * t / 4) ** 2)
        delta = -a
        S = np.log(damp)
    else:
        xi = (lambda s: 0.5 * epsilon1) if envelope is None else envelope

        def f(s, y):
            dl = -1j / sq2 * xi(s) * np.exp(1j * detune * s)
            return np.array([dl, -1j / sq2 * xi(s) * np.exp(-1j * detune * s) * y[0]])

        vals = cumulative(f, t, size=2, tol=tol, max_step=1.0)
        delta, S = vals[:, 0], vals[:, 1]
    lognf = np.array([0.5 * math.lgamma(k + 1) for k in range(N)])
    out = np.empty((t.size, N), complex)
    out[:, 0] = np.exp(S)
    for k in range(1, N):
        out[:, k] = out[:, k - 1] * (-delta)
    return out * np.exp(-lognf)


def poisson_probabilities(epsilon1: float, t: float, N: int) -> np.ndarray:
    """``w_n = nbar^n e^{-nbar} / n!`` with ``nbar = (epsilon1 t / (2 sqrt2))^2`` for ``n < N``."""
    nbar = (epsilon1 * t / (2 * math.sqrt(2.0))) ** 2
    n = np.arange(N)
    if nbar == 0.0:
        return (n == 0).astype(float)
    logw = n * math.log(nbar) - nbar - np.array([math.lgamma(k + 1) for k in n])
    return np.exp(logw)


# --- slow problems -----------------------------------------------------------------


def _slow_data(problem: PerturbationProblem, tau: float):
    u = problem.coupling._slow_eval(tau)
    W = problem.spectrum.at(tau) + problem.epsilon * np.real(np.diag(u))
    return u, W


def slow_frequency_shifts(problem: PerturbationProblem, tau: float) -> np.ndarray:
    """``dW_k(tau) = sum_l' |u_kl|^2 / W_kl`` from the frozen coupling."""
    u, W = _slow_data(problem, tau)
    Wkl = W[:, None] - W[None, :]
    np.fill_diagonal(Wkl, np.inf)
    a2 = np.abs(u) ** 2
    np.fill_diagonal(a2, 0.0)
    return np.sum(a2 / Wkl, axis=1)


def frozen_averaged(problem: PerturbationProblem, tau: float, rho_dc: float | None = None) -> AveragedHamiltonians:
    """The general averaging chain applied to the slow coupling at fixed ``tau``."""
    H, _ = frozen_h1(problem, tau)
    return averaged_hamiltonians(H, problem.epsilon, rho_dc)


def check_level_gaps(problem: PerturbationProblem, t_end: float, rho_res: float = RHO_RES, samples: int = 401):
    """Raise :class:`LevelCrossingError` if two coupled levels come within ``rho_res * eps``."""
    eps = problem.epsilon
    for tau in np.linspace(0.0, eps * t_end, samples):
        _, W = _slow_data(problem, tau)
        gaps = np.abs(W[:, None] - W[None, :])
        np.fill_diagonal(gaps, np.inf)
        m, n = np.unravel_index(np.argmin(gaps), gaps.shape)
        if gaps[m, n] <= rho_res * eps:
            raise LevelCrossingError(int(min(m, n)), int(max(m, n)), float(tau), float(gaps[m, n]))


def _slow_first_order(problem: PerturbationProblem, c_h: float) -> ApproxSolution:
    eps = problem.epsilon
    c0 = np.array(problem.initial)
    phases = _slow_phases(problem)

    def coeff(t):
        _, D, _ = phases(t)
        return c0 * np.exp(-1j * D)

    return ApproxSolution(1, problem.spectrum.at(0.0), c0, c0, _vectorize(coeff), c_h / eps,
                          _vectorize(lambda t: phases(t)[0]), "adiabatic")


def _slow_phases(problem: PerturbationProblem, tol: float = 1e-11):
    """Cumulative ``theta_k = int w_k``, ``D_k = eps int u_kk`` and ``alpha_k = eps^2 int dW_k``."""
    eps = problem.epsilon
    N = problem.N

    def f(s, y):
        tau = eps * s
        u = problem.coupling._slow_eval(tau)
        return np.concatenate((problem.spectrum.at(tau), eps * np.real(np.diag(u)),
                               eps * eps * slow_frequency_shifts(problem, tau)))

    def run(t):
        vals = cumulative(f, t, size=3 * N, tol=tol, max_step=2.0).real
        return vals[:, :N], vals[:, N:2 * N], vals[:, 2 * N:]

    return run


def post_adiabatic(problem: PerturbationProblem, t_end: float | None = None, c_h: float = HORIZON_CONST,
                   rho_res: float = RHO_RES) -> ApproxSolution:
    """Second-order solution for a slowly varying coupling.

    ``c_k = A2_k e^{-i a_k} + eps sum_m' B_km(t) A1_m e^{-i a_m}`` with
    ``B_km = -u_km(tau) e^{i theta'_km} / W_km(tau)`` and phases
    ``a_k = eps int u_kk + eps^2 int dW_k`` by adaptive quadrature.
    """
    if not problem.is_slow:
        raise ValueError("post_adiabatic needs a slow coupling")
    eps = problem.epsilon
    horizon = c_h / eps
    check_level_gaps(problem, horizon if t_end is None else max(t_end, horizon), rho_res)
    phases = _slow_phases(problem)

    def B_at(tau, theta_p):
        u, W = _slow_data(problem, tau)
        Wkm = W[:, None] - W[None, :]
        np.fill_diagonal(Wkm, np.inf)
        ph = np.exp(1j * (theta_p[:, None] - theta_p[None, :]))
        B = -u * ph / Wkm
        np.fill_diagonal(B, 0.0)
        return B

    A1, A2 = apply_initial_conditions(B_at(0.0, np.zeros(problem.N)), problem.initial, eps)

    def coeff(t):
        theta, D, alpha = phases(t)
        out = np.empty((t.size, problem.N), complex)
        for i, ti in enumerate(t):
            B = B_at(eps * ti, theta[i] + D[i])
            rot = np.exp(-1j * alpha[i])
            out[i] = (A2 * rot + eps * B @ (A1 * rot)) * np.exp(-1j * D[i])
        return out

    Omega = problem.spectrum.at(0.0) + eps * eps * slow_frequency_shifts(problem, 0.0)
    return ApproxSolution(2, Omega, A1, A2, _vectorize(coeff), horizon,
                          _vectorize(lambda t: phases(t)[0]), "post-adiabatic")


def born_fock_coefficient(problem: PerturbationProblem, t, source: int | None = None) -> np.ndarray:
    """Baseline ``c_k = c0_k - i eps int_0^t u_ks e^{i theta_ks} dt'`` for a start in mode ``s``.

    It omits the second-order phase drift, so it matches the post-adiabatic
    result only up to ``exp(-i alpha)``.
    """
    if not problem.is_slow:
        raise ValueError("born_fock_coefficient needs a slow coupling")
    eps = problem.epsilon
    N = problem.N
    c0 = np.asarray(problem.initial)
    s = int(np.argmax(np.abs(c0))) if source is None else source

    def f(x, y):
        tau = eps * x
        theta = y[:N].real
        u = problem.coupling._slow_eval(tau)
        col = u[:, s].copy()
        col[s] = 0.0
        dc = -1j * eps * col * np.exp(1j * (theta - theta[s]))
        return np.concatenate((problem.spectrum.at(tau).astype(complex), dc))

    t = np.asarray(t, float)
    vals = cumulative(f, np.atleast_1d(t), size=2 * N, tol=1e-11, max_step=2.0)
    out = c0 + vals[:, N:]
    return out[0] if t.ndim == 0 else out


def born_fock_missing_phase(problem: PerturbationProblem, t) -> np.ndarray:
    """``exp(-i alpha_s(t))``: the factor by which the post-adiabatic start-mode amplitude differs."""
    t = np.atleast_1d(np.asarray(t, float))
    _, _, alpha = _slow_phases(problem)(t)
    return np.exp(-1j * alpha)
