"""Driven quantum harmonic oscillator: basis, drives, couplings, exact solutions.

Units are those of ``i dPsi/dt = [-1/2 d^2/dx^2 + x^2/2 - xi(t) x] Psi`` with
the free ground state at ``t = 0``.  The exact state is a coherent state
built from

    delta(t) = -(i/sqrt2) int_0^t xi(z) exp(iz) dz
    Phi(t)   = int_0^t delta(z)^2 exp(-2iz) dz

Coefficients are returned relative to the phases of the chosen basis, so they
line up with what the oracle and the solvers produce.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial.hermite import hermgauss

from .harmonic import HarmonicMatrix, TrigSum
from .quadrature import cumulative
from .system import CouplingModel, PerturbationProblem, SpectrumModel

SOFT_SWITCH_TOL = 1e-8
SQ2 = math.sqrt(2.0)


@dataclass(frozen=True)
class DriveProfile:
    """External force ``xi``.

    Fast drives (``abrupt_constant``, ``sinusoidal``) are functions of ``t``.
    Slow drives (``gaussian_adiabatic``, ``custom``) are functions of the slow
    time ``tau = eps t``; their ``xi``/``xi_dot`` methods take ``t`` and ``eps``.
    """

    kind: str
    epsilon1: float
    nu: float = 0.0
    phase: float = 0.0
    tau0: float = 0.0
    width: float = 1.0
    fn: Callable[[float], float] | None = None
    dfn: Callable[[float], float] | None = None
    soft_switch: bool = False

    def __post_init__(self):
        if self.kind not in ("abrupt_constant", "sinusoidal", "gaussian_adiabatic", "custom"):
            raise ValueError(f"unknown drive kind {self.kind!r}")
        if not math.isfinite(self.epsilon1):
            raise ValueError("drive amplitude must be finite")
        if self.kind == "sinusoidal" and not self.nu > 0:
            raise ValueError("sinusoidal drive needs nu > 0")
        if self.kind == "gaussian_adiabatic":
            if self.width <= 0:
                raise ValueError("width must be positive")
            x0, d0 = abs(self.xi_tau(0.0)), abs(self.dxi_tau(0.0))
            if max(x0, d0) > SOFT_SWITCH_TOL:
                raise ValueError(
                    f"gaussian pulse is not switched on softly: xi(0)={x0:.3g}, xi'(0)={d0:.3g}; "
                    "move tau0 further from 0"
                )
        if self.kind == "custom":
            if self.fn is None or self.dfn is None:
                raise ValueError("custom drive needs fn and dfn")
            if self.soft_switch and max(abs(self.fn(0.0)), abs(self.dfn(0.0))) > SOFT_SWITCH_TOL:
                raise ValueError("custom drive flagged soft_switch but xi(0) or xi'(0) is not zero")

    @classmethod
    def abrupt_constant(cls, epsilon1: float) -> "DriveProfile":
        return cls("abrupt_constant", epsilon1)

    @classmethod
    def sinusoidal(cls, epsilon1: float, nu: float, phase: float = 0.0) -> "DriveProfile":
        """``xi(t) = epsilon1 sin(nu t + phase)``; ``phase = pi/2`` gives a cosine."""
        return cls("sinusoidal", epsilon1, nu=nu, phase=phase)

    @classmethod
    def gaussian_adiabatic(cls, epsilon1: float, tau0: float, width: float = 1.0) -> "DriveProfile":
        """``xi(tau) = epsilon1 exp(-((tau - tau0)/width)^2)``."""
        return cls("gaussian_adiabatic", epsilon1, tau0=tau0, width=width)

    @classmethod
    def custom(cls, fn, dfn, soft_switch: bool = False, epsilon1: float = 1.0) -> "DriveProfile":
        return cls("custom", epsilon1, fn=fn, dfn=dfn, soft_switch=soft_switch)

    @property
    def is_slow(self) -> bool:
        return self.kind in ("gaussian_adiabatic", "custom")

    @property
    def is_cosine(self) -> bool:
        return self.kind == "sinusoidal" and abs(math.remainder(self.phase - math.pi / 2, 2 * math.pi)) < 1e-14

    # slow-time profile and its tau-derivative
    def xi_tau(self, tau):
        if self.kind == "gaussian_adiabatic":
            s = (np.asarray(tau, float) - self.tau0) / self.width
            return self.epsilon1 * np.exp(-s * s)
        if self.kind == "custom":
            return self.fn(tau)
        raise ValueError(f"{self.kind} drive has no slow-time profile")

    def dxi_tau(self, tau):
        if self.kind == "gaussian_adiabatic":
            s = (np.asarray(tau, float) - self.tau0) / self.width
            return -2.0 * s / self.width * self.epsilon1 * np.exp(-s * s)
        if self.kind == "custom":
            return self.dfn(tau)
        raise ValueError(f"{self.kind} drive has no slow-time profile")

    def xi(self, t, epsilon: float | None = None):
        t = np.asarray(t, float)
        if self.kind == "abrupt_constant":
            return np.full(t.shape, float(self.epsilon1)) if t.ndim else float(self.epsilon1)
        if self.kind == "sinusoidal":
            return self.epsilon1 * np.sin(self.nu * t + self.phase)
        return self.xi_tau(_need_eps(epsilon) * t)

    def xi_dot(self, t, epsilon: float | None = None):
        """``d xi / dt`` in fast time."""
        t = np.asarray(t, float)
        if self.kind == "abrupt_constant":
            return np.zeros(t.shape) if t.ndim else 0.0
        if self.kind == "sinusoidal":
            return self.epsilon1 * self.nu * np.cos(self.nu * t + self.phase)
        eps = _need_eps(epsilon)
        return eps * self.dxi_tau(eps * t)


def _need_eps(epsilon):
    if epsilon is None:
        raise ValueError("slow drives need epsilon to convert t to tau")
    return float(epsilon)


# --- Hermite functions --------------------------------------------------------


def hermite(n: int, x):
    """Physicists' Hermite polynomial by the three-term recurrence."""
    if n < 0:
        raise ValueError("n must be non-negative")
    x = np.asarray(x, float)
    h_prev, h = np.ones_like(x), 2.0 * x
    if n == 0:
        return h_prev
    for k in range(1, n):
        h_prev, h = h, 2.0 * x * h - 2.0 * k * h_prev
    return h


def eigenfunctions(N: int, x, shift: float = 0.0) -> np.ndarray:
    """Normalized oscillator eigenfunctions ``psi_0..psi_{N-1}`` at ``x - shift``; shape (N, len(x)).

    The normalization is folded into the recurrence so large n does not overflow.
    """
    z = np.asarray(x, float) - shift
    out = np.empty((N,) + z.shape)
    out[0] = math.pi ** -0.25 * np.exp(-0.5 * z * z)
    if N > 1:
        out[1] = SQ2 * z * out[0]
    for n in range(1, N - 1):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * z * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def eigenfunction(n: int, x, shift: float = 0.0):
    if n < 0:
        raise ValueError("n must be non-negative")
    return eigenfunctions(n + 1, x, shift)[n]


@dataclass(frozen=True)
class HermiteBasis:
    """Eigenfunctions centred at ``shift`` with Gauss-Hermite projection."""

    N: int
    shift: float = 0.0
    nodes: int = 0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be positive")
        object.__setattr__(self, "nodes", max(self.nodes, 2 * self.N + 8, 96))

    def _rule(self):
        x, w = hermgauss(self.nodes)
        return x + self.shift, w * np.exp(x * x)

    def functions(self, x) -> np.ndarray:
        return eigenfunctions(self.N, x, self.shift)

    def gram(self) -> np.ndarray:
        x, w = self._rule()
        psi = self.functions(x)
        return (psi * w) @ psi.T

    def project(self, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """``<psi_n | f>`` for ``n < N``; ``f`` should decay like a Gaussian near ``shift``."""
        x, w = self._rule()
        return self.functions(x) @ (w * f(x))


def position_matrix(N: int) -> np.ndarray:
    """``<m|x|n>``: ``sqrt(n/2)`` above and below the diagonal."""
    off = np.sqrt(np.arange(1, N) / 2.0)
    return np.diag(off, 1) + np.diag(off, -1)


def derivative_ladder(N: int) -> np.ndarray:
    """Matrix ``L`` with ``v_mn = xi_dot * L_mn`` for the displaced basis."""
    L = np.zeros((N, N), complex)
    for n in range(N - 1):
        L[n + 1, n] = -1j * math.sqrt(n + 1) / SQ2
        L[n, n + 1] = 1j * math.sqrt(n + 1) / SQ2
    return L


SCENARIOS = ("abrupt", "adiabatic", "harmonic_nonresonant", "harmonic_resonant")


def matrix_elements(scenario: str, N: int, drive: DriveProfile | None = None) -> CouplingModel:
    """Coupling ``v`` for a built-in scenario, normalized so that ``eps v`` is the perturbation.

    abrupt: ``-x``.  harmonic: ``-sin(nu t + phase) x`` from the drive.
    adiabatic: ``xi'(tau) L`` with ``L`` from :func:`derivative_ladder`.
    """
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}; choose from {SCENARIOS}")
    if scenario == "abrupt":
        return CouplingModel.constant(-position_matrix(N))
    if drive is None:
        raise ValueError(f"scenario {scenario} needs a drive")
    if scenario == "adiabatic":
        if not drive.is_slow:
            raise ValueError("adiabatic scenario needs a slow drive")
        L = derivative_ladder(N)
        return CouplingModel.slow(lambda tau: drive.dxi_tau(tau) * L)
    if drive.kind != "sinusoidal":
        raise ValueError("harmonic scenarios need a sinusoidal drive")
    X = position_matrix(N)
    # -sin(nu t + p) = (i/2) e^{ip} e^{i nu t} - (i/2) e^{-ip} e^{-i nu t}
    up = 0.5j * np.exp(1j * drive.phase)
    entries = {}
    for i in range(N):
        for j in range(N):
            if X[i, j]:
                entries[(i, j)] = TrigSum.from_arrays([up * X[i, j], np.conj(up) * X[i, j]], [drive.nu, -drive.nu])
    return CouplingModel.trig(HarmonicMatrix(N, entries, hermitian=True))


def oscillator_spectrum(N: int, drive: DriveProfile | None = None) -> SpectrumModel:
    w = np.arange(N) + 0.5
    if drive is not None and drive.is_slow:
        return SpectrumModel(w - 0.5 * drive.xi_tau(0.0) ** 2, lambda tau: w - 0.5 * drive.xi_tau(tau) ** 2)
    return SpectrumModel(w)


def oscillator_problem(scenario: str, N: int, epsilon: float, drive: DriveProfile | None = None, c0=None,
                       phase_convention: str = "renormalized") -> PerturbationProblem:
    """Ground-state-started problem for a built-in scenario.

    For the abrupt and harmonic scenarios ``epsilon`` is the force amplitude;
    for the adiabatic one it is the slow-time scale.
    """
    if c0 is None:
        c0 = np.zeros(N, complex)
        c0[0] = 1.0
    return PerturbationProblem(oscillator_spectrum(N, drive), matrix_elements(scenario, N, drive), epsilon, c0,
                               phase_convention)


# --- exact solution ---------------------------------------------------------------


def _sin_drive_delta(drive: DriveProfile, t):
    """Closed-form ``delta`` for ``xi = e1 sin(nu t + p)`` (any nu, including 1)."""
    t = np.asarray(t, float)

    def E(k):
        if abs(k) < 1e-12:
            return t.astype(complex)
        return (np.exp(1j * k * t) - 1.0) / (1j * k)

    p, nu = drive.phase, drive.nu
    s = (np.exp(1j * p) * E(1 + nu) - np.exp(-1j * p) * E(1 - nu)) / 2j
    return -1j / SQ2 * drive.epsilon1 * s


def _sin_drive_delta_trig(drive: DriveProfile) -> TrigSum:
    p, nu, a = drive.phase, drive.nu, drive.epsilon1
    # E(k) = (e^{ikt} - 1)/(ik); combine as a trigonometric sum in t
    c = -1j / SQ2 * a / 2j
    terms = []
    for k, w in ((1 + nu, np.exp(1j * p)), (1 - nu, -np.exp(-1j * p))):
        terms += [(c * w / (1j * k), k), (-c * w / (1j * k), 0.0)]
    return TrigSum(terms)


class ExactDrivenOscillator:
    """Exact coherent-state solution for a given drive.

    ``epsilon`` is the slow-time scale for slow drives and is ignored otherwise.
    """

    def __init__(self, drive: DriveProfile, epsilon: float | None = None, tol: float = 1e-11):
        self.drive = drive
        self.epsilon = epsilon
        self.tol = tol
        if drive.is_slow:
            _need_eps(epsilon)

    def _closed_form_kind(self) -> str | None:
        d = self.drive
        if d.kind == "abrupt_constant":
            return "abrupt"
        if d.kind == "sinusoidal":
            if abs(d.nu - 1.0) > 1e-12:
                return "nonresonant"
            if d.is_cosine:
                return "resonant_cos"
        return None

    def delta_phi(self, t) -> tuple[np.ndarray, np.ndarray]:
        """``(delta(t), Phi(t))`` for scalar or array ``t >= 0``."""
        t = np.asarray(t, float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        kind = self._closed_form_kind()
        d = self.drive
        if kind == "abrupt":
            e = d.epsilon1
            delta = -(e / SQ2) * (np.exp(1j * t) - 1.0)
            # Phi = (e^2/2) int (e^{iz}-1)^2 e^{-2iz} dz
            phi = 0.5 * e * e * (t + 2.0 * (np.exp(-1j * t) - 1.0) / 1j - (np.exp(-2j * t) - 1.0) / 2j)
        elif kind == "nonresonant":
            delta = _sin_drive_delta(d, t)
            g = (_sin_drive_delta_trig(d) * _sin_drive_delta_trig(d)).shift(-2.0)
            phi = _integrate_trig(g, t)
        elif kind == "resonant_cos":
            e = d.epsilon1
            delta = -1j * e / (2 * SQ2) * (np.exp(1j * t) * np.sin(t) + t)
            phi = -(e * e / 8) * (0.5 * (t - np.sin(2 * t) / 2) + t * t * np.exp(-1j * t) * np.sin(t))
        else:
            delta, phi = self._quadrature(t)
        if scalar:
            return complex(delta[0]), complex(phi[0])
        return delta, phi

    def _quadrature(self, t):
        xi = self.drive.xi
        eps = self.epsilon

        def f(s, y):
            dl = -1j / SQ2 * xi(s, eps) * np.exp(1j * s)
            return np.array([dl, y[0] ** 2 * np.exp(-2j * s)])

        vals = cumulative(f, t, size=2, tol=self.tol, max_step=0.5)
        return vals[:, 0], vals[:, 1]

    def delta(self, t):
        return self.delta_phi(t)[0]

    def phase(self, t):
        return self.delta_phi(t)[1]

    def wavefunction(self, x, t) -> np.ndarray:
        """``Psi(x, t)``; returns shape ``(len(t), len(x))`` for array inputs."""
        dl, ph = self.delta_phi(t)
        x = np.asarray(x, float)
        t = np.asarray(t, float)
        expo = (
            -0.5j * t[..., None]
            + 1j * np.asarray(ph)[..., None]
            - 0.5 * x * x
            - SQ2 * x * (np.asarray(dl) * np.exp(-1j * t))[..., None]
        )
        return math.pi ** -0.25 * np.exp(expo)

    def coefficients(self, t, N: int, basis: str = "unperturbed") -> np.ndarray:
        """Exact expansion coefficients, shape ``(len(t), N)``.

        unperturbed: over ``psi_n(x)`` with phases ``exp(-i(n+1/2)t)``.
        instantaneous: over ``psi_n(x - xi(t))`` with phases ``exp(-i int (n+1/2-xi^2/2))``.
        shifted: same as instantaneous for a constant force.
        """
        t = np.atleast_1d(np.asarray(t, float))
        dl, ph = self.delta_phi(t)
        n = np.arange(N)
        lognf = np.array([0.5 * math.lgamma(k + 1) for k in range(N)])
        if basis == "unperturbed":
            pref = np.exp(1j * ph + 0.5 * dl * dl * np.exp(-2j * t))
            return pref[:, None] * _powers(-dl, n) * np.exp(-lognf)
        if basis not in ("instantaneous", "shifted"):
            raise ValueError(f"unknown basis {basis!r}")
        c0 = np.exp(1j * ph + 0.5 * dl * dl * np.exp(-2j * t))
        beta = -dl * np.exp(-1j * t)
        alpha = np.asarray(self.drive.xi(t, self.epsilon), float) / SQ2
        gamma = beta - alpha
        pref = c0 * np.exp(0.5 * np.abs(beta) ** 2 - 0.5 * np.abs(gamma) ** 2 + 1j * alpha * beta.imag)
        pref = pref * np.exp(-1j * self.xi_square_integral(t))
        return pref[:, None] * _powers(gamma * np.exp(1j * t), n) * np.exp(-lognf)

    def xi_square_integral(self, t):
        """``int_0^t xi^2/2 dz``."""
        t = np.atleast_1d(np.asarray(t, float))
        d = self.drive
        if d.kind == "abrupt_constant":
            return 0.5 * d.epsilon1 ** 2 * t
        if d.kind == "sinusoidal":
            a, nu, p = d.epsilon1, d.nu, d.phase
            return 0.25 * a * a * (t - (np.sin(2 * (nu * t + p)) - np.sin(2 * p)) / (2 * nu))
        xi = d.xi
        eps = self.epsilon
        return cumulative(lambda s, y: 0.5 * xi(s, eps) ** 2, t, tol=self.tol, max_step=5.0)[:, 0].real


def _powers(z, n):
    z = np.asarray(z, complex)
    out = np.ones(z.shape + n.shape, complex)
    for k in range(1, n.size):
        out[..., k] = out[..., k - 1] * z
    return out


def _integrate_trig(f: TrigSum, t) -> np.ndarray:
    """``int_0^t f`` for a trigonometric sum, term by term."""
    out = np.zeros(np.shape(t), complex)
    for a, nu in zip(f.amplitudes, f.frequencies):
        if nu == 0.0:
            out += a * t
        else:
            out += a * (np.exp(1j * nu * t) - 1.0) / (1j * nu)
    return out


def exact_solution(drive: DriveProfile, x, t, epsilon: float | None = None) -> np.ndarray:
    return ExactDrivenOscillator(drive, epsilon).wavefunction(x, t)


def exact_coefficients(drive: DriveProfile, t, N: int, basis: str | None = None,
                       epsilon: float | None = None) -> np.ndarray:
    """Exact coefficients; the default basis is instantaneous for slow drives, unperturbed otherwise."""
    if basis is None:
        basis = "instantaneous" if drive.is_slow else "unperturbed"
    return ExactDrivenOscillator(drive, epsilon).coefficients(t, N, basis)


def abrupt_shifted_coefficients(epsilon: float, N: int) -> np.ndarray:
    """Time-independent weights of the abrupt-field state over the shifted basis."""
    n = np.arange(N)
    return np.array([(-epsilon / SQ2) ** k / math.sqrt(math.factorial(k)) for k in n]) * math.exp(-epsilon ** 2 / 4)


def exact_expansions(drive: DriveProfile, t, N: int, epsilon: float | None = None) -> np.ndarray:
    """Leading-order expansions of the exact solution, as coefficients, shape ``(len(t), N)``.

    slow drive: instantaneous basis, ``c_0 = e^{iS}``, ``c_1 = i (xi_dot/sqrt2) e^{it} e^{iS}``
    with ``S = int xi_dot^2/2``.
    sinusoidal, nu != 1: unperturbed basis with the common shift ``-e1^2/(4(nu^2-1))``.
    cosine at nu = 1: unperturbed basis, Gaussian-damped coherent weights.
    """
    t = np.atleast_1d(np.asarray(t, float))
    out = np.zeros((t.size, N), complex)
    if drive.is_slow:
        eps = _need_eps(epsilon)
        S = cumulative(lambda s, y: 0.5 * drive.xi_dot(s, eps) ** 2, t, tol=1e-12, max_step=5.0)[:, 0].real
        ph = np.exp(1j * S)
        out[:, 0] = ph
        if N > 1:
            out[:, 1] = 1j * drive.xi_dot(t, eps) / SQ2 * np.exp(1j * t) * ph
        return out
    if drive.kind == "sinusoidal" and abs(drive.nu - 1.0) > 1e-12 and drive.phase == 0.0:
        e, nu = drive.epsilon1, drive.nu
        k = e / (SQ2 * (nu * nu - 1))
        shift = np.exp(-1j * e * e / (4 * (nu * nu - 1)) * t)
        out[:, 0] = shift
        if N > 1:
            out[:, 1] = 1j * k * ((1j * np.sin(nu * t) - nu * np.cos(nu * t)) * np.exp(1j * t) + nu) * shift
        return out
    if drive.kind == "sinusoidal" and drive.is_cosine and abs(drive.nu - 1.0) <= 1e-12:
        a = 1j * drive.epsilon1 * t / (2 * SQ2)
        damp = np.exp(-(drive.epsilon1 * t / 4) ** 2)
        for k in range(N):
            out[:, k] = a ** k / math.sqrt(math.factorial(k)) * damp
        return out
    raise ValueError(f"no expansion available for drive {drive.kind}")
