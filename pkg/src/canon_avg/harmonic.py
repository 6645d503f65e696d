"""Exact calculus over finite trigonometric sums and matrices of them.

A :class:`TrigSum` is ``sum_k a_k exp(i nu_k t)`` with complex amplitudes and
real frequencies.  Time averages, zero-mean parts and zero-mean antiderivatives
are exact term-wise operations, so nothing here integrates numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

MERGE_TOL = 1e-9
DROP_TOL = 1e-14


@dataclass(frozen=True)
class TrigTerm:
    """One summand ``amplitude * exp(i * frequency * t)``."""

    amplitude: complex
    frequency: float

    def __post_init__(self):
        a = complex(self.amplitude)
        nu = float(self.frequency)
        if not (math.isfinite(a.real) and math.isfinite(a.imag)):
            raise ValueError(f"non-finite amplitude {a!r}")
        if not math.isfinite(nu):
            raise ValueError(f"non-finite frequency {nu!r}")
        object.__setattr__(self, "amplitude", a)
        object.__setattr__(self, "frequency", nu)


def _canonical(amps: np.ndarray, freqs: np.ndarray, merge_tol: float, drop_tol: float):
    if amps.size == 0:
        return np.zeros(0, complex), np.zeros(0, float)
    if not (np.all(np.isfinite(amps)) and np.all(np.isfinite(freqs))):
        raise ValueError("TrigSum terms must be finite")
    order = np.argsort(freqs, kind="stable")
    a = amps[order]
    f = freqs[order]
    # single-linkage clustering of sorted frequencies
    starts = np.concatenate(([True], np.diff(f) > merge_tol))
    labels = np.cumsum(starts) - 1
    n = labels[-1] + 1
    out_a = np.zeros(n, complex)
    np.add.at(out_a, labels, a)
    counts = np.bincount(labels, minlength=n)
    out_f = np.bincount(labels, weights=f, minlength=n) / counts
    out_f[np.abs(out_f) <= merge_tol] = 0.0
    keep = np.abs(out_a) >= drop_tol
    return out_a[keep], out_f[keep]


class TrigSum:
    """Immutable finite sum of complex exponentials.

    Terms are sorted by frequency and merged when their frequencies lie within
    ``merge_tol`` of each other; amplitudes below ``drop_tol`` are discarded.
    """

    __slots__ = ("_amps", "_freqs")

    def __init__(
        self,
        terms: Iterable[TrigTerm | tuple[complex, float]] = (),
        *,
        merge_tol: float = MERGE_TOL,
        drop_tol: float = DROP_TOL,
    ):
        pairs = [t if isinstance(t, TrigTerm) else TrigTerm(*t) for t in terms]
        amps = np.array([p.amplitude for p in pairs], dtype=complex)
        freqs = np.array([p.frequency for p in pairs], dtype=float)
        self._set(*_canonical(amps, freqs, merge_tol, drop_tol))

    def _set(self, amps, freqs):
        amps.setflags(write=False)
        freqs.setflags(write=False)
        self._amps = amps
        self._freqs = freqs

    @classmethod
    def from_arrays(cls, amps, freqs, *, merge_tol=MERGE_TOL, drop_tol=DROP_TOL) -> "TrigSum":
        amps = np.asarray(amps, dtype=complex).ravel()
        freqs = np.asarray(freqs, dtype=float).ravel()
        if amps.shape != freqs.shape:
            raise ValueError("amplitude and frequency arrays differ in length")
        obj = cls.__new__(cls)
        obj._set(*_canonical(amps, freqs, merge_tol, drop_tol))
        return obj

    @classmethod
    def constant(cls, value: complex) -> "TrigSum":
        return cls.from_arrays([value], [0.0])

    @property
    def amplitudes(self) -> np.ndarray:
        return self._amps

    @property
    def frequencies(self) -> np.ndarray:
        return self._freqs

    @property
    def terms(self) -> tuple[TrigTerm, ...]:
        return tuple(TrigTerm(a, f) for a, f in zip(self._amps, self._freqs))

    def __iter__(self) -> Iterator[TrigTerm]:
        return iter(self.terms)

    def __len__(self) -> int:
        return self._amps.size

    def __bool__(self) -> bool:
        return self._amps.size > 0

    def __call__(self, t):
        """Evaluate at a scalar or array of times."""
        t = np.asarray(t, dtype=float)
        if self._amps.size == 0:
            return np.zeros(t.shape, complex) if t.ndim else 0j
        phase = np.exp(1j * np.multiply.outer(t, self._freqs))
        val = phase @ self._amps
        return complex(val) if t.ndim == 0 else val

    def __add__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            other = TrigSum.constant(other)
        if not isinstance(other, TrigSum):
            return NotImplemented
        return TrigSum.from_arrays(
            np.concatenate((self._amps, other._amps)),
            np.concatenate((self._freqs, other._freqs)),
        )

    __radd__ = __add__

    def __neg__(self):
        return TrigSum.from_arrays(-self._amps, self._freqs)

    def __sub__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            other = TrigSum.constant(other)
        if not isinstance(other, TrigSum):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TrigSum):
            return mul(self, other)
        if isinstance(other, (int, float, complex, np.number)):
            return TrigSum.from_arrays(self._amps * complex(other), self._freqs)
        return NotImplemented

    __rmul__ = __mul__

    def conj(self) -> "TrigSum":
        """Complex conjugate as a function of real t."""
        return TrigSum.from_arrays(np.conj(self._amps), -self._freqs)

    def derivative(self) -> "TrigSum":
        return TrigSum.from_arrays(1j * self._freqs * self._amps, self._freqs)

    def shift(self, dnu: float) -> "TrigSum":
        """Multiply by ``exp(i dnu t)``."""
        return TrigSum.from_arrays(self._amps, self._freqs + dnu)

    def max_abs_amplitude(self) -> float:
        return float(np.max(np.abs(self._amps))) if self._amps.size else 0.0

    def allclose(self, other: "TrigSum", atol: float = 1e-12) -> bool:
        return (self - other).max_abs_amplitude() <= atol

    def __eq__(self, other):
        if not isinstance(other, TrigSum):
            return NotImplemented
        return (
            self._amps.shape == other._amps.shape
            and np.array_equal(self._freqs, other._freqs)
            and np.array_equal(self._amps, other._amps)
        )

    def __hash__(self):
        return hash((self._amps.tobytes(), self._freqs.tobytes()))

    def __repr__(self):
        body = ", ".join(f"({a:.6g}, {f:.6g})" for a, f in zip(self._amps, self._freqs))
        return f"TrigSum([{body}])"


EMPTY = TrigSum()


def _dc_mask(f: TrigSum, rho_dc: float) -> np.ndarray:
    if rho_dc < 0:
        raise ValueError("rho_dc must be non-negative")
    return np.abs(f.frequencies) <= rho_dc


def average(f: TrigSum, rho_dc: float = MERGE_TOL) -> complex:
    """Long-time mean: the summed amplitude of terms with ``|nu| <= rho_dc``."""
    return complex(np.sum(f.amplitudes[_dc_mask(f, rho_dc)]))


def fluctuation(f: TrigSum, rho_dc: float = MERGE_TOL) -> TrigSum:
    """``f`` minus its mean."""
    keep = ~_dc_mask(f, rho_dc)
    return TrigSum.from_arrays(f.amplitudes[keep], f.frequencies[keep])


def brace(f: TrigSum, rho_dc: float = MERGE_TOL) -> TrigSum:
    """Zero-mean antiderivative of the fluctuating part."""
    keep = ~_dc_mask(f, rho_dc)
    nu = f.frequencies[keep]
    return TrigSum.from_arrays(f.amplitudes[keep] / (1j * nu), nu)


def mul(f: TrigSum, g: TrigSum) -> TrigSum:
    if not f or not g:
        return EMPTY
    amps = np.multiply.outer(f.amplitudes, g.amplitudes).ravel()
    freqs = np.add.outer(f.frequencies, g.frequencies).ravel()
    return TrigSum.from_arrays(amps, freqs)


class HarmonicMatrix:
    """Sparse ``dim x dim`` matrix whose entries are :class:`TrigSum` values.

    With ``hermitian=True`` the constructor checks that entry ``(m, n)`` is the
    conjugate of entry ``(n, m)`` term by term.
    """

    __slots__ = ("dim", "_entries", "hermitian")

    def __init__(
        self,
        dim: int,
        entries: Mapping[tuple[int, int], TrigSum] | None = None,
        *,
        hermitian: bool = False,
        herm_tol: float = 1e-12,
    ):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = int(dim)
        clean = {}
        for (i, j), f in (entries or {}).items():
            if not (0 <= i < dim and 0 <= j < dim):
                raise IndexError(f"entry ({i}, {j}) outside {dim}x{dim}")
            if not isinstance(f, TrigSum):
                f = TrigSum(f)
            if f:
                clean[(int(i), int(j))] = f
        self._entries = clean
        self.hermitian = hermitian
        if hermitian:
            bad = self.hermitian_defect()
            if bad > herm_tol:
                raise ValueError(f"matrix flagged hermitian but defect is {bad:.3g}")

    @classmethod
    def from_dense(cls, mat, frequencies=None, *, hermitian=False) -> "HarmonicMatrix":
        """Entry ``(m, n)`` becomes ``mat[m, n] * exp(i frequencies[m, n] t)``."""
        mat = np.asarray(mat, dtype=complex)
        n = mat.shape[0]
        if mat.shape != (n, n):
            raise ValueError("square matrix required")
        freqs = np.zeros((n, n)) if frequencies is None else np.asarray(frequencies, float)
        entries = {
            (i, j): TrigSum.from_arrays([mat[i, j]], [freqs[i, j]])
            for i in range(n)
            for j in range(n)
            if mat[i, j] != 0
        }
        return cls(n, entries, hermitian=hermitian)

    def __getitem__(self, key: tuple[int, int]) -> TrigSum:
        return self._entries.get(key, EMPTY)

    def items(self):
        return self._entries.items()

    def __len__(self):
        return len(self._entries)

    def hermitian_defect(self) -> float:
        worst = 0.0
        keys = set(self._entries) | {(j, i) for i, j in self._entries}
        for i, j in keys:
            if i <= j:
                d = self[i, j] - self[j, i].conj()
                worst = max(worst, d.max_abs_amplitude())
        return worst

    def frequencies(self) -> np.ndarray:
        if not self._entries:
            return np.zeros(0)
        allf = np.concatenate([f.frequencies for f in self._entries.values()])
        return TrigSum.from_arrays(np.ones_like(allf), allf).frequencies

    def components(self) -> tuple[np.ndarray, np.ndarray]:
        """Split as ``sum_k C_k exp(i nu_k t)``; returns ``(nu, C)`` with C of shape (K, dim, dim)."""
        nus = self.frequencies()
        mats = np.zeros((nus.size, self.dim, self.dim), complex)
        for (i, j), f in self._entries.items():
            idx = np.abs(np.subtract.outer(f.frequencies, nus)).argmin(axis=1)
            mats[idx, i, j] += f.amplitudes
        return nus, mats

    def evaluate(self, t):
        nus, mats = self.components()
        t = np.asarray(t, float)
        if nus.size == 0:
            return np.zeros(t.shape + (self.dim, self.dim), complex)
        ph = np.exp(1j * np.multiply.outer(t, nus))
        return np.tensordot(ph, mats, axes=(-1, 0))

    def dc(self, rho_dc: float = MERGE_TOL) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), complex)
        for (i, j), f in self._entries.items():
            out[i, j] = average(f, rho_dc)
        return out

    def map(self, fn) -> "HarmonicMatrix":
        return HarmonicMatrix(self.dim, {k: fn(f) for k, f in self._entries.items()})

    def __add__(self, other: "HarmonicMatrix") -> "HarmonicMatrix":
        _check_dims(self, other)
        keys = set(self._entries) | set(other._entries)
        return HarmonicMatrix(self.dim, {k: self[k] + other[k] for k in keys})

    def __sub__(self, other: "HarmonicMatrix") -> "HarmonicMatrix":
        _check_dims(self, other)
        keys = set(self._entries) | set(other._entries)
        return HarmonicMatrix(self.dim, {k: self[k] - other[k] for k in keys})

    def __mul__(self, scalar):
        if isinstance(scalar, (int, float, complex, np.number)):
            return self.map(lambda f: f * scalar)
        return NotImplemented

    __rmul__ = __mul__

    def __repr__(self):
        return f"HarmonicMatrix(dim={self.dim}, nnz={len(self._entries)})"


def _check_dims(a: HarmonicMatrix, b: HarmonicMatrix):
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def matrix_average(H: HarmonicMatrix, rho_dc: float = MERGE_TOL) -> HarmonicMatrix:
    return H.map(lambda f: TrigSum.constant(average(f, rho_dc)))


def matrix_fluctuation(H: HarmonicMatrix, rho_dc: float = MERGE_TOL) -> HarmonicMatrix:
    return H.map(lambda f: fluctuation(f, rho_dc))


def matrix_brace(H: HarmonicMatrix, rho_dc: float = MERGE_TOL) -> HarmonicMatrix:
    return H.map(lambda f: brace(f, rho_dc))


def matrix_mul(A: HarmonicMatrix, B: HarmonicMatrix) -> HarmonicMatrix:
    _check_dims(A, B)
    rows: dict[int, list[tuple[int, TrigSum]]] = {}
    for (k, j), g in B.items():
        rows.setdefault(k, []).append((j, g))
    acc: dict[tuple[int, int], list[TrigSum]] = {}
    for (i, k), f in A.items():
        for j, g in rows.get(k, ()):
            acc.setdefault((i, j), []).append(mul(f, g))
    out = {}
    for key, parts in acc.items():
        amps = np.concatenate([p.amplitudes for p in parts])
        freqs = np.concatenate([p.frequencies for p in parts])
        out[key] = TrigSum.from_arrays(amps, freqs)
    return HarmonicMatrix(A.dim, out)


def adjoint(H: HarmonicMatrix) -> HarmonicMatrix:
    return HarmonicMatrix(H.dim, {(j, i): f.conj() for (i, j), f in H.items()})

