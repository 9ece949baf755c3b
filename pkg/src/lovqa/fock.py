"""Fock-basis enumeration, permanents/determinants and lifting of mode
unitaries to the fixed-particle-number subspace.

Occupations are plain tuples of non-negative ints, one entry per mode.
Matrices are numpy arrays; ``u[j, i]`` is the amplitude for a particle in
input mode ``i`` to leave in output mode ``j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

UNITARY_TOL = 1e-10
NORM_TOL = 1e-9

Occupation = tuple[int, ...]


class Statistics(Enum):
    BOSON = "boson"
    FERMION = "fermion"

    @classmethod
    def parse(cls, value: "Statistics | str") -> "Statistics":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


def check_occupation(counts: Sequence[int], stats: Statistics) -> Occupation:
    """Return ``counts`` as a tuple, raising ``ValueError`` if it is not a
    valid occupation under ``stats``."""
    occ = tuple(int(c) for c in counts)
    if any(c < 0 for c in occ):
        raise ValueError(f"negative occupation in {occ}")
    if stats is Statistics.FERMION and any(c > 1 for c in occ):
        raise ValueError(f"fermionic occupation violates exclusion: {occ}")
    return occ


def q_parity(n: int) -> int:
    """Two-valued phase generator ``(1 - (-1)**n) / 2``, i.e. ``n mod 2``."""
    if n < 0:
        raise ValueError("photon number must be non-negative")
    return n % 2


def basis_dimension(n_modes: int, n: int, stats: Statistics) -> int:
    if stats is Statistics.BOSON:
        return math.comb(n_modes + n - 1, n)
    return math.comb(n_modes, n)


def enumerate_basis(n_modes: int, n: int, stats: Statistics | str) -> list[Occupation]:
    """All ``n``-particle occupations of ``n_modes`` modes.

    Ordering is descending lexicographic, so ``(n, 0, ..., 0)`` comes first
    and ``(0, ..., 0, n)`` last. Every module shares this ordering.
    """
    stats = Statistics.parse(stats)
    if n_modes < 1 or n < 0:
        raise ValueError("need n_modes >= 1 and n >= 0")
    if stats is Statistics.FERMION and n > n_modes:
        raise ValueError(f"cannot place {n} fermions in {n_modes} modes")

    cap = 1 if stats is Statistics.FERMION else n
    out: list[Occupation] = []

    def rec(prefix: list[int], remaining: int, modes_left: int) -> None:
        if modes_left == 1:
            if remaining <= cap:
                out.append(tuple(prefix + [remaining]))
            return
        for k in range(min(remaining, cap), -1, -1):
            rec(prefix + [k], remaining - k, modes_left - 1)

    rec([], n, n_modes)
    return out


def factorial(k: int) -> float:
    # exact integers up to 20!, log-gamma beyond
    if k <= 20:
        return float(math.factorial(k))
    return math.exp(math.lgamma(k + 1))


def occupation_factorial(occ: Sequence[int]) -> float:
    if all(c <= 20 for c in occ):
        return float(math.prod(math.factorial(c) for c in occ))
    return math.exp(sum(math.lgamma(c + 1) for c in occ))


def _check_square(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def permanent(a: np.ndarray) -> complex:
    """Permanent by Ryser's formula with Gray-code subset updates.

    Runs in O(2^d d). The empty matrix has permanent 1.
    """
    a = _check_square(a)
    d = a.shape[0]
    if d == 0:
        return 1.0 + 0j
    if d == 1:
        return complex(a[0, 0])
    row_sums = np.zeros(d, dtype=complex)
    total = 0j
    sign = -1.0 if d % 2 else 1.0
    gray_prev = 0
    for k in range(1, 1 << d):
        gray = k ^ (k >> 1)
        flipped = gray ^ gray_prev
        j = flipped.bit_length() - 1
        if gray & flipped:
            row_sums += a[:, j]
        else:
            row_sums -= a[:, j]
        gray_prev = gray
        # (-1)^(d - |S|) with |S| = popcount(gray)
        sgn = sign if bin(gray).count("1") % 2 == 0 else -sign
        total += sgn * np.prod(row_sums)
    return complex(total)


_SUBSET_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _subsets(d: int) -> tuple[np.ndarray, np.ndarray]:
    if d not in _SUBSET_CACHE:
        idx = np.arange(1, 1 << d)
        mask = ((idx[:, None] >> np.arange(d)[None, :]) & 1).astype(float)
        sizes = mask.sum(axis=1)
        signs = np.where((d - sizes) % 2 == 0, 1.0, -1.0)
        _SUBSET_CACHE[d] = (mask, signs)
    return _SUBSET_CACHE[d]


def permanents(stack: np.ndarray) -> np.ndarray:
    """Vectorized Ryser permanents of a ``(k, d, d)`` stack."""
    stack = np.asarray(stack, dtype=complex)
    if stack.ndim != 3 or stack.shape[1] != stack.shape[2]:
        raise ValueError(f"expected a (k, d, d) stack, got shape {stack.shape}")
    k, d, _ = stack.shape
    if d == 0:
        return np.ones(k, dtype=complex)
    mask, signs = _subsets(d)
    # row sums over every column subset: (k, d, 2^d - 1)
    sums = stack @ mask.T
    return np.prod(sums, axis=1) @ signs


def determinant(a: np.ndarray) -> complex:
    """LU-based determinant; the empty matrix has determinant 1."""
    a = _check_square(a)
    if a.shape[0] == 0:
        return 1.0 + 0j
    return complex(np.linalg.det(a))


def index_submatrix(u: np.ndarray, m: Sequence[int], n: Sequence[int]) -> np.ndarray:
    """``u[m|n]``: row ``i`` repeated ``m[i]`` times, column ``j`` repeated
    ``n[j]`` times, both in ascending mode order."""
    u = np.asarray(u, dtype=complex)
    if len(m) != u.shape[0] or len(n) != u.shape[1]:
        raise ValueError("occupation length does not match matrix size")
    if sum(m) != sum(n):
        raise ValueError(f"particle number mismatch: {sum(m)} != {sum(n)}")
    rows = np.repeat(np.arange(len(m)), m)
    cols = np.repeat(np.arange(len(n)), n)
    return u[np.ix_(rows, cols)]


def transition_amplitude(
    u: np.ndarray, n_in: Sequence[int], m_out: Sequence[int], stats: Statistics | str
) -> complex:
    """``<m|U|n>`` for the Fock-space operator induced by mode unitary ``u``."""
    stats = Statistics.parse(stats)
    sub = index_submatrix(u, m_out, n_in)
    if stats is Statistics.FERMION:
        check_occupation(n_in, stats)
        if any(c > 1 for c in m_out):
            return 0j
        return determinant(sub)
    norm = math.sqrt(occupation_factorial(m_out) * occupation_factorial(n_in))
    return permanent(sub) / norm


def _rows(occ: Sequence[int]) -> np.ndarray:
    return np.repeat(np.arange(len(occ)), occ)


def amplitude_column(
    u: np.ndarray, n_in: Sequence[int], basis: Sequence[Occupation], stats: Statistics
) -> np.ndarray:
    """Amplitudes ``<m|U|n_in>`` for every ``m`` in ``basis`` in one batch."""
    u = np.asarray(u, dtype=complex)
    n_tot = sum(n_in)
    cols = _rows(n_in)
    if n_tot == 0:
        return np.ones(len(basis), dtype=complex)
    row_idx = np.array([_rows(m) for m in basis])
    stack = u[row_idx[:, :, None], cols[None, None, :]]
    if stats is Statistics.FERMION:
        return np.linalg.det(stack).astype(complex)
    norms = np.sqrt(
        np.array([occupation_factorial(m) for m in basis]) * occupation_factorial(n_in)
    )
    return permanents(stack) / norms


@dataclass
class FockOperator:
    """Dense operator on a fixed-``n`` Fock subspace."""

    basis: list[Occupation]
    matrix: np.ndarray
    stats: Statistics = Statistics.BOSON
    index: dict[Occupation, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.index = {occ: i for i, occ in enumerate(self.basis)}
        if self.matrix.shape != (len(self.basis), len(self.basis)):
            raise ValueError("matrix shape does not match basis size")

    @property
    def dim(self) -> int:
        return len(self.basis)

    def is_unitary(self, tol: float = UNITARY_TOL) -> bool:
        m = self.matrix
        return bool(np.max(np.abs(m.conj().T @ m - np.eye(self.dim))) < tol)

    def __matmul__(self, other: "FockOperator") -> "FockOperator":
        if self.basis != other.basis:
            raise ValueError("operators act on different bases")
        return FockOperator(self.basis, self.matrix @ other.matrix, self.stats)


def lift_linear_unitary(u: np.ndarray, n: int, stats: Statistics | str) -> FockOperator:
    """Representation of mode unitary ``u`` on the ``n``-particle subspace."""
    stats = Statistics.parse(stats)
    u = _check_square(u)
    basis = enumerate_basis(u.shape[0], n, stats)
    cols = [amplitude_column(u, occ, basis, stats) for occ in basis]
    return FockOperator(basis, np.column_stack(cols) if cols else np.zeros((0, 0)), stats)


def lift_diagonal_gate(
    phase_fn: Callable[[Occupation], float],
    basis: Sequence[Occupation],
    stats: Statistics | str = Statistics.BOSON,
) -> FockOperator:
    """Diagonal operator with entries ``exp(i * phase_fn(state))``."""
    phases = np.array([phase_fn(occ) for occ in basis], dtype=float)
    return FockOperator(list(basis), np.diag(np.exp(1j * phases)), Statistics.parse(stats))


def dvps_phase_fn(mode: int, x: float) -> Callable[[Occupation], float]:
    return lambda occ: q_parity(occ[mode]) * x


def kerr_phase_fn(mode_a: int, mode_b: int, phi: float) -> Callable[[Occupation], float]:
    return lambda occ: phi * occ[mode_a] * occ[mode_b]

