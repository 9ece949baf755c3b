"""Exact output distributions, Fock-space evolution through linear and
non-linear elements, finite-shot sampling and threshold detection."""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import fock
from .circuit import (
    DVPS,
    Circuit,
    Kerr,
    apply_element,
    as_generator,
    element_angle,
    is_linear,
)
from .fock import NORM_TOL, Occupation, Statistics
from .io import write_csv

BitString = tuple[int, ...]


@dataclass
class FockState:
    basis: list[Occupation]
    amplitudes: np.ndarray
    stats: Statistics

    @property
    def n_modes(self) -> int:
        return len(self.basis[0])

    @property
    def n(self) -> int:
        return sum(self.basis[0])

    def amplitude(self, occ: Sequence[int]) -> complex:
        return complex(self.amplitudes[self.basis.index(tuple(occ))])


@dataclass(frozen=True)
class OutputDistribution:
    """Probabilities over occupations for fixed ``(n_modes, n, stats)``."""

    entries: Mapping[Occupation, float]
    n_modes: int
    n: int
    stats: Statistics

    def total(self) -> float:
        return float(sum(self.entries.values()))


def _segments(circuit: Circuit):
    run: list = []
    for e in circuit.elements:
        if is_linear(e):
            run.append(e)
        else:
            if run:
                yield "linear", run
                run = []
            yield "diag", e
    if run:
        yield "linear", run


def _diag_phases(e, theta, basis: list[Occupation]) -> np.ndarray:
    x = element_angle(e, theta)
    if isinstance(e, DVPS):
        return np.array([fock.q_parity(occ[e.mode]) * x for occ in basis])
    if isinstance(e, Kerr):
        return np.array([x * occ[e.mode_a] * occ[e.mode_b] for occ in basis])
    raise TypeError(f"unexpected element {e!r}")


def evolve_fock(
    circuit: Circuit,
    theta: Sequence[float],
    input_state: Sequence[int],
    stats: Statistics | str,
) -> FockState:
    """Propagate a Fock basis state through ``circuit``.

    Consecutive linear elements are composed in mode space and lifted once;
    DVPS and Kerr elements act as diagonal phases on the Fock basis. When
    the first segment is linear only the input column is computed.
    """
    stats = fock.Statistics.parse(stats)
    occ = fock.check_occupation(input_state, stats)
    if len(occ) != circuit.n_modes:
        raise ValueError("input occupation length does not match the circuit")
    n = sum(occ)
    basis = fock.enumerate_basis(circuit.n_modes, n, stats)
    psi: np.ndarray | None = None
    for kind, seg in _segments(circuit):
        if kind == "linear":
            u = np.eye(circuit.n_modes, dtype=complex)
            for e in seg:
                apply_element(u, e, theta)
            if psi is None:
                psi = fock.amplitude_column(u, occ, basis, stats)
            else:
                psi = fock.lift_linear_unitary(u, n, stats).matrix @ psi
        else:
            if psi is None:
                psi = np.zeros(len(basis), dtype=complex)
                psi[basis.index(occ)] = 1.0
            psi = np.exp(1j * _diag_phases(seg, theta, basis)) * psi
    if psi is None:
        psi = np.zeros(len(basis), dtype=complex)
        psi[basis.index(occ)] = 1.0
    return FockState(basis, psi, stats)


def exact_distribution(state: FockState) -> OutputDistribution:
    probs = np.abs(state.amplitudes) ** 2
    total = probs.sum()
    if abs(total - 1.0) > NORM_TOL:
        raise ValueError(f"state is not normalized (norm^2 = {total})")
    return OutputDistribution(
        dict(zip(state.basis, probs.tolist())), state.n_modes, state.n, state.stats
    )


def sample_shots(
    dist: OutputDistribution | Mapping, shots: int, seed: int | np.random.Generator | None = None
) -> dict:
    """Multinomial draw by inverse CDF over the sorted support."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    entries = dist.entries if isinstance(dist, OutputDistribution) else dist
    support = sorted(k for k, p in entries.items() if p > 0)
    cdf = np.cumsum([entries[k] for k in support])
    cdf /= cdf[-1]
    draws = np.searchsorted(cdf, as_generator(seed).random(shots), side="right")
    draws = np.minimum(draws, len(support) - 1)
    counts = np.bincount(draws, minlength=len(support))
    return {k: int(c) for k, c in zip(support, counts) if c}


def empirical(counts: Mapping) -> dict:
    total = sum(counts.values())
    return {k: c / total for k, c in counts.items()}


def threshold(occ: Sequence[int]) -> BitString:
    return tuple(1 if c > 0 else 0 for c in occ)


def threshold_map(dist: OutputDistribution | Mapping) -> dict[BitString, float]:
    """Push probabilities through per-mode threshold detection."""
    entries = dist.entries if isinstance(dist, OutputDistribution) else dist
    out: dict[BitString, float] = defaultdict(float)
    for occ, p in entries.items():
        out[threshold(occ)] += p
    return dict(out)


def marginal_top_modes(dist: OutputDistribution | Mapping, k: int) -> dict[BitString, float]:
    """Threshold-detect, then keep only the first ``k`` modes."""
    bits = threshold_map(dist)
    n_modes = len(next(iter(bits)))
    if not 1 <= k <= n_modes:
        raise ValueError(f"k must lie in [1, {n_modes}]")
    out: dict[BitString, float] = defaultdict(float)
    for b, p in bits.items():
        out[b[:k]] += p
    return dict(out)


def fermion_resource_state(n: int) -> dict[tuple[int, ...], float]:
    """Anti-symmetrized one-photon-per-copy input.

    Keys give, for each copy ``mu``, the mode holding its photon; values are
    ``sign(sigma) / sqrt(n!)``.
    """
    norm = 1.0 / math.sqrt(math.factorial(n))
    out = {}
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for i, j in itertools.combinations(range(n), 2) if perm[i] > perm[j])
        out[perm] = norm * (-1.0) ** inversions
    return out


def _superimpose(modes: Sequence[int], n_modes: int) -> Occupation:
    occ = [0] * n_modes
    for m in modes:
        occ[m] += 1
    return tuple(occ)


def _resource_state_distribution(u: np.ndarray, n: int) -> dict[BitString, float]:
    n_modes = u.shape[0]
    psi = np.zeros((n_modes,) * n, dtype=complex)
    for modes, amp in fermion_resource_state(n).items():
        psi[modes] = amp
    # the same u acts on every copy
    for axis in range(n):
        psi = np.moveaxis(np.tensordot(u, psi, axes=([1], [axis])), 0, axis)
    out: dict[BitString, float] = defaultdict(float)
    for idx in itertools.product(range(n_modes), repeat=n):
        occ = _superimpose(idx, n_modes)
        out[occ] += abs(psi[idx]) ** 2
    # copies landing on a shared mode appear with a count of 2; their weight
    # vanishes by anti-symmetry and is left in for callers to check
    return dict(out)


def photonic_fermion_distribution(
    u: np.ndarray, n: int, method: str = "determinant"
) -> dict[BitString, float]:
    """Superimposed bit-string distribution of ``n`` fermions in the first
    ``n`` modes of interferometer ``u``.

    ``method="determinant"`` uses ``|det u[m|n]|^2``; ``method="resource"``
    evolves the entangled one-photon-per-copy resource state through ``n``
    identical copies of ``u`` and superimposes the detector clicks.
    """
    u = np.asarray(u, dtype=complex)
    n_modes = u.shape[0]
    if n > n_modes:
        raise ValueError(f"cannot simulate {n} fermions in {n_modes} modes")
    if method == "resource":
        return _resource_state_distribution(u, n)
    if method != "determinant":
        raise ValueError(f"unknown method {method!r}")
    n_in = tuple([1] * n + [0] * (n_modes - n))
    basis = fock.enumerate_basis(n_modes, n, Statistics.FERMION)
    amps = fock.amplitude_column(u, n_in, basis, Statistics.FERMION)
    return dict(zip(basis, (np.abs(amps) ** 2).tolist()))


def bits_to_str(bits: Sequence[int]) -> str:
    return "".join(str(int(b)) for b in bits)


def occ_to_str(occ: Sequence[int]) -> str:
    return ",".join(str(int(c)) for c in occ)


def write_distribution_csv(entries: Mapping, path, bitstrings: bool, value_name: str = "probability", comments=()) -> None:
    """Write ``state,value`` rows sorted in basis order."""
    fmt = bits_to_str if bitstrings else occ_to_str
    rows = [(fmt(k), entries[k]) for k in sorted(entries, reverse=True)]
    write_csv(path, ["bitstring" if bitstrings else "occupation", value_name], rows, comments)
