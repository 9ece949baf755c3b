"""Dual-valued phase shifters (DVPS): the exact diagonal gate, the cross-Kerr
realization with its repeat-until-success ladder, and measurement-induced
synthesis by constrained optimization over U(3).

The synthesized gate acts on a logical mode (mode 0) together with ancilla
modes prepared and heralded in the same pattern ``anc``. For a logical
photon number ``n`` the induced amplitude is
``alpha(n) = per(u[v_n | v_n]) / n!`` with ``v_n = (n, *anc)``; a DVPS
requires ``alpha(n) = alpha(0) exp(i x q(n))``.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from . import fock
from .circuit import BeamSplitter, Circuit, Kerr, PhaseShifter, TunableBeamSplitter
from .fock import q_parity
from .io import write_csv
from .sampler import evolve_fock

__all__ = [
    "q_parity",
    "vandermonde_coeffs",
    "poly_eval",
    "dvps_values",
    "generators",
    "unitary_from_params",
    "induced_amplitudes",
    "constraint_residual",
    "success_probability",
    "DvpsSolution",
    "InfeasibleError",
    "synthesize",
    "kerr_branches",
    "nonlinear_dvps_simulate",
    "martingale",
    "martingale_net_phase",
    "write_bank_csv",
]

FEASIBLE_TOL = 1e-8


def dvps_diagonal(x: float, n_max: int) -> np.ndarray:
    """``exp(i q(n) x)`` for ``n = 0..n_max``."""
    return np.exp(1j * x * np.array([q_parity(n) for n in range(n_max + 1)]))


def vandermonde_coeffs(values: Sequence[complex]) -> np.ndarray:
    """Coefficients ``a_0..a_N`` of the polynomial through ``(n, values[n])``."""
    v = np.asarray(values)
    nodes = np.arange(v.size, dtype=float)
    return np.linalg.solve(np.vander(nodes, increasing=True), v)


def poly_eval(coeffs: Sequence[complex], n) -> complex:
    return np.polynomial.polynomial.polyval(n, np.asarray(coeffs))


def dvps_values(x: float, n_layer: int = 2) -> np.ndarray:
    return dvps_diagonal(x, n_layer)


def generators(dim: int = 3) -> list[np.ndarray]:
    """Hermitian basis ``T^mu``: diagonal units, then symmetric and
    antisymmetric off-diagonal pairs (``dim**2`` matrices)."""
    out = []
    for i in range(dim):
        m = np.zeros((dim, dim), dtype=complex)
        m[i, i] = 1
        out.append(m)
    pairs = [(i, j) for i in range(dim) for j in range(i + 1, dim)]
    for i, j in pairs:
        m = np.zeros((dim, dim), dtype=complex)
        m[i, j] = m[j, i] = 1
        out.append(m)
    for i, j in pairs:
        m = np.zeros((dim, dim), dtype=complex)
        m[i, j], m[j, i] = -1j, 1j
        out.append(m)
    return out


_GEN_CACHE: dict[int, np.ndarray] = {}


def unitary_from_params(theta: Sequence[float]) -> np.ndarray:
    """``exp(i sum_mu theta_mu T^mu)`` via eigendecomposition of the
    Hermitian generator."""
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise ValueError("non-finite generator parameters")
    dim = math.isqrt(theta.size)
    if dim * dim != theta.size:
        raise ValueError("need a square number of parameters")
    if dim not in _GEN_CACHE:
        _GEN_CACHE[dim] = np.array(generators(dim))
    h = np.tensordot(theta, _GEN_CACHE[dim], axes=1)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * w)) @ v.conj().T


def _check_anc(anc: Sequence[int]) -> tuple[int, ...]:
    anc = tuple(int(a) for a in anc)
    if any(a not in (0, 1) for a in anc):
        raise ValueError(f"ancilla pattern must be binary, got {anc}")
    return anc


def induced_amplitudes(u: np.ndarray, anc: Sequence[int] = (1, 0), n_layer: int = 2) -> np.ndarray:
    """``alpha(n)`` for ``n = 0..n_layer``."""
    anc = _check_anc(anc)
    u = np.asarray(u, dtype=complex)
    if u.shape != (len(anc) + 1,) * 2:
        raise ValueError(f"u must be {len(anc) + 1} x {len(anc) + 1} for ancillas {anc}")
    out = np.empty(n_layer + 1, dtype=complex)
    for n in range(n_layer + 1):
        v = (n,) + anc
        out[n] = fock.permanent(fock.index_submatrix(u, v, v)) / math.factorial(n)
    return out


def _violations(alpha: np.ndarray, x: float) -> np.ndarray:
    target = alpha[0] * dvps_diagonal(x, alpha.size - 1)
    return alpha[1:] - target[1:]


def constraint_residual(u: np.ndarray, x: float, anc: Sequence[int] = (1, 0), n_layer: int = 2) -> float:
    """``max_n |alpha(n) - alpha(0) exp(i x q(n))|`` over ``n = 1..n_layer``."""
    return float(np.max(np.abs(_violations(induced_amplitudes(u, anc, n_layer), x))))


def success_probability(u: np.ndarray, anc: Sequence[int] = (1, 0)) -> float:
    return float(abs(induced_amplitudes(u, anc, 0)[0]) ** 2)


@dataclass
class DvpsSolution:
    x: float
    u: np.ndarray
    p: float
    alpha: complex
    residual: float
    anc: tuple[int, ...] = (1, 0)
    restarts_used: int = 0

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "anc": list(self.anc),
            "u": {"re": self.u.real.tolist(), "im": self.u.imag.tolist()},
            "p": self.p,
            "alpha": [self.alpha.real, self.alpha.imag],
            "residual": self.residual,
            "restarts_used": self.restarts_used,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "DvpsSolution":
        u = np.asarray(d["u"]["re"]) + 1j * np.asarray(d["u"]["im"])
        return cls(float(d["x"]), u, float(d["p"]), complex(*d["alpha"]), float(d["residual"]),
                   tuple(d.get("anc", (1, 0))), int(d.get("restarts_used", 0)))


class InfeasibleError(RuntimeError):
    def __init__(self, x: float, best_residual: float):
        super().__init__(f"no feasible DVPS found at x={x} (best residual {best_residual:.3e})")
        self.x = x
        self.best_residual = best_residual


@dataclass
class _Attempt:
    theta: np.ndarray
    p: float
    residual: float


def _local_solve(x: float, anc: tuple[int, ...], n_layer: int, theta0: np.ndarray, maxiter: int) -> _Attempt:
    def amps(t):
        return induced_amplitudes(unitary_from_params(t), anc, n_layer)

    def objective(t):
        return -abs(amps(t)[0]) ** 2

    def constraints(t):
        v = _violations(amps(t), x)
        return np.concatenate([v.real, v.imag])

    try:
        res = minimize(
            objective, theta0, method="SLSQP",
            constraints=[{"type": "eq", "fun": constraints}],
            options={"maxiter": maxiter, "ftol": 1e-12},
        )
    except (np.linalg.LinAlgError, ValueError):
        # SLSQP occasionally steps to non-finite parameters; count the
        # restart as failed
        return _Attempt(theta0, 0.0, np.inf)
    if not np.all(np.isfinite(res.x)):
        return _Attempt(theta0, 0.0, np.inf)
    u = unitary_from_params(res.x)
    return _Attempt(res.x, success_probability(u, anc), constraint_residual(u, x, anc, n_layer))


def synthesize(
    x: float,
    anc: Sequence[int] = (1, 0),
    restarts: int = 100,
    seed: int = 0,
    n_layer: int = 2,
    feasible_tol: float = FEASIBLE_TOL,
    maxiter: int = 500,
    threads: int = 1,
) -> DvpsSolution:
    """Highest-probability heralded DVPS found over ``restarts`` local solves.

    Each restart maximizes ``|alpha(0)|^2`` subject to the DVPS equality
    constraints with SLSQP. Restart 0 starts from the single-mode phase
    ``diag(exp(ix), 1, ...)``, which is exactly feasible at ``x`` in
    ``{0, pi}``; the rest start uniformly in ``[-pi, pi]^9`` from
    independent child streams of ``seed``.
    """
    anc = _check_anc(anc)
    if n_layer != 2 or len(anc) != 2:
        raise NotImplementedError("synthesis is implemented for two-photon layers with two ancillas")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    dim = len(anc) + 1
    children = np.random.SeedSequence(seed).spawn(restarts)

    def start(r: int) -> np.ndarray:
        if r == 0:
            t = np.zeros(dim * dim)
            t[0] = x
            return t
        return np.random.default_rng(children[r]).uniform(-np.pi, np.pi, dim * dim)

    def run(r: int) -> _Attempt:
        return _local_solve(x, anc, n_layer, start(r), maxiter)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            attempts = list(pool.map(run, range(restarts)))
    else:
        attempts = [run(r) for r in range(restarts)]

    feasible = [a for a in attempts if a.residual < feasible_tol]
    if not feasible:
        raise InfeasibleError(x, min(a.residual for a in attempts))
    # earliest restart wins ties, so thread count cannot change the result
    best = max(feasible, key=lambda a: a.p)
    u = unitary_from_params(best.theta)
    alpha0 = induced_amplitudes(u, anc, 0)[0]
    return DvpsSolution(float(x), u, best.p, complex(alpha0 / abs(alpha0)), best.residual,
                        anc, restarts)


def kerr_circuit(x: float, theta: float, phi: float) -> Circuit:
    """Ancillas on modes 0 and 1, logical photons on mode 2."""
    return Circuit(3, [
        PhaseShifter(0, phase=theta),
        TunableBeamSplitter(0, 1, angle=x),
        Kerr(1, 2, phase=phi),
        BeamSplitter(0, 1, "hadamard"),
    ])


def kerr_branches(x: float, theta: float, phi: float, n: int) -> tuple[complex, complex]:
    """Logical amplitudes heralded by ancilla outcomes ``|1,0>`` (success)
    and ``|0,1>`` (failure) for input ``|1,0,n>``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    state = evolve_fock(kerr_circuit(x, theta, phi), [], (1, 0, n), "boson")
    return state.amplitude((1, 0, n)), state.amplitude((0, 1, n))


def nonlinear_dvps_simulate(x: float, theta: float, phi: float, n: int) -> tuple[float, float]:
    """Success probability and heralded logical phase (in ``[0, 2 pi)``)."""
    amp, _ = kerr_branches(x, theta, phi, n)
    return float(abs(amp) ** 2), float(np.mod(np.angle(amp), 2 * np.pi))


def martingale(m: int, x: float) -> tuple[float, np.ndarray]:
    """Success probability after ``m`` attempts and the phase ladder
    ``x_k = 2^(k-1) x mod 2 pi``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    ladder = np.mod(x * 2.0 ** np.arange(m), 2 * np.pi)
    return 1.0 - 2.0 ** -m, ladder


def martingale_net_phase(x: float, k: int) -> float:
    """Phase on odd photon numbers when attempt ``k`` is the first success.

    Each failure imprints ``-x_j q(n)`` up to a global phase and the
    success imprints ``+x_k q(n)``.
    """
    _, ladder = martingale(k, x)
    return float(np.mod(ladder[-1] - ladder[:-1].sum(), 2 * np.pi))


def martingale_simulated_phase(x: float, k: int, phi: float = np.pi) -> float:
    """Relative odd/even logical phase from chaining ``k - 1`` Kerr failures
    and one success, each attempt at ``theta = x_j / 2``."""
    _, ladder = martingale(k, x)
    amps = []
    for n in (0, 1):
        a = 1.0 + 0j
        for j, xj in enumerate(ladder):
            ok, fail = kerr_branches(xj, xj / 2, phi, n)
            a *= ok if j == k - 1 else fail
        amps.append(a)
    return float(np.mod(np.angle(amps[1] / amps[0]), 2 * np.pi))


def write_bank_csv(solutions: list[tuple[float, tuple[int, ...], float, float]], path, comments=()) -> None:
    rows = [(x, "".join(map(str, anc)), p, r) for x, anc, p, r in solutions]
    write_csv(path, ["x", "anc", "p", "residual"], rows, comments)
