"""Cost oracles, single-parameter slices, Fourier spectra of slices,
parameter-shift gradients and stationary points of trigonometric
polynomials."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from . import sampler
from .circuit import Circuit, as_generator
from .fock import Occupation, Statistics
from .io import write_csv
from .qubo import QuboInstance, expected_cost

UNIT_CIRCLE_TOL = 1e-6
SADDLE_TOL = 1e-9
CONSTANT_TOL = 1e-12


class CostOracle:
    """Counted wrapper around ``fn(theta) -> float``.

    Every ``__call__`` bumps ``evals`` under a lock; ``peek`` evaluates
    without counting, for bookkeeping that should not show up in budgets.
    """

    def __init__(
        self,
        fn: Callable[[np.ndarray], float],
        num_params: int,
        n_modes: int | None = None,
        n: int | None = None,
        stats: Statistics | None = None,
    ) -> None:
        self.fn = fn
        self.num_params = num_params
        self.n_modes = n_modes
        self.n = n
        self.stats = stats
        self._evals = 0
        self._lock = threading.Lock()

    @property
    def evals(self) -> int:
        return self._evals

    def reset(self) -> None:
        with self._lock:
            self._evals = 0

    def __call__(self, theta: Sequence[float]) -> float:
        with self._lock:
            self._evals += 1
        return float(self.fn(np.asarray(theta, dtype=float)))

    def peek(self, theta: Sequence[float]) -> float:
        return float(self.fn(np.asarray(theta, dtype=float)))


def _bit_cost(cost) -> Callable[[Sequence[int]], float]:
    return cost.cost if isinstance(cost, QuboInstance) else cost


def distribution_oracle(
    circuit: Circuit,
    input_state: Sequence[int],
    stats: Statistics | str,
    cost: QuboInstance | Callable[[Sequence[int]], float],
    marginal: int | None = None,
    shots: int | None = None,
    seed: int | np.random.Generator | None = None,
) -> CostOracle:
    """Expected bit-string cost under threshold detection.

    ``marginal=k`` keeps only the first ``k`` detectors. With ``shots`` the
    distribution is replaced by a finite-sample estimate drawn from ``seed``.
    """
    stats = Statistics.parse(stats)
    bit_cost = _bit_cost(cost)
    rng = as_generator(seed) if shots else None
    cache: dict[tuple[int, ...], float] = {}

    def cached(bits):
        if bits not in cache:
            cache[bits] = bit_cost(bits)
        return cache[bits]

    def fn(theta):
        dist = sampler.exact_distribution(sampler.evolve_fock(circuit, theta, input_state, stats))
        entries: Mapping = dist.entries
        if shots:
            entries = sampler.empirical(sampler.sample_shots(dist, shots, rng))
        bits = (sampler.marginal_top_modes(entries, marginal) if marginal
                else sampler.threshold_map(entries))
        return expected_cost(bits, cached)

    return CostOracle(fn, circuit.num_params, circuit.n_modes, sum(input_state), stats)


def observable_oracle(
    circuit: Circuit,
    input_state: Sequence[int],
    stats: Statistics | str,
    observable: Callable[[Occupation], float],
) -> CostOracle:
    """Expectation of a diagonal observable on raw occupations."""
    stats = Statistics.parse(stats)

    def fn(theta):
        state = sampler.evolve_fock(circuit, theta, input_state, stats)
        values = np.array([observable(occ) for occ in state.basis], dtype=float)
        return float(np.abs(state.amplitudes) ** 2 @ values)

    return CostOracle(fn, circuit.num_params, circuit.n_modes, sum(input_state), stats)


def set_param(theta: Sequence[float], j: int, x: float) -> np.ndarray:
    t = np.array(theta, dtype=float)
    t[j] = x
    return t


def cost_slice(oracle: CostOracle, theta: Sequence[float], j: int, xs: Iterable[float]) -> list[tuple[float, float]]:
    """Evaluate the cost with parameter ``j`` set to each of ``xs``."""
    if not 0 <= j < oracle.num_params:
        raise ValueError(f"parameter index {j} out of range")
    return [(float(x), oracle(set_param(theta, j, x))) for x in xs]


def sample_grid(n: int) -> np.ndarray:
    """``x_j = 2 pi j / (2n + 1)`` for ``j = 1..2n+1``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    m = 2 * n + 1
    return 2 * np.pi * np.arange(1, m + 1) / m


@dataclass
class FourierSpectrum:
    """Coefficients ``c_k`` for ``k = -n_max..n_max`` of a real trig polynomial."""

    n_max: int
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (2 * self.n_max + 1,):
            raise ValueError("need 2 n_max + 1 coefficients")

    @property
    def ks(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    def c(self, k: int) -> complex:
        if abs(k) > self.n_max:
            return 0j
        return complex(self.coeffs[k + self.n_max])

    def magnitudes(self) -> np.ndarray:
        """``|c_k|`` for ``k = 0..n_max``."""
        return np.abs(self.coeffs[self.n_max:])

    def support(self, tol: float = 1e-9) -> int:
        """Largest ``k`` with ``|c_k| >= tol`` (0 for a constant)."""
        mags = self.magnitudes()
        nz = np.nonzero(mags[1:] >= tol)[0]
        return int(nz[-1] + 1) if nz.size else 0

    @property
    def is_constant(self) -> bool:
        return self.support(CONSTANT_TOL) == 0

    def __call__(self, x, derivative: int = 0):
        x = np.asarray(x, dtype=float)
        ks = self.ks
        weights = self.coeffs * (1j * ks) ** derivative
        return np.real(np.exp(1j * np.multiply.outer(x, ks)) @ weights)


def fourier_coefficients(values: Sequence[float], n: int | None = None) -> FourierSpectrum:
    """Spectrum from samples on ``sample_grid(n)``.

    Exact when the sampled function has at most ``n`` harmonics.
    """
    f = np.asarray(values, dtype=float)
    m = f.size
    if m % 2 == 0 or (n is not None and m != 2 * n + 1):
        raise ValueError(f"expected {'an odd number of' if n is None else 2 * n + 1} samples, got {m}")
    n = (m - 1) // 2
    xs = sample_grid(n)
    ks = np.arange(-n, n + 1)
    coeffs = np.exp(-1j * np.multiply.outer(ks, xs)) @ f / m
    return FourierSpectrum(n, coeffs)


def spectrum_of(fn: Callable[[float], float], n: int) -> FourierSpectrum:
    return fourier_coefficients([fn(x) for x in sample_grid(n)], n)


def slice_spectrum(oracle: CostOracle, theta: Sequence[float], j: int, n: int) -> FourierSpectrum:
    """Spectrum of the slice along parameter ``j`` using ``2n + 1`` evals."""
    return fourier_coefficients([f for _, f in cost_slice(oracle, theta, j, sample_grid(n))], n)


def psr_shifts(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Shifts ``(2k - 1) pi / 2n`` and their weights for ``k = 1..2n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    k = np.arange(1, 2 * n + 1)
    x = (2 * k - 1) * np.pi / (2 * n)
    w = (-1.0) ** (k + 1) / (4 * n * np.sin(x / 2) ** 2)
    return x, w


def psr_gradient_general(oracle: CostOracle, theta: Sequence[float], j: int, n: int) -> float:
    """Exact derivative for slices with at most ``n`` harmonics; ``2n`` evals."""
    shifts, weights = psr_shifts(n)
    x0 = float(theta[j])
    return float(sum(w * oracle(set_param(theta, j, x0 + s)) for s, w in zip(shifts, weights)))


def psr_gradient_two_point(oracle: CostOracle, theta: Sequence[float], j: int) -> float:
    x0 = float(theta[j])
    return 0.5 * (oracle(set_param(theta, j, x0 + np.pi / 2)) - oracle(set_param(theta, j, x0 - np.pi / 2)))


def gradient(oracle: CostOracle, theta: Sequence[float], n_harmonics: int = 1) -> np.ndarray:
    """Per-coordinate parameter-shift gradient; ``2 n`` evals per parameter."""
    if n_harmonics == 1:
        return np.array([psr_gradient_two_point(oracle, theta, j) for j in range(oracle.num_params)])
    return np.array(
        [psr_gradient_general(oracle, theta, j, n_harmonics) for j in range(oracle.num_params)]
    )


@dataclass(frozen=True)
class StationaryPoint:
    x: float
    value: float
    kind: str  # "min", "max" or "saddle"


@dataclass
class StationarySet:
    points: list[StationaryPoint] = field(default_factory=list)
    constant: bool = False

    def __iter__(self) -> Iterator[StationaryPoint]:
        return iter(self.points)

    def __len__(self) -> int:
        return len(self.points)

    def minimum(self) -> StationaryPoint | None:
        mins = [p for p in self.points if p.kind == "min"] or self.points
        return min(mins, key=lambda p: p.value) if mins else None


def _polish(s: FourierSpectrum, x: float, steps: int = 3) -> float:
    for _ in range(steps):
        d2 = s(x, 2)
        if abs(d2) < SADDLE_TOL:
            break
        x -= s(x, 1) / d2
    return x


def stationary_points(s: FourierSpectrum, circle_tol: float = UNIT_CIRCLE_TOL) -> StationarySet:
    """Zeros of ``f'`` via the roots of ``z^n f'(z)``, ``z = exp(ix)``.

    Roots are found as companion-matrix eigenvalues and polished with a
    few Newton steps on the real derivative.
    """
    if s.n_max < 1:
        raise ValueError("spectrum has no harmonics")
    if s.is_constant:
        return StationarySet([], constant=True)
    d = 1j * s.ks * s.coeffs
    # np.roots wants the highest power first: z^{2n} carries d_n
    roots = np.roots(d[::-1])
    xs: list[float] = []
    for z in roots:
        if abs(abs(z) - 1.0) >= circle_tol:
            continue
        x = float(np.mod(_polish(s, float(np.angle(z))), 2 * np.pi))
        if 2 * np.pi - x < 1e-12:
            x = 0.0
        if all(min(abs(x - y), 2 * np.pi - abs(x - y)) > 1e-8 for y in xs):
            xs.append(x)
    points = []
    for x in sorted(xs):
        d2 = float(s(x, 2))
        kind = "saddle" if abs(d2) < SADDLE_TOL else ("min" if d2 > 0 else "max")
        points.append(StationaryPoint(x, float(s(x)), kind))
    return StationarySet(points)


def write_spectrum_csv(s: FourierSpectrum, path, comments=()) -> None:
    rows = [(int(k), c.real, c.imag, abs(c)) for k, c in zip(s.ks, s.coeffs)]
    write_csv(path, ["k", "re_c", "im_c", "abs_c"], rows, comments)
