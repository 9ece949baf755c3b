"""QUBO instances, classical costs with an optional Hamming penalty, a
brute-force oracle, and the bridge from bit-string distributions to the
variational cost."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .circuit import as_generator

MAX_BRUTE_FORCE = 24
DIST_TOL = 1e-6


@dataclass(frozen=True)
class Hamming:
    w: int
    lam: float

    def __post_init__(self) -> None:
        if self.lam <= 0:
            raise ValueError("Hamming penalty multiplier must be positive")
        if self.w < 0:
            raise ValueError("target weight must be non-negative")


@dataclass(frozen=True, eq=False)
class QuboInstance:
    """``C(x) = x^T Q x`` plus ``lam (w - |x|)^2`` when ``hamming`` is set.

    ``q`` is symmetrized on construction.
    """

    q: np.ndarray
    hamming: Hamming | None = None
    n: int = field(init=False)

    def __post_init__(self) -> None:
        q = np.asarray(self.q, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError("Q must be square")
        object.__setattr__(self, "q", (q + q.T) / 2)
        object.__setattr__(self, "n", q.shape[0])

    def cost(self, x: Sequence[int]) -> float:
        return classical_cost(self, x)

    def to_dict(self) -> dict:
        h = None if self.hamming is None else {"w": self.hamming.w, "lambda": self.hamming.lam}
        q = self.q.tolist()
        if np.all(self.q == np.round(self.q)):
            q = [[int(v) for v in row] for row in q]
        return {"n": self.n, "q": q, "hamming": h}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "QuboInstance":
        h = data.get("hamming")
        inst = cls(np.asarray(data["q"], dtype=float),
                   None if h is None else Hamming(int(h["w"]), float(h["lambda"])))
        if "n" in data and int(data["n"]) != inst.n:
            raise ValueError("n does not match the size of q")
        return inst

    @classmethod
    def from_json(cls, text: str) -> "QuboInstance":
        return cls.from_dict(json.loads(text))


def classical_cost(q: QuboInstance, x: Sequence[int]) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (q.n,):
        raise ValueError(f"bit string of length {x.size} for an {q.n}-variable instance")
    c = float(x @ q.q @ x)
    if q.hamming is not None:
        c += q.hamming.lam * (q.hamming.w - x.sum()) ** 2
    return c


def penalty_multiplier(q: np.ndarray) -> float:
    # a non-positive max would stop the penalty from penalizing
    return max(1.0, 2.0 * float(np.max(q)))


def random_instance(
    n: int, seed: int | np.random.Generator | None = None, constrained: bool = False,
    low: int = -10, high: int = 10,
) -> QuboInstance:
    """Symmetric integer instance with entries uniform in ``[low, high]``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = as_generator(seed)
    upper = np.triu(rng.integers(low, high + 1, size=(n, n)))
    q = upper + np.triu(upper, 1).T
    hamming = Hamming(n // 2, penalty_multiplier(q)) if constrained else None
    return QuboInstance(q.astype(float), hamming)


def all_bitstrings(n: int, weight: int | None = None):
    for bits in itertools.product((0, 1), repeat=n):
        if weight is None or sum(bits) == weight:
            yield bits


def brute_force_min(q: QuboInstance, restrict_weight: int | None = None) -> tuple[tuple[int, ...], float]:
    """Global minimizer by enumeration; ties go to the lexicographically
    smallest string."""
    if q.n > MAX_BRUTE_FORCE:
        raise ValueError(f"brute force is capped at {MAX_BRUTE_FORCE} variables, got {q.n}")
    if restrict_weight is not None and not 0 <= restrict_weight <= q.n:
        raise ValueError(f"no {q.n}-bit strings of weight {restrict_weight}")
    best, best_c = None, np.inf
    for bits in all_bitstrings(q.n, restrict_weight):
        c = classical_cost(q, bits)
        if c < best_c:
            best, best_c = bits, c
    return best, best_c


def cost_range(q: QuboInstance) -> tuple[float, float]:
    costs = [classical_cost(q, b) for b in all_bitstrings(q.n)]
    return min(costs), max(costs)


def expected_cost(
    dist: Mapping[Sequence[int], float],
    q: QuboInstance | Callable[[Sequence[int]], float],
) -> float:
    """``sum_x p(x) C(x)``; ``q`` may be an instance or any bit-string cost."""
    total = sum(dist.values())
    if abs(total - 1.0) > DIST_TOL:
        raise ValueError(f"distribution sums to {total}, not 1")
    cost = q.cost if isinstance(q, QuboInstance) else q
    return float(sum(p * cost(x) for x, p in dist.items() if p != 0.0))
