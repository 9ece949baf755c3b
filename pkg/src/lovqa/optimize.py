"""Gradient descent with parameter-shift gradients, Rotosolve and OICD
(interpolation-based coordinate descent), sharing one trace format and
one termination rule."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from . import landscape
from .circuit import as_generator, canonical
from .io import write_csv, write_json
from .landscape import CostOracle

FLAT_TOL = 1e-12


class TerminatedBy(Enum):
    MAX_STEPS = "MaxSteps"
    COST_TOLERANCE = "CostTolerance"
    TARGET_REACHED = "TargetReached"


@dataclass
class Termination:
    """``cost_tol=None`` disables the sweep-improvement test."""

    max_sweeps: int = 100
    cost_tol: float | None = 1e-8
    target: float | None = None
    target_tol: float = 1e-9


@dataclass
class Step:
    sweep: int
    coordinate: int  # -1 for the initial point and for whole-vector updates
    theta: np.ndarray
    cost: float
    evals: int


@dataclass
class OptimizerTrace:
    steps: list[Step] = field(default_factory=list)
    terminated_by: TerminatedBy | None = None
    flat: list[tuple[int, int]] = field(default_factory=list)

    @property
    def final_theta(self) -> np.ndarray:
        return self.steps[-1].theta

    @property
    def final_cost(self) -> float:
        return self.steps[-1].cost

    @property
    def costs(self) -> np.ndarray:
        return np.array([s.cost for s in self.steps])

    @property
    def evals(self) -> np.ndarray:
        return np.array([s.evals for s in self.steps])

    @property
    def sweeps(self) -> int:
        return self.steps[-1].sweep

    def record(self, sweep: int, coord: int, theta, cost: float, evals: int) -> None:
        self.steps.append(Step(sweep, coord, canonical(theta), float(cost), int(evals)))

    def summary(self) -> dict:
        return {
            "final_theta": self.final_theta.tolist(),
            "final_cost": self.final_cost,
            "terminated_by": self.terminated_by.value if self.terminated_by else None,
            "sweeps": self.sweeps,
            "evals": self.steps[-1].evals,
            "flat_coordinates": [list(f) for f in self.flat],
        }


class NonFiniteCostError(RuntimeError):
    def __init__(self, trace: OptimizerTrace):
        super().__init__(f"non-finite cost after {len(trace.steps)} steps")
        self.trace = trace


def check_termination(
    term: Termination, sweep: int, cost: float, prev_sweep_cost: float | None, end_of_sweep: bool
) -> TerminatedBy | None:
    if term.target is not None and cost <= term.target + term.target_tol:
        return TerminatedBy.TARGET_REACHED
    if not end_of_sweep:
        return None
    if term.cost_tol is not None and prev_sweep_cost is not None and prev_sweep_cost - cost < term.cost_tol:
        return TerminatedBy.COST_TOLERANCE
    if sweep >= term.max_sweeps:
        return TerminatedBy.MAX_STEPS
    return None


def _start(oracle: CostOracle, theta0, term: Termination) -> tuple[np.ndarray, OptimizerTrace]:
    theta = np.array(theta0, dtype=float)
    if theta.shape != (oracle.num_params,):
        raise ValueError(f"expected {oracle.num_params} parameters, got {theta.shape}")
    trace = OptimizerTrace()
    cost = oracle.peek(theta)
    trace.record(0, -1, theta, cost, oracle.evals)
    if not np.isfinite(cost):
        raise NonFiniteCostError(trace)
    if term.target is not None and cost <= term.target + term.target_tol:
        trace.terminated_by = TerminatedBy.TARGET_REACHED
    elif term.max_sweeps <= 0:
        trace.terminated_by = TerminatedBy.MAX_STEPS
    return theta, trace


def gradient_descent(
    oracle: CostOracle,
    theta0: Sequence[float],
    h: float = 0.05,
    n_harmonics: int = 1,
    termination: Termination | None = None,
) -> OptimizerTrace:
    """``theta <- theta - h grad E`` with parameter-shift gradients.

    One iteration counts as a sweep and costs ``2 n_harmonics`` evals per
    parameter.
    """
    if h <= 0:
        raise ValueError("learning rate must be positive")
    term = termination or Termination()
    theta, trace = _start(oracle, theta0, term)
    prev = trace.final_cost
    sweep = 0
    while trace.terminated_by is None:
        sweep += 1
        theta = theta - h * landscape.gradient(oracle, theta, n_harmonics)
        cost = oracle.peek(theta)
        trace.record(sweep, -1, theta, cost, oracle.evals)
        if not np.isfinite(cost):
            raise NonFiniteCostError(trace)
        trace.terminated_by = check_termination(term, sweep, cost, prev, True)
        prev = cost
    return trace


def rotosolve_update(f0: float, fp: float, fm: float) -> float | None:
    """Minimizer of ``A sin(x - phi) + B`` from samples at ``0, +-pi/2``.

    Returns ``None`` when the slice is flat.
    """
    x, y = fp - fm, 2 * f0 - fp - fm
    if np.hypot(x, y) < FLAT_TOL:
        return None
    return -np.pi / 2 - np.arctan2(y, x)


def _coordinate_descent(oracle, theta0, termination, update, order, seed) -> OptimizerTrace:
    term = termination or Termination()
    theta, trace = _start(oracle, theta0, term)
    rng = as_generator(seed) if order == "random" else None
    if order not in ("ascending", "random"):
        raise ValueError(f"unknown coordinate order {order!r}")
    prev = trace.final_cost
    sweep = 0
    while trace.terminated_by is None:
        sweep += 1
        coords = rng.permutation(oracle.num_params) if rng is not None else range(oracle.num_params)
        cost = prev
        for i in coords:
            x = update(theta, int(i))
            if x is None:
                trace.flat.append((sweep, int(i)))
            else:
                theta[i] = x
            cost = oracle.peek(theta)
            trace.record(sweep, int(i), theta, cost, oracle.evals)
            if not np.isfinite(cost):
                raise NonFiniteCostError(trace)
            done = check_termination(term, sweep, cost, prev, False)
            if done is not None:
                trace.terminated_by = done
                return trace
        trace.terminated_by = check_termination(term, sweep, cost, prev, True)
        prev = cost
    return trace


def rotosolve(
    oracle: CostOracle,
    theta0: Sequence[float],
    termination: Termination | None = None,
    order: str = "ascending",
    seed=None,
) -> OptimizerTrace:
    """Coordinate-wise closed-form minimization of single-harmonic slices;
    three evals per coordinate."""

    def update(theta, i):
        f0, fp, fm = (oracle(landscape.set_param(theta, i, x)) for x in (0.0, np.pi / 2, -np.pi / 2))
        return rotosolve_update(f0, fp, fm)

    return _coordinate_descent(oracle, theta0, termination, update, order, seed)


def oicd(
    oracle: CostOracle,
    theta0: Sequence[float],
    n_harmonics: int,
    termination: Termination | None = None,
    order: str = "ascending",
    seed=None,
) -> OptimizerTrace:
    """Fit each slice with ``2n + 1`` samples and jump to the best
    stationary point of the fitted series."""
    if n_harmonics < 1:
        raise ValueError("n_harmonics must be >= 1")

    def update(theta, i):
        s = landscape.slice_spectrum(oracle, theta, i, n_harmonics)
        best = landscape.stationary_points(s).minimum()
        return None if best is None else best.x

    return _coordinate_descent(oracle, theta0, termination, update, order, seed)


def write_trace_csv(trace: OptimizerTrace, path, comments=()) -> None:
    rows = [(s.sweep, s.coordinate, s.cost, s.evals) for s in trace.steps]
    write_csv(path, ["sweep", "coordinate", "cost", "cumulative_evals"], rows, comments)


def write_summary_json(trace: OptimizerTrace, path) -> None:
    write_json(path, trace.summary())
