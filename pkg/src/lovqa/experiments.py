"""Seeded experiment runners behind the command line.

Each runner takes an :class:`ExperimentConfig`, writes CSV (and sometimes
JSON) files under ``config.out`` and returns the list of paths written.
Parallel work is split into tasks with their own child seeds and merged
in task order, so the thread count never changes the output.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import dvps, landscape, optimize, qubo, sampler
from .circuit import Circuit, FixedUnitary, as_generator, haar_random, random_params, sandwich, universal_mesh
from .fock import Statistics
from .io import config_hash, write_csv, write_json


class ConfigError(ValueError):
    pass


class Experiment(Enum):
    SWEEP = "sweep"
    SOLVE = "solve"
    VARIANCE = "variance"
    SPECTRUM = "spectrum"
    ROTOSOLVE_BOSON = "rotosolve-boson"
    DVPS_BANK = "dvps-bank"
    SAMPLE = "sample"


class Backend(Enum):
    BOSON = "boson"
    FERMION = "fermion"
    DVPS = "dvps"
    BOSON_SAMPLED = "boson-sampled"


# settings that never affect results and so stay out of the config hash
_UNHASHED = ("out", "threads")


@dataclass
class ExperimentConfig:
    experiment: Experiment
    seed: int
    backend: Backend = Backend.BOSON
    n_modes: int | None = None
    n: int | None = None
    shots: int | None = None
    threads: int = 1
    out: str = "results"
    # sweep
    grid_points: int = 61
    # solve
    instances: int = 5
    constrained: bool = True
    w: int | None = None
    optimizers: list[str] = field(default_factory=lambda: ["boson_gd", "fermion_gd", "fermion_rotosolve"])
    max_sweeps: int = 100
    gd_max_steps: int = 50
    cost_tol: float | None = 1e-8
    target_tol: float = 1e-3
    h: float = 0.05
    # variance
    sizes: list[int] = field(default_factory=lambda: [4, 6, 8])
    trials: int = 200
    # spectrum
    photon_numbers: list[int] = field(default_factory=lambda: [1, 2, 3, 4])
    # dvps bank
    x_points: int = 17
    ancillas: list[list[int]] = field(default_factory=lambda: [[1, 0], [0, 1], [1, 1]])
    restarts: int = 100

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if data.get("seed") is None:
            raise ConfigError("a seed is required")
        if "experiment" not in data:
            raise ConfigError("no experiment given")
        d = dict(data)
        try:
            d["experiment"] = Experiment(d["experiment"])
            d["backend"] = Backend(d.get("backend", "boson"))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.backend is Backend.BOSON_SAMPLED and not self.shots:
            raise ConfigError("the sampled backend needs a positive shot count")
        if self.shots is not None and self.shots < 1:
            raise ConfigError("shots must be >= 1")
        for name in ("grid_points", "instances", "trials", "x_points", "restarts"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.experiment is Experiment.VARIANCE and any(s < 2 or s % 2 for s in self.sizes):
            raise ConfigError("variance sizes must be even and >= 2")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["experiment"] = self.experiment.value
        d["backend"] = self.backend.value
        return d

    def hash(self) -> str:
        d = self.to_dict()
        for k in _UNHASHED:
            d.pop(k)
        return config_hash(d)

    def comments(self) -> list[str]:
        return [f"config_hash={self.hash()} experiment={self.experiment.value} seed={self.seed}"]

    def path(self, name: str) -> Path:
        return Path(self.out) / name

    def sampled(self) -> bool:
        return bool(self.shots) or self.backend is Backend.BOSON_SAMPLED


def _map(cfg: ExperimentConfig, fn: Callable, tasks: Sequence) -> list:
    if cfg.threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(cfg.threads) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def _children(seed: int, k: int, key: int = 0) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence([seed, key]).spawn(k)


def _first_modes(n_modes: int, n: int) -> tuple[int, ...]:
    return tuple([1] * n + [0] * (n_modes - n))


def _oracle(circuit, state, stats, cost, cfg, seed_seq, marginal=None):
    if cfg.sampled():
        return landscape.distribution_oracle(circuit, state, stats, cost, marginal,
                                             shots=cfg.shots, seed=np.random.default_rng(seed_seq))
    return landscape.distribution_oracle(circuit, state, stats, cost, marginal)


def run_sweep(cfg: ExperimentConfig) -> list[Path]:
    """One phase swept over ``[0, 2 pi)`` between shared Haar unitaries for
    bosons, fermions and bosons through a DVPS."""
    n_modes, n = cfg.n_modes or 4, cfg.n or 2
    if not 1 <= n <= n_modes:
        raise ConfigError("need 1 <= n <= n_modes")
    rng = as_generator(cfg.seed)
    v, w = haar_random(n_modes, rng), haar_random(n_modes, rng)
    table = rng.uniform(0.0, 1.0, 2 ** n_modes)
    cost = lambda bits: float(table[int("".join(map(str, bits)), 2)])
    state = _first_modes(n_modes, n)
    seeds = _children(cfg.seed, 3, key=1)
    oracles = [
        _oracle(sandwich(v, w), state, Statistics.BOSON, cost, cfg, seeds[0]),
        _oracle(sandwich(v, w), state, Statistics.FERMION, cost, cfg, seeds[1]),
        _oracle(sandwich(v, w, nonlinear=True), state, Statistics.BOSON, cost, cfg, seeds[2]),
    ]
    xs = 2 * np.pi * np.arange(cfg.grid_points) / cfg.grid_points
    rows = [(x, *(o([x]) for o in oracles)) for x in xs]
    path = cfg.path("sweep.csv")
    write_csv(path, ["x", "cost_boson", "cost_fermion", "cost_dvps"], rows, cfg.comments())
    return [path]


SOLVERS = ("boson_gd", "fermion_gd", "fermion_rotosolve")


def _solve_instance(cfg: ExperimentConfig, idx: int, seq: np.random.SeedSequence) -> dict:
    rng = np.random.default_rng(seq)
    n_vars = cfg.n_modes or 6
    if cfg.constrained:
        w = cfg.w if cfg.w is not None else n_vars // 2
        inst = qubo.random_instance(n_vars, rng, constrained=True)
        inst = qubo.QuboInstance(inst.q, qubo.Hamming(w, inst.hamming.lam))
        _, target = qubo.brute_force_min(inst, restrict_weight=w)
        mesh, n, marginal = universal_mesh(n_vars), w, None
    else:
        inst = qubo.random_instance(n_vars, rng)
        _, target = qubo.brute_force_min(inst)
        mesh, n, marginal = universal_mesh(2 * n_vars), n_vars, n_vars
    state = _first_modes(mesh.n_modes, n)
    theta0 = random_params(mesh.num_params, rng)
    seeds = seq.spawn(len(SOLVERS))
    traces = {}
    for name in cfg.optimizers:
        stats = Statistics.BOSON if name.startswith("boson") else Statistics.FERMION
        oracle = _oracle(mesh, state, stats, inst, cfg, seeds[SOLVERS.index(name)], marginal)
        if name == "fermion_rotosolve":
            term = optimize.Termination(cfg.max_sweeps, cfg.cost_tol, target, cfg.target_tol)
            traces[name] = optimize.rotosolve(oracle, theta0, term)
        else:
            term = optimize.Termination(cfg.gd_max_steps, cfg.cost_tol, target, cfg.target_tol)
            harmonics = n if stats is Statistics.BOSON else 1
            traces[name] = optimize.gradient_descent(oracle, theta0, cfg.h, harmonics, term)
    return {"instance": idx, "target": target, "qubo": inst.to_dict(), "traces": traces}


def run_solve(cfg: ExperimentConfig) -> list[Path]:
    """Boson and fermion gradient descent and fermion Rotosolve on seeded
    QUBO instances, all on the same mesh from the same start."""
    n_vars = cfg.n_modes or 6
    unknown = set(cfg.optimizers) - set(SOLVERS)
    if unknown:
        raise ConfigError(f"unknown optimizers {sorted(unknown)}")
    if cfg.constrained:
        w = cfg.w if cfg.w is not None else n_vars // 2
        if not 1 <= w <= n_vars:
            raise ConfigError(f"no {n_vars}-bit strings of weight {w} to reach")
    if n_vars > qubo.MAX_BRUTE_FORCE:
        raise ConfigError("instance too large for the brute-force target")
    seqs = _children(cfg.seed, cfg.instances, key=2)
    results = _map(cfg, lambda t: _solve_instance(cfg, *t), list(enumerate(seqs)))

    trace_rows, summary_rows, summary = [], [], []
    for res in results:
        first = next(iter(res["traces"].values()))
        norm = res["traces"]["boson_gd"].steps[0].cost if "boson_gd" in res["traces"] else first.steps[0].cost
        norm = norm if norm != 0 else 1.0
        for name, tr in res["traces"].items():
            for s in tr.steps:
                trace_rows.append((res["instance"], name, s.sweep, s.coordinate, s.cost, s.cost / norm, s.evals))
            row = (res["instance"], name, res["target"], tr.final_cost, tr.steps[-1].evals,
                   tr.terminated_by.value)
            summary_rows.append(row)
        summary.append({
            "instance": res["instance"],
            "target": res["target"],
            "qubo": res["qubo"],
            "runs": {k: tr.summary() for k, tr in res["traces"].items()},
        })
    means = {}
    for name in cfg.optimizers:
        evals = [r[4] for r in summary_rows if r[1] == name]
        means[name] = float(np.mean(evals))
    paths = [cfg.path("solve_traces.csv"), cfg.path("solve_summary.csv"), cfg.path("solve_summary.json")]
    write_csv(paths[0], ["instance", "optimizer", "sweep", "coordinate", "cost", "normalized_cost",
                         "cumulative_evals"], trace_rows, cfg.comments())
    write_csv(paths[1], ["instance", "optimizer", "target", "final_cost", "evals", "terminated_by"],
              summary_rows, cfg.comments())
    write_json(paths[2], {"config_hash": cfg.hash(), "instances": summary, "mean_evals": means})
    return paths


def _pair_cost(bits) -> float:
    return float(bits[0] * bits[1])


def _variance_trial(n_modes: int, seq: np.random.SeedSequence) -> tuple[float, float]:
    rng = np.random.default_rng(seq)
    v, w = haar_random(n_modes, rng), haar_random(n_modes, rng)
    n = n_modes // 2
    state = _first_modes(n_modes, n)
    circ = sandwich(v, w)
    boson = landscape.distribution_oracle(circ, state, Statistics.BOSON, _pair_cost)
    fermion = landscape.distribution_oracle(circ, state, Statistics.FERMION, _pair_cost)
    theta = np.zeros(1)
    return (landscape.psr_gradient_general(boson, theta, 0, n),
            landscape.psr_gradient_two_point(fermion, theta, 0))


def run_variance(cfg: ExperimentConfig) -> list[Path]:
    """Gradient variance over Haar-random interferometers with cost
    ``x1 x2`` and ``N/2`` particles."""
    rows = []
    for k, size in enumerate(cfg.sizes):
        seqs = _children(cfg.seed, cfg.trials, key=100 + k)
        grads = np.array(_map(cfg, lambda s: _variance_trial(size, s), seqs))
        rows.append((size, float(np.var(grads[:, 0])), float(np.var(grads[:, 1])),
                     cfg.trials, int(cfg.trials < 2)))
    path = cfg.path("variance.csv")
    write_csv(path, ["N", "var_boson", "var_fermion", "trials", "degenerate"], rows, cfg.comments())
    return [path]


def _spectrum_instance(n_modes: int, n: int, seq: np.random.SeedSequence) -> np.ndarray:
    rng = np.random.default_rng(seq)
    inst = qubo.random_instance(n_modes, rng)
    mesh = universal_mesh(n_modes)
    theta = random_params(mesh.num_params, rng)
    j = int(rng.integers(mesh.num_params))
    oracle = landscape.distribution_oracle(mesh, _first_modes(n_modes, n), Statistics.BOSON, inst)
    return landscape.slice_spectrum(oracle, theta, j, n).magnitudes()


def run_spectrum(cfg: ExperimentConfig) -> list[Path]:
    """Mean Fourier magnitudes of random bosonic QUBO slices, relative to
    the first harmonic."""
    n_modes = cfg.n_modes or 6
    rows = []
    for n in cfg.photon_numbers:
        if not 1 <= n <= n_modes:
            raise ConfigError(f"photon number {n} outside [1, {n_modes}]")
        seqs = _children(cfg.seed, cfg.instances, key=200 + n)
        mags = np.array(_map(cfg, lambda s: _spectrum_instance(n_modes, n, s), seqs))
        mean = mags.mean(axis=0)
        for k in range(n + 1):
            rows.append((n, k, float(mean[k]), float(mean[k] / mean[1])))
    path = cfg.path("spectrum.csv")
    write_csv(path, ["n", "k", "mean_abs_c", "ratio_to_c1"], rows, cfg.comments())
    return [path]


def run_rotosolve_boson(cfg: ExperimentConfig) -> list[Path]:
    """Rotosolve used as an approximation on a bosonic landscape, against
    gradient descent with the same evaluation budget."""
    n_modes, n = cfg.n_modes or 6, cfg.n or 4
    if not 1 <= n <= n_modes:
        raise ConfigError("need 1 <= n <= n_modes")
    rng = as_generator(cfg.seed)
    inst = qubo.random_instance(n_modes, rng)
    mesh = universal_mesh(n_modes)
    theta0 = random_params(mesh.num_params, rng)
    state = _first_modes(n_modes, n)
    seeds = _children(cfg.seed, 2, key=3)
    roto_oracle = _oracle(mesh, state, Statistics.BOSON, inst, cfg, seeds[0])
    # the bosonic slice is not a single sine, so a sweep may raise the cost
    roto = optimize.rotosolve(roto_oracle, theta0, optimize.Termination(cfg.max_sweeps, None))
    budget = roto.steps[-1].evals
    per_step = 2 * n * mesh.num_params
    gd_oracle = _oracle(mesh, state, Statistics.BOSON, inst, cfg, seeds[1])
    gd = optimize.gradient_descent(gd_oracle, theta0, cfg.h, n,
                                   optimize.Termination(budget // per_step, None))
    rows = [("rotosolve", s.sweep, s.coordinate, s.evals, s.cost) for s in roto.steps]
    rows += [("gd", s.sweep, s.coordinate, s.evals, s.cost) for s in gd.steps]
    path = cfg.path("rotosolve_boson.csv")
    write_csv(path, ["optimizer", "sweep", "coordinate", "cumulative_evals", "cost"], rows, cfg.comments())
    return [path]


class BankInfeasible(RuntimeError):
    def __init__(self, paths: list[Path], failures: list[tuple[float, tuple[int, ...], float]]):
        super().__init__(f"{len(failures)} grid points had no feasible solution")
        self.paths = paths
        self.failures = failures


def _bank_point(cfg: ExperimentConfig, task) -> tuple[float, tuple[int, ...], Any]:
    x, anc, seed = task
    try:
        return x, anc, dvps.synthesize(x, anc, cfg.restarts, seed)
    except dvps.InfeasibleError as exc:
        return x, anc, exc


def run_dvps_bank(cfg: ExperimentConfig) -> list[Path]:
    """Best heralded DVPS probability on an x-grid over ``[0, 2 pi]`` for
    each ancilla pattern. Infeasible points are kept with their residual."""
    xs = np.linspace(0.0, 2 * np.pi, cfg.x_points)
    ancs = [tuple(int(a) for a in anc) for anc in cfg.ancillas]
    for anc in ancs:
        if len(anc) != 2 or any(a not in (0, 1) for a in anc):
            raise ConfigError(f"ancilla pattern {anc} must be two binary entries")
    tasks = [(float(x), anc, cfg.seed) for anc in ancs for x in xs]
    results = _map(cfg, lambda t: _bank_point(cfg, t), tasks)
    rows, bank, failures = [], [], []
    for x, anc, res in results:
        if isinstance(res, dvps.InfeasibleError):
            rows.append((x, anc, math.nan, res.best_residual))
            failures.append((x, anc, res.best_residual))
            bank.append({"x": x, "anc": list(anc), "p": None, "residual": res.best_residual})
        else:
            rows.append((x, anc, res.p, res.residual))
            bank.append(res.to_dict())
    paths = [cfg.path("dvps_bank.csv"), cfg.path("dvps_bank.json")]
    dvps.write_bank_csv(rows, paths[0], cfg.comments())
    write_json(paths[1], {"config_hash": cfg.hash(), "solutions": bank})
    if failures:
        raise BankInfeasible(paths, failures)
    return paths


def run_sample(cfg: ExperimentConfig) -> list[Path]:
    """Exact and finite-shot output distributions of a Haar interferometer."""
    n_modes, n = cfg.n_modes or 4, cfg.n or 2
    if cfg.backend is Backend.DVPS:
        raise ConfigError("the sample experiment has no DVPS element to exercise")
    stats = Statistics.FERMION if cfg.backend is Backend.FERMION else Statistics.BOSON
    if not 1 <= n <= n_modes:
        raise ConfigError("need 1 <= n <= n_modes")
    rng = as_generator(cfg.seed)
    u = haar_random(n_modes, rng)
    state = sampler.evolve_fock(Circuit(n_modes, [FixedUnitary(u)]), [], _first_modes(n_modes, n), stats)
    dist = sampler.exact_distribution(state)
    counts = sampler.sample_shots(dist, cfg.shots, rng) if cfg.shots else {}
    rows = [(sampler.occ_to_str(occ), p, counts.get(occ, 0))
            for occ, p in sorted(dist.entries.items(), reverse=True)]
    path = cfg.path("sample.csv")
    write_csv(path, ["occupation", "probability", "count"], rows, cfg.comments())
    return [path]


RUNNERS: dict[Experiment, Callable[[ExperimentConfig], list[Path]]] = {
    Experiment.SWEEP: run_sweep,
    Experiment.SOLVE: run_solve,
    Experiment.VARIANCE: run_variance,
    Experiment.SPECTRUM: run_spectrum,
    Experiment.ROTOSOLVE_BOSON: run_rotosolve_boson,
    Experiment.DVPS_BANK: run_dvps_bank,
    Experiment.SAMPLE: run_sample,
}


def run(cfg: ExperimentConfig) -> list[Path]:
    return RUNNERS[cfg.experiment](cfg)
