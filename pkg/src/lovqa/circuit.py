"""Parametrized interferometers: optical elements, their mode-space
matrices, the rectangular MZI mesh, and Haar-random unitaries.

Elements apply left to right in time, so the composed mode matrix is the
reversed product ``u_last @ ... @ u_first``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .fock import UNITARY_TOL

SQRT_HALF = 1.0 / np.sqrt(2.0)


class UnsupportedElementError(TypeError):
    """Raised when a non-linear element reaches a mode-space code path."""


@dataclass(frozen=True)
class PhaseShifter:
    mode: int
    param: int | None = None
    phase: float = 0.0


@dataclass(frozen=True)
class BeamSplitter:
    """Fixed 50:50 beamsplitter, ``hadamard`` or ``symmetric`` convention."""

    mode_a: int
    mode_b: int
    convention: str = "hadamard"


@dataclass(frozen=True)
class TunableBeamSplitter:
    mode_a: int
    mode_b: int
    param: int | None = None
    angle: float = 0.0


@dataclass(frozen=True, eq=False)
class FixedUnitary:
    matrix: np.ndarray
    offset: int = 0


@dataclass(frozen=True)
class DVPS:
    """Dual-valued phase shifter ``exp(i q(n) x)`` on one mode (non-linear)."""

    mode: int
    param: int | None = None
    phase: float = 0.0


@dataclass(frozen=True)
class Kerr:
    """Cross-Kerr gate ``exp(i phi n_a n_b)`` (non-linear)."""

    mode_a: int
    mode_b: int
    phase: float = np.pi


Element = Union[PhaseShifter, BeamSplitter, TunableBeamSplitter, FixedUnitary, DVPS, Kerr]
LINEAR_TYPES = (PhaseShifter, BeamSplitter, TunableBeamSplitter, FixedUnitary)


def is_linear(e: Element) -> bool:
    return isinstance(e, LINEAR_TYPES)


def _modes(e: Element) -> tuple[int, ...]:
    if isinstance(e, (PhaseShifter, DVPS)):
        return (e.mode,)
    if isinstance(e, FixedUnitary):
        return tuple(range(e.offset, e.offset + e.matrix.shape[0]))
    return (e.mode_a, e.mode_b)


def _angle(e: Element, theta: Sequence[float]) -> float:
    p = getattr(e, "param", None)
    if p is not None:
        return float(theta[p])
    return float(e.angle if isinstance(e, TunableBeamSplitter) else getattr(e, "phase", 0.0))


def element_angle(e: Element, theta: Sequence[float]) -> float:
    """Current angle of a parametrized or fixed element."""
    return _angle(e, theta)


@dataclass
class Circuit:
    """An ``n_modes`` interferometer with a shared parameter vector."""

    n_modes: int
    elements: list[Element] = field(default_factory=list)

    def __post_init__(self) -> None:
        for e in self.elements:
            self._validate(e)

    def _validate(self, e: Element) -> None:
        modes = _modes(e)
        if any(m < 0 or m >= self.n_modes for m in modes):
            raise ValueError(f"{e!r} addresses a mode outside [0, {self.n_modes})")
        if len(modes) == 2 and modes[0] == modes[1]:
            raise ValueError(f"{e!r} couples a mode to itself")
        if isinstance(e, BeamSplitter) and e.convention not in ("hadamard", "symmetric"):
            raise ValueError(f"unknown beamsplitter convention {e.convention!r}")

    def append(self, e: Element) -> "Circuit":
        self._validate(e)
        self.elements.append(e)
        return self

    @property
    def num_params(self) -> int:
        idx = [e.param for e in self.elements if getattr(e, "param", None) is not None]
        return max(idx) + 1 if idx else 0

    @property
    def is_linear(self) -> bool:
        return all(is_linear(e) for e in self.elements)

    def param_elements(self) -> dict[int, list[Element]]:
        out: dict[int, list[Element]] = {}
        for e in self.elements:
            p = getattr(e, "param", None)
            if p is not None:
                out.setdefault(p, []).append(e)
        return out

    def to_dict(self) -> dict:
        return {
            "n_modes": self.n_modes,
            "num_params": self.num_params,
            "elements": [_element_to_dict(e) for e in self.elements],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "Circuit":
        circ = cls(int(data["n_modes"]), [_element_from_dict(d) for d in data["elements"]])
        if "num_params" in data and int(data["num_params"]) != circ.num_params:
            raise ValueError("num_params does not match the element list")
        return circ

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        return cls.from_dict(json.loads(text))


_KINDS = {
    "phase_shifter": PhaseShifter,
    "beam_splitter": BeamSplitter,
    "tunable_beam_splitter": TunableBeamSplitter,
    "fixed_unitary": FixedUnitary,
    "dvps": DVPS,
    "kerr": Kerr,
}
_KIND_OF = {v: k for k, v in _KINDS.items()}


def _element_to_dict(e: Element) -> dict:
    kind = _KIND_OF[type(e)]
    if isinstance(e, FixedUnitary):
        m = np.asarray(e.matrix, dtype=complex)
        return {"kind": kind, "offset": e.offset, "re": m.real.tolist(), "im": m.imag.tolist()}
    d = {"kind": kind}
    d.update({k: getattr(e, k) for k in e.__dataclass_fields__})
    return d


def _element_from_dict(d: dict) -> Element:
    d = dict(d)
    cls = _KINDS[d.pop("kind")]
    if cls is FixedUnitary:
        m = np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)
        return FixedUnitary(m, int(d.get("offset", 0)))
    return cls(**d)


def _block(e: Element, x: float) -> np.ndarray:
    if isinstance(e, PhaseShifter):
        return np.array([[np.exp(1j * x)]])
    if isinstance(e, BeamSplitter):
        if e.convention == "hadamard":
            return SQRT_HALF * np.array([[1, 1], [1, -1]], dtype=complex)
        return SQRT_HALF * np.array([[1, 1j], [1j, 1]], dtype=complex)
    if isinstance(e, TunableBeamSplitter):
        c, s = np.cos(x / 2), np.sin(x / 2)
        return np.array([[c, -1j * s], [-1j * s, c]])
    if isinstance(e, FixedUnitary):
        return np.asarray(e.matrix, dtype=complex)
    raise UnsupportedElementError(f"{type(e).__name__} has no mode-space matrix")


def apply_element(u: np.ndarray, e: Element, theta: Sequence[float]) -> np.ndarray:
    """Left-multiply ``u`` in place by the embedded element block."""
    block = _block(e, _angle(e, theta))
    modes = list(_modes(e))
    u[modes, :] = block @ u[modes, :]
    return u


def element_unitary(e: Element, theta: Sequence[float], n_modes: int) -> np.ndarray:
    """The ``n_modes x n_modes`` matrix of a single linear element."""
    return apply_element(np.eye(n_modes, dtype=complex), e, theta)


def compose_linear(circuit: Circuit, theta: Sequence[float]) -> np.ndarray:
    u = np.eye(circuit.n_modes, dtype=complex)
    for e in circuit.elements:
        if not is_linear(e):
            raise UnsupportedElementError(
                f"{type(e).__name__} is non-linear; use the Fock-space evolution path"
            )
        apply_element(u, e, theta)
    return u


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) < tol)


def mzi(circuit: Circuit, mode: int, phi_param: int, theta_param: int) -> None:
    """Append PS(phi), 50:50, PS(theta), 50:50 on ``(mode, mode + 1)``.

    The internal phase shifter's angle is the raw parameter, not half of it.
    """
    circuit.append(PhaseShifter(mode, phi_param))
    circuit.append(BeamSplitter(mode, mode + 1))
    circuit.append(PhaseShifter(mode, theta_param))
    circuit.append(BeamSplitter(mode, mode + 1))


def universal_mesh(n_modes: int) -> Circuit:
    """Clements-style rectangular mesh with ``n_modes**2`` phase parameters.

    ``n_modes`` columns of MZIs alternate between even and odd
    nearest-neighbour pairs, giving ``n(n-1)/2`` MZIs with two phases each,
    followed by one output phase per mode.
    """
    if n_modes < 2:
        raise ValueError("a mesh needs at least two modes")
    circ = Circuit(n_modes)
    p = 0
    for col in range(n_modes):
        for top in range(col % 2, n_modes - 1, 2):
            mzi(circ, top, p, p + 1)
            p += 2
    for m in range(n_modes):
        circ.append(PhaseShifter(m, p))
        p += 1
    return circ


def sandwich(v: np.ndarray, w: np.ndarray, mode: int = 0, nonlinear: bool = False) -> Circuit:
    """``W . S(x) . V`` with a single parametrized (DVPS if ``nonlinear``) phase."""
    n = v.shape[0]
    shifter = DVPS(mode, 0) if nonlinear else PhaseShifter(mode, 0)
    return Circuit(n, [FixedUnitary(v), shifter, FixedUnitary(w)])


def as_generator(seed: int | np.random.Generator | np.random.SeedSequence | None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def haar_random(n_modes: int, seed: int | np.random.Generator | None = None) -> np.ndarray:
    """Haar-distributed ``U(n_modes)`` via QR with the R-diagonal phase fix."""
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    rng = as_generator(seed)
    z = (rng.standard_normal((n_modes, n_modes)) + 1j * rng.standard_normal((n_modes, n_modes)))
    q, r = np.linalg.qr(z / np.sqrt(2.0))
    d = np.diagonal(r)
    return q * (d / np.abs(d))[None, :]


def random_params(n: int, seed: int | np.random.Generator | None = None) -> np.ndarray:
    return as_generator(seed).uniform(0.0, 2 * np.pi, n)


def canonical(theta: Iterable[float]) -> np.ndarray:
    return np.mod(np.asarray(list(theta), dtype=float), 2 * np.pi)
