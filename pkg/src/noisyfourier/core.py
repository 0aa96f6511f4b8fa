"""Shared value types: bit strings, phased Pauli strings, gates and circuits.

Bit strings are stored as Python ints; bit ``j`` of ``value`` is element ``j``
of the string, so ``Bits.from_str("1011")[0] == 1``.  Twirl variables and
their Fourier duals use the split layout ``y = y1 y2``: the first ``m`` bits
are the Z exponents (one per twirl site) and the last ``m`` bits the X
exponents.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

ATOL = 1e-10

_PHASES = (1, 1j, -1, -1j)


class PreconditionError(ValueError):
    """An input violates a documented precondition."""


class CapExceeded(RuntimeError):
    """A dense oracle computation would exceed its configured size cap."""


class BudgetExceeded(RuntimeError):
    """A truncated evaluation would exceed its term budget."""

    def __init__(self, message: str, budget=None):
        super().__init__(message)
        self.budget = budget


# ---------------------------------------------------------------------------
# Bits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Bits:
    length: int
    value: int = 0

    def __post_init__(self):
        if self.length < 0:
            raise ValueError("length must be non-negative")
        if self.value < 0 or self.value >> self.length:
            raise ValueError(f"value {self.value} does not fit in {self.length} bits")

    @classmethod
    def zeros(cls, length: int) -> "Bits":
        return cls(length, 0)

    @classmethod
    def ones(cls, length: int) -> "Bits":
        return cls(length, (1 << length) - 1)

    @classmethod
    def from_str(cls, text: str) -> "Bits":
        text = text.strip()
        if any(ch not in "01" for ch in text):
            raise ValueError(f"not a bit string: {text!r}")
        return cls(len(text), sum(1 << j for j, ch in enumerate(text) if ch == "1"))

    @classmethod
    def from_list(cls, bits: Iterable[int]) -> "Bits":
        bits = list(bits)
        value = 0
        for j, b in enumerate(bits):
            if b not in (0, 1):
                raise ValueError(f"bit {j} is {b!r}")
            value |= b << j
        return cls(len(bits), value)

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, j: int) -> int:
        if not 0 <= j < self.length:
            raise IndexError(f"bit index {j} outside [0, {self.length})")
        return (self.value >> j) & 1

    def __iter__(self) -> Iterator[int]:
        return ((self.value >> j) & 1 for j in range(self.length))

    def __str__(self) -> str:
        return "".join(str(b) for b in self)

    def __xor__(self, other: "Bits") -> "Bits":
        if other.length != self.length:
            raise ValueError("length mismatch")
        return Bits(self.length, self.value ^ other.value)

    def concat(self, other: "Bits") -> "Bits":
        return Bits(self.length + other.length, self.value | (other.value << self.length))

    def split(self) -> tuple["Bits", "Bits"]:
        """Split a ``2m``-bit string into its two ``m``-bit halves."""
        if self.length % 2:
            raise ValueError("odd length cannot be split into halves")
        m = self.length // 2
        mask = (1 << m) - 1
        return Bits(m, self.value & mask), Bits(m, self.value >> m)


def binary_dot(s: Bits, y: Bits) -> int:
    if s.length != y.length:
        raise ValueError(f"length mismatch: {s.length} vs {y.length}")
    return (s.value & y.value).bit_count() & 1


def hamming_weight(s: Bits) -> int:
    return s.value.bit_count()


# ---------------------------------------------------------------------------
# Pauli strings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PauliString:
    """``i**phase * prod_j X_j**x_j Z_j**z_j`` on ``n`` qubits.

    ``x`` and ``z`` are bit masks (bit ``j`` is qubit ``j``); ``phase`` is the
    exponent of ``i`` modulo 4.
    """

    n: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self):
        limit = 1 << self.n
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValueError("x/z masks exceed qubit count")
        object.__setattr__(self, "phase", self.phase % 4)

    @property
    def xbits(self) -> Bits:
        return Bits(self.n, self.x)

    @property
    def zbits(self) -> Bits:
        return Bits(self.n, self.z)

    @property
    def coefficient(self) -> complex:
        return _PHASES[self.phase]

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n)

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse e.g. ``"-iXZY_"``; character ``j`` acts on qubit ``j``."""
        phase = 0
        body = label
        for prefix, k in (("+i", 1), ("-i", 3), ("i", 1), ("+", 0), ("-", 2)):
            if body.startswith(prefix):
                phase, body = k, body[len(prefix):]
                break
        x = z = 0
        for j, ch in enumerate(body):
            if ch in "I_":
                continue
            if ch == "X":
                x |= 1 << j
            elif ch == "Z":
                z |= 1 << j
            elif ch == "Y":
                # Y = i X Z
                x |= 1 << j
                z |= 1 << j
                phase += 1
            else:
                raise ValueError(f"bad Pauli character {ch!r}")
        return cls(len(body), x, z, phase)

    def label(self) -> str:
        """Label with Y shown as Y (phase adjusted accordingly)."""
        ys = (self.x & self.z).bit_count()
        phase = (self.phase - ys) % 4
        chars = []
        for j in range(self.n):
            a, b = (self.x >> j) & 1, (self.z >> j) & 1
            chars.append("IXZY"[a | (b << 1)])
        return ("+", "+i", "-", "-i")[phase] + "".join(chars)

    def __mul__(self, other: "PauliString") -> "PauliString":
        return pauli_mul(self, other)

    def to_matrix(self) -> np.ndarray:
        mats = [sigma_matrix((self.x >> j) & 1, (self.z >> j) & 1) for j in range(self.n)]
        out = np.array([[1.0 + 0j]])
        for mat in mats:
            out = np.kron(out, mat)
        return self.coefficient * out


def pauli_mul(p: PauliString, q: PauliString) -> PauliString:
    if p.n != q.n:
        raise ValueError(f"size mismatch: {p.n} vs {q.n}")
    # X^a Z^b X^c Z^d = (-1)^{b.c} X^{a+c} Z^{b+d}
    sign = (p.z & q.x).bit_count() & 1
    return PauliString(p.n, p.x ^ q.x, p.z ^ q.z, p.phase + q.phase + 2 * sign)


def sigma_from_bits(a: int, b: int) -> PauliString:
    """Single-qubit ``X**a Z**b`` with phase +1."""
    return PauliString(1, a & 1, b & 1, 0)


_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_I2 = np.eye(2, dtype=complex)


def sigma_matrix(a: int, b: int) -> np.ndarray:
    return (_X if a else _I2) @ (_Z if b else _I2)


# ---------------------------------------------------------------------------
# Gates and circuits
# ---------------------------------------------------------------------------

_SQ = 1 / math.sqrt(2)
NAMED_MATRICES = {
    "H": np.array([[_SQ, _SQ], [_SQ, -_SQ]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "X": _X,
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": _Z,
    "T": np.array([[1, 0], [0, cmath.exp(1j * math.pi / 4)]], dtype=complex),
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
}
for _mat in NAMED_MATRICES.values():
    _mat.flags.writeable = False

CLIFFORD_KINDS = frozenset({"H", "S", "X", "Y", "Z", "CNOT", "CZ"})
GATE_KINDS = CLIFFORD_KINDS | {"T", "Unitary1", "Unitary2"}
_ARITY = {"CNOT": 2, "CZ": 2, "Unitary2": 2}


def is_unitary(mat: np.ndarray, atol: float = ATOL) -> bool:
    mat = np.asarray(mat)
    return mat.ndim == 2 and mat.shape[0] == mat.shape[1] and np.allclose(
        mat.conj().T @ mat, np.eye(mat.shape[0]), atol=atol, rtol=0
    )


@dataclass(frozen=True, eq=False)
class Gate:
    """A gate acting on ``targets``; for two-qubit gates ``targets[0]`` is the
    high-order (control) wire of the 4x4 matrix."""

    kind: str
    targets: tuple[int, ...]
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        targets = tuple(int(t) for t in self.targets)
        object.__setattr__(self, "targets", targets)
        arity = _ARITY.get(self.kind, 1)
        if len(targets) != arity:
            raise ValueError(f"{self.kind} needs {arity} target(s), got {targets}")
        if len(set(targets)) != len(targets):
            raise ValueError(f"target wires must be distinct: {targets}")
        if self.kind.startswith("Unitary"):
            if self.matrix is None:
                raise ValueError(f"{self.kind} requires a matrix")
            mat = np.array(self.matrix, dtype=complex)
            if mat.shape != (2**arity, 2**arity) or not is_unitary(mat):
                raise ValueError(f"{self.kind} matrix is not a {2**arity}x{2**arity} unitary")
            mat.flags.writeable = False
            object.__setattr__(self, "matrix", mat)
        elif self.matrix is not None:
            raise ValueError(f"{self.kind} takes no matrix")

    @property
    def unitary(self) -> np.ndarray:
        return self.matrix if self.matrix is not None else NAMED_MATRICES[self.kind]

    @property
    def arity(self) -> int:
        return len(self.targets)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "targets": list(self.targets)}
        if self.matrix is not None:
            out["matrix"] = [[[float(v.real), float(v.imag)] for v in row] for row in self.matrix]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Gate":
        matrix = data.get("matrix")
        if matrix is not None:
            matrix = np.array([[complex(re, im) for re, im in row] for row in matrix])
        return cls(data["kind"], tuple(data["targets"]), matrix)


@dataclass(frozen=True)
class TwirlSite:
    id: int
    wire: int
    position: int


@dataclass(frozen=True)
class CircuitSpec:
    """Gate list plus twirl sites; describes both ``U_y`` and the noisy ``Phi_y``.

    A twirl site at ``position`` p applies ``X**y2 Z**y1`` and then the noise
    channel on its wire right after gate ``p``.
    """

    n: int
    gates: tuple[Gate, ...] = ()
    twirl_sites: tuple[TwirlSite, ...] = ()
    measured_wires: tuple[int, ...] = ()
    pre_measure_rotations: tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "twirl_sites", tuple(self.twirl_sites))
        object.__setattr__(self, "measured_wires", tuple(int(w) for w in self.measured_wires))
        object.__setattr__(self, "pre_measure_rotations", tuple(self.pre_measure_rotations))
        if self.n < 1:
            raise ValueError("circuit needs at least one qubit")
        for g in self.gates:
            if any(not 0 <= t < self.n for t in g.targets):
                raise ValueError(f"gate {g.kind} targets {g.targets} out of range")
        for j, site in enumerate(self.twirl_sites):
            if site.id != j:
                raise ValueError("twirl site ids must be consecutive from 0")
            if not 0 <= site.wire < self.n:
                raise ValueError(f"twirl site {j} wire out of range")
            if not 0 <= site.position < len(self.gates):
                raise ValueError(f"twirl site {j} position outside the gate list")
        if len(set(self.measured_wires)) != len(self.measured_wires):
            raise ValueError("measured wires must be distinct")
        if any(not 0 <= w < self.n for w in self.measured_wires):
            raise ValueError("measured wire out of range")
        for g in self.pre_measure_rotations:
            if g.arity != 1 or g.targets[0] not in self.measured_wires:
                raise ValueError("pre-measure rotations must be 1-qubit gates on measured wires")

    @property
    def m(self) -> int:
        return len(self.twirl_sites)

    @property
    def r(self) -> int:
        return len(self.measured_wires)

    def sites_after(self) -> dict[int, list[TwirlSite]]:
        """Map gate index -> twirl sites acting right after it (id order)."""
        out: dict[int, list[TwirlSite]] = {}
        for site in self.twirl_sites:
            out.setdefault(site.position, []).append(site)
        return out

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "gates": [g.to_dict() for g in self.gates],
            "twirl_sites": [
                {"id": s.id, "wire": s.wire, "position": s.position} for s in self.twirl_sites
            ],
            "measured_wires": list(self.measured_wires),
        }
        if self.pre_measure_rotations:
            out["pre_measure_rotations"] = [g.to_dict() for g in self.pre_measure_rotations]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "CircuitSpec":
        return cls(
            n=int(data["n"]),
            gates=tuple(Gate.from_dict(g) for g in data.get("gates", [])),
            twirl_sites=tuple(
                TwirlSite(int(s["id"]), int(s["wire"]), int(s["position"]))
                for s in data.get("twirl_sites", [])
            ),
            measured_wires=tuple(data.get("measured_wires", [])),
            pre_measure_rotations=tuple(
                Gate.from_dict(g) for g in data.get("pre_measure_rotations", [])
            ),
        )


def depth_of(c: CircuitSpec) -> int:
    """Smallest number of twirl sites carried by any wire."""
    counts = [0] * c.n
    for site in c.twirl_sites:
        counts[site.wire] += 1
    return min(counts)


@dataclass(frozen=True)
class NoiseParams:
    e1: float = 0.0  # Z flips
    e2: float = 0.0  # X flips
    e3: float = 0.0  # Y flips

    def __post_init__(self):
        for name in ("e1", "e2", "e3"):
            v = float(getattr(self, name))
            if not 0.0 <= v < 0.5:
                raise ValueError(f"{name}={v} outside [0, 0.5)")
            object.__setattr__(self, name, v)

    @property
    def eps(self) -> float:
        """Second largest of the three flip probabilities."""
        return sorted((self.e1, self.e2, self.e3))[1]

    def to_dict(self) -> dict:
        return {"e1": self.e1, "e2": self.e2, "e3": self.e3}


ALL_NOISY = "fig1a"
CLIFFORD_PERFECT_T = "fig1b"


@dataclass(frozen=True)
class EnsembleSpec:
    """A circuit ensemble: one of the two twirl layouts plus its noise.

    ``fig1a``: every gate-output wire carries a twirl site.
    ``fig1b``: Clifford gates are noiseless; each non-Clifford single-qubit
    gate is immediately followed by a twirl site, and only those.
    """

    kind: str
    circuit: CircuitSpec
    noise: NoiseParams = field(default_factory=NoiseParams)
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in (ALL_NOISY, CLIFFORD_PERFECT_T):
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        check_ensemble_structure(self.kind, self.circuit)

    def to_dict(self) -> dict:
        out = self.circuit.to_dict()
        out["kind"] = self.kind
        out["noise"] = self.noise.to_dict()
        out["seed"] = self.seed
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "EnsembleSpec":
        noise = data.get("noise") or {}
        return cls(
            kind=data["kind"],
            circuit=CircuitSpec.from_dict(data),
            noise=NoiseParams(noise.get("e1", 0.0), noise.get("e2", 0.0), noise.get("e3", 0.0)),
            seed=data.get("seed"),
        )


def check_ensemble_structure(kind: str, c: CircuitSpec) -> None:
    # deferred import: stabilizer depends on core
    from .stabilizer import is_clifford_gate

    tagged = {(s.position, s.wire) for s in c.twirl_sites}
    if kind == ALL_NOISY:
        for p, g in enumerate(c.gates):
            for w in g.targets:
                if (p, w) not in tagged:
                    raise PreconditionError(
                        f"fig1a: output wire {w} of gate {p} carries no twirl site"
                    )
        return
    for p, g in enumerate(c.gates):
        if is_clifford_gate(g):
            continue
        if g.arity != 1:
            raise PreconditionError(f"fig1b: non-Clifford gate {p} is not single-qubit")
        if (p, g.targets[0]) not in tagged:
            raise PreconditionError(f"fig1b: non-Clifford gate {p} has no twirl site")
    for site in c.twirl_sites:
        g = c.gates[site.position]
        if is_clifford_gate(g) or site.wire not in g.targets:
            raise PreconditionError(f"fig1b: twirl site {site.id} does not follow a non-Clifford gate")
    for g in c.pre_measure_rotations:
        if not is_clifford_gate(g):
            raise PreconditionError("fig1b: pre-measure rotations must be Clifford")


def parity(v: int) -> int:
    return v.bit_count() & 1


def check_bits(b: Bits, length: int, what: str) -> None:
    if b.length != length:
        raise ValueError(f"{what} has {b.length} bits, expected {length}")
