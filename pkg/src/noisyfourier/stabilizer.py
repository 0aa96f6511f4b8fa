"""Clifford machinery: Pauli conjugation, a CHP tableau and 1-qubit Pauli expansions."""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .core import ATOL, Gate, PauliString, PreconditionError, is_unitary, pauli_mul

# Images of the local generators X_0, (X_1,) Z_0, (Z_1) under g P g^dagger.
_GENERATOR_IMAGES = {
    "H": ("Z", "X"),
    "S": ("Y", "Z"),
    "X": ("X", "-Z"),
    "Y": ("-X", "-Z"),
    "Z": ("-X", "Z"),
    "CNOT": ("XX", "IX", "ZI", "ZZ"),
    "CZ": ("XZ", "ZX", "ZI", "IZ"),
}

# A conjugation table maps local code (a | b << k) to (a' | b' << k, phase exponent).
Table = tuple[tuple[int, int], ...]


def _table_from_images(images: tuple[str, ...], k: int) -> Table:
    gens = [PauliString.from_label(lbl) for lbl in images]
    out = []
    for code in range(4**k):
        acc = PauliString(k)
        for i in range(2 * k):
            if (code >> i) & 1:
                acc = pauli_mul(acc, gens[i])
        out.append((acc.x | (acc.z << k), acc.phase))
    return tuple(out)


_NAMED_TABLES = {kind: _table_from_images(imgs, len(imgs) // 2) for kind, imgs in _GENERATOR_IMAGES.items()}


def _identify_pauli(mat: np.ndarray, k: int) -> tuple[int, int] | None:
    """Return (code, phase) if ``mat`` equals ``i**phase X^a Z^b``, else None."""
    for code in range(4**k):
        p = PauliString(k, code & ((1 << k) - 1), code >> k)
        c = np.trace(p.to_matrix().conj().T @ mat) / 2**k
        if abs(abs(c) - 1) < 1e-8:
            for phase, unit in enumerate((1, 1j, -1, -1j)):
                if abs(c - unit) < 1e-8 and np.allclose(mat, c * p.to_matrix(), atol=1e-8):
                    return code, phase
            return None
    return None


@functools.lru_cache(maxsize=None)
def _matrix_table(gate: Gate) -> Table | None:
    k = gate.arity
    u = gate.unitary
    out = []
    for code in range(4**k):
        p = PauliString(k, code & ((1 << k) - 1), code >> k).to_matrix()
        found = _identify_pauli(u @ p @ u.conj().T, k)
        if found is None:
            return None
        out.append(found)
    return tuple(out)


def forward_table(gate: Gate) -> Table | None:
    """Conjugation table of ``g P g^dagger``; None for non-Clifford gates."""
    if gate.kind in _NAMED_TABLES:
        return _NAMED_TABLES[gate.kind]
    if gate.kind == "T":
        return None
    return _matrix_table(gate)


@functools.lru_cache(maxsize=None)
def _inverse(table: Table) -> Table:
    out = [None] * len(table)
    for code, (image, phase) in enumerate(table):
        out[image] = (code, -phase % 4)
    return tuple(out)


def adjoint_table(gate: Gate) -> Table | None:
    """Conjugation table of ``g^dagger P g`` (the Heisenberg-picture step)."""
    table = forward_table(gate)
    return None if table is None else _inverse(table)


def is_clifford_gate(gate: Gate) -> bool:
    return forward_table(gate) is not None


def apply_table(table: Table, targets: tuple[int, ...], x: int, z: int) -> tuple[int, int, int]:
    """Conjugate the mask pair ``(x, z)`` on ``targets``; returns (x, z, phase)."""
    k = len(targets)
    code = 0
    for i, t in enumerate(targets):
        code |= ((x >> t) & 1) << i
        code |= ((z >> t) & 1) << (i + k)
    image, phase = table[code]
    for i, t in enumerate(targets):
        bit = 1 << t
        x = (x & ~bit) | (((image >> i) & 1) << t)
        z = (z & ~bit) | (((image >> (i + k)) & 1) << t)
    return x, z, phase


def conjugate_pauli(gates, p: PauliString) -> PauliString:
    """Return ``C p C^dagger`` for the Clifford word ``C = g_K ... g_1``."""
    x, z, phase = p.x, p.z, p.phase
    for g in gates:
        table = forward_table(g)
        if table is None:
            raise PreconditionError(f"gate {g.kind} is not Clifford")
        if any(t >= p.n for t in g.targets):
            raise ValueError("gate target outside the Pauli string")
        x, z, k = apply_table(table, g.targets, x, z)
        phase += k
    return PauliString(p.n, x, z, phase)


def vacuum_expectation(p: PauliString) -> complex:
    """``<0^n| p |0^n>``: the phase for I/Z strings, zero otherwise."""
    return p.coefficient if p.x == 0 else 0


# ---------------------------------------------------------------------------
# Single-qubit Pauli decomposition
# ---------------------------------------------------------------------------

_ONE_QUBIT_PAULIS = (
    PauliString(1, 0, 0, 0),  # I
    PauliString(1, 1, 0, 0),  # X
    PauliString(1, 1, 1, 1),  # Y = i X Z
    PauliString(1, 0, 1, 0),  # Z
)


@dataclass(frozen=True)
class PauliDecomposition:
    terms: tuple[tuple[complex, PauliString], ...]

    def matrix(self) -> np.ndarray:
        return sum((c * p.to_matrix() for c, p in self.terms), np.zeros((2, 2), dtype=complex))

    def __len__(self) -> int:
        return len(self.terms)


def pauli_decompose_1q(u: np.ndarray, drop: float = 1e-14) -> PauliDecomposition:
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not is_unitary(u):
        raise ValueError("expected a 2x2 unitary")
    terms = []
    for p in _ONE_QUBIT_PAULIS:
        alpha = complex(np.trace(p.to_matrix().conj().T @ u) / 2)
        if abs(alpha) >= drop:
            terms.append((alpha, p))
    return PauliDecomposition(tuple(terms))


@functools.lru_cache(maxsize=None)
def heisenberg_expansion(gate: Gate) -> tuple[tuple[tuple[int, complex], ...], ...]:
    """For a 1-qubit gate, ``U^dagger Q U`` for each local Pauli code of Q.

    Uses the ket/bra pair expansion ``sum conj(a_P) a_P' P Q P'``; entries are
    ``(code, coefficient)`` with equal codes merged and cancelled terms dropped.
    """
    if gate.arity != 1:
        raise PreconditionError("Pauli expansion is only defined for 1-qubit gates")
    dec = pauli_decompose_1q(gate.unitary).terms
    out = []
    for code in range(4):
        q = PauliString(1, code & 1, code >> 1)
        acc: dict[int, complex] = {}
        for a, p in dec:
            for b, pp in dec:
                prod = pauli_mul(pauli_mul(p, q), pp)
                key = prod.x | (prod.z << 1)
                acc[key] = acc.get(key, 0) + a.conjugate() * b * prod.coefficient
        out.append(tuple((key, c) for key, c in sorted(acc.items()) if abs(c) > 1e-15))
    return tuple(out)


# ---------------------------------------------------------------------------
# CHP tableau
# ---------------------------------------------------------------------------


class Tableau:
    """Aaronson-Gottesman stabilizer tableau.

    Rows ``0..n-1`` are destabilizers, ``n..2n-1`` stabilizers.  A row is
    ``(-1)**r`` times the product of single-qubit factors where ``x=z=1``
    denotes Y (CHP convention).
    """

    def __init__(self, n: int):
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=np.uint8)
        self.z = np.zeros((2 * n, n), dtype=np.uint8)
        self.r = np.zeros(2 * n, dtype=np.uint8)
        idx = np.arange(n)
        self.x[idx, idx] = 1
        self.z[n + idx, idx] = 1

    def copy(self) -> "Tableau":
        t = Tableau.__new__(Tableau)
        t.n = self.n
        t.x, t.z, t.r = self.x.copy(), self.z.copy(), self.r.copy()
        return t

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Tableau)
            and self.n == other.n
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
            and np.array_equal(self.r, other.r)
        )

    def _h(self, a):
        self.r ^= self.x[:, a] & self.z[:, a]
        self.x[:, a], self.z[:, a] = self.z[:, a].copy(), self.x[:, a].copy()

    def _s(self, a):
        self.r ^= self.x[:, a] & self.z[:, a]
        self.z[:, a] ^= self.x[:, a]

    def _cnot(self, a, b):
        self.r ^= self.x[:, a] & self.z[:, b] & (self.x[:, b] ^ self.z[:, a] ^ 1)
        self.x[:, b] ^= self.x[:, a]
        self.z[:, a] ^= self.z[:, b]

    def apply(self, gate: Gate) -> "Tableau":
        """Apply a Clifford gate in place."""
        t = gate.targets
        if gate.kind == "H":
            self._h(t[0])
        elif gate.kind == "S":
            self._s(t[0])
        elif gate.kind == "X":
            self.r ^= self.z[:, t[0]]
        elif gate.kind == "Z":
            self.r ^= self.x[:, t[0]]
        elif gate.kind == "Y":
            self.r ^= self.x[:, t[0]] ^ self.z[:, t[0]]
        elif gate.kind == "CNOT":
            self._cnot(t[0], t[1])
        elif gate.kind == "CZ":
            self._h(t[1])
            self._cnot(t[0], t[1])
            self._h(t[1])
        else:
            raise PreconditionError(f"tableau cannot apply non-Clifford gate {gate.kind}")
        return self

    def _row(self, i: int) -> PauliString:
        xm = sum(int(b) << j for j, b in enumerate(self.x[i]))
        zm = sum(int(b) << j for j, b in enumerate(self.z[i]))
        return PauliString(self.n, xm, zm, 2 * int(self.r[i]) + (xm & zm).bit_count())

    def stabilizers(self) -> list[PauliString]:
        return [self._row(self.n + i) for i in range(self.n)]

    def destabilizers(self) -> list[PauliString]:
        return [self._row(i) for i in range(self.n)]

    def check_invariants(self) -> bool:
        """Stabilizers commute; destabilizer i anticommutes only with stabilizer i."""
        rows_x = self.x.astype(np.int64)
        rows_z = self.z.astype(np.int64)
        form = (rows_x @ rows_z.T + rows_z @ rows_x.T) % 2
        n = self.n
        return bool(
            not form[n:, n:].any() and np.array_equal(form[:n, n:], np.eye(n, dtype=np.int64))
        )

    def expectation(self, p: PauliString) -> complex:
        """``<psi| p |psi>`` for the tableau state: 0 or a unit phase."""
        if p.n != self.n:
            raise ValueError("size mismatch")
        stabs = self.stabilizers()
        destabs = self.destabilizers()
        prod = PauliString(self.n)
        for s, d in zip(stabs, destabs):
            if _anticommute(s, p):
                return 0
            if _anticommute(d, p):
                prod = pauli_mul(prod, s)
        if (prod.x, prod.z) != (p.x, p.z):
            raise AssertionError("tableau invariant broken")
        return (1, 1j, -1, -1j)[(p.phase - prod.phase) % 4]


def _anticommute(p: PauliString, q: PauliString) -> bool:
    return bool(((p.x & q.z).bit_count() + (p.z & q.x).bit_count()) & 1)


def apply_clifford(t: Tableau, g: Gate) -> Tableau:
    return t.copy().apply(g)


# ---------------------------------------------------------------------------
# Ancilla encoding of a twirl site, checked densely
# ---------------------------------------------------------------------------

_BELL_PREP = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
) @ np.kron(np.array([[1, 1], [1, -1]]) / np.sqrt(2), np.eye(2))


def vec(op: np.ndarray) -> np.ndarray:
    """Row-major vectorisation, ``|A>> = (A (x) I) sum_i |ii>``."""
    return np.asarray(op).reshape(-1)


def ancilla_basis_for(a: int, b: int) -> tuple[int, int, complex]:
    """Find ``(u, v, phase)`` with ``CNOT (H (x) I) |u v> = phase * |sigma_ab>> / sqrt 2``."""
    target = vec(PauliString(1, a, b).to_matrix()) / np.sqrt(2)
    for u in (0, 1):
        for v in (0, 1):
            state = _BELL_PREP[:, 2 * u + v]
            overlap = np.vdot(target, state)
            if abs(abs(overlap) - 1) < ATOL:
                return u, v, complex(overlap)
    raise AssertionError("no Bell basis state matches")


def site_superoperator_ancilla(a: int, b: int) -> np.ndarray:
    """Fourier-weighted twirl site built from a Clifford-prepared basis state."""
    u, v, _ = ancilla_basis_for(a, b)
    ket = _BELL_PREP[:, 2 * u + v]
    return 4 * np.outer(ket, ket.conj())


def site_superoperator_direct(a: int, b: int) -> np.ndarray:
    """``sum_y (-1)^{a y1 + b y2} sigma_y (x) conj(sigma_y)`` acting on ``vec(rho)``."""
    out = np.zeros((4, 4), dtype=complex)
    for y1 in (0, 1):
        for y2 in (0, 1):
            sig = PauliString(1, y2, y1).to_matrix()
            out += (-1) ** (a * y1 + b * y2) * np.kron(sig, sig.conj())
    return out


def apply_site_superoperator(rho: np.ndarray, wire: int, n: int, sup: np.ndarray) -> np.ndarray:
    """Apply a 1-qubit superoperator (on ``vec`` of that qubit) to an n-qubit rho."""
    t = rho.reshape((2,) * (2 * n))
    t = np.moveaxis(t, (wire, n + wire), (0, 1))
    shape = t.shape
    t = (sup @ t.reshape(4, -1)).reshape(shape)
    return np.moveaxis(t, (0, 1), (wire, n + wire)).reshape(2**n, 2**n)
