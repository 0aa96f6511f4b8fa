"""Polynomial-time Fourier components for Clifford+T ensembles, plus depth-decay checks.

Components are evaluated in the Heisenberg picture.  Summing a twirl site over
its four Paulis with the Fourier sign ``(-1)^{a y1 + b y2}`` maps any Pauli
string to 4x itself when its factor on the site's wire is ``X^a Z^b`` and to
zero otherwise, so every site acts as a filter.  The measured projector is
expanded into Z strings, pulled back through the circuit (Clifford gates by
conjugation, tagged non-Clifford gates by their ket/bra Pauli expansion,
sites by filtering) and finally evaluated on ``|0...0>``.
"""

from __future__ import annotations

import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterator

import numpy as np

from .core import (
    ALL_NOISY,
    CLIFFORD_PERFECT_T,
    Bits,
    BudgetExceeded,
    CircuitSpec,
    EnsembleSpec,
    PreconditionError,
    check_bits,
    depth_of,
)
from .fourier import FourierIndex, decay_factor, wht_forward
from .oracle import conditionals_for, joint_tables
from .stabilizer import adjoint_table, apply_table, heisenberg_expansion

_UNITS = (1, 1j, -1, -1j)


@dataclass
class TermBudget:
    l: int
    r: int
    enumerated: int = 0
    pauli_terms: int = 0
    bound: float = 0.0  # (8m)^l cost scale

    @property
    def term_cap(self) -> int:
        """``enumerated * 4^l * 2^r``: most stabilizer evaluations T gates can need."""
        return self.enumerated * 4**self.l * 2**self.r

    def to_dict(self) -> dict:
        return {
            "l": self.l,
            "enumerated": self.enumerated,
            "pauli_terms": self.pauli_terms,
            "bound": self.bound,
            "term_cap": self.term_cap,
        }


def count_low_weight(m: int, l: int) -> int:
    return sum(math.comb(2 * m, k) for k in range(min(l, 2 * m + 1)))


def enumerate_low_weight(m: int, l: int) -> Iterator[FourierIndex]:
    """Every index of weight < l, weight-major then lexicographic in positions."""
    if l > 2 * m + 1:
        raise ValueError(f"l={l} exceeds 2m+1={2 * m + 1}")
    for k in range(l):
        for pos in combinations(range(2 * m), k):
            yield FourierIndex.from_int(sum(1 << p for p in pos), m)


# ---------------------------------------------------------------------------
# backward program
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=64)
def _program(c: CircuitSpec) -> tuple:
    """Steps in Heisenberg order: ("filter", wire, site) / ("cliff", table, targets) / ("expand", table, wire)."""
    steps = []

    def gate_step(g):
        table = adjoint_table(g)
        if table is not None:
            steps.append(("cliff", table, g.targets))
        elif g.arity == 1:
            steps.append(("expand", heisenberg_expansion(g), g.targets[0]))
        else:
            raise PreconditionError(f"non-Clifford {g.kind} on {g.arity} qubits")

    for g in reversed(c.pre_measure_rotations):
        gate_step(g)
    after = c.sites_after()
    for p in range(len(c.gates) - 1, -1, -1):
        for site in reversed(after.get(p, ())):
            steps.append(("filter", site.wire, site.id))
        gate_step(c.gates[p])
    return tuple(steps)


def _propagate(steps, m: int, s: int, terms: dict) -> dict:
    for step in steps:
        if not terms:
            break
        kind = step[0]
        if kind == "filter":
            _, w, j = step
            want = (((s >> j) & 1) << w, ((s >> (m + j)) & 1) << w)
            bit = 1 << w
            terms = {k: v for k, v in terms.items() if (k[0] & bit, k[1] & bit) == want}
        elif kind == "cliff":
            _, table, targets = step
            out = {}
            for (x, z), v in terms.items():
                x2, z2, ph = apply_table(table, targets, x, z)
                key = (x2, z2)
                out[key] = out.get(key, 0) + v * _UNITS[ph]
            terms = out
        else:
            _, table, w = step
            bit = 1 << w
            out = {}
            for (x, z), v in terms.items():
                code = ((x >> w) & 1) | (((z >> w) & 1) << 1)
                xr, zr = x & ~bit, z & ~bit
                for code2, coef in table[code]:
                    key = (xr | ((code2 & 1) << w), zr | ((code2 >> 1) << w))
                    out[key] = out.get(key, 0) + v * coef
            terms = out
    return terms


def _z_mask(c: CircuitSpec, t: int) -> int:
    return sum(1 << w for k, w in enumerate(c.measured_wires) if (t >> k) & 1)


def _vacuum(terms: dict) -> complex:
    return sum((v for (x, _), v in terms.items() if x == 0), 0j)


def _require_fig1b(e: EnsembleSpec) -> None:
    if e.kind != CLIFFORD_PERFECT_T:
        raise PreconditionError("fast evaluation needs a Clifford+T (fig1b) ensemble")


def _index(s, m: int) -> int:
    if isinstance(s, FourierIndex):
        if s.m != m:
            raise ValueError(f"index has m={s.m}, circuit has m={m}")
        return s.value
    check_bits(s, 2 * m, "s")
    return s.value


def fourier_component_fast(
    e: EnsembleSpec, x: Bits, s: FourierIndex, budget: TermBudget | None = None
) -> float:
    """``qhat[x, s]`` of the noiseless ensemble, normalised exactly like ``wht_forward``."""
    _require_fig1b(e)
    c = e.circuit
    check_bits(x, c.r, "x")
    sv = _index(s, c.m)
    init = {}
    for t in range(2**c.r):
        sign = -1 if (x.value & t).bit_count() & 1 else 1
        init[(0, _z_mask(c, t))] = sign / 2**c.r
    final = _propagate(_program(c), c.m, sv, init)
    if budget is not None:
        budget.pauli_terms += len(final)
    return _vacuum(final).real / 2**c.m


def fourier_components_fast(e: EnsembleSpec, s: FourierIndex) -> np.ndarray:
    """``qhat[:, s]`` for every outcome x at once."""
    _require_fig1b(e)
    c = e.circuit
    sv = _index(s, c.m)
    steps = _program(c)
    ev = np.zeros(2**c.r)
    for t in range(2**c.r):
        ev[t] = _vacuum(_propagate(steps, c.m, sv, {(0, _z_mask(c, t)): 1.0})).real
    # outcome projector = 2^-r sum_t (-1)^{x.t} Z_t
    xs = np.arange(2**c.r)
    signs = 1 - 2 * (np.bitwise_count(np.bitwise_and.outer(xs, xs)) & 1).astype(np.int64)
    return signs @ ev / 2**c.r / 2**c.m


def fast_spectrum_dense(e: EnsembleSpec) -> np.ndarray:
    """Full ``(2^r, 4^m)`` spectrum from the fast evaluator (small m only)."""
    c = e.circuit
    out = np.zeros((2**c.r, 4**c.m))
    for sv in range(4**c.m):
        out[:, sv] = fourier_components_fast(e, FourierIndex.from_int(sv, c.m))
    return out


def approximate_output(
    e: EnsembleSpec,
    y: Bits,
    x: Bits,
    l: int,
    max_terms: int = 10**7,
    max_components: int = 10**6,
    threads: int = 1,
) -> tuple[float, TermBudget]:
    """Truncated-series estimate ``p'[x|y]`` using components of weight < l.

    Sums ``2^m sum_s (-1)^{s.y} decay(s) qhat[x, s]`` with exactly rounded
    summation in enumeration order.  Raises :class:`BudgetExceeded` rather
    than exceed ``max_components`` indices or ``max_terms`` Pauli terms.
    """
    _require_fig1b(e)
    if l < 0:
        raise ValueError("l must be non-negative")
    c = e.circuit
    check_bits(y, 2 * c.m, "y")
    check_bits(x, c.r, "x")
    l_eff = min(l, 2 * c.m + 1)
    budget = TermBudget(l=l_eff, r=c.r, bound=float((8 * c.m) ** l_eff))
    planned = count_low_weight(c.m, l_eff)
    if planned > max_components:
        budget.enumerated = planned
        raise BudgetExceeded(f"{planned} Fourier indices exceed the limit {max_components}", budget)
    noise = e.noise
    indices = list(enumerate_low_weight(c.m, l_eff))

    def component(s: FourierIndex) -> tuple[float, int]:
        local = TermBudget(l=l_eff, r=c.r)
        val = fourier_component_fast(e, x, s, local)
        return val, local.pauli_terms

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(component, indices))
    else:
        results = [component(s) for s in indices]

    terms = []
    for s, (val, used) in zip(indices, results):
        budget.enumerated += 1
        budget.pauli_terms += used
        if budget.pauli_terms > max_terms:
            raise BudgetExceeded(f"Pauli term budget {max_terms} exceeded", budget)
        sign = -1.0 if (s.value & y.value).bit_count() & 1 else 1.0
        terms.append(sign * decay_factor(s.value, c.m, noise.e1, noise.e2, noise.e3) * val)
    return 2**c.m * math.fsum(terms), budget


# ---------------------------------------------------------------------------
# deep noisy circuits: support vanishing and near-uniform outputs
# ---------------------------------------------------------------------------


def layer_decomposition(c: CircuitSpec) -> list[list[int]]:
    """Layer i holds the i-th twirl site of every wire, for i < depth."""
    per_wire: dict[int, list[int]] = {}
    for site in c.twirl_sites:
        per_wire.setdefault(site.wire, []).append(site.id)
    d = depth_of(c)
    return [sorted(ids[i] for ids in per_wire.values()) for i in range(d)]


@dataclass
class SupportReport:
    d: int
    max_violation: float
    checked: int
    layers: list[list[int]]
    layer_rule_violation: float = 0.0
    tol: float = 1e-12

    @property
    def passed(self) -> bool:
        return self.max_violation < self.tol


def _require_fig1a(e: EnsembleSpec) -> None:
    if e.kind != ALL_NOISY:
        raise PreconditionError("support checks need an all-noisy (fig1a) ensemble")


def support_vanishing_check(e: EnsembleSpec, threads: int = 1, tol: float = 1e-12) -> SupportReport:
    """Largest ``|qhat[x, s]|`` over indices with ``0 < weight(s) < d``.

    Also reports the largest component over nonzero ``s`` that leave some
    layer entirely zero, which must vanish as well.
    """
    _require_fig1a(e)
    c = e.circuit
    q, _ = joint_tables(c, e.noise, threads=threads, noisy=False)
    dense = wht_forward(q).to_dense()
    d = depth_of(c)
    weights = np.bitwise_count(np.arange(4**c.m, dtype=np.uint64))
    band = (weights > 0) & (weights < d)
    max_violation = float(np.abs(dense[:, band]).max()) if band.any() else 0.0
    layers = layer_decomposition(c)
    empty_layer = np.zeros(4**c.m, dtype=bool)
    s_all = np.arange(4**c.m, dtype=np.int64)
    for ids in layers:
        mask = sum((1 << j) | (1 << (c.m + j)) for j in ids)
        empty_layer |= (s_all & mask) == 0
    empty_layer &= s_all != 0
    layer_rule = float(np.abs(dense[:, empty_layer]).max()) if empty_layer.any() else 0.0
    return SupportReport(d, max_violation, int(band.sum()), layers, layer_rule, tol)


@dataclass
class Theorem1Report:
    d: int
    eps: float
    r: int
    threshold: float
    ys: list[int]
    deltas: list[float]
    fraction_above: float
    allowed: float
    applicable: bool
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.fraction_above <= self.allowed


def theorem1_experiment(
    e: EnsembleSpec, samples: int, seed: int, threads: int = 1
) -> Theorem1Report:
    """Sample twirl choices and test ``sum_x |q'[x|y] - 2^-r| <= sqrt(2^r) e^{-eps d}``.

    The fraction of failures is compared with ``e^{-2 eps d}`` plus a
    three-sigma binomial allowance.
    """
    from .ensembles import sample_y

    _require_fig1a(e)
    c = e.circuit
    d = depth_of(c)
    eps = e.noise.eps
    ys = sample_y(c.m, samples, seed)
    cond = conditionals_for(c, ys, e.noise, threads=threads)
    deltas = np.abs(cond - 2.0**-c.r).sum(axis=0)
    threshold = math.sqrt(2**c.r) * math.exp(-eps * d)
    frac = float((deltas > threshold).mean()) if samples else 0.0
    p = math.exp(-2 * eps * d)
    allowed = p + 3 * math.sqrt(p * (1 - p) / max(samples, 1))
    notes = []
    applicable = True
    if eps * d == 0:
        applicable = False
        notes.append("eps*d = 0: outside the noisy regime, bound is vacuous")
    if not (c.r <= 2 or c.r == c.n):
        applicable = False
        notes.append(f"r={c.r} is neither a small constant nor all {c.n} qubits")
    return Theorem1Report(
        d, eps, c.r, threshold, [y.value for y in ys], deltas.tolist(), frac, allowed, applicable, notes
    )
