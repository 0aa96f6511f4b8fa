"""Walsh-Hadamard spectra over twirl variables, noise decay and truncation.

The transform pair is normalised with ``2^-m`` in both directions over the
``2m`` twirl bits::

    qhat[x, s] = 2^-m sum_y (-1)^{s.y} q[x, y]
    q[x, y]    = 2^-m sum_s (-1)^{s.y} qhat[x, s]

which keeps Parseval's identity exact: ``sum_s qhat^2 == sum_y q^2``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO, Iterable

import numpy as np

from .core import Bits, check_bits
from .oracle import JointTable


@dataclass(frozen=True)
class FourierIndex:
    s1: Bits
    s2: Bits

    def __post_init__(self):
        if self.s1.length != self.s2.length:
            raise ValueError("s1 and s2 must have equal length")

    @classmethod
    def from_bits(cls, s: Bits) -> "FourierIndex":
        return cls(*s.split())

    @classmethod
    def from_int(cls, value: int, m: int) -> "FourierIndex":
        return cls.from_bits(Bits(2 * m, value))

    @property
    def m(self) -> int:
        return self.s1.length

    @property
    def bits(self) -> Bits:
        return self.s1.concat(self.s2)

    @property
    def value(self) -> int:
        return self.bits.value

    @property
    def weight(self) -> int:
        return self.s1.value.bit_count() + self.s2.value.bit_count()

    def site_pair(self, j: int) -> tuple[int, int]:
        """``(a, b)`` dual bits of twirl site ``j``."""
        return self.s1[j], self.s2[j]


@dataclass
class SpectrumTable:
    """Sparse ``(x, s) -> value`` map; missing keys are exactly zero.

    Keys are ints: ``x`` uses the outcome bit layout, ``s`` the split layout.
    """

    m: int
    r: int
    entries: dict[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        for key, v in self.entries.items():
            if not math.isfinite(v):
                raise ValueError(f"non-finite spectrum entry at {key}")

    @classmethod
    def from_dense(cls, arr: np.ndarray, m: int, r: int) -> "SpectrumTable":
        xs, ss = np.nonzero(arr)
        return cls(m, r, {(int(x), int(s)): float(arr[x, s]) for x, s in zip(xs, ss)})

    def to_dense(self) -> np.ndarray:
        out = np.zeros((2**self.r, 4**self.m))
        for (x, s), v in self.entries.items():
            out[x, s] = v
        return out

    def get(self, x, s) -> float:
        xv = x.value if isinstance(x, Bits) else int(x)
        sv = s.value if isinstance(s, (Bits, FourierIndex)) else int(s)
        return self.entries.get((xv, sv), 0.0)

    def __len__(self) -> int:
        return len(self.entries)

    def _arrays(self):
        keys = list(self.entries)
        xs = np.array([k[0] for k in keys], dtype=np.int64)
        ss = np.array([k[1] for k in keys], dtype=np.uint64)
        vals = np.array([self.entries[k] for k in keys], dtype=float)
        return xs, ss, vals

    def weights(self) -> set[int]:
        return {s.bit_count() for _, s in self.entries}


def _butterfly(arr: np.ndarray, nbits: int) -> np.ndarray:
    """Unnormalised Walsh-Hadamard transform along the last axis."""
    out = np.array(arr, dtype=float, copy=True)
    rows = out.shape[0]
    for b in range(nbits):
        view = out.reshape(rows, -1, 2, 1 << b)
        a0 = view[:, :, 0, :].copy()
        a1 = view[:, :, 1, :]
        view[:, :, 0, :] = a0 + a1
        view[:, :, 1, :] = a0 - a1
    return out


def wht_forward(f: JointTable | np.ndarray, m: int | None = None) -> SpectrumTable:
    """Spectrum of a complete joint table (or a raw ``(2^r, 4^m)`` array)."""
    if isinstance(f, JointTable):
        arr, m = f.q, f.m
    else:
        arr = np.asarray(f, dtype=float)
        if m is None:
            raise ValueError("m is required for a raw array")
    if arr.ndim != 2 or arr.shape[1] != 4**m or not np.isfinite(arr).all():
        raise ValueError("joint table must be complete over all 4^m twirl choices")
    r = int(round(math.log2(arr.shape[0])))
    dense = _butterfly(arr, 2 * m) / 2**m
    return SpectrumTable.from_dense(dense, m, r)


def wht_inverse(spec: SpectrumTable, y: Bits) -> np.ndarray:
    """``2^-m sum_s (-1)^{s.y} F[x, s]`` at one y, as an array over x."""
    check_bits(y, 2 * spec.m, "y")
    out = np.zeros(2**spec.r)
    if not spec.entries:
        return out
    xs, ss, vals = spec._arrays()
    signs = 1 - 2 * (np.bitwise_count(ss & np.uint64(y.value)) & 1).astype(float)
    out += np.bincount(xs, weights=signs * vals, minlength=2**spec.r)
    return out / 2**spec.m


def decay_factor(s: int, m: int, e1: float, e2: float, e3: float = 0.0) -> float:
    """Noise multiplier of spectral index ``s`` (int in split layout)."""
    mask = (1 << m) - 1
    s1, s2 = s & mask, s >> m
    factor = (1 - 2 * e1) ** s1.bit_count() * (1 - 2 * e2) ** s2.bit_count()
    if e3:
        # a Y flip toggles both twirl bits of its site
        factor *= (1 - 2 * e3) ** (s1 ^ s2).bit_count()
    return factor


def decay_apply(spec: SpectrumTable, e1: float, e2: float, e3: float = 0.0) -> SpectrumTable:
    for e in (e1, e2, e3):
        if not 0.0 <= e < 0.5:
            raise ValueError(f"flip probability {e} outside [0, 0.5)")
    return SpectrumTable(
        spec.m,
        spec.r,
        {(x, s): v * decay_factor(s, spec.m, e1, e2, e3) for (x, s), v in spec.entries.items()},
    )


def truncate_spectrum(spec: SpectrumTable, l: int) -> SpectrumTable:
    """Keep only entries whose index weight is strictly below ``l``."""
    if l < 0:
        raise ValueError("truncation weight must be non-negative")
    return SpectrumTable(
        spec.m, spec.r, {k: v for k, v in spec.entries.items() if k[1].bit_count() < l}
    )


def reconstruct_pseudo(spec: SpectrumTable, y: Bits) -> np.ndarray:
    """Pseudo-probabilities ``p'[x|y] = 4^m * inverse(spec)[x, y]`` (may be negative)."""
    return wht_inverse(spec, y) * 4**spec.m


def clip_renormalise(p: np.ndarray) -> np.ndarray:
    """Display helper: clip pseudo-probabilities to [0, 1] and renormalise."""
    q = np.clip(p, 0.0, 1.0)
    total = q.sum()
    return q / total if total > 0 else np.full_like(q, 1.0 / q.size)


def parseval_gap(f: JointTable, spec: SpectrumTable) -> float:
    """max over x of ``|sum_s F^2 - sum_y q^2|``."""
    lhs = (spec.to_dense() ** 2).sum(axis=1)
    rhs = (f.q**2).sum(axis=1)
    return float(np.max(np.abs(lhs - rhs)))


# ---------------------------------------------------------------------------
# error accounting
# ---------------------------------------------------------------------------


@dataclass
class ErrorStats:
    delta0: float
    Delta: float
    per_y: dict[int, float]
    c: float

    def bound(self, eps: float, l: int) -> float:
        return self.c * math.exp(-2 * eps * l)

    def within_bound(self, eps: float, l: int) -> bool:
        b = self.bound(eps, l)
        return self.delta0 <= b and self.Delta <= b


def truncation_bound(eps: float, l: int, r: int) -> float:
    """``sqrt(2^r) exp(-2 eps l)``."""
    return math.sqrt(2**r) * math.exp(-2 * eps * l)


def error_statistics(
    p_cond: np.ndarray,
    q_cond: np.ndarray,
    ys: Iterable[int] | None = None,
    c: float | None = None,
) -> ErrorStats:
    """Additive errors ``delta_y = sum_x |p'[x|y] - q'[x|y]|`` and their mean/spread.

    Both inputs have shape ``(2^r, N_y)``; ``ys`` labels the columns
    (defaults to ``0..N_y-1``).
    """
    p_cond = np.asarray(p_cond, dtype=float)
    q_cond = np.asarray(q_cond, dtype=float)
    if p_cond.shape != q_cond.shape or p_cond.ndim != 2:
        raise ValueError(f"domain mismatch: {p_cond.shape} vs {q_cond.shape}")
    deltas = np.abs(p_cond - q_cond).sum(axis=0)
    ys = list(range(deltas.size)) if ys is None else [int(getattr(y, "value", y)) for y in ys]
    if len(ys) != deltas.size:
        raise ValueError("ys does not label every column")
    if c is None:
        c = math.sqrt(p_cond.shape[0])
    delta0 = float(deltas.mean())
    spread = float(deltas.std())
    return ErrorStats(delta0, spread, dict(zip(ys, deltas.tolist())), c)


def chebyshev_fraction(delta0: float, Delta: float, delta: float) -> float:
    """Upper bound ``Delta^2 / (delta - delta0)^2`` on the fraction with ``delta_y > delta``."""
    if delta <= delta0:
        raise ValueError(f"target precision {delta} does not exceed the mean error {delta0}")
    return min(1.0, Delta**2 / (delta - delta0) ** 2)


def choose_l_closed_form(eps: float, delta: float, eta: float, r: int) -> float:
    """``ln(2^r (1 + eta^-1/2) / delta) / (2 eps)``."""
    return math.log(2**r * (1 + math.sqrt(1 / eta)) / delta) / (2 * eps)


def choose_l(eps: float, delta: float, eta: float, r: int, c: float | None = None) -> int:
    """Smallest ``l >= 0`` with ``c (1 + 1/sqrt(eta)) exp(-2 eps l) <= delta``.

    ``c`` defaults to ``2^r``, the constant of the closed form above; pass
    ``c=sqrt(2^r)`` for the tighter variance-based constant.
    """
    if not (eps > 0 and delta > 0 and eta > 0) or eps >= 0.5:
        raise ValueError("eps, delta, eta must be positive and eps < 0.5")
    if c is None:
        c = float(2**r)
    scale = c * (1 + 1 / math.sqrt(eta))

    def ok(l: int) -> bool:
        return scale * math.exp(-2 * eps * l) <= delta

    l = max(0, math.ceil(math.log(scale / delta) / (2 * eps)))
    while l > 0 and ok(l - 1):
        l -= 1
    while not ok(l):
        l += 1
    return l


# ---------------------------------------------------------------------------
# JSON-lines export
# ---------------------------------------------------------------------------


def spectrum_records(spec: SpectrumTable) -> list[dict]:
    mask = (1 << spec.m) - 1
    out = []
    for (x, s), v in sorted(spec.entries.items()):
        out.append(
            {
                "x": str(Bits(spec.r, x)),
                "s1": str(Bits(spec.m, s & mask)),
                "s2": str(Bits(spec.m, s >> spec.m)),
                "value": v,
            }
        )
    return out


def write_spectrum_jsonl(spec: SpectrumTable, fh: IO[str]) -> None:
    for rec in spectrum_records(spec):
        fh.write(json.dumps(rec) + "\n")


def read_spectrum_jsonl(fh: IO[str], m: int, r: int) -> SpectrumTable:
    entries = {}
    for line in fh:
        if not line.strip():
            continue
        rec = json.loads(line)
        x = Bits.from_str(rec["x"]).value if rec["x"] else 0
        s = FourierIndex(Bits.from_str(rec["s1"]), Bits.from_str(rec["s2"])).value
        entries[(x, s)] = float(rec["value"])
    return SpectrumTable(m, r, entries)
