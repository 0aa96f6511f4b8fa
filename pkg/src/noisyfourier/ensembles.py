"""Seeded generators for the two circuit ensembles and the anti-concentration estimator.

Randomness comes from a counter-based SplitMix64 stream: draw ``k`` of seed
``s`` is ``mix(s, k)``, so every circuit is a pure function of its config.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    ALL_NOISY,
    CLIFFORD_PERFECT_T,
    Bits,
    CircuitSpec,
    EnsembleSpec,
    Gate,
    NoiseParams,
    TwirlSite,
)
from .oracle import PURE_CAP, CapExceeded, output_distribution_pure

MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def mix(seed: int, counter: int) -> int:
    """Output ``counter`` of a SplitMix64 stream started at ``seed``."""
    z = (seed + (counter + 1) * _GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class CounterRng:
    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self.counter = 0

    def next_u64(self) -> int:
        v = mix(self.seed, self.counter)
        self.counter += 1
        return v

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def below(self, k: int) -> int:
        limit = (1 << 64) - ((1 << 64) % k)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % k

    def choice(self, seq):
        return seq[self.below(len(seq))]

    def angle(self) -> float:
        return 2 * math.pi * self.uniform()


# ---------------------------------------------------------------------------
# random unitaries
# ---------------------------------------------------------------------------


def u3(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [[c, -np.exp(1j * lam) * s], [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]]
    )


_XX = np.kron([[0, 1], [1, 0]], [[0, 1], [1, 0]]).astype(complex)
_YY = np.kron([[0, -1j], [1j, 0]], [[0, -1j], [1j, 0]])
_ZZ = np.diag([1, -1, -1, 1]).astype(complex)


def su4_from_angles(angles) -> np.ndarray:
    """``(A1 (x) B1) exp(i(a XX + b YY + c ZZ)) (A0 (x) B0)`` from 15 angles."""
    a = list(angles)
    if len(a) != 15:
        raise ValueError("need 15 angles")
    pre = np.kron(u3(*a[0:3]), u3(*a[3:6]))
    post = np.kron(u3(*a[9:12]), u3(*a[12:15]))
    h = a[6] * _XX + a[7] * _YY + a[8] * _ZZ
    w, v = np.linalg.eigh(h)
    core = (v * np.exp(1j * w)) @ v.conj().T
    return post @ core @ pre


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

GATE_SETS = {
    "HTCNOT": ("H", "T"),
    "HSCNOTT": ("H", "S", "T"),
    "clifford": ("H", "S"),
    "SU4": None,
    "identity": None,
}


@dataclass(frozen=True)
class GeneratorConfig:
    n: int
    d: int
    seed: int = 0
    white_box_set: str = "HSCNOTT"
    layout: str = "brickwork"  # or "custom": random pairing per entangling layer
    r: int | None = None  # measured wires 0..r-1; default all
    noise: NoiseParams = field(default_factory=NoiseParams)

    def __post_init__(self):
        if self.white_box_set not in GATE_SETS:
            raise ValueError(f"unknown gate set {self.white_box_set!r}")
        if self.layout not in ("brickwork", "custom"):
            raise ValueError(f"unknown layout {self.layout!r}")


def _one_qubit_gate(rng: CounterRng, cfg: GeneratorConfig, w: int) -> Gate:
    if cfg.white_box_set == "identity":
        return Gate("Unitary1", (w,), np.eye(2))
    if cfg.white_box_set == "SU4":
        return Gate("Unitary1", (w,), u3(rng.angle(), rng.angle(), rng.angle()))
    return Gate(rng.choice(GATE_SETS[cfg.white_box_set]), (w,))


def _two_qubit_gate(rng: CounterRng, cfg: GeneratorConfig, a: int, b: int) -> Gate:
    if cfg.white_box_set == "SU4":
        return Gate("Unitary2", (a, b), su4_from_angles([rng.angle() for _ in range(15)]))
    if rng.below(2):
        a, b = b, a
    return Gate("CNOT", (a, b))


def _pairs(rng: CounterRng, cfg: GeneratorConfig, layer: int) -> list[tuple[int, int]]:
    n = cfg.n
    if cfg.layout == "brickwork":
        offset = (layer // 2) % 2
        return [(w, w + 1) for w in range(offset, n - 1, 2)]
    wires = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        wires[i], wires[j] = wires[j], wires[i]
    return [tuple(sorted(wires[i : i + 2])) for i in range(0, n - 1, 2)]


def build_fig1a(cfg: GeneratorConfig) -> EnsembleSpec:
    """All-noisy ensemble: every wire gets one gate and one twirl site per layer.

    Even layers are single-qubit gates; odd layers entangle pairs (alternating
    brickwork offset) with single-qubit gates on unpaired wires.  For SU4 every
    layer is entangling.  ``depth_of`` of the result equals ``cfg.d``.
    """
    if cfg.n < 1 or cfg.d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    rng = CounterRng(cfg.seed)
    gates: list[Gate] = []
    sites: list[TwirlSite] = []

    def tag(g: Gate):
        gates.append(g)
        for w in g.targets:
            sites.append(TwirlSite(len(sites), w, len(gates) - 1))

    entangling = cfg.n > 1 and cfg.white_box_set != "identity"
    for layer in range(cfg.d):
        if entangling and (cfg.white_box_set == "SU4" or layer % 2 == 1):
            pairs = _pairs(rng, cfg, layer)
            paired = {w for p in pairs for w in p}
            for a, b in pairs:
                tag(_two_qubit_gate(rng, cfg, a, b))
            for w in range(cfg.n):
                if w not in paired:
                    tag(_one_qubit_gate(rng, cfg, w))
        else:
            for w in range(cfg.n):
                tag(_one_qubit_gate(rng, cfg, w))
    r = cfg.n if cfg.r is None else cfg.r
    circuit = CircuitSpec(cfg.n, tuple(gates), tuple(sites), tuple(range(r)))
    return EnsembleSpec(ALL_NOISY, circuit, cfg.noise, cfg.seed)


def build_fig1b(
    n: int,
    clifford_depth: int,
    t_count: int,
    seed: int,
    r: int = 1,
    noise: NoiseParams | None = None,
    clifford_set: tuple[str, ...] = ("H", "S", "CNOT"),
) -> EnsembleSpec:
    """Random Clifford words interleaved with ``t_count`` twirled T gates.

    Layout: block, T, block, T, ..., block; each block is a uniform word of
    ``clifford_depth`` gates drawn from ``clifford_set`` (CNOT on a random
    ordered wire pair).  Only the T gates carry twirl sites.
    """
    if n < 1 or clifford_depth < 0 or t_count < 0 or not 0 <= r <= n:
        raise ValueError("invalid ensemble dimensions")
    rng = CounterRng(seed)
    choices = [k for k in clifford_set if n > 1 or k not in ("CNOT", "CZ")]
    gates: list[Gate] = []
    sites: list[TwirlSite] = []

    def block():
        for _ in range(clifford_depth):
            kind = rng.choice(choices)
            if kind in ("CNOT", "CZ"):
                a = rng.below(n)
                b = (a + 1 + rng.below(n - 1)) % n
                gates.append(Gate(kind, (a, b)))
            else:
                gates.append(Gate(kind, (rng.below(n),)))

    for _ in range(t_count):
        block()
        w = rng.below(n)
        gates.append(Gate("T", (w,)))
        sites.append(TwirlSite(len(sites), w, len(gates) - 1))
    block()
    if not gates:
        # an empty word still needs a gate list the sites can index into
        gates.append(Gate("Unitary1", (0,), np.eye(2)))
    circuit = CircuitSpec(n, tuple(gates), tuple(sites), tuple(range(r)))
    return EnsembleSpec(CLIFFORD_PERFECT_T, circuit, noise or NoiseParams(), seed)


def sample_y(m: int, count: int, seed: int) -> list[Bits]:
    """``count`` uniform ``2m``-bit twirl strings, reproducible from ``seed``."""
    rng = CounterRng(seed)
    nbits = 2 * m
    words = (nbits + 63) // 64
    out = []
    for _ in range(count):
        value = 0
        for k in range(words):
            value |= rng.next_u64() << (64 * k)
        out.append(Bits(nbits, value & ((1 << nbits) - 1)))
    return out


@dataclass
class AntiConcentrationReport:
    n: int
    samples: int
    estimate: float
    std_error: float
    alpha_threshold: float | None = None
    collisions: list[float] = field(default_factory=list)

    @property
    def passed(self) -> bool | None:
        if self.alpha_threshold is None:
            return None
        return self.estimate <= self.alpha_threshold


def anti_concentration_estimate(
    cfg: GeneratorConfig,
    samples: int,
    seed: int,
    alpha_threshold: float | None = None,
    cap: int = PURE_CAP,
) -> AntiConcentrationReport:
    """Monte-Carlo estimate of ``2^n E[sum_x p_x^2]`` over noiseless instances.

    Each sample draws a fresh circuit from ``cfg`` (seed replaced) and a fresh
    twirl string; the twirl Paulis act as ordinary gates.
    """
    if cfg.n > cap:
        raise CapExceeded(f"statevector cap {cap} < n={cfg.n}")
    if samples < 1:
        raise ValueError("need at least one sample")
    values = []
    for i in range(samples):
        inst = build_fig1a(replace(cfg, seed=mix(seed, 2 * i), r=cfg.n))
        y = sample_y(inst.circuit.m, 1, mix(seed, 2 * i + 1))[0]
        p = output_distribution_pure(inst.circuit, y, cap=cap)
        values.append(float(np.sum(p**2)))
    arr = np.array(values) * 2**cfg.n
    se = float(arr.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return AntiConcentrationReport(cfg.n, samples, float(arr.mean()), se, alpha_threshold, values)
