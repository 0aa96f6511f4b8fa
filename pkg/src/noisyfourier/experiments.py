"""Oracle-backed sweeps shared by the CLI and the acceptance suite."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Bits, CircuitSpec, NoiseParams
from .ensembles import GeneratorConfig, build_fig1a, mix, sample_y
from .fast import theorem1_experiment
from .fourier import (
    _butterfly,
    chebyshev_fraction,
    error_statistics,
    truncation_bound,
    wht_forward,
)
from .oracle import joint_tables


@dataclass
class OracleSpectra:
    """Exact noiseless/noisy joint tables and the decayed spectrum as a dense array."""

    m: int
    r: int
    q_cond: np.ndarray  # noiseless q[x|y], shape (2^r, 4^m)
    qn_cond: np.ndarray  # noisy q'[x|y]
    spectrum: np.ndarray  # noisy spectrum, shape (2^r, 4^m)

    @classmethod
    def compute(cls, c: CircuitSpec, noise: NoiseParams, threads: int = 1) -> "OracleSpectra":
        q, qn = joint_tables(c, noise, threads=threads)
        return cls(c.m, c.r, q.conditionals(), qn.conditionals(), wht_forward(qn).to_dense())

    def truncated_conditionals(self, l: int) -> np.ndarray:
        """Pseudo-probabilities ``p'[x|y]`` for every y from components of weight < l."""
        weights = np.bitwise_count(np.arange(4**self.m, dtype=np.uint64)).astype(np.int64)
        kept = np.where(weights < l, self.spectrum, 0.0)
        return _butterfly(kept, 2 * self.m) / 2**self.m * 4**self.m


def noise_eps(noise: NoiseParams) -> float:
    """Decay rate used by the truncation bound: the weaker of the Z and X flips."""
    return min(noise.e1, noise.e2)


def truncation_sweep(spectra: OracleSpectra, eps: float, ls) -> list[dict]:
    """Rows ``{l, delta0, Delta, bound, pass}`` for each truncation weight."""
    rows = []
    for l in ls:
        stats = error_statistics(spectra.truncated_conditionals(l), spectra.qn_cond)
        bound = truncation_bound(eps, l, spectra.r)
        rows.append(
            {
                "l": l,
                "delta0": stats.delta0,
                "Delta": stats.Delta,
                "bound": bound,
                "pass": stats.delta0 <= bound and stats.Delta <= bound,
            }
        )
    return rows


def chebyshev_check(spectra: OracleSpectra, l: int, delta: float, samples: int, seed: int) -> dict:
    """Compare the sampled tail fraction with ``Delta^2 / (delta - delta0)^2``."""
    pc = spectra.truncated_conditionals(l)
    stats = error_statistics(pc, spectra.qn_cond)
    limit = chebyshev_fraction(stats.delta0, stats.Delta, delta)
    ys = sample_y(spectra.m, samples, seed)
    deltas = np.array([stats.per_y[y.value] for y in ys])
    frac = float((deltas > delta).mean())
    slack = 3 * math.sqrt(limit * (1 - limit) / samples)
    return {
        "l": l,
        "delta": delta,
        "delta0": stats.delta0,
        "Delta": stats.Delta,
        "chebyshev_limit": limit,
        "fraction": frac,
        "slack": slack,
        "pass": frac <= limit + slack,
    }


def theorem1_sweep(
    n: int,
    depths,
    noise: NoiseParams,
    samples: int,
    seed: int,
    white_box_set: str = "HSCNOTT",
    r: int | None = None,
    threads: int = 1,
) -> tuple[list[dict], list[dict]]:
    """Per-y CSV rows and per-depth summaries of the near-uniformity test."""
    rows, summary = [], []
    for d in depths:
        inst_seed = mix(seed, d)
        cfg = GeneratorConfig(n, d, inst_seed, white_box_set, r=r, noise=noise)
        e = build_fig1a(cfg)
        rep = theorem1_experiment(e, samples, mix(inst_seed, 1), threads=threads)
        nbits = 2 * e.circuit.m
        for y, dy in zip(rep.ys, rep.deltas):
            rows.append(
                {
                    "seed": inst_seed,
                    "y": str(Bits(nbits, y)),
                    "delta_y": dy,
                    "threshold": rep.threshold,
                    "pass": dy <= rep.threshold,
                }
            )
        summary.append(
            {
                "d": d,
                "seed": inst_seed,
                "mean_delta": float(np.mean(rep.deltas)) if rep.deltas else 0.0,
                "fraction_above": rep.fraction_above,
                "allowed": rep.allowed,
                "applicable": rep.applicable,
                "pass": rep.passed,
                "notes": rep.notes,
            }
        )
    means = [s["mean_delta"] for s in summary]
    trend = all(b <= a + 1e-12 for a, b in zip(means, means[1:]))
    return rows, [{"monotone_nonincreasing": trend}] + summary
