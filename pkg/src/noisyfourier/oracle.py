"""Dense statevector / density-matrix ground truth for small instances.

Wire 0 is the most significant tensor factor.  Outcome index ``x`` uses bit
``k`` for ``measured_wires[k]``; twirl index ``y`` uses the split layout of
:mod:`noisyfourier.core`.  All simulations carry a leading batch axis so a
block of twirl choices runs through numpy together.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import (
    NAMED_MATRICES,
    Bits,
    CapExceeded,
    CircuitSpec,
    NoiseParams,
    check_bits,
)

PURE_CAP = 12
DENSITY_CAP = 7
JOINT_CAP = 16  # max number of twirl bits 2m enumerated

_X = NAMED_MATRICES["X"]
_Y = NAMED_MATRICES["Y"]
_Z = NAMED_MATRICES["Z"]


@dataclass(frozen=True)
class DenseState:
    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != (2**self.n,):
            raise ValueError("amplitude vector has the wrong size")
        if abs(np.linalg.norm(self.amplitudes) - 1) > 1e-10:
            raise ValueError("state is not normalised")


@dataclass(frozen=True)
class DenseDensity:
    n: int
    matrix: np.ndarray

    def __post_init__(self):
        rho = self.matrix
        if rho.shape != (2**self.n, 2**self.n):
            raise ValueError("density matrix has the wrong size")
        if not np.allclose(rho, rho.conj().T, atol=1e-10, rtol=0):
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1) > 1e-10:
            raise ValueError("density matrix trace is not 1")
        if np.linalg.eigvalsh(rho).min() < -1e-8:
            raise ValueError("density matrix is not positive semidefinite")

    @classmethod
    def zero(cls, n: int) -> "DenseDensity":
        rho = np.zeros((2**n, 2**n), dtype=complex)
        rho[0, 0] = 1
        return cls(n, rho)

    @classmethod
    def from_state(cls, psi: np.ndarray) -> "DenseDensity":
        psi = np.asarray(psi, dtype=complex)
        return cls(int(np.log2(psi.size)), np.outer(psi, psi.conj()))


@dataclass
class JointTable:
    """``q[x, y]`` over every outcome x (2^r) and twirl choice y (4^m)."""

    m: int
    r: int
    q: np.ndarray

    def __post_init__(self):
        if self.q.shape != (2**self.r, 4**self.m):
            raise ValueError(f"table shape {self.q.shape} does not match m={self.m}, r={self.r}")

    def __getitem__(self, key: tuple[Bits, Bits]) -> float:
        x, y = key
        return float(self.q[x.value, y.value])

    def conditionals(self) -> np.ndarray:
        """``q[x|y]``, i.e. the table times ``4^m``."""
        return self.q * 4**self.m

    def check(self, atol: float = 1e-9) -> None:
        if self.q.min() < -1e-12:
            raise AssertionError("negative probability in joint table")
        if abs(self.q.sum() - 1) > atol:
            raise AssertionError(f"joint table sums to {self.q.sum()}")


# ---------------------------------------------------------------------------
# batched tensor kernels
# ---------------------------------------------------------------------------


def _apply(tensor: np.ndarray, u: np.ndarray, axes: tuple[int, ...]) -> np.ndarray:
    """Contract ``u`` into ``axes`` (already offset for the batch axis)."""
    k = len(axes)
    ut = u.reshape((2,) * (2 * k))
    out = np.tensordot(ut, tensor, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))


def _apply_state(psi, u, targets):
    return _apply(psi, u, tuple(t + 1 for t in targets))


def _apply_density(rho, u, targets, n):
    rho = _apply(rho, u, tuple(t + 1 for t in targets))
    return _apply(rho, u.conj(), tuple(t + 1 + n for t in targets))


def _apply_selected(tensor, sel, fn):
    if sel.all():
        return fn(tensor)
    if sel.any():
        tensor = tensor.copy()
        tensor[sel] = fn(tensor[sel])
    return tensor


def _channel(rho, wire, n, noise: NoiseParams):
    for eps, sigma in ((noise.e1, _Z), (noise.e2, _X), (noise.e3, _Y)):
        if eps:
            rho = (1 - eps) * rho + eps * _apply_density(rho, sigma, (wire,), n)
    return rho


def _marginal(probs: np.ndarray, n: int, measured: tuple[int, ...]) -> np.ndarray:
    """Reduce (B, 2,...,2) probabilities to (B, 2^r) with the x bit layout."""
    others = tuple(w + 1 for w in range(n) if w not in measured)
    if others:
        probs = probs.sum(axis=others)
    # remaining wire axes are sorted by wire index; reorder to (w_{r-1}, ..., w_0)
    kept = sorted(measured)
    order = [0] + [1 + kept.index(w) for w in reversed(measured)]
    probs = probs.transpose(order)
    return probs.reshape(probs.shape[0], -1)


def _y_array(values, m: int) -> np.ndarray:
    # object dtype keeps twirl strings wider than 62 bits exact
    return np.asarray(values, dtype=np.int64 if 2 * m <= 62 else object)


def _twirl_masks(ys: np.ndarray, site_id: int, m: int):
    z_sel = ((ys >> site_id) & 1).astype(bool)
    x_sel = ((ys >> (m + site_id)) & 1).astype(bool)
    return z_sel, x_sel


def _run_pure(c: CircuitSpec, ys: np.ndarray) -> np.ndarray:
    n, m = c.n, c.m
    psi = np.zeros((len(ys),) + (2,) * n, dtype=complex)
    psi[(slice(None),) + (0,) * n] = 1
    after = c.sites_after()
    for p, g in enumerate(c.gates):
        psi = _apply_state(psi, g.unitary, g.targets)
        for site in after.get(p, ()):
            z_sel, x_sel = _twirl_masks(ys, site.id, m)
            w = (site.wire,)
            psi = _apply_selected(psi, z_sel, lambda t: _apply_state(t, _Z, w))
            psi = _apply_selected(psi, x_sel, lambda t: _apply_state(t, _X, w))
    for g in c.pre_measure_rotations:
        psi = _apply_state(psi, g.unitary, g.targets)
    return _marginal(np.abs(psi) ** 2, n, c.measured_wires)


def _run_noisy(c: CircuitSpec, ys: np.ndarray, noise: NoiseParams) -> np.ndarray:
    n, m = c.n, c.m
    rho = np.zeros((len(ys),) + (2,) * (2 * n), dtype=complex)
    rho[(slice(None),) + (0,) * (2 * n)] = 1
    after = c.sites_after()
    for p, g in enumerate(c.gates):
        rho = _apply_density(rho, g.unitary, g.targets, n)
        for site in after.get(p, ()):
            z_sel, x_sel = _twirl_masks(ys, site.id, m)
            w = (site.wire,)
            rho = _apply_selected(rho, z_sel, lambda t: _apply_density(t, _Z, w, n))
            rho = _apply_selected(rho, x_sel, lambda t: _apply_density(t, _X, w, n))
            rho = _channel(rho, site.wire, n, noise)
    for g in c.pre_measure_rotations:
        rho = _apply_density(rho, g.unitary, g.targets, n)
    flat = rho.reshape(len(ys), 2**n, 2**n)
    diag = np.diagonal(flat, axis1=1, axis2=2).real
    return _marginal(diag.reshape((len(ys),) + (2,) * n), n, c.measured_wires)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def apply_noise_channel(rho: DenseDensity, wire: int, noise: NoiseParams) -> DenseDensity:
    """``E3 o E2 o E1`` on ``wire`` with Z, X, Y flips of probability e1, e2, e3."""
    if not 0 <= wire < rho.n:
        raise ValueError(f"wire {wire} out of range for {rho.n} qubits")
    t = rho.matrix.reshape((1,) + (2,) * (2 * rho.n))
    t = _channel(t, wire, rho.n, noise)
    return DenseDensity(rho.n, t.reshape(2**rho.n, 2**rho.n))


def output_distribution_pure(c: CircuitSpec, y: Bits, cap: int = PURE_CAP) -> np.ndarray:
    """Noiseless ``q[x|y]`` over the measured wires."""
    if c.n > cap:
        raise CapExceeded(f"statevector cap {cap} < n={c.n}")
    check_bits(y, 2 * c.m, "y")
    return _run_pure(c, _y_array([y.value], c.m))[0]


def output_distribution_noisy(
    c: CircuitSpec, y: Bits, noise: NoiseParams, cap: int = DENSITY_CAP
) -> np.ndarray:
    """Noisy ``q'[x|y]`` from the density-matrix simulation."""
    if c.n > cap:
        raise CapExceeded(f"density-matrix cap {cap} < n={c.n}")
    check_bits(y, 2 * c.m, "y")
    return _run_noisy(c, _y_array([y.value], c.m), noise)[0]


def conditionals_for(
    c: CircuitSpec,
    ys,
    noise: NoiseParams | None = None,
    threads: int = 1,
    pure_cap: int = PURE_CAP,
    density_cap: int = DENSITY_CAP,
) -> np.ndarray:
    """``q[x|y]`` (or ``q'[x|y]`` when ``noise`` is given) for many y; shape (2^r, len(ys)).

    Work is split into fixed-size blocks independent of ``threads`` and merged
    in order, so results do not depend on the thread count.
    """
    ys = _y_array([y.value if isinstance(y, Bits) else int(y) for y in ys], c.m)
    if noise is None:
        if c.n > pure_cap:
            raise CapExceeded(f"statevector cap {pure_cap} < n={c.n}")
        block = max(1, 2**20 // 2**c.n)

        def work(chunk):
            return _run_pure(c, chunk)
    else:
        if c.n > density_cap:
            raise CapExceeded(f"density-matrix cap {density_cap} < n={c.n}")
        block = max(1, 2**20 // 4**c.n)

        def work(chunk):
            return _run_noisy(c, chunk, noise)

    chunks = [ys[i : i + block] for i in range(0, len(ys), block)] or [ys]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(ch) for ch in chunks]
    return np.concatenate(parts, axis=0).T


def joint_tables(
    c: CircuitSpec,
    noise: NoiseParams,
    threads: int = 1,
    cap: int = JOINT_CAP,
    noisy: bool = True,
) -> tuple[JointTable, JointTable | None]:
    """Joint tables ``q[x,y] = 4^-m q[x|y]`` for the noiseless and noisy circuits."""
    if 2 * c.m > cap:
        raise CapExceeded(f"joint enumeration cap {cap} < 2m={2 * c.m}")
    ys = np.arange(4**c.m, dtype=np.int64)
    scale = 1.0 / 4**c.m
    q = JointTable(c.m, c.r, conditionals_for(c, ys, threads=threads) * scale)
    if not noisy:
        return q, None
    qn = JointTable(c.m, c.r, conditionals_for(c, ys, noise, threads=threads) * scale)
    return q, qn


# ---------------------------------------------------------------------------
# noise mixture conversion
# ---------------------------------------------------------------------------


def _check_eps(*eps: float) -> None:
    for e in eps:
        if not 0.0 <= e < 0.5:
            raise ValueError(f"flip probability {e} outside [0, 0.5)")


def mixture_forward(e1: float, e2: float, e3: float) -> tuple[float, float, float]:
    """Composed Z/X/Y flip channels as a Pauli mixture; returns (ex, ey, ez)."""
    _check_eps(e1, e2, e3)
    ez = e1 * (1 - e2) * (1 - e3) + (1 - e1) * e2 * e3
    ex = e2 * (1 - e1) * (1 - e3) + (1 - e2) * e1 * e3
    ey = e3 * (1 - e1) * (1 - e2) + (1 - e3) * e1 * e2
    return ex, ey, ez


def mixture_jacobian(e1: float, e2: float, e3: float) -> np.ndarray:
    """d(ex, ey, ez) / d(e1, e2, e3)."""
    return np.array(
        [
            [e3 - e2, 1 - e1 - e3, e1 - e2],
            [e2 - e3, e1 - e3, 1 - e1 - e2],
            [1 - e2 - e3, e3 - e1, e2 - e1],
        ]
    )


def jacobian_determinant(e1: float, e2: float, e3: float) -> float:
    """Closed form of ``det mixture_jacobian`` for the (ex, ey, ez) ordering."""
    return (1 - 2 * e1) * (1 - 2 * e2) * (1 - 2 * e3)


def mixture_inverse(
    ex: float, ey: float, ez: float, max_iter: int = 100, tol: float = 1e-12
) -> tuple[float, float, float]:
    """Solve ``mixture_forward(e1, e2, e3) = (ex, ey, ez)`` by damped Newton."""
    target = np.array([ex, ey, ez], dtype=float)
    if (target < 0).any() or target.sum() > 1:
        raise ValueError(f"({ex}, {ey}, {ez}) is not a Pauli mixture")

    def residual(e):
        return np.array(mixture_forward(*e)) - target

    # e1 pairs with ez, e2 with ex, e3 with ey
    e = np.clip(np.array([ez, ex, ey]), 0.0, 0.499)
    res = residual(e)
    for _ in range(max_iter):
        if np.max(np.abs(res)) < tol:
            return tuple(float(v) for v in e)
        step = np.linalg.solve(mixture_jacobian(*e), res)
        lam = 1.0
        while lam > 1e-6:
            trial = np.clip(e - lam * step, 0.0, 0.4999999)
            trial_res = residual(trial)
            if np.max(np.abs(trial_res)) < np.max(np.abs(res)):
                break
            lam /= 2
        else:
            break
        e, res = trial, trial_res
    if np.max(np.abs(res)) < tol:
        return tuple(float(v) for v in e)
    raise ValueError(f"({ex}, {ey}, {ez}) is unreachable with flip probabilities in [0, 0.5)")
