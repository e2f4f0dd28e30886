"""Lyapunov exponents of stationary random matrix products.

Estimates run ``batches`` independent replica chains side by side.  Each
chain discards ``burn_in`` steps and then measures its log-growth; the
spread of the per-chain values gives a heuristic standard error.  Three
iteration schemes are available:

``matrix``
    Running product, rescaled by its Frobenius norm whenever the log-norm
    leaves ``[-300, 300]``.  This is the reference scheme.
``vector``
    ``v <- X v`` with normalization; cheapest for the top exponent.
``frame``
    Orthonormal ``k``-frame re-orthogonalized by QR at every step.  Gives
    the partial sums ``gamma_1 + .. + gamma_j`` for all ``j <= k`` at once,
    and on a :class:`~wynercap.transfer.WedgeProcess` it avoids forming the
    exterior power altogether.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil

import numpy as np

from .errors import ContractError, DimensionError
from .linalg import frobenius, wedge_power
from .transfer import BlockProcess, MatrixProcess, WedgeProcess

RENORM_LOG = 300.0
METHODS = ("matrix", "vector", "frame")


@dataclass
class LyapunovEstimate:
    """Estimate of a (sum of) Lyapunov exponent(s), in nats per step.

    ``stderr`` is the standard error over independent chains; it is a
    heuristic, no central limit theorem is assumed.  ``offset`` is the mean
    per-step offset term of the process over the same steps, kept per chain
    in ``offset_batches`` so callers can form pathwise combinations.
    """

    gamma_hat: float
    stderr: float
    n_steps: int
    batches: int
    burn_in: int = 0
    renorm_count: int = 0
    method: str = "matrix"
    batch_values: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    offset_batches: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)

    @property
    def offset(self) -> float:
        return float(np.mean(self.offset_batches)) if self.offset_batches.size else 0.0

    def combined(self, scale: float = 1.0) -> tuple[float, float]:
        """Mean and stderr of ``(gamma + offset) / scale`` chain by chain."""
        return _mean_se((self.batch_values + self.offset_batches) / scale)


def _mean_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return float(np.mean(x)), 0.0
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(x.size))


def _chunk(R: int, dim: int) -> int:
    return int(max(8, min(1024, 4_000_000 // max(1, R * dim * dim))))


def _start_frame(seed: int, R: int, p: int, k: int) -> np.ndarray:
    rng = np.random.default_rng([int(seed), 0x7F4A])
    V = rng.standard_normal((R, p, k)) + 1j * rng.standard_normal((R, p, k))
    return np.linalg.qr(V)[0]


@dataclass
class _ChainResult:
    growth: np.ndarray          # (R,) or (R, k): log-growth per measured step
    offsets: np.ndarray         # (R,)
    renorms: int
    steps: int


def _iterate(process: MatrixProcess, seed: int, replicas, steps: int, burn_in: int,
             method: str, k: int = 1) -> _ChainResult:
    """Run chains and return growth per measured step."""
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    R = len(replicas)
    p = process.dim
    total = burn_in + steps
    acc = np.zeros((R, k) if method == "frame" else R)
    off = np.zeros(R)
    renorms = 0
    if method == "matrix":
        state = np.broadcast_to(np.eye(p, dtype=complex), (R, p, p)).copy()
    elif method == "vector":
        state = _start_frame(seed, R, p, 1)
    else:
        if not 1 <= k <= p:
            raise DimensionError(f"frame size {k} out of range for dimension {p}")
        state = _start_frame(seed, R, p, k)
    chunk = _chunk(R, p)
    t = 0
    while t < total:
        c = min(chunk, total - t)
        mats, offs = process.draw(seed, replicas, t, c)
        if t + c > burn_in:
            off += offs[:, max(burn_in - t, 0):].sum(axis=1)
        for j in range(c):
            if t + j == burn_in:
                acc[...] = 0.0
                if method == "matrix":
                    state /= frobenius(state)[:, None, None]
            X = mats[:, j]
            state = X @ state
            if method == "matrix":
                ln = np.log(frobenius(state))
                big = np.abs(ln) > RENORM_LOG
                if np.any(big):
                    state[big] /= np.exp(ln[big])[:, None, None]
                    acc[big] += ln[big]
                    renorms += int(np.count_nonzero(big))
            elif method == "vector":
                nrm = np.linalg.norm(state[:, :, 0], axis=1)
                acc += np.log(nrm)
                state /= nrm[:, None, None]
            else:
                Q, Rm = np.linalg.qr(state)
                acc += np.log(np.abs(np.diagonal(Rm, axis1=-2, axis2=-1)))
                state = Q
        t += c
    if method == "matrix":
        acc = acc + np.log(frobenius(state))
    return _ChainResult(acc / steps, off / steps, renorms, steps)


def _split(n_steps: int, batches: int) -> int:
    if batches < 2 or n_steps < batches:
        raise ValueError("need n_steps >= batches >= 2")
    return ceil(n_steps / batches)


def _estimate(res: _ChainResult, values, batches, burn_in, method) -> LyapunovEstimate:
    g, se = _mean_se(values)
    return LyapunovEstimate(g, se, res.steps * batches, batches, burn_in, res.renorms, method,
                            np.asarray(values, dtype=float), res.offsets)


def top_exponent(process: MatrixProcess, n_steps: int = 100_000, burn_in: int = 1000,
                 batches: int = 30, seed: int = 0, method: str = "matrix") -> LyapunovEstimate:
    """Top Lyapunov exponent ``gamma_1`` of ``process``.

    Parameters
    ----------
    process : MatrixProcess
    n_steps : int
        Total measured steps, split evenly over ``batches`` chains.
    burn_in : int
        Discarded steps per chain.
    batches : int
        Number of independent chains.
    seed : int
    method : {"matrix", "vector", "frame"}
        ``frame`` on a :class:`WedgeProcess` iterates the base process with a
        ``k``-frame and sums the ``k`` leading exponents.
    """
    steps = _split(n_steps, batches)
    replicas = list(range(batches))
    if method == "frame" and isinstance(process, WedgeProcess):
        res = _iterate(process.base, seed, replicas, steps, burn_in, "frame", process.k)
        return _estimate(res, res.growth.sum(axis=1), batches, burn_in, method)
    if method == "frame":
        res = _iterate(process, seed, replicas, steps, burn_in, "frame", 1)
        return _estimate(res, res.growth[:, 0], batches, burn_in, method)
    res = _iterate(process, seed, replicas, steps, burn_in, method)
    return _estimate(res, res.growth, batches, burn_in, method)


@dataclass
class Spectrum:
    """Per-chain Lyapunov spectra, shape ``(batches, k)``, in decreasing order."""

    exponents: np.ndarray
    offsets: np.ndarray
    n_steps: int

    def partial_sums(self) -> np.ndarray:
        """``(batches, k + 1)`` array of ``gamma_1 + .. + gamma_j``, ``j = 0 .. k``."""
        z = np.zeros((self.exponents.shape[0], 1))
        return np.concatenate([z, np.cumsum(self.exponents, axis=1)], axis=1)

    def mean(self) -> np.ndarray:
        return self.exponents.mean(axis=0)

    def stderr(self) -> np.ndarray:
        n = self.exponents.shape[0]
        return self.exponents.std(axis=0, ddof=1) / np.sqrt(n)


def lyapunov_spectrum(process: MatrixProcess, k: int | None = None, n_steps: int = 100_000,
                      burn_in: int = 1000, batches: int = 30, seed: int = 0) -> Spectrum:
    """Leading ``k`` exponents (all by default) by QR iteration."""
    k = process.dim if k is None else k
    steps = _split(n_steps, batches)
    res = _iterate(process, seed, list(range(batches)), steps, burn_in, "frame", k)
    return Spectrum(res.growth, res.offsets, steps * batches)


def kth_exponent_sums(process: MatrixProcess, k: int, n_steps: int = 100_000,
                      burn_in: int = 1000, batches: int = 30, seed: int = 0,
                      method: str = "frame") -> LyapunovEstimate:
    """``gamma_1 + .. + gamma_k``, the top exponent of the ``k``-th exterior power.

    ``k = 0`` gives exactly 0 and ``k = dim`` uses the determinant,
    ``E log|det X_1|``.
    """
    p = process.dim
    if not 0 <= k <= p:
        raise DimensionError(f"k={k} out of range for dimension {p}")
    steps = _split(n_steps, batches)
    if k == 0:
        z = np.zeros(batches)
        return LyapunovEstimate(0.0, 0.0, steps * batches, batches, burn_in, 0, "exact", z, z.copy())
    if k == p:
        return _det_average(process, steps, burn_in, batches, seed)
    if method == "frame":
        res = _iterate(process, seed, list(range(batches)), steps, burn_in, "frame", k)
        return _estimate(res, res.growth.sum(axis=1), batches, burn_in, method)
    return top_exponent(WedgeProcess(process, k), n_steps, burn_in, batches, seed, method)


def _det_average(process, steps, burn_in, batches, seed) -> LyapunovEstimate:
    replicas = list(range(batches))
    tot = np.zeros(batches)
    off = np.zeros(batches)
    chunk = _chunk(batches, process.dim)
    t = burn_in
    while t < burn_in + steps:
        c = min(chunk, burn_in + steps - t)
        mats, offs = process.draw(seed, replicas, t, c)
        tot += np.linalg.slogdet(mats)[1].sum(axis=1)
        off += offs.sum(axis=1)
        t += c
    res = _ChainResult(tot / steps, off / steps, 0, steps)
    return _estimate(res, res.growth, batches, burn_in, "det")


# -- subadditive upper bounds ----------------------------------------------

@dataclass
class PStepBound:
    """``(1/p) E log||X_p .. X_1||_F`` with per-sample values."""

    value: float
    stderr: float
    p: int
    samples: np.ndarray = field(repr=False)
    offsets: np.ndarray = field(repr=False)

    def combined(self, scale: float = 1.0) -> tuple[float, float]:
        return _mean_se((self.samples + self.offsets) / scale)


def p_step_upper_bound(process: MatrixProcess, p_steps: int, replicas: int = 10_000,
                       seed: int = 0) -> PStepBound:
    """Monte Carlo of the subadditive bound ``(1/p) E log||X_p .. X_1||_F``.

    Samples are disjoint windows of one stationary stream, spaced so that
    they share no randomness when cells are independent.  Products are
    formed on the base matrices of a :class:`WedgeProcess` and lifted once,
    which is exact by multiplicativity of exterior powers.
    """
    if p_steps < 1 or replicas < 1:
        raise ValueError("need p_steps >= 1 and replicas >= 1")
    base, k = (process.base, process.k) if isinstance(process, WedgeProcess) else (process, None)
    if process.deterministic:
        replicas = 1
    stride = p_steps + base.overlap
    per = max(1, 2_000_000 // (stride * base.dim * base.dim))
    vals = np.empty(replicas)
    offs = np.empty(replicas)
    done = 0
    while done < replicas:
        g = min(per, replicas - done)
        mats, o = base.draw(seed, [0], done * stride, g * stride)
        mats = mats[0].reshape((g, stride) + mats.shape[-2:])[:, :p_steps]
        o = o[0].reshape(g, stride)[:, :p_steps]
        P = mats[:, 0]
        logs = np.zeros(g)
        for j in range(1, p_steps):
            P = mats[:, j] @ P
            nrm = frobenius(P)
            logs += np.log(nrm)
            P = P / nrm[:, None, None]
        if k is not None:
            # wedge^k(P / c) = wedge^k(P) / c^k
            P = wedge_power(P, k)
            logs *= k
        vals[done:done + g] = (logs + np.log(frobenius(P))) / p_steps
        offs[done:done + g] = o.sum(axis=1) / p_steps
        done += g
    v, se = _mean_se(vals)
    return PStepBound(v, se, p_steps, vals, offs)


# -- reducible products ------------------------------------------------------

@dataclass
class TriangularReport:
    """Whole-matrix exponent sum versus the best split over the diagonal blocks.

    All values are per step and exclude the process offset; ``offset`` is
    reported separately.
    """

    order: int
    whole: float
    whole_stderr: float
    candidates: np.ndarray
    candidate_stderr: np.ndarray
    offset: float
    offset_batches: np.ndarray = field(repr=False)
    whole_batches: np.ndarray = field(repr=False)
    candidate_batches: np.ndarray = field(repr=False)

    @property
    def split_max(self) -> float:
        return float(np.max(self.candidates))

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.candidates))

    @property
    def discrepancy(self) -> float:
        return abs(self.whole - self.split_max)

    @property
    def agrees(self) -> bool:
        i = self.argmax
        tol = 3.0 * np.hypot(self.whole_stderr, self.candidate_stderr[i])
        return self.discrepancy <= max(tol, 1e-9)


def triangular_spectrum_check(process: MatrixProcess, split: int, order: int | None = None,
                              n_steps: int = 100_000, burn_in: int = 1000, batches: int = 30,
                              seed: int = 0) -> TriangularReport:
    """Compare ``gamma(wedge^q X)`` with ``max_i gamma(wedge^i X11) + gamma(wedge^{q-i} X22)``.

    ``X`` must be block lower-triangular with a ``split x split`` leading
    block.  All three spectra are estimated on the same random stream.

    Raises
    ------
    ContractError
        If the sampled matrices have a nonzero upper-right block.
    """
    p = process.dim
    if not 0 < split < p:
        raise ContractError(f"split {split} must lie strictly inside dimension {p}")
    q = split if order is None else order
    probe, _ = process.draw(seed, [0], 0, 8)
    upper = np.abs(probe[..., :split, split:]).max()
    if upper > 1e-12 * max(1.0, np.abs(probe).max()):
        raise ContractError(f"process is not block lower-triangular (upper block {upper:.3g})")
    kw = dict(n_steps=n_steps, burn_in=burn_in, batches=batches, seed=seed)
    whole = lyapunov_spectrum(process, q, **kw)
    top = lyapunov_spectrum(BlockProcess(process, 0, split), split, **kw).partial_sums()
    bot = lyapunov_spectrum(BlockProcess(process, split, p), p - split, **kw).partial_sums()
    idx = [i for i in range(q + 1) if i <= split and q - i <= p - split]
    cand = np.stack([top[:, i] + bot[:, q - i] for i in idx], axis=1)
    w = whole.partial_sums()[:, q]
    wm, wse = _mean_se(w)
    cm = cand.mean(axis=0)
    cse = cand.std(axis=0, ddof=1) / np.sqrt(batches)
    full = np.full(q + 1, -np.inf)
    fse = np.full(q + 1, np.inf)
    full[idx], fse[idx] = cm, cse
    fb = np.full((batches, q + 1), -np.inf)
    fb[:, idx] = cand
    return TriangularReport(q, wm, wse, full, fse, float(whole.offsets.mean()), whole.offsets, w, fb)


__all__ = [
    "LyapunovEstimate", "PStepBound", "Spectrum", "TriangularReport", "top_exponent",
    "kth_exponent_sums", "lyapunov_spectrum", "p_step_upper_bound",
    "triangular_spectrum_check",
]
