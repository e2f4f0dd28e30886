"""Transfer-matrix families and the random processes built from them.

All constructors are batched over leading axes and accept ``lam = 0``.
Cell data for the ``K = 1`` families is a ``(..., d+1)`` or
``(..., d+1, 1)`` array in offset order (see :mod:`wynercap.fading`).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import fading as fd
from .channel import band_from_cells, blocks_from_cells, cross_log
from .errors import ContractError, SingularBlockError
from .linalg import dagger, solve_conjugate_transpose_inverse, wedge_power

# Denominators below this magnitude count as exact zeros.
TINY = 1e-300


def _eye(d, batch=()):
    return np.broadcast_to(np.eye(d, dtype=complex), tuple(batch) + (d, d))


def _zeros(d, batch=()):
    return np.zeros(tuple(batch) + (d, d), dtype=complex)


def _blocks(a, b, c, e) -> np.ndarray:
    return np.concatenate([np.concatenate([a, b], -1), np.concatenate([c, e], -1)], -2)


def _check_nonzero(x, what):
    bad = ~(np.abs(x) > TINY)
    if np.any(bad):
        raise SingularBlockError(f"{what} vanishes", condition=0.0, count=int(np.count_nonzero(bad)))


# -- block families ----------------------------------------------------------

def make_A(C, D) -> np.ndarray:
    return np.asarray(C) @ np.asarray(D)


def make_B(C, D_next, lam: float) -> np.ndarray:
    C, D_next = np.asarray(C), np.asarray(D_next)
    d = C.shape[-2]
    return C @ dagger(C) + dagger(D_next) @ D_next + lam * np.eye(d)


def make_M_from_AB(A, B, A_next) -> np.ndarray:
    """``[[0, I], [-A_next^{-dagger} A, -A_next^{-dagger} B]]``."""
    A = np.asarray(A)
    d = A.shape[-1]
    W = solve_conjugate_transpose_inverse(A_next)
    batch = A.shape[:-2]
    return _blocks(_zeros(d, batch), _eye(d, batch), -W @ A, -W @ B)


def make_M(C, D, C_next, D_next, lam: float) -> np.ndarray:
    """Transfer matrix of the three-term block recursion.

    Propagates ``(X_{i-1}, X_i)`` to ``(X_i, X_{i+1})``.
    """
    return make_M_from_AB(make_A(C, D), make_B(C, D_next, lam), make_A(C_next, D_next))


def make_P1(C, D, lam: float) -> np.ndarray:
    """``[[-C D, -(C C^dagger + lam I)], [0, I]]``."""
    C = np.asarray(C)
    d = C.shape[-2]
    batch = C.shape[:-2]
    return _blocks(-make_A(C, D), -(C @ dagger(C) + lam * np.eye(d)), _zeros(d, batch), _eye(d, batch))


def make_P2(C, D) -> np.ndarray:
    """``[[0, I], [A^{-dagger}, -A^{-dagger} D^dagger D]]`` with ``A = C D``."""
    C, D = np.asarray(C), np.asarray(D)
    d = C.shape[-2]
    batch = C.shape[:-2]
    W = solve_conjugate_transpose_inverse(make_A(C, D))
    return _blocks(_zeros(d, batch), _eye(d, batch), W, -W @ dagger(D) @ D)


def make_delta(C, D, lam: float) -> np.ndarray:
    """Reordered transfer matrix ``P1(i) P2(i)`` in closed block form."""
    C, D = np.asarray(C), np.asarray(D)
    d = C.shape[-2]
    A = make_A(C, D)
    W = solve_conjugate_transpose_inverse(A)
    CC = C @ dagger(C) + lam * np.eye(d)
    top_left = -CC @ W
    top_right = -A + CC @ W @ dagger(D) @ D
    return _blocks(top_left, top_right, W, -W @ dagger(D) @ D)


def make_Psi(C, D, which: int) -> np.ndarray:
    """``Psi^1 = C D^{-dagger}`` or ``Psi^2 = C^{-dagger} D`` (``K = 1``)."""
    C, D = np.asarray(C), np.asarray(D)
    if C.shape[-1] != C.shape[-2]:
        raise ContractError("Psi blocks need square C (K = 1)")
    if which == 1:
        return C @ solve_conjugate_transpose_inverse(D)
    if which == 2:
        return solve_conjugate_transpose_inverse(C) @ D
    raise ValueError("which must be 1 or 2")


# -- row and cell families -------------------------------------------------

def make_small_m(band) -> np.ndarray:
    """Companion matrix of one row of the ``G`` band.

    ``band[..., t]`` is ``G[i, i - d + t]`` for ``t = 0 .. 2d``.
    """
    band = np.asarray(band)
    w = band.shape[-1]
    d = (w - 1) // 2
    top = band[..., -1]
    _check_nonzero(top, "super-band coefficient")
    out = np.zeros(band.shape[:-1] + (2 * d, 2 * d), dtype=complex)
    idx = np.arange(2 * d - 1)
    out[..., idx, idx + 1] = 1.0
    out[..., -1, :] = -band[..., :-1] / top[..., None]
    return out


def _scalar_cells(z) -> np.ndarray:
    """``(..., d+1)`` scalar coefficients ordered ``zeta_{i-d,i} .. zeta_{i,i}``."""
    z = np.asarray(z)
    if z.ndim >= 2 and z.shape[-1] == 1:
        z = z[..., 0]
    return z[..., ::-1]


def make_small_delta(cell, lam: float) -> np.ndarray:
    """Per-cell factor of the reordered transfer matrix (``K = 1``).

    ``cell`` is in offset order; with ``z_k = zeta_{i-d+k, i}`` the factor is
    sparse with first column, ``d``-th row and last row filled in.
    """
    z = _scalar_cells(cell)
    d = z.shape[-1] - 1
    z0, zd = z[..., 0], z[..., d]
    _check_nonzero(z0, "far coefficient zeta_{i-d,i}")
    _check_nonzero(zd, "own coefficient zeta_{i,i}")
    batch = z.shape[:-1]
    out = np.zeros(batch + (2 * d, 2 * d), dtype=complex)
    for r in range(d - 1):
        out[..., r, 0] = -z[..., r + 1] / z0
        out[..., r, r + 1] = 1.0
        out[..., d + r, d + r + 1] = 1.0
    denom = z0 * np.conj(zd)
    out[..., d - 1, 0] = -(lam + np.abs(zd) ** 2) / denom
    out[..., d - 1, d:] = lam * np.conj(z[..., :d]) / np.conj(zd)[..., None]
    out[..., 2 * d - 1, 0] = 1.0 / denom
    out[..., 2 * d - 1, d:] = -np.conj(z[..., :d]) / np.conj(zd)[..., None]
    return out


def make_psi(cell, which: int) -> np.ndarray:
    """Per-cell high-SNR factors ``psi^1`` and ``psi^2`` (``K = 1``, ``d x d``)."""
    z = _scalar_cells(cell)
    d = z.shape[-1] - 1
    batch = z.shape[:-1]
    out = np.zeros(batch + (d, d), dtype=complex)
    idx = np.arange(d - 1)
    out[..., idx, idx + 1] = 1.0
    if which == 1:
        _check_nonzero(z[..., 0], "far coefficient zeta_{i-d,i}")
        out[..., :, 0] = -z[..., 1:] / z[..., :1]
        return out
    if which == 2:
        _check_nonzero(z[..., d], "own coefficient zeta_{i,i}")
        # entry k-1 of the first column is -zeta_{i-k,i} / zeta_{i,i}
        out[..., :, 0] = -z[..., d - 1::-1] / z[..., d:]
        return dagger(out)
    raise ValueError("which must be 1 or 2")


def reversal(d: int) -> np.ndarray:
    """Anti-diagonal permutation ``J`` (``J = J^{-1}``)."""
    return np.eye(d)[::-1].astype(complex)


def reverse_conjugate(X) -> np.ndarray:
    """``J X J``, the similarity used for the second diagonal block."""
    X = np.asarray(X)
    return X[..., ::-1, ::-1]


# -- processes -------------------------------------------------------------

class TransferFamily(str, Enum):
    M = "M"
    N = "N"
    SmallM = "SmallM"
    SmallN = "SmallN"
    Delta = "Delta"
    Xi = "Xi"
    SmallDelta = "SmallDelta"
    SmallXi = "SmallXi"
    Psi1 = "Psi1"
    Psi2 = "Psi2"
    SmallPsi1 = "SmallPsi1"
    SmallPsi2 = "SmallPsi2"
    P1 = "P1"
    P2 = "P2"

    @classmethod
    def parse(cls, name: "str | TransferFamily") -> "TransferFamily":
        if isinstance(name, cls):
            return name
        aliases = {"m": "SmallM", "n": "SmallN", "delta": "SmallDelta", "xi": "SmallXi",
                   "psi1": "SmallPsi1", "psi2": "SmallPsi2"}
        return cls(aliases.get(name, name))


WEDGED = {
    TransferFamily.N: TransferFamily.M,
    TransferFamily.SmallN: TransferFamily.SmallM,
    TransferFamily.Xi: TransferFamily.Delta,
    TransferFamily.SmallXi: TransferFamily.SmallDelta,
}
BLOCK_FAMILIES = {TransferFamily.M, TransferFamily.Delta, TransferFamily.Psi1,
                  TransferFamily.Psi2, TransferFamily.P1, TransferFamily.P2}
K1_FAMILIES = {TransferFamily.SmallDelta, TransferFamily.SmallXi, TransferFamily.SmallPsi1,
               TransferFamily.SmallPsi2, TransferFamily.Psi1, TransferFamily.Psi2}


class MatrixProcess:
    """Stationary sequence of square matrices, drawn in chunks.

    ``draw(seed, replicas, start, count)`` returns ``(mats, offsets)`` with
    shapes ``(R, count, p, p)`` and ``(R, count)``.  Step ``t`` of replica
    ``r`` depends only on ``(seed, r, t)``.  ``offsets`` is a per-step real
    term that estimators may add to the log-growth (used for pathwise
    variance reduction); processes without one return zeros.

    ``overlap`` is how many trailing steps share randomness with the next
    step (samples spaced ``p + overlap`` steps apart are independent for
    i.i.d. cells).
    """

    dim: int = 1
    overlap: int = 0
    deterministic: bool = False

    def draw(self, seed: int, replicas, start: int, count: int):
        raise NotImplementedError


@dataclass
class ConstantProcess(MatrixProcess):
    """The same matrix at every step."""

    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        self.dim = self.matrix.shape[-1]
        self.deterministic = True

    def draw(self, seed, replicas, start, count):
        R = len(replicas)
        mats = np.broadcast_to(self.matrix, (R, count, self.dim, self.dim)).copy()
        return mats, np.zeros((R, count))


@dataclass
class IIDProcess(MatrixProcess):
    """I.i.d. matrices from ``sampler(rng, n) -> (n, p, p)``, reproducible per step block."""

    sampler: object
    dim: int = 1
    block: int = 256

    def draw(self, seed, replicas, start, count):
        out = []
        for r in replicas:
            b0, b1 = start // self.block, (start + count - 1) // self.block
            parts = []
            for b in range(b0, b1 + 1):
                ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(r), b))
                parts.append(self.sampler(np.random.Generator(np.random.PCG64(ss)), self.block))
            allm = np.concatenate(parts)
            out.append(allm[start - b0 * self.block:start - b0 * self.block + count])
        mats = np.asarray(out, dtype=complex)
        return mats, np.zeros(mats.shape[:2])


@dataclass
class WedgeProcess(MatrixProcess):
    """``k``-th exterior power of another process."""

    base: MatrixProcess
    k: int

    def __post_init__(self):
        from math import comb
        self.dim = comb(self.base.dim, self.k)
        self.overlap = self.base.overlap
        self.deterministic = self.base.deterministic

    def draw(self, seed, replicas, start, count):
        mats, off = self.base.draw(seed, replicas, start, count)
        return wedge_power(mats, self.k), off


@dataclass
class BlockProcess(MatrixProcess):
    """Diagonal block ``[lo:hi, lo:hi]`` of another process."""

    base: MatrixProcess
    lo: int
    hi: int

    def __post_init__(self):
        self.dim = self.hi - self.lo
        self.overlap = self.base.overlap
        self.deterministic = self.base.deterministic

    def draw(self, seed, replicas, start, count):
        mats, off = self.base.draw(seed, replicas, start, count)
        return mats[..., self.lo:self.hi, self.lo:self.hi], off


class TransferProcess(MatrixProcess):
    """Transfer matrices of a family driven by stationary fading cells.

    Step ``t`` (0-based) corresponds to block ``t + 1`` for the block
    families, to band row ``t + 1`` for ``SmallM`` and to cell ``t + 1`` for
    the per-cell families.  Cells always come from the natural infinite
    chain, so there are no boundary conventions here.

    The offset of each step is the log-magnitude of the denominator that the
    family divides by (``log|det A_{i+1}|`` for ``M``, ``log|det A_i|`` for
    ``Delta``, ``log|G[i, i+d]|`` for ``SmallM`` and
    ``log|zeta_{i-d,i} zeta_{i,i}^dagger|`` per cell), so that growth plus
    offset has low variance.
    """

    def __init__(self, family, model: fd.FadingModel, lam: float):
        fam = TransferFamily.parse(family)
        if fam in WEDGED:
            raise ContractError(f"use wedge_process for the lifted family {fam.value}")
        if fam in K1_FAMILIES and model.K != 1:
            raise ContractError(f"family {fam.value} requires K = 1")
        if lam < 0:
            raise ValueError("lam must be >= 0")
        self.family, self.model, self.lam = fam, model, float(lam)
        d = model.d
        self.d = d
        self.dim = d if fam in (TransferFamily.Psi1, TransferFamily.Psi2,
                                TransferFamily.SmallPsi1, TransferFamily.SmallPsi2) else 2 * d
        self.overlap = {TransferFamily.M: 1, TransferFamily.SmallM: d,
                        TransferFamily.P2: 0}.get(fam, 0)
        self.deterministic = not model.is_random
        self.singular_count = 0

    @property
    def cells_per_step(self) -> int:
        return self.d if self.family in BLOCK_FAMILIES else 1

    def cell_window(self, start: int, count: int) -> tuple[int, int]:
        """First cell (1-based) and number of cells needed for a step range."""
        d, f = self.d, self.family
        if f in BLOCK_FAMILIES:
            extra = d if f == TransferFamily.M else 0
            return d * start + 1, d * count + extra
        if f == TransferFamily.SmallM:
            return start + 1, count + d
        return start + 1, count

    def draw(self, seed, replicas, start, count):
        first, n = self.cell_window(start, count)
        Z = fd.cells_batch(self.model, seed, replicas, first, n)
        return self.from_cells(Z)

    def from_cells(self, Z):
        """Matrices and offsets from a cell window, shape ``(..., n, d+1, K)``."""
        f, d, lam = self.family, self.d, self.lam
        if f == TransferFamily.SmallM:
            band = band_from_cells(Z, lam)
            top = band[..., -1]
            self._screen(np.abs(top))
            with np.errstate(divide="ignore"):
                return make_small_m(band), np.log(np.abs(top))
        if f in (TransferFamily.SmallDelta, TransferFamily.SmallPsi1, TransferFamily.SmallPsi2):
            off = cross_log(Z)
            self._screen(np.exp(off))
            if f == TransferFamily.SmallDelta:
                return make_small_delta(Z, lam), off
            return make_psi(Z, 1 if f == TransferFamily.SmallPsi1 else 2), off
        # block families
        C, D = blocks_from_cells(Z)
        logA = cross_log(Z)
        logA = logA.reshape(logA.shape[:-1] + (logA.shape[-1] // d, d)).sum(-1)
        self._screen(np.exp(logA / d))
        if f == TransferFamily.M:
            A = make_A(C, D)
            B = make_B(C[..., :-1, :, :], D[..., 1:, :, :], lam)
            return make_M_from_AB(A[..., :-1, :, :], B, A[..., 1:, :, :]), logA[..., 1:]
        if f == TransferFamily.Delta:
            return make_delta(C, D, lam), logA
        if f == TransferFamily.P1:
            return make_P1(C, D, lam), logA
        if f == TransferFamily.P2:
            return make_P2(C, D), logA
        return make_Psi(C, D, 1 if f == TransferFamily.Psi1 else 2), logA

    def _screen(self, mags):
        bad = ~(mags > TINY)
        nbad = int(np.count_nonzero(bad))
        if nbad:
            self.singular_count += nbad
            raise SingularBlockError(
                f"{nbad} singular step(s) in family {self.family.value}; the frontier "
                "coefficient product vanishes", condition=0.0, count=nbad)


def transfer_process(family, model: fd.FadingModel, lam: float) -> MatrixProcess:
    """Process for any family, lifting to the ``d``-th exterior power when needed."""
    fam = TransferFamily.parse(family)
    if fam in WEDGED:
        return WedgeProcess(TransferProcess(WEDGED[fam], model, lam), model.d)
    return TransferProcess(fam, model, lam)


def family_scale(family, d: int) -> int:
    """Steps-to-cells ratio: the lifted exponent divided by this is per cell."""
    fam = TransferFamily.parse(family)
    base = WEDGED.get(fam, fam)
    return d if base in BLOCK_FAMILIES else 1
