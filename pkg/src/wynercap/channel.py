"""Banded channel matrices, block decompositions and finite-size capacity.

Cell arrays follow the layout of :mod:`wynercap.fading`: ``Z[..., j, s, :]``
is the row vector heard by base station ``j - s`` from cell ``j``.
Indices below are 0-based within the window of cells passed in.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fading as fd
from .errors import ContractError, DimensionError, SingularBlockError
from .linalg import (
    SINGULAR_RTOL,
    condition_ratio,
    dagger,
    log_abs_det,
    log_det_hpd,
    log_det_hpd_banded,
    solve_conjugate_transpose_inverse,
)


@dataclass(frozen=True)
class ChannelParams:
    """Interference span, users per cell and inverse SNR.

    ``lam = 0`` (infinite SNR) is accepted; operations that need a finite
    SNR check for it themselves.
    """

    d: int
    K: int = 1
    lam: float = 1.0

    def __post_init__(self):
        if self.d < 1 or self.K < 1:
            raise DimensionError(f"need d >= 1 and K >= 1, got d={self.d}, K={self.K}")
        if not self.lam >= 0 or not np.isfinite(self.lam):
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")

    @classmethod
    def from_snr(cls, d: int, K: int = 1, rho: float = 1.0) -> "ChannelParams":
        if not rho > 0:
            raise ValueError("rho must be positive")
        return cls(d, K, 0.0 if np.isinf(rho) else 1.0 / rho)

    @property
    def rho(self) -> float:
        return np.inf if self.lam == 0 else 1.0 / self.lam

    @property
    def log_rho(self) -> float:
        return np.inf if self.lam == 0 else -float(np.log(self.lam))


# -- assembling matrices from cells ----------------------------------------

def channel_matrix(Z: np.ndarray, m: int) -> np.ndarray:
    """``H_m`` (``m x K(m+d)``) from the ``m + d`` cells it involves.

    Base station ``i`` hears cell ``j`` iff ``0 <= j - i <= d``.
    """
    Z = np.asarray(Z)
    n_cells, dp1, K = Z.shape
    d = dp1 - 1
    if n_cells != m + d:
        raise DimensionError(f"H_{m} needs {m + d} cells, got {n_cells}")
    H = np.zeros((m, K * n_cells), dtype=complex)
    for j in range(n_cells):
        for s in range(dp1):
            i = j - s
            if 0 <= i < m:
                H[i, j * K:(j + 1) * K] = Z[j, s]
    return H


def truncated_channel_matrix(Z: np.ndarray) -> np.ndarray:
    """Tall ``(n+d) x Kn`` matrix of ``n`` users heard by ``n + d`` stations.

    Cell ``j`` is received at rows ``j .. j+d``; the station that sits ``s``
    positions before the cell in the infinite chain is row ``j + d - s``.
    """
    Z = np.asarray(Z)
    n, dp1, K = Z.shape
    d = dp1 - 1
    H = np.zeros((n + d, K * n), dtype=complex)
    for j in range(n):
        for s in range(dp1):
            H[j + d - s, j * K:(j + 1) * K] = Z[j, s]
    return H


def band_from_cells(Z: np.ndarray, lam: float = 0.0) -> np.ndarray:
    """Rows of the ``(2d+1)``-band of ``G = HH^dagger + lam I``.

    Parameters
    ----------
    Z : array, shape (..., n + d, d + 1, K)
        Cells ``0 .. n+d-1``.
    lam : float

    Returns
    -------
    band : array, shape (..., n, 2d + 1)
        ``band[..., i, u + d]`` is ``G[i, i + u]`` for ``u = -d .. d`` in the
        infinite chain; row ``i`` only involves cells ``i .. i + d``.
    """
    Z = np.asarray(Z)
    d = Z.shape[-2] - 1
    n = Z.shape[-3] - d
    if n < 1:
        raise DimensionError("need at least d + 1 cells")
    out = np.zeros(Z.shape[:-3] + (n, 2 * d + 1), dtype=complex)
    for t in range(d + 1):
        # cell i + t seen from station i (offset t) and from station i + u
        cell = Z[..., t:t + n, :, :]
        a = cell[..., t, :]
        for u in range(t - d, t + 1):
            out[..., u + d] += np.sum(a * np.conj(cell[..., t - u, :]), axis=-1)
    out[..., d] += lam
    return out


def blocks_from_cells(Z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Natural ``C_i`` and ``D_i`` blocks of consecutive groups of ``d`` cells.

    Parameters
    ----------
    Z : array, shape (..., nb * d, d + 1, K)

    Returns
    -------
    C : array, shape (..., nb, d, dK)
        ``C_i`` for each group: stations of the group hearing its own cells.
    D : array, shape (..., nb, dK, d)
        ``D_i``, with ``D_i^dagger`` the previous group's stations hearing
        this group's cells.
    """
    Z = np.asarray(Z)
    dp1, K = Z.shape[-2:]
    d = dp1 - 1
    nc = Z.shape[-3]
    if nc % d:
        raise DimensionError(f"cell count {nc} is not a multiple of d={d}")
    nb = nc // d
    G = Z.reshape(Z.shape[:-3] + (nb, d, dp1, K))
    batch = G.shape[:-3]
    C = np.zeros(batch + (d, d, K), dtype=complex)
    Dd = np.zeros(batch + (d, d, K), dtype=complex)  # D^dagger as (row l, cell k, K)
    for c in range(d):
        for r in range(c + 1):
            C[..., r, c, :] = G[..., c, c - r, :]
        for l in range(c, d):
            Dd[..., l, c, :] = G[..., c, d + c - l, :]
    C = C.reshape(batch + (d, d * K))
    D = dagger(Dd.reshape(batch + (d, d * K)))
    return C, D


def block_log_det_A(Z: np.ndarray) -> np.ndarray:
    """``log|det C_i D_i|`` per group of ``d`` cells (triangular product)."""
    Z = np.asarray(Z)
    d = Z.shape[-2] - 1
    x = cross_log(Z)
    return x.reshape(x.shape[:-1] + (x.shape[-1] // d, d)).sum(axis=-1)


def cross_log(Z: np.ndarray) -> np.ndarray:
    """``log|zeta_0 zeta_d^dagger|`` for every cell."""
    Z = np.asarray(Z)
    d = Z.shape[-2] - 1
    with np.errstate(divide="ignore"):
        return np.log(np.abs(np.sum(Z[..., d, :] * np.conj(Z[..., 0, :]), axis=-1)))


# -- instances -------------------------------------------------------------

@dataclass
class ChannelInstance:
    """Sampled ``H_{dn}`` with its block decomposition.

    ``C[i]`` and ``D[i]`` hold ``C_{i+1}`` and ``D_{i+1}`` (0-based lists);
    ``D`` has ``n + 1`` entries.  ``D[0]`` is the synthetic boundary block
    making ``C_1 D_1`` the identity.
    """

    params: ChannelParams
    n: int
    H: np.ndarray
    C: list = field(default_factory=list)
    D: list = field(default_factory=list)

    @property
    def m(self) -> int:
        return self.H.shape[0]

    @property
    def G(self) -> np.ndarray:
        return self.H @ dagger(self.H) + self.params.lam * np.eye(self.m)

    def A(self, i: int) -> np.ndarray:
        """``A_i = C_i D_i`` for ``1 <= i <= n + 1`` (``A_{n+1} = I``)."""
        d = self.params.d
        if i == self.n + 1:
            return np.eye(d, dtype=complex)
        return self.C[i - 1] @ self.D[i - 1]

    def B(self, i: int) -> np.ndarray:
        """``B_i = C_i C_i^dagger + D_{i+1}^dagger D_{i+1} + lam I``."""
        C, Dn = self.C[i - 1], self.D[i]
        return C @ dagger(C) + dagger(Dn) @ Dn + self.params.lam * np.eye(self.params.d)

    def reassemble(self) -> np.ndarray:
        """Rebuild ``H`` from the blocks (inverse of the extraction)."""
        d, K, n = self.params.d, self.params.K, self.n
        H = np.zeros_like(self.H)
        for i in range(n):
            H[d * i:d * (i + 1), K * d * i:K * d * (i + 1)] = self.C[i]
            H[d * i:d * (i + 1), K * d * (i + 1):K * d * (i + 2)] = dagger(self.D[i + 1])
        return H


def build_instance(params: ChannelParams, n: int, stream: fd.FadingStream) -> ChannelInstance:
    """Draw ``n d + d`` cells from ``stream`` and build ``H_{dn}``.

    Raises
    ------
    SingularBlockError
        If some ``C_i D_i`` (``2 <= i <= n``) or ``C_1 C_1^dagger`` is singular.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    d, K = params.d, params.K
    if stream.model.d != d or stream.model.K != K:
        raise ContractError("stream model does not match channel parameters")
    Z = stream.take(d * (n + 1))
    H = channel_matrix(Z, d * n)
    C = [H[d * i:d * (i + 1), K * d * i:K * d * (i + 1)].copy() for i in range(n)]
    Dn = [dagger(H[d * i:d * (i + 1), K * d * (i + 1):K * d * (i + 2)]) for i in range(n)]
    CC = C[0] @ dagger(C[0])
    _guard(CC, "C_1 C_1^dagger")
    D1 = dagger(C[0]) @ np.linalg.inv(CC)
    inst = ChannelInstance(params, n, H, C, [D1] + Dn)
    for i in range(2, n + 1):
        _guard(inst.A(i), f"A_{i}")
    return inst


def _guard(A, what: str) -> None:
    r = float(condition_ratio(A))
    if r < SINGULAR_RTOL:
        raise SingularBlockError(f"{what} is singular", condition=r)


def transfer_logdet_identity(instance: ChannelInstance) -> tuple[float, float]:
    """Both sides of the log-determinant/transfer-recursion identity.

    The left side is ``log det G_{dn} / (dn)`` from a Cholesky factorization.
    The right side runs ``A_i X_{i-1} + B_i X_i + A_{i+1}^dagger X_{i+1} = 0``
    from ``X_0 = 0``, ``X_1 = I`` and returns
    ``(sum_i log|det A_{i+1}| + log|det X_{n+1}|) / (dn)``.
    """
    p = instance.params
    if p.lam <= 0:
        raise ValueError("the identity needs lambda > 0")
    d, n = p.d, instance.n
    lhs = log_det_hpd(instance.G) / (d * n)

    X_prev = np.zeros((d, d), dtype=complex)
    X = np.eye(d, dtype=complex)
    log_scale = 0.0
    log_A = 0.0
    for i in range(1, n + 1):
        A_next = instance.A(i + 1)
        log_A += log_abs_det(A_next)
        rhs_i = instance.B(i) @ X
        if i > 1:
            rhs_i = rhs_i + instance.A(i) @ X_prev
        X_prev, X = X, -solve_conjugate_transpose_inverse(A_next) @ rhs_i
        # the recursion is linear: rescale both iterates jointly
        s = np.linalg.norm(X)
        X_prev, X = X_prev / s, X / s
        log_scale += np.log(s)
    rhs = (log_A + log_abs_det(X) + d * log_scale) / (d * n)
    return float(lhs), float(rhs)


# -- finite-size capacity --------------------------------------------------

def log_det_from_band(band: np.ndarray, rho: float) -> float:
    """``log det(I + rho HH^dagger)`` of a finite section given its band rows.

    ``band`` is ``(m, 2d+1)`` as returned by :func:`band_from_cells` with
    ``lam = 0``; entries that fall outside the section are ignored.
    """
    m, w = band.shape
    d = (w - 1) // 2
    ab = np.zeros((d + 1, m), dtype=complex)
    # upper band storage: ab[d - u, i + u] = A[i, i + u]
    for u in range(d + 1):
        ab[d - u, u:] = rho * band[:m - u, d + u]
    ab[d] += 1.0
    ab[d] = ab[d].real
    return log_det_hpd_banded(ab)


def finite_capacity_samples(params: ChannelParams, model: fd.FadingModel, m: int,
                            replicas: int, seed: int = 0) -> np.ndarray:
    """Per-replica ``(1/m) log det(I + rho H_m H_m^dagger)``."""
    if params.lam <= 0:
        raise ValueError("finite capacity needs rho < inf")
    out = np.empty(replicas)
    for r in range(replicas):
        Z = fd.cells(model, seed, r, 1, m + params.d)
        out[r] = log_det_from_band(band_from_cells(Z), params.rho) / m
    return out


def truncated_capacity_samples(params: ChannelParams, model: fd.FadingModel, n: int,
                               replicas: int, seed: int = 0, rho: float | None = None) -> np.ndarray:
    """Per-replica ``(1/n) log det(I + rho H H^dagger)`` for the tall channel."""
    rho = params.rho if rho is None else rho
    out = np.empty(replicas)
    for r in range(replicas):
        H = truncated_channel_matrix(fd.cells(model, seed, r, 1, n))
        # the Kn x Kn Gram form is smaller when K = 1
        gram = dagger(H) @ H if H.shape[1] <= H.shape[0] else H @ dagger(H)
        out[r] = log_det_hpd(np.eye(gram.shape[0]) + rho * gram) / n
    return out


def mean_stderr(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return float(x.mean()), 0.0
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(x.size))


def capacity_finite(params: ChannelParams, model: fd.FadingModel, m: int,
                    replicas: int = 50, seed: int = 0):
    """Monte Carlo ``Cap_m(rho)`` in nats with its standard error."""
    from .capacity import CapacityReport

    if m < 1 or replicas < 1:
        raise ValueError("need m >= 1 and replicas >= 1")
    v, se = mean_stderr(finite_capacity_samples(params, model, m, replicas, seed))
    return CapacityReport(value=v, method="finite_m", error=se)


__all__ = [
    "ChannelParams", "ChannelInstance", "build_instance", "capacity_finite",
    "transfer_logdet_identity", "channel_matrix", "truncated_channel_matrix",
    "band_from_cells", "blocks_from_cells", "block_log_det_A", "cross_log",
    "finite_capacity_samples", "truncated_capacity_samples", "log_det_from_band",
    "mean_stderr",
]
