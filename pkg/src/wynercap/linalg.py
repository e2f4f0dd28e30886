"""Dense complex kernels and exterior powers.

Every function here accepts stacks of matrices: leading axes are treated as
batch dimensions, so the transfer-matrix constructors can run many
independent chains at once.
"""

from __future__ import annotations

import warnings
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np
import scipy.linalg as la

from .errors import DimensionError, SingularBlockError

# A block is singular when its smallest singular value falls below this
# fraction of its largest one.
SINGULAR_RTOL = 1e-12


@lru_cache(maxsize=None)
def subset_index(n: int, k: int) -> np.ndarray:
    """Lexicographically ordered ``k``-subsets of ``{0, .., n-1}``.

    Row ``r`` of the returned ``(C(n, k), k)`` integer array is the subset
    mapped to basis vector ``r`` of the ``k``-th exterior power.  The last
    row is always ``{n-k, .., n-1}``.
    """
    if not 0 <= k <= n:
        raise DimensionError(f"need 0 <= k <= n, got k={k}, n={n}")
    out = np.array(list(combinations(range(n), k)), dtype=np.intp)
    out = out.reshape(comb(n, k), k)
    out.setflags(write=False)
    return out


def wedge_power(M, k: int) -> np.ndarray:
    """``k``-th exterior power of a ``p x q`` matrix (or a stack of them).

    Entry ``(S, T)`` is the minor of ``M`` on row subset ``S`` and column
    subset ``T``, both enumerated by :func:`subset_index`.  ``k = 0`` gives
    the ``1 x 1`` identity.

    Raises
    ------
    DimensionError
        If ``k`` is outside ``[0, min(p, q)]``.
    """
    M = np.asarray(M)
    if M.ndim < 2:
        raise DimensionError("wedge_power needs a matrix")
    p, q = M.shape[-2:]
    if not 0 <= k <= min(p, q):
        raise DimensionError(f"order k={k} out of range for a {p}x{q} matrix")
    batch = M.shape[:-2]
    if k == 0:
        return np.ones(batch + (1, 1), dtype=np.result_type(M, np.float64))
    if k == 1:
        return M.copy()
    rows = subset_index(p, k)
    cols = subset_index(q, k)
    sub = M[..., rows[:, None, :, None], cols[None, :, None, :]]
    return np.linalg.det(sub)


def log_abs_det(M) -> float:
    """``log|det M|`` from a partially pivoted LU factorization.

    Returns ``-inf`` when a pivot is exactly zero (or subnormal).
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"log_abs_det needs a square matrix, got {M.shape}")
    with warnings.catch_warnings():
        # exact zero pivots are reported through the -inf sentinel
        warnings.simplefilter("ignore", la.LinAlgWarning)
        lu, _ = la.lu_factor(M, check_finite=True)
    piv = np.abs(np.diag(lu))
    if np.any(piv < np.finfo(float).tiny):
        return -np.inf
    return float(np.sum(np.log(piv)))


def log_det_hpd(M) -> float:
    """``log det`` of a Hermitian positive-definite matrix via Cholesky."""
    L = la.cholesky(np.asarray(M), lower=True)
    return 2.0 * float(np.sum(np.log(np.abs(np.diag(L)).real)))


def log_det_hpd_banded(band_upper) -> float:
    """``log det`` of a banded HPD matrix in LAPACK upper band storage."""
    c = la.cholesky_banded(band_upper, lower=False)
    return 2.0 * float(np.sum(np.log(np.abs(c[-1]))))


def condition_ratio(A) -> np.ndarray:
    """Smallest over largest singular value, per matrix in the stack."""
    s = np.linalg.svd(np.asarray(A), compute_uv=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(s[..., 0] > 0, s[..., -1] / s[..., 0], 0.0)


def solve_conjugate_transpose_inverse(A, *, check: bool = True) -> np.ndarray:
    """Return ``(A^{-1})^dagger`` by solving ``A^dagger X = I``.

    Parameters
    ----------
    A : array_like, shape (..., d, d)
    check : bool
        Run the singularity guard first.  Hot loops that already screen
        their denominators may switch it off.

    Raises
    ------
    SingularBlockError
        If some matrix in the stack is singular to :data:`SINGULAR_RTOL`.
    """
    A = np.asarray(A)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise DimensionError(f"expected square blocks, got {A.shape}")
    if check:
        ratio = condition_ratio(A)
        bad = ratio < SINGULAR_RTOL
        if np.any(bad):
            raise SingularBlockError(
                "block is singular to working precision",
                condition=float(np.min(ratio)),
                count=int(np.count_nonzero(bad)),
            )
    AH = np.conj(np.swapaxes(A, -1, -2))
    eye = np.broadcast_to(np.eye(A.shape[-1], dtype=A.dtype), A.shape)
    return np.linalg.solve(AH, eye)


def dagger(A) -> np.ndarray:
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(np.asarray(A), -1, -2))


def frobenius(A) -> np.ndarray:
    """Frobenius norm over the last two axes."""
    return np.linalg.norm(np.asarray(A), axis=(-2, -1))
