"""Upper and lower bounds on the limiting capacity.

Every function returns :class:`Bound` objects whose ``value`` is the full
capacity bound in nats (``log rho`` included).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .. import fading as fd
from ..channel import (
    ChannelParams,
    band_from_cells,
    mean_stderr,
    truncated_capacity_samples,
)
from ..lyapunov import p_step_upper_bound
from ..transfer import family_scale, transfer_process

P_STEP_FAMILIES = ("N", "SmallN", "Xi", "SmallXi")


@dataclass(frozen=True)
class Bound:
    name: str
    side: str          # "lower" or "upper"
    value: float
    stderr: float = 0.0

    def holds_for(self, value: float, error: float = 0.0, sigmas: float = 3.0) -> bool:
        """Whether ``value`` is on the right side, up to ``sigmas`` combined errors."""
        tol = sigmas * float(np.hypot(error, self.stderr))
        if self.side == "lower":
            return self.value <= value + tol
        return value - tol <= self.value


def _need_finite_snr(params: ChannelParams):
    if params.lam <= 0:
        raise ValueError("bounds need a finite SNR (lambda > 0)")


def _check(params: ChannelParams, model: fd.FadingModel):
    if params.d != model.d or params.K != model.K:
        raise ValueError("model does not match channel parameters")


def bound_p_step(params: ChannelParams, model: fd.FadingModel, family: str = "N", p: int = 1,
                 replicas: int = 10_000, seed: int = 0) -> Bound:
    """Subadditive ``p``-step upper bound for one of the four lifted families.

    ``log rho + E log|zeta_0 zeta_d^dagger| + E log||X_p .. X_1|| / (s p)``
    with ``s = d`` for the block families and ``s = 1`` otherwise.  The
    expectation term is estimated pathwise from the same cells.
    """
    _check(params, model)
    _need_finite_snr(params)
    if family not in P_STEP_FAMILIES:
        raise ValueError(f"family must be one of {P_STEP_FAMILIES}")
    proc = transfer_process(family, model, params.lam)
    est = p_step_upper_bound(proc, p, replicas, seed)
    v, se = est.combined(family_scale(family, params.d))
    return Bound(f"p_step[{family},p={p}]", "upper", params.log_rho + v, se)


def one_step_integrand(band: np.ndarray) -> np.ndarray:
    """Argument of the one-step closed-form bound for each band row.

    Equals ``||n||_F^2 |G[i, i+d]|^2`` where ``n`` is the exterior-power
    companion matrix of the row.
    """
    band = np.asarray(band)
    d = (band.shape[-1] - 1) // 2
    a2 = np.abs(band) ** 2
    inner = a2[..., 1:2 * d].sum(axis=-1)
    edge = a2[..., 0] + a2[..., 2 * d]
    return comb(2 * d - 2, d - 1) * inner + comb(2 * d - 1, d) * edge


def bound_one_step_closed(params: ChannelParams, model: fd.FadingModel, samples: int = 100_000,
                          seed: int = 0) -> Bound:
    """One-step upper bound written directly in terms of one row of ``G``."""
    _check(params, model)
    _need_finite_snr(params)
    d = params.d
    n = 1 if not model.is_random else samples
    Z = fd.cells(model, seed, 0, 1, n * (d + 1)).reshape(n, d + 1, d + 1, model.K)
    band = band_from_cells(Z, params.lam)[:, 0, :]
    v, se = mean_stderr(0.5 * np.log(one_step_integrand(band)))
    return Bound("one_step_closed", "upper", params.log_rho + v, se)


def bound_information(params: ChannelParams, model: fd.FadingModel, samples: int = 100_000,
                      seed: int = 0) -> tuple[Bound, Bound]:
    """Single-user lower bound and Hadamard upper bound.

    Lower: ``max(E log(lam + ||zeta_0||^2), E log(lam + ||zeta_d||^2))``.
    Upper: ``E log(lam + sum_s ||zeta_{1,1+s}||^2)``, one station collecting
    offset ``s`` from cell ``1 + s``.
    """
    _check(params, model)
    _need_finite_snr(params)
    d, lam = params.d, params.lam
    n = 1 if not model.is_random else samples
    Z = fd.cells(model, seed, 0, 1, n + d)
    p2 = np.sum(np.abs(Z) ** 2, axis=-1)            # (n + d, d + 1)
    lo0 = mean_stderr(np.log(lam + p2[:n, 0]))
    lod = mean_stderr(np.log(lam + p2[:n, d]))
    lo = max(lo0, lod, key=lambda t: t[0])
    row = sum(p2[s:s + n, s] for s in range(d + 1))
    up = mean_stderr(np.log(lam + row))
    lr = params.log_rho
    return (Bound("information_lower", "lower", lr + lo[0], lo[1]),
            Bound("hadamard_upper", "upper", lr + up[0], up[1]))


def bound_truncation(params: ChannelParams, model: fd.FadingModel, n: int,
                     replicas: int = 2000, seed: int = 0) -> tuple[Bound, Bound]:
    """Bounds from a finite section of ``n`` cells heard by ``n + d`` stations.

    Lower: ``n/(n+d) Cap_n((n+d) rho / n)``.  Upper: ``Cap_n(rho)``.
    """
    _check(params, model)
    _need_finite_snr(params)
    if n < 1:
        raise ValueError("n must be >= 1")
    d = params.d
    reps = 1 if not model.is_random else replicas
    up = truncated_capacity_samples(params, model, n, reps, seed)
    lo = truncated_capacity_samples(params, model, n, reps, seed, rho=(n + d) * params.rho / n)
    lo = lo * n / (n + d)
    u, use = mean_stderr(up)
    l, lse = mean_stderr(lo)
    return (Bound(f"truncation_lower[n={n}]", "lower", l, lse),
            Bound(f"truncation_upper[n={n}]", "upper", u, use))
