"""Limiting capacity, its bounds and its high-SNR behaviour."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import fading as fd
from ..channel import ChannelParams
from ..errors import ModelError
from ..lyapunov import top_exponent
from ..transfer import family_scale, transfer_process
from .bounds import (
    Bound,
    bound_information,
    bound_one_step_closed,
    bound_p_step,
    bound_truncation,
    one_step_integrand,
)
from .highsnr import (
    ArtificialFadingReport,
    DomainProbe,
    HighSnrReport,
    artificial_fading_offset,
    domain_probe,
    high_snr,
    split_offsets,
)
from .nonfading import nonfading_closed_form, spectral_capacity

METHODS = ("finite_m", "limit_lyapunov", "closed_form_nonfading", "high_snr_affine")
LOG2 = float(np.log(2.0))

# Fraction of cells with a vanishing frontier product above which a model
# is rejected outright.
SINGULAR_RATE_LIMIT = 1e-4


@dataclass
class CapacityReport:
    """A capacity value in nats with provenance and attached bounds.

    ``components`` holds ``(log rho, E log|zeta_0 zeta_d^dagger|, Lyapunov
    term)`` for the limit formula; ``error`` is a heuristic standard error.
    """

    value: float
    method: str
    error: float = 0.0
    components: tuple = ()
    bounds: list = field(default_factory=list)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")

    @property
    def bits(self) -> float:
        return self.value / LOG2

    def violations(self, sigmas: float = 3.0) -> list:
        """Attached bounds that the value contradicts beyond ``sigmas`` errors."""
        return [b for b in self.bounds if not b.holds_for(self.value, self.error, sigmas)]


def screen_frontier(model: fd.FadingModel, samples: int = 10_000, seed: int = 0) -> float:
    """Fraction of sampled cells whose frontier product vanishes.

    Raises
    ------
    ModelError
        If the fraction exceeds :data:`SINGULAR_RATE_LIMIT`.
    """
    from ..channel import cross_log

    n = samples if model.is_random else 1
    x = cross_log(fd.cells(model, seed, 0, 1, n))
    rate = float(np.mean(~np.isfinite(x)))
    if rate > SINGULAR_RATE_LIMIT:
        raise ModelError(f"frontier product vanishes in {rate:.2%} of cells")
    return rate


def capacity_limit(params: ChannelParams, model: fd.FadingModel, family: str = "SmallN",
                   n_steps: int = 100_000, burn_in: int = 1000, batches: int = 30,
                   seed: int = 0, method: str = "frame", bounds: bool = True,
                   bound_samples: int = 20_000) -> CapacityReport:
    """Limiting per-cell capacity from a Lyapunov exponent.

    ``Cap = log rho + E log|zeta_0 zeta_d^dagger| + gamma(X) / s`` where
    ``X`` is the chosen lifted family (``SmallN`` by default) and ``s`` its
    number of cells per step.  The last two terms are estimated together,
    chain by chain, which cancels most of their fluctuations.

    Parameters
    ----------
    params, model
        Must agree on ``d`` and ``K``; ``params.lam`` must be positive.
    family : {"SmallN", "N", "Xi", "SmallXi"}
    n_steps, burn_in, batches, seed, method
        Forwarded to :func:`wynercap.lyapunov.top_exponent`.
    bounds : bool
        Attach the information-theoretic lower and Hadamard upper bounds.
    """
    if params.lam <= 0:
        raise ValueError("capacity_limit needs lambda > 0")
    if params.d != model.d or params.K != model.K:
        raise ValueError("model does not match channel parameters")
    screen_frontier(model, seed=seed)
    proc = transfer_process(family, model, params.lam)
    est = top_exponent(proc, n_steps, burn_in, batches, seed, method)
    scale = family_scale(family, params.d)
    v, se = est.combined(scale)
    cross = fd.cross_log_moment(model, seed=seed)
    e_term = cross.value if cross.analytic else est.offset / scale
    report = CapacityReport(
        value=params.log_rho + v,
        method="limit_lyapunov",
        error=se,
        components=(params.log_rho, e_term, v - e_term),
    )
    if bounds:
        report.bounds.extend(bound_information(params, model, bound_samples, seed))
    return report


def capacity_nonfading(params: ChannelParams, model: fd.FadingModel) -> CapacityReport:
    """Exact limiting capacity of a constant model via its Toeplitz symbol."""
    if model.is_random:
        raise ModelError("capacity_nonfading needs a deterministic model")
    return CapacityReport(spectral_capacity(model, params.rho), "closed_form_nonfading")


def capacity_high_snr(params: ChannelParams, report: HighSnrReport) -> CapacityReport:
    """Affine high-SNR approximation ``log(K rho) - L_inf log 2``."""
    return CapacityReport(report.affine(params.rho), "high_snr_affine", report.L_inf_stderr * LOG2)


__all__ = [
    "CapacityReport", "HighSnrReport", "DomainProbe", "ArtificialFadingReport", "Bound",
    "capacity_limit", "capacity_nonfading", "capacity_high_snr", "screen_frontier",
    "high_snr", "split_offsets", "domain_probe", "artificial_fading_offset",
    "bound_p_step", "bound_one_step_closed", "bound_information", "bound_truncation",
    "one_step_integrand", "nonfading_closed_form", "spectral_capacity",
]
