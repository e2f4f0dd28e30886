"""High-SNR slope and power offset.

As ``rho -> inf`` the capacity behaves like ``S_inf (log(K rho) - L_inf log 2)``
with ``S_inf = 1``.  The offset ``L_inf`` is in 3-dB units.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import fading as fd
from ..lyapunov import lyapunov_spectrum, top_exponent
from ..transfer import TransferFamily, TransferProcess, transfer_process

LOG2 = float(np.log(2.0))


@dataclass
class HighSnrReport:
    """Slope, offset and, for ``K = 1``, the split candidates of the offset.

    ``split_terms[i]`` estimates ``gamma(wedge^i psi^1) + gamma(wedge^{d-i} psi^2)``
    and ``L_inf`` uses the largest one.  ``L_inf_lifted`` is the same offset
    from the top exponent of the zero-noise exterior-power companion chain,
    which works for every ``K``.
    """

    d: int
    K: int
    L_inf: float
    L_inf_stderr: float
    method: str
    S_inf: float = 1.0
    split_terms: np.ndarray = field(default_factory=lambda: np.zeros(0))
    split_stderr: np.ndarray = field(default_factory=lambda: np.zeros(0))
    cross_term: float = float("nan")
    L_inf_lifted: float | None = None
    L_inf_lifted_stderr: float | None = None

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.split_terms)) if self.split_terms.size else -1

    def affine(self, rho: float) -> float:
        """``log(K rho) - L_inf log 2``, the affine capacity approximation (nats)."""
        return float(np.log(self.K * rho) - self.L_inf * LOG2)


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0


def split_offsets(model: fd.FadingModel, n_steps: int = 100_000, burn_in: int = 1000,
                  batches: int = 30, seed: int = 0):
    """Per-chain split candidates and cross term for a ``K = 1`` model.

    Returns ``(candidates, cross)`` with shapes ``(batches, d+1)`` and
    ``(batches,)``; ``candidates[:, i]`` pairs ``i`` exponents of ``psi^1``
    with ``d - i`` exponents of ``psi^2``.  Both spectra and the cross term
    come from the same cells.
    """
    d = model.d
    kw = dict(n_steps=n_steps, burn_in=burn_in, batches=batches, seed=seed)
    s1 = lyapunov_spectrum(TransferProcess(TransferFamily.SmallPsi1, model, 0.0), d, **kw)
    s2 = lyapunov_spectrum(TransferProcess(TransferFamily.SmallPsi2, model, 0.0), d, **kw)
    p1, p2 = s1.partial_sums(), s2.partial_sums()
    cand = np.stack([p1[:, i] + p2[:, d - i] for i in range(d + 1)], axis=1)
    return cand, s1.offsets


def high_snr(model: fd.FadingModel, n_steps: int = 100_000, burn_in: int = 1000,
             batches: int = 30, seed: int = 0, lifted: bool | None = None) -> HighSnrReport:
    """High-SNR slope and power offset of ``model``.

    For ``K = 1`` the offset is
    ``-(E log|zeta_0 zeta_d^dagger| + max_i split_i) / log 2``, every split
    candidate being evaluated.  For any ``K`` (and for ``K = 1`` when
    ``lifted`` is true) it is also computed as
    ``(log K - E log|zeta_0 zeta_d^dagger| - gamma(n(0))) / log 2``.
    """
    d, K = model.d, model.K
    lifted = (K > 1) if lifted is None else (lifted or K > 1)
    kw = dict(n_steps=n_steps, burn_in=burn_in, batches=batches, seed=seed)
    rep = None
    if K == 1:
        cand, cross = split_offsets(model, **kw)
        terms = cand.mean(axis=0)
        ses = cand.std(axis=0, ddof=1) / np.sqrt(batches)
        i = int(np.argmax(terms))
        v, se = _mean_se(cross + cand[:, i])
        rep = HighSnrReport(d, K, -v / LOG2, se / LOG2, "split", split_terms=terms,
                            split_stderr=ses, cross_term=float(cross.mean()))
    if lifted:
        est = top_exponent(transfer_process("SmallN", model, 0.0), method="frame", **kw)
        v, se = est.combined(1.0)
        L, Lse = (np.log(K) - v) / LOG2, se / LOG2
        if rep is None:
            rep = HighSnrReport(d, K, float(L), float(Lse), "lifted")
        rep.L_inf_lifted, rep.L_inf_lifted_stderr = float(L), float(Lse)
    return rep


@dataclass(frozen=True)
class DomainProbe:
    """Monotone majorant ``f_p`` at ``(alpha, beta)`` and its domain flag."""

    alpha: float
    beta: float
    p: int
    f_p: float
    stderr: float
    threshold: float = -0.05

    @property
    def in_domain(self) -> bool:
        return self.f_p <= self.threshold


def _abs_products(alpha, beta, a, b, c):
    """``(1/p) log`` Frobenius norms of products of the absolute-valued factors.

    ``a, b, c`` have shape ``(samples, p)`` and hold ``|a_i|, |b_i|, |c_i|``.
    """
    S, p = a.shape
    P1 = np.broadcast_to(np.eye(2), (S, 2, 2)).copy()
    P2 = P1.copy()
    l1 = np.zeros(S)
    l2 = np.zeros(S)
    for t in range(p):
        F1 = np.zeros((S, 2, 2))
        F1[:, 0, 0] = beta * b[:, t] / a[:, t]
        F1[:, 0, 1] = alpha
        F1[:, 1, 0] = c[:, t] / a[:, t]
        F2 = np.zeros((S, 2, 2))
        F2[:, 0, 0] = beta * b[:, t] / c[:, t]
        F2[:, 0, 1] = alpha * a[:, t] / c[:, t]
        F2[:, 1, 0] = 1.0
        P1 = F1 @ P1
        P2 = F2 @ P2
        n1 = np.linalg.norm(P1, axis=(1, 2))
        n2 = np.linalg.norm(P2, axis=(1, 2))
        P1 /= n1[:, None, None]
        P2 /= n2[:, None, None]
        l1 += np.log(n1)
        l2 += np.log(n2)
    return (l1 + l2) / p


def domain_probe(alpha: float, beta: float, p: int = 20, samples: int = 10_000, seed: int = 0,
                 threshold: float = -0.05, model: fd.FadingModel | None = None) -> DomainProbe:
    """Evaluate ``f_p(alpha, beta)`` for the ``d = 2`` scaled model.

    The base coefficients ``(a, b, c)`` come from ``model`` (unit Rayleigh on
    each offset by default, offsets ``2, 1, 0`` respectively).  With a fixed
    seed the same base draws are used for every ``(alpha, beta)``, which makes
    the estimate exactly nondecreasing in both parameters.
    """
    if not (0 < alpha <= 1 and 0 <= beta <= 1):
        raise ValueError("need (alpha, beta) in (0, 1] x [0, 1]")
    model = fd.rayleigh(2) if model is None else model
    if model.d != 2 or model.K != 1:
        raise ValueError("the domain probe needs a d = 2, K = 1 base model")
    Z = np.abs(fd.cells(model, seed, 0, 1, samples * p)[..., 0]).reshape(samples, p, 3)
    vals = _abs_products(alpha, beta, Z[..., 2], Z[..., 1], Z[..., 0])
    return DomainProbe(alpha, beta, p, float(vals.mean()),
                       float(vals.std(ddof=1) / np.sqrt(samples)), threshold)


@dataclass(frozen=True)
class ArtificialFadingReport:
    """Offsets with and without pseudo-random user signatures, 3-dB units."""

    L_inf: float
    L_inf_stderr: float
    L_inf_0: float
    shift: float
    shift_direct: float
    shift_direct_stderr: float


def artificial_fading_offset(alphas, K: int = 1, law: str = "rayleigh", epsilon: float = 0.0,
                             n_steps: int = 1_000_000, burn_in: int = 1000, batches: int = 30,
                             seed: int = 0) -> ArtificialFadingReport:
    """Power offset penalty of artificial fading on the gains ``alphas``.

    ``shift`` is ``-E log||P||^2 / log 2`` from the pseudo-fading law;
    ``shift_direct`` is the difference of the two offsets computed by
    :func:`high_snr` on the faded and on the unfaded model.
    """
    p2 = fd.pseudo_log_norm2(law, K, epsilon, seed=seed)
    shift = -p2.value / LOG2
    kw = dict(n_steps=n_steps, burn_in=burn_in, batches=batches, seed=seed)
    faded = high_snr(fd.artificial(alphas, K, law, epsilon), **kw)
    plain = high_snr(fd.artificial(alphas, K, "constant"), **kw)
    direct = faded.L_inf - plain.L_inf
    return ArtificialFadingReport(faded.L_inf, faded.L_inf_stderr, plain.L_inf, float(shift),
                                  float(direct), float(np.hypot(faded.L_inf_stderr, plain.L_inf_stderr)))
