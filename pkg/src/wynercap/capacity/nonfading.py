"""Capacity of channels without fading.

With deterministic coefficients ``v_0 .. v_d`` (row vectors) the operator
``HH^dagger`` is a banded Toeplitz matrix with symbol
``g(f) = ||sum_s v_s exp(2 pi i s f)||^2``, and the limiting per-cell
capacity is ``int_0^1 log(1 + rho g(f)) df``.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad

from ..fading import FadingModel

KINDS = ("soft_handoff", "wyner_symmetric", "wyner_asymmetric")


def soft_handoff(alpha: float, K: int, rho: float) -> float:
    """Closed form for ``d = 1``, gains ``(1, alpha)``."""
    s = K * rho * (1.0 + alpha ** 2)
    disc = 1.0 + 2.0 * s + (K * rho * (1.0 - alpha ** 2)) ** 2
    return float(np.log((1.0 + s + np.sqrt(disc)) / 2.0))


def _symmetric_symbol(alpha, K, rho):
    return lambda f: np.log1p(K * rho * (1.0 + 2.0 * alpha * np.cos(2 * np.pi * f)) ** 2)


def _asymmetric_symbol(alpha, K, rho):
    def g(f):
        c1, c2 = np.cos(2 * np.pi * f), np.cos(4 * np.pi * f)
        return np.log1p(K * rho * (1 + 2 * alpha ** 2 + 2 * alpha * (1 + alpha) * c1 + 2 * alpha * c2))
    return g


def _integrate(g, method: str) -> float:
    if method == "quad":
        val, _ = quad(g, 0.0, 1.0, epsabs=1e-10, epsrel=1e-10, limit=200)
        return float(val)
    if method == "trapezoid":
        # spectrally accurate for smooth periodic integrands
        f = np.arange(2048) / 2048
        return float(np.mean(g(f)))
    raise ValueError("method must be 'quad' or 'trapezoid'")


def nonfading_closed_form(kind: str, alpha: float, K: int = 1, rho: float = 1.0,
                          method: str = "quad") -> float:
    """Limiting capacity (nats) of a named non-fading model.

    Parameters
    ----------
    kind : {"soft_handoff", "wyner_symmetric", "wyner_asymmetric"}
    alpha : float in [0, 1]
    K : int
    rho : float > 0
    method : {"quad", "trapezoid"}
        Integration rule for the two ``d = 2`` models.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if not rho > 0:
        raise ValueError("rho must be positive")
    if kind == "soft_handoff":
        return soft_handoff(alpha, K, rho)
    if kind == "wyner_symmetric":
        return _integrate(_symmetric_symbol(alpha, K, rho), method)
    if kind == "wyner_asymmetric":
        return _integrate(_asymmetric_symbol(alpha, K, rho), method)
    raise ValueError(f"kind must be one of {KINDS}")


def spectral_capacity(model: FadingModel, rho: float, method: str = "quad") -> float:
    """Limiting capacity of any constant model from its Toeplitz symbol."""
    v = model.constant_cell()
    s = np.arange(v.shape[0])

    def g(f):
        f = np.atleast_1d(f)
        ph = np.exp(2j * np.pi * np.outer(f, s))
        sym = np.sum(np.abs(ph @ v) ** 2, axis=-1)
        return np.log1p(rho * sym)

    if method == "quad":
        return _integrate(lambda f: float(g(f)[0]), "quad")
    return _integrate(g, method)
