"""Cross-check suites: each check reports a discrepancy against a tolerance."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import fading as fd
from .capacity import (
    bound_information,
    bound_one_step_closed,
    bound_p_step,
    bound_truncation,
    capacity_limit,
    artificial_fading_offset,
    high_snr,
    nonfading_closed_form,
    spectral_capacity,
)
from .channel import ChannelParams, band_from_cells, blocks_from_cells, build_instance, transfer_logdet_identity
from .linalg import wedge_power
from .transfer import make_delta, make_M, make_P1, make_P2, make_small_delta, make_small_m

EULER_OFFSET = float(np.euler_gamma / np.log(2))
CAPTION_VALUES = {1.0: (1.06, 1.47, 1.95, 2.66), 0.1: (2.66, 3.25, 3.87, 4.72)}
CAPTION_K = (1, 2, 4, 10)


@dataclass(frozen=True)
class Check:
    name: str
    discrepancy: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.discrepancy) and self.discrepancy <= self.tolerance)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: discrepancy {self.discrepancy:.3e} (tolerance {self.tolerance:.1e})"


def _rel(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def _chain(mats) -> np.ndarray:
    P = np.eye(mats.shape[-1], dtype=complex)
    for X in mats:
        P = X @ P
    return P


def identity_errors(d: int, seed: int, lam: float = 0.7) -> dict:
    """Worst relative errors of the exact identities on one seeded instance."""
    model = fd.rayleigh(d)
    Z = fd.cells(model, seed, 0, 1, 3 * d)
    C, D = blocks_from_cells(Z)
    M = make_M(C[0], D[0], C[1], D[1], lam)
    out = {
        "M = P2(i+1) P1(i)": _rel(make_P2(C[1], D[1]) @ make_P1(C[0], D[0], lam), M),
        "Delta = P1 P2": _rel(make_P1(C[0], D[0], lam) @ make_P2(C[0], D[0]), make_delta(C[0], D[0], lam)),
    }
    sm = make_small_m(band_from_cells(Z[:2 * d], lam))
    out["N = product of n"] = _rel(_chain(wedge_power(sm[:d], d)), wedge_power(M, d))
    out["Delta = product of delta"] = _rel(_chain(make_small_delta(Z[:d], lam)), make_delta(C[0], D[0], lam))
    rng = np.random.default_rng([seed, d])
    A = rng.standard_normal((2 * d, 2 * d)) + 1j * rng.standard_normal((2 * d, 2 * d))
    B = rng.standard_normal((2 * d, 2 * d)) + 1j * rng.standard_normal((2 * d, 2 * d))
    k = 1 + seed % (2 * d)
    out["wedge multiplicativity"] = _rel(wedge_power(A @ B, k), wedge_power(A, k) @ wedge_power(B, k))
    stream = fd.FadingStream(model, seed=seed, replica=1)
    inst = build_instance(ChannelParams(d, 1, lam), 1 + seed % 6, stream)
    lhs, rhs = transfer_logdet_identity(inst)
    out["log-det transfer identity"] = abs(lhs - rhs) / (1.0 + abs(lhs))
    return out


def suite_identities(seed: int = 0, instances: int = 100, tolerance: float = 1e-9) -> list:
    worst: dict = {}
    for j in range(instances):
        d = (1, 2, 3)[j % 3]
        for name, err in identity_errors(d, seed * 1_000_003 + j).items():
            worst[name] = max(worst.get(name, 0.0), err)
    return [Check(f"{name} ({instances} instances, d=1..3)", err, tolerance) for name, err in worst.items()]


def suite_closedforms(tolerance: float = 1e-6) -> list:
    checks = []
    ref = np.log((3 + np.sqrt(5)) / 2)
    checks.append(Check("soft handoff alpha=1 K=1 rho=1 algebraic", abs(nonfading_closed_form("soft_handoff", 1.0) - ref), 1e-10))
    for kind, gains in (("soft_handoff", (1.0, 0.6)), ("wyner_symmetric", (0.6, 1.0, 0.6)),
                        ("wyner_asymmetric", (1.0, 0.6, 0.6))):
        for K, rho in ((1, 1.0), (4, 10.0)):
            direct = nonfading_closed_form(kind, 0.6, K, rho)
            spec = spectral_capacity(fd.constant(gains, K), rho)
            checks.append(Check(f"{kind} K={K} rho={rho}: formula vs Toeplitz symbol", abs(direct - spec), tolerance))
            if kind != "soft_handoff":
                trap = nonfading_closed_form(kind, 0.6, K, rho, method="trapezoid")
                checks.append(Check(f"{kind} K={K} rho={rho}: quadrature vs trapezoid", abs(direct - trap), tolerance))
    for lam, vals in CAPTION_VALUES.items():
        for K, v in zip(CAPTION_K, vals):
            got = nonfading_closed_form("wyner_symmetric", 1.0, K, 1.0 / lam)
            checks.append(Check(f"symmetric alpha=1 K={K} lambda={lam} vs published {v}", abs(got - v), 0.005))
    checks.append(Check("asymmetric = symmetric at alpha=1",
                        abs(nonfading_closed_form("wyner_asymmetric", 1.0, 2, 3.0)
                            - nonfading_closed_form("wyner_symmetric", 1.0, 2, 3.0)), tolerance))
    return checks


def suite_sandwiches(seed: int = 0, samples: int = 20_000, ds=(1, 2, 3), lams=(0.1, 1.0)) -> list:
    """Orderings between the limit estimate and every bound, in units of sigma."""
    checks = []
    for d in ds:
        for lam in lams:
            p = ChannelParams(d, 1, lam)
            m = fd.rayleigh(d)
            cap = capacity_limit(p, m, n_steps=samples, seed=seed, bounds=False)
            bounds = list(bound_information(p, m, samples, seed))
            bounds += [bound_p_step(p, m, "N", k, samples // 4, seed) for k in (1, 2, 4)]
            bounds.append(bound_one_step_closed(p, m, samples, seed))
            bounds += list(bound_truncation(p, m, 16, max(200, samples // 50), seed))
            for b in bounds:
                sig = float(np.hypot(cap.error, b.stderr)) or 1e-12
                gap = (b.value - cap.value) if b.side == "lower" else (cap.value - b.value)
                checks.append(Check(f"d={d} lambda={lam}: {b.name} ({b.side}) in sigmas", max(gap, 0.0) / sig, 3.0))
    return checks


def suite_highsnr(seed: int = 0, n_steps: int = 300_000) -> list:
    checks = []
    for name, model in (("d=1 Rayleigh", fd.rayleigh(1)), ("d=2 asymmetric 0.3", fd.asym_wyner_d2(0.3, 0.3))):
        r = high_snr(model, n_steps=n_steps, seed=seed)
        checks.append(Check(f"{name}: L_inf vs Euler constant / log 2", abs(r.L_inf - EULER_OFFSET), 0.01))
    a = artificial_fading_offset([1.0, 0.5], 1, "rayleigh", n_steps=n_steps, seed=seed)
    checks.append(Check("artificial fading: formula shift vs direct", abs(a.shift - a.shift_direct), 0.01))
    return checks


SUITES: dict[str, Callable[..., list]] = {
    "identities": suite_identities,
    "closedforms": suite_closedforms,
    "sandwiches": suite_sandwiches,
    "highsnr": suite_highsnr,
}


def run_suite(name: str, seed: int = 0) -> list:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    fn = SUITES[name]
    return fn() if name == "closedforms" else fn(seed=seed)
