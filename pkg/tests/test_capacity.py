import numpy as np
import pytest

from conftest import EULER
from wynercap import fading as fd
from wynercap.capacity import (
    Bound,
    CapacityReport,
    artificial_fading_offset,
    bound_information,
    bound_one_step_closed,
    bound_p_step,
    bound_truncation,
    capacity_high_snr,
    capacity_limit,
    capacity_nonfading,
    domain_probe,
    high_snr,
    nonfading_closed_form,
    screen_frontier,
    spectral_capacity,
)
from wynercap.channel import ChannelParams
from wynercap.errors import ModelError

GOLDEN = float(np.log((3 + np.sqrt(5)) / 2))
LOG2 = float(np.log(2))
EULER_BITS = EULER / LOG2


def _sig(*se):
    return float(np.sqrt(np.sum(np.square(se))))


# -- limit ---------------------------------------------------------------

def test_limit_nonfading_soft_handoff():
    rep = capacity_limit(ChannelParams(1, 1, 1.0), fd.soft_handoff(1.0), n_steps=20_000)
    assert rep.method == "limit_lyapunov"
    assert abs(rep.value - GOLDEN) < 2e-3
    lr, e, g = rep.components
    assert lr == 0.0 and e == 0.0
    assert rep.value == pytest.approx(lr + e + g)


def test_limit_inside_information_bounds():
    rep = capacity_limit(ChannelParams(2, 1, 1.0), fd.rayleigh(2), n_steps=60_000, seed=1)
    lo, up = rep.bounds
    assert lo.side == "lower" and up.side == "upper"
    assert lo.value < rep.value < up.value
    assert rep.violations() == []
    assert rep.bits == pytest.approx(rep.value / LOG2)


def test_limit_rejects_mismatch_and_infinite_snr():
    with pytest.raises(ValueError):
        capacity_limit(ChannelParams(2, 1, 1.0), fd.rayleigh(1))
    with pytest.raises(ValueError):
        capacity_limit(ChannelParams(1, 1, 0.0), fd.rayleigh(1))


def test_frontier_violation_rejected(monkeypatch):
    with pytest.raises(ModelError):
        fd.constant((1.0, 0.0))
    assert screen_frontier(fd.rayleigh(2)) == 0.0
    real = fd.cells

    def sparse_frontier(model, seed, replica, start, n):
        Z = real(model, seed, replica, start, n)
        Z[::100, model.d] = 0.0
        return Z

    monkeypatch.setattr(fd, "cells", sparse_frontier)
    with pytest.raises(ModelError):
        screen_frontier(fd.rayleigh(1))
    with pytest.raises(ModelError):
        capacity_limit(ChannelParams(1, 1, 1.0), fd.rayleigh(1))


def test_report_violations_and_method():
    rep = CapacityReport(1.0, "finite_m", 0.01, bounds=[
        Bound("lo_ok", "lower", 0.9), Bound("up_ok", "upper", 1.02),
        Bound("lo_bad", "lower", 1.2), Bound("up_bad", "upper", 0.9, 0.01)])
    assert [b.name for b in rep.violations()] == ["lo_bad", "up_bad"]
    with pytest.raises(ValueError):
        CapacityReport(1.0, "guess")


def test_nonfading_report():
    rep = capacity_nonfading(ChannelParams(1, 1, 1.0), fd.soft_handoff(1.0))
    assert rep.method == "closed_form_nonfading"
    assert rep.value == pytest.approx(GOLDEN, abs=1e-9)
    with pytest.raises(ModelError):
        capacity_nonfading(ChannelParams(1), fd.rayleigh(1))


def test_continuity_at_infinite_snr():
    model = fd.rayleigh(1)
    zero = high_snr(model, n_steps=100_000, seed=2, lifted=True)
    # log rho + E log|zeta_0 zeta_d^dagger| + gamma(N(0)) / d, minus log rho
    limit_rest = -zero.L_inf_lifted * LOG2
    gaps = []
    for rho in (10.0, 100.0, 1000.0):
        rep = capacity_limit(ChannelParams.from_snr(1, 1, rho), model, n_steps=100_000,
                             seed=2, bounds=False)
        gaps.append(abs(rep.value - np.log(rho) - limit_rest))
    assert gaps[0] > gaps[1] > gaps[2]


# -- high SNR --------------------------------------------------------------

def test_high_snr_d1_rayleigh():
    rep = high_snr(fd.rayleigh(1), n_steps=200_000, seed=1)
    assert rep.S_inf == 1.0 and rep.method == "split"
    assert rep.split_terms.shape == (2,)
    assert abs(rep.L_inf - EULER_BITS) < 0.01
    # split candidates are both 0 for equal diagonals; the cross term is -gamma
    assert abs(rep.cross_term + EULER) < 0.01


def test_high_snr_symmetric_split_argmax():
    d = 2
    rep = high_snr(fd.rayleigh(d), n_steps=100_000, seed=3)
    mid = int(np.ceil(d / 2))
    best = rep.split_terms.max()
    assert best - rep.split_terms[mid] <= 3 * np.hypot(rep.split_stderr[mid],
                                                       rep.split_stderr[rep.argmax])


def test_high_snr_lifted_matches_split():
    rep = high_snr(fd.asym_wyner_d2(0.3, 0.3), n_steps=100_000, seed=4, lifted=True)
    assert abs(rep.L_inf - rep.L_inf_lifted) < 3 * np.hypot(rep.L_inf_stderr, rep.L_inf_lifted_stderr) + 5e-3


def test_high_snr_multiuser_uses_lifted_chain():
    rep = high_snr(fd.rayleigh(1, 2), n_steps=40_000, seed=5)
    assert rep.method == "lifted" and np.isfinite(rep.L_inf)
    approx = capacity_high_snr(ChannelParams.from_snr(1, 2, 100.0), rep)
    assert approx.method == "high_snr_affine"
    assert approx.value == pytest.approx(np.log(200.0) - rep.L_inf * LOG2)


def test_jensen_nonfading_beats_fading_d1():
    plain = high_snr(fd.constant((1.0, 1.0)), n_steps=3000, batches=3)
    faded = high_snr(fd.rayleigh(1), n_steps=100_000, seed=6)
    assert abs(plain.L_inf) < 1e-3
    assert plain.L_inf < faded.L_inf
    rho = 1e3
    assert spectral_capacity(fd.constant((1.0, 1.0)), rho) > capacity_limit(
        ChannelParams.from_snr(1, 1, rho), fd.rayleigh(1), n_steps=60_000, bounds=False).value


# -- p-step and one-step bounds -------------------------------------------

def test_p_step_constant_decreases_to_closed_form():
    model = fd.constant((1.0, 1.0, 1.0))
    params = ChannelParams(2, 1, 1.0)
    exact = nonfading_closed_form("wyner_symmetric", 1.0, 1, 1.0)
    vals = [bound_p_step(params, model, "SmallN", p, replicas=1).value for p in (1, 2, 4, 8, 32)]
    assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))
    assert all(v >= exact - 1e-9 for v in vals)
    assert vals[-1] - exact < vals[0] - exact


def test_p_step_subadditive_and_family_order():
    params, model = ChannelParams(2, 1, 1.0), fd.rayleigh(2)
    b1 = bound_p_step(params, model, "N", 1, 5000, seed=1)
    b4 = bound_p_step(params, model, "N", 4, 5000, seed=2)
    assert b4.value <= b1.value + 3 * _sig(b1.stderr, b4.stderr)
    n2 = bound_p_step(params, model, "N", 2, 5000, seed=3)
    x2 = bound_p_step(params, model, "Xi", 2, 5000, seed=3)
    assert x2.value <= n2.value + 3 * _sig(n2.stderr, x2.stderr)
    with pytest.raises(ValueError):
        bound_p_step(params, model, "M", 1, 10)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_one_step_equals_p1_small_n(d):
    params, model = ChannelParams(d, 1, 1.0), fd.rayleigh(d)
    a = bound_one_step_closed(params, model, 40_000, seed=1)
    b = bound_p_step(params, model, "SmallN", 1, 40_000, seed=2)
    assert abs(a.value - b.value) < 3 * _sig(a.stderr, b.stderr)


def test_one_step_deterministic_value():
    b = bound_one_step_closed(ChannelParams(1, 1, 1.0), fd.soft_handoff(1.0))
    # band row (1, 3, 1): 9 + (1 + 1)
    assert b.value == pytest.approx(0.5 * np.log(11.0), abs=1e-12)
    assert b.stderr == 0.0


def test_one_step_grows_faster_than_hadamard():
    one, had = [], []
    for d in (1, 2, 3, 4):
        p, m = ChannelParams(d, 1, 1.0), fd.rayleigh(d)
        one.append(bound_one_step_closed(p, m, 20_000).value)
        had.append(bound_information(p, m, 20_000)[1].value)
    assert np.all(np.diff(one) > 0)
    assert np.diff(one)[-1] > np.diff(had)[-1]
    assert one[-1] - one[0] > had[-1] - had[0]


# -- information and truncation bounds -------------------------------------

def test_information_nonfading_values():
    lo, up = bound_information(ChannelParams(1, 1, 1.0), fd.soft_handoff(1.0))
    assert lo.value == pytest.approx(np.log(2)) and up.value == pytest.approx(np.log(3))
    assert lo.value <= GOLDEN <= up.value


def test_information_upper_tight_for_many_users():
    params, model = ChannelParams(2, 10, 1.0), fd.rayleigh(2, 10)
    cap = capacity_limit(params, model, n_steps=30_000, bounds=False)
    up = bound_information(params, model, 50_000)[1]
    assert up.value >= cap.value - 3 * _sig(up.stderr, cap.error)
    assert up.value - cap.value < 0.05


def test_information_lower_below_upper_sweep():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        d = int(rng.integers(1, 4))
        K = int(rng.integers(1, 5))
        lam = float(10 ** rng.uniform(-1, 1))
        scales = tuple(rng.uniform(0.05, 1.0, d + 1))
        lo, up = bound_information(ChannelParams(d, K, lam), fd.rayleigh(d, K, scales=scales),
                                   400, seed=int(rng.integers(1 << 30)))
        assert lo.value <= up.value + 3 * _sig(lo.stderr, up.stderr)


def test_truncation_one_cell_is_hadamard():
    params = ChannelParams(2, 1, 0.5)
    model = fd.wyner_symmetric(0.6)
    assert bound_truncation(params, model, 1)[1].value == pytest.approx(
        bound_information(params, model)[1].value, abs=1e-12)
    model = fd.rayleigh(2)
    t = bound_truncation(params, model, 1, replicas=40_000, seed=1)[1]
    h = bound_information(params, model, 40_000, seed=2)[1]
    assert abs(t.value - h.value) < 3 * _sig(t.stderr, h.stderr)


def test_truncation_nesting():
    params, model = ChannelParams(2, 1, 1.0), fd.rayleigh(2)
    lo32, up32 = bound_truncation(params, model, 32, 300, seed=1)
    lo64, up64 = bound_truncation(params, model, 64, 300, seed=2)
    assert lo64.value >= lo32.value - 3 * _sig(lo32.stderr, lo64.stderr)
    assert up64.value <= up32.value + 3 * _sig(up32.stderr, up64.stderr)
    assert lo64.value < up64.value


@pytest.mark.parametrize("n", [4, 16, 64])
def test_truncation_brackets_nonfading(n):
    lo, up = bound_truncation(ChannelParams(1, 1, 1.0), fd.soft_handoff(1.0), n)
    assert lo.value <= GOLDEN <= up.value
    assert lo.stderr == 0.0


# -- non-fading closed forms ---------------------------------------------

@pytest.mark.parametrize("rho", [0.5, 1.0, 30.0])
def test_soft_handoff_single_user(rho):
    assert nonfading_closed_form("soft_handoff", 0.0, 1, rho) == pytest.approx(np.log1p(rho), abs=1e-12)


def test_wyner_symmetric_caption_values():
    assert abs(nonfading_closed_form("wyner_symmetric", 1.0, 1, 1.0) - 1.06) < 0.005
    assert abs(nonfading_closed_form("wyner_symmetric", 1.0, 10, 10.0) - 4.72) < 0.005


def test_closed_forms_match_symbol_and_trapezoid():
    for kind, model in (("soft_handoff", fd.soft_handoff(0.7, 3)),
                        ("wyner_symmetric", fd.wyner_symmetric(0.7, 3)),
                        ("wyner_asymmetric", fd.wyner_asymmetric(0.7, 3))):
        v = nonfading_closed_form(kind, 0.7, 3, 2.0)
        assert spectral_capacity(model, 2.0) == pytest.approx(v, abs=1e-8)
        assert spectral_capacity(model, 2.0, method="trapezoid") == pytest.approx(v, abs=1e-8)


def test_closed_form_rejections():
    with pytest.raises(ValueError):
        nonfading_closed_form("wyner_symmetric", 1.5)
    with pytest.raises(ValueError):
        nonfading_closed_form("wyner_symmetric", 0.5, rho=0.0)
    with pytest.raises(ValueError):
        nonfading_closed_form("ring", 0.5)


# -- domain probe ----------------------------------------------------------

def test_domain_monotone_at_fixed_randomness():
    grid = np.round(np.arange(0.1, 1.01, 0.1), 10)
    f = np.array([[domain_probe(a, b, samples=500, seed=7).f_p for b in grid] for a in grid])
    assert np.all(np.diff(f, axis=0) >= -1e-12)
    assert np.all(np.diff(f, axis=1) >= -1e-12)


def test_domain_small_scales_in_domain():
    lo = domain_probe(0.2, 0.2, samples=5000, seed=1)
    hi = domain_probe(0.4, 0.4, samples=5000, seed=1)
    assert lo.f_p <= hi.f_p + 3 * lo.stderr
    assert lo.in_domain


def test_domain_beta_zero_finite():
    r = domain_probe(0.5, 0.0, samples=2000)
    assert np.isfinite(r.f_p) and np.isfinite(r.stderr)


def test_domain_rejections():
    with pytest.raises(ValueError):
        domain_probe(0.0, 0.5)
    with pytest.raises(ValueError):
        domain_probe(0.5, 0.5, model=fd.rayleigh(1))


# -- artificial fading -----------------------------------------------------

@pytest.mark.parametrize("law", ["constant", "unit_phase"])
def test_artificial_free_laws(law):
    r = artificial_fading_offset([1.0, 0.5], 1, law, n_steps=3000, batches=3)
    assert r.shift == 0.0
    assert abs(r.shift_direct) < 1e-6


def test_artificial_exponential_power_shift():
    r = artificial_fading_offset([1.0, 0.5], 1, "rayleigh", n_steps=100_000, seed=3)
    assert r.shift == pytest.approx(EULER_BITS, abs=1e-12)
    assert abs(r.shift - r.shift_direct) < 0.01 + 3 * r.shift_direct_stderr


@pytest.mark.parametrize("law,K,eps", [("rayleigh", 1, 0.0), ("rayleigh", 3, 0.0),
                                       ("uniform_ring", 1, 0.5), ("uniform_ring", 2, 0.9)])
def test_artificial_shift_nonnegative(law, K, eps):
    assert -fd.pseudo_log_norm2(law, K, eps).value >= 0.0
