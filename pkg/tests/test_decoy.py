import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from prpqkd.decoy import (
    FLAG_E1_CLAMPED,
    FLAG_NEGATIVE_YIELD,
    GainsUnderAttack,
    attacked_key_rate,
    binary_entropy,
    bob_statistics,
    equivalent_length_decoy_km,
    error_single_upper,
    gains_under_attack,
    key_rate_under_attack,
    rate_sign_change,
    sweep_mu_nu,
    yield_single_lower,
)
from prpqkd.errors import (
    DomainError,
    InvalidDecoyPair,
    InvalidGain,
    NonpositiveYield,
    ValidationError,
    ZeroGain,
)
from prpqkd.model import (
    ChannelModel,
    DecoyParams,
    SourceModel,
    ThresholdPolicy,
    preset_gys,
    preset_perfect_homodyne,
)

GYS = preset_gys()
PERFECT = preset_perfect_homodyne()
DP = DecoyParams(0.48, 0.05)
D17 = math.radians(17)
D10 = math.radians(10)


def _scalar_pipeline(x_th, delta, mu, nu, lam=1.0, kappa=1.0, eta=0.045, y0=1.7e-6, a=0.21):
    """Second implementation of the attacked pipeline, written out by hand."""

    def p(mu_s, phi, plus):
        amp = lam * math.sqrt(mu_s)

        def integrand(t):
            m = amp * math.cos(phi + t)
            arg = (x_th - m) if plus else (x_th + m)
            return 0.5 * special.erfc(math.sqrt(2.0) * arg / kappa)

        val, _ = integrate.quad(integrand, 0.0, delta, epsabs=1e-14, epsrel=1e-13)
        return val / delta

    def eve(mu_s):
        p0p, p0m = p(mu_s, 0.0, True), p(mu_s, 0.0, False)
        p1p, p1m = p(mu_s, math.pi / 2, True), p(mu_s, math.pi / 2, False)
        s = p0p + p0m + p1p + p1m
        return s / 2, (p0m + (p1p + p1m) / 2) / s

    out = {}
    for tag, mu_s in (("mu", mu), ("nu", nu)):
        qe, ee = eve(mu_s)
        q = eta * qe + (1 - eta) * y0
        out["q_" + tag] = q
        out["e_" + tag] = (eta * qe * ee + (1 - eta) * y0 * 0.5) / q
    y1 = mu / (mu * nu - nu**2) * (out["q_nu"] * math.exp(nu) - out["q_mu"] * math.exp(mu) * nu**2 / mu**2)
    e1 = out["e_nu"] * out["q_nu"] * math.exp(nu) / (y1 * nu)
    h = lambda x: -x * math.log2(x) - (1 - x) * math.log2(1 - x)  # noqa: E731
    q1 = mu * math.exp(-mu) * y1
    rate = 0.5 * (-out["q_mu"] * 1.22 * h(out["e_mu"]) + q1 * (1 - h(min(e1, 0.5))))
    l_eq = -(10 / a) * math.log10(min(1.0, out["q_mu"] / (mu * eta)))
    return dict(out, y1=y1, e1=e1, rate=rate, l_eq=l_eq)


def test_lossy_channel_identity():
    eta = 0.1
    q_mu = 0.48 * eta * math.exp(-0.48)
    q_nu = 0.05 * eta * math.exp(-0.05)
    assert yield_single_lower(q_mu, q_nu, DP) == pytest.approx(0.1, abs=1e-12)


@given(st.floats(1e-4, 1.0), st.floats(0.02, 0.9), st.floats(0.005, 0.5))
def test_lossy_channel_identity_property(eta, mu, ratio):
    nu = mu * ratio
    dp = DecoyParams(mu, nu)
    got = yield_single_lower(mu * eta * math.exp(-mu), nu * eta * math.exp(-nu), dp)
    assert got == pytest.approx(eta, abs=1e-12)


def test_yield_zero_numerator():
    q_mu = 0.01
    q_nu = q_mu * math.exp(0.48) * (0.05 / 0.48) ** 2 / math.exp(0.05)
    assert yield_single_lower(q_mu, q_nu, DP) == pytest.approx(0.0, abs=1e-16)


def test_invalid_decoy_pair_rejected():
    dp = object.__new__(DecoyParams)
    object.__setattr__(dp, "mu", 0.05)
    object.__setattr__(dp, "nu", 0.05)
    with pytest.raises(InvalidDecoyPair):
        yield_single_lower(0.1, 0.1, dp)


def test_error_single_upper_linear():
    assert error_single_upper(0.0, 0.01, 0.05, DP) == 0.0
    a = error_single_upper(0.02, 0.01, 0.05, DP)
    assert error_single_upper(0.04, 0.01, 0.05, DP) == pytest.approx(2 * a, rel=1e-15)
    assert a == pytest.approx(0.02 * 0.01 * math.exp(0.05) / (0.05 * 0.05), rel=1e-15)


@pytest.mark.parametrize("y1", [0.0, -0.01])
def test_error_single_upper_needs_positive_yield(y1):
    with pytest.raises(NonpositiveYield):
        error_single_upper(0.02, 0.01, y1, DP)


def test_binary_entropy_values():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 30
    x = mpmath.mpf("0.11")
    ref = -x * mpmath.log(x, 2) - (1 - x) * mpmath.log(1 - x, 2)
    assert binary_entropy(0.11) == pytest.approx(float(ref), rel=1e-14)
    # the quoted 0.49993 agrees with the exact 0.4999160 to four decimals
    assert binary_entropy(0.11) == pytest.approx(0.49993, abs=2e-5)


@pytest.mark.parametrize("x", [-1e-12, 1.0000001, math.nan])
def test_binary_entropy_domain(x):
    with pytest.raises(DomainError):
        binary_entropy(x)


@given(st.floats(0.0, 1.0))
def test_binary_entropy_symmetric(x):
    assert binary_entropy(x) == pytest.approx(binary_entropy(1.0 - x), abs=1e-12)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_binary_entropy_concave(a, b):
    assert binary_entropy((a + b) / 2) >= (binary_entropy(a) + binary_entropy(b)) / 2 - 1e-12


def test_background_only_gains():
    q, e = bob_statistics(0.0, 0.0, GYS)
    assert q == pytest.approx((1 - 0.045) * 1.7e-6, rel=1e-15)
    assert e == pytest.approx(0.5, rel=1e-15)


def test_transparent_bob():
    ch = ChannelModel(0.21, 1.0, 0.0)
    assert bob_statistics(0.3, 0.07, ch) == (0.3, 0.07)
    with pytest.raises(ZeroGain):
        bob_statistics(0.0, 0.0, ch)


@pytest.mark.parametrize("x_th", [1.0, 1.4, 1.8, 2.5, 6.0])
@pytest.mark.parametrize("delta", [D10, D17])
def test_gain_decomposition_identity(x_th, delta):
    g = gains_under_attack(SourceModel(0.48, delta), SourceModel(0.05, delta), ThresholdPolicy(x_th), PERFECT, GYS)
    bg = (1 - GYS.eta_bob) * GYS.y0
    assert g.q_mu * g.e_mu - GYS.eta_bob * g.q_mu_eve * g.e_mu_eve - bg * 0.5 == pytest.approx(0.0, abs=1e-12)
    assert g.q_nu * g.e_nu - GYS.eta_bob * g.q_nu_eve * g.e_nu_eve - bg * 0.5 == pytest.approx(0.0, abs=1e-12)
    assert min(g.q_mu, g.q_nu) >= bg


def test_gains_require_shared_delta():
    with pytest.raises(ValidationError):
        gains_under_attack(SourceModel(0.48, D10), SourceModel(0.05, D17), ThresholdPolicy(1.4), PERFECT, GYS)


@pytest.mark.parametrize("x_th, delta", [(1.4, D17), (1.4, D10), (1.3, D17), (1.6, D17), (1.2, math.radians(20))])
def test_pipeline_matches_scalar_oracle(x_th, delta):
    gains, report = attacked_key_rate(x_th, delta, DP, PERFECT, GYS)
    ref = _scalar_pipeline(x_th, delta, 0.48, 0.05)
    assert gains.q_mu == pytest.approx(ref["q_mu"], rel=1e-9)
    assert gains.q_nu == pytest.approx(ref["q_nu"], rel=1e-9)
    assert gains.e_mu == pytest.approx(ref["e_mu"], rel=1e-9)
    assert gains.e_nu == pytest.approx(ref["e_nu"], rel=1e-9)
    assert report.y1_lower == pytest.approx(ref["y1"], rel=1e-7)
    assert report.e1_upper == pytest.approx(ref["e1"], rel=1e-7)
    assert report.rate == pytest.approx(ref["rate"], rel=1e-6, abs=1e-12)
    assert report.l_eq_km == pytest.approx(ref["l_eq"], rel=1e-9)


def test_attacked_rate_positive_at_reported_threshold():
    _, report = attacked_key_rate(1.4, D17, DP, PERFECT, GYS)
    assert report.rate > 0
    assert 0 < report.e1_upper < 0.5
    assert report.q1_lower == pytest.approx(0.48 * math.exp(-0.48) * report.y1_lower, rel=1e-15)


def test_rate_sign_change_location():
    x = rate_sign_change(1.2, 1.6, D17, DP, PERFECT, GYS)
    assert x == pytest.approx(1.37, abs=0.02)


def test_decoy_equivalent_length():
    gains, report = attacked_key_rate(1.4, D17, DP, PERFECT, GYS)
    assert report.l_eq_km == pytest.approx(50.83, abs=0.5)
    assert equivalent_length_decoy_km(gains.q_mu, DP, GYS) == report.l_eq_km


def test_halving_gain_adds_constant_length():
    base = equivalent_length_decoy_km(1e-4, DP, GYS)
    assert equivalent_length_decoy_km(0.5e-4, DP, GYS) - base == pytest.approx(10 / 0.21 * math.log10(2), rel=1e-12)
    assert 10 / 0.21 * math.log10(2) == pytest.approx(14.33, abs=0.01)


def test_decoy_length_clamp_and_domain():
    assert equivalent_length_decoy_km(0.48 * 0.045, DP, GYS) == 0.0
    with pytest.raises(InvalidGain):
        equivalent_length_decoy_km(0.0, DP, GYS)


def test_no_error_limit():
    mu = DP.mu
    q_mu = 0.02
    y1 = q_mu / (mu * math.exp(-mu))
    # q_nu picked so yield_single_lower returns y1
    q_nu = (y1 * (mu * DP.nu - DP.nu**2) / mu + q_mu * math.exp(mu) * DP.nu**2 / mu**2) / math.exp(DP.nu)
    report = key_rate_under_attack(DP, GainsUnderAttack(q_mu, q_nu, 0.0, 0.0), GYS)
    assert report.y1_lower == pytest.approx(y1, rel=1e-12)
    assert report.rate == pytest.approx(0.5 * q_mu, rel=1e-12)


def test_negative_yield_reported_not_clamped():
    report = key_rate_under_attack(DP, GainsUnderAttack(0.05, 1e-4, 0.02, 0.02), GYS)
    assert report.y1_lower < 0
    assert report.rate is None and report.e1_upper is None
    assert FLAG_NEGATIVE_YIELD in report.flags and NonpositiveYield.flag in report.flags
    assert not report.positive


def test_large_single_photon_error_is_clamped():
    mu, nu = DP.mu, DP.nu
    q_mu = 0.02
    y1 = 0.001
    q_nu = (y1 * (mu * nu - nu * nu) / mu + q_mu * math.exp(mu) * nu * nu / (mu * mu)) * math.exp(-nu)
    report = key_rate_under_attack(DP, GainsUnderAttack(q_mu, q_nu, 0.3, 0.45), GYS)
    assert report.e1_upper > 0.5
    assert FLAG_E1_CLAMPED in report.flags
    assert report.rate == pytest.approx(-0.5 * q_mu * 1.22 * binary_entropy(0.3), rel=1e-12)


def test_rate_increasing_below_peak():
    xs = np.round(np.arange(1.0, 1.4001, 0.05), 10)
    rates = [attacked_key_rate(float(x), D17, DP, PERFECT, GYS)[1].rate for x in xs]
    assert all(b >= a for a, b in zip(rates, rates[1:]))


@pytest.mark.xfail(strict=True, reason="R peaks near x_th = 1.44 and falls below zero past ~1.56")
def test_rate_nondecreasing_over_full_range():
    xs = np.round(np.arange(1.0, 2.2001, 0.05), 10)
    rates = [attacked_key_rate(float(x), D17, DP, PERFECT, GYS)[1].rate for x in xs]
    assert all(b >= a for a, b in zip(rates, rates[1:]))


def test_sweep_ordering_and_invalid_cells():
    cells = sweep_mu_nu([0.3, 0.48], [0.05, 0.3], D10, 1.4, PERFECT, GYS)
    assert [(c.mu, c.nu) for c in cells] == [(0.3, 0.05), (0.3, 0.3), (0.48, 0.05), (0.48, 0.3)]
    assert cells[1].flag == InvalidDecoyPair.flag and cells[1].report is None
    assert cells[3].report is not None


def test_sweep_cell_matches_single_point():
    cells = sweep_mu_nu([0.48], [0.05], D10, 1.4, PERFECT, GYS)
    _, report = attacked_key_rate(1.4, D10, DP, PERFECT, GYS)
    assert cells[0].report == report
    assert cells[0].positive


def test_sweep_order_independent_of_workers():
    mus, nus = [0.2, 0.4, 0.6], [0.02, 0.05, 0.1]
    assert sweep_mu_nu(mus, nus, D10, 1.4, PERFECT, GYS, workers=4) == sweep_mu_nu(mus, nus, D10, 1.4, PERFECT, GYS)
