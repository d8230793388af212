import math

import numpy as np
import pytest

from prpqkd import attack
from prpqkd.attack import (
    equivalent_length_km,
    error_rate,
    intensity_at_eve,
    max_threshold_for_length,
    post_selection_probability,
    solve_threshold_for_error,
    summarize,
)
from prpqkd.errors import DegenerateDenominator, InvalidIntensity, NonMonotoneBracket, Unachievable
from prpqkd.model import (
    BasisProbabilities,
    EveCoupling,
    MuEMode,
    SourceModel,
    ThresholdPolicy,
    preset_gys,
)
from prpqkd.quadrature import basis_probabilities

GYS = preset_gys()
TOL_E = 0.0015
TOL_X = 0.02


def _e(x_th, mu_s, delta, det):
    return error_rate(basis_probabilities(ThresholdPolicy(x_th), SourceModel(mu_s, delta), det))


def _p_post(x_th, mu_s, delta, det):
    return post_selection_probability(basis_probabilities(ThresholdPolicy(x_th), SourceModel(mu_s, delta), det))


def test_error_rate_flat_probabilities():
    assert error_rate(BasisProbabilities(0.2, 0.2, 0.2, 0.2)) == 0.5


def test_error_rate_formula():
    bp = BasisProbabilities(0.3, 0.05, 0.1, 0.12)
    assert error_rate(bp) == pytest.approx((0.05 + 0.11) / 0.57, rel=1e-15)
    assert post_selection_probability(bp) == pytest.approx(0.285, rel=1e-15)


@pytest.mark.parametrize(
    "x_th, mu_s, delta, expected",
    [
        (2.0, 0.3, math.pi / 6, 0.0921),
        (1.5, 0.3, math.pi / 6, 0.1379),
        (2.0, 0.3, math.pi / 8, 0.0801),
        (2.0, 0.3, math.pi / 4, 0.1265),
        (2.0, 0.5, math.pi / 6, 0.0606),
        (2.0, 0.1, math.pi / 6, 0.1865),
    ],
)
def test_reported_error_rates(x_th, mu_s, delta, expected, fig3_det):
    assert _e(x_th, mu_s, delta, fig3_det) == pytest.approx(expected, abs=TOL_E)


def test_vacuum_error_rate_is_half(fig3_det):
    assert _e(1.0, 0.0, math.pi / 6, fig3_det) == pytest.approx(0.5, abs=1e-15)


def test_post_selection_unity_at_zero_threshold(fig3_det):
    assert _p_post(0.0, 0.3, math.pi / 6, fig3_det) == pytest.approx(1.0, abs=1e-14)


def test_post_selection_vanishes_for_huge_threshold(fig3_det):
    assert _p_post(20.0, 0.3, math.pi / 6, fig3_det) < 1e-15


def test_degenerate_denominator():
    with pytest.raises(DegenerateDenominator):
        error_rate(BasisProbabilities(0.0, 0.0, 0.0, 0.0))


def test_equivalent_length_clamps_to_zero():
    assert equivalent_length_km(0.5, 0.3, GYS) == 0.0
    assert equivalent_length_km(0.3 * 0.045, 0.3, GYS) == 0.0


def test_equivalent_length_arithmetic():
    # mu_E p_post / mu_s = 0.1 -> 10 dB -> 10/0.21 km
    p = 0.1 * 0.3 * 0.045
    assert equivalent_length_km(p, 0.3, GYS) == pytest.approx(10 / 0.21, rel=1e-12)
    assert equivalent_length_km(0.0, 0.3, GYS) == math.inf


@pytest.mark.parametrize("mu_s", [0.0, -0.2])
def test_equivalent_length_rejects_nonpositive_intensity(mu_s):
    with pytest.raises(InvalidIntensity):
        equivalent_length_km(0.1, mu_s, GYS)


def test_single_photon_mode_gives_longer_length(fig3_det):
    p = _p_post(1.97, 0.3, math.pi / 6, fig3_det)
    single = equivalent_length_km(p, 0.3, GYS.with_mu_e(MuEMode.SINGLE_PHOTON))
    assert single >= equivalent_length_km(p, 0.3, GYS)
    assert single > 0


def test_fifty_km_at_reported_threshold(fig3_det):
    # length moves ~1.2 km per 0.01 in x_th, so check the quoted threshold brackets 50 km
    length = lambda x: equivalent_length_km(_p_post(x, 0.3, math.pi / 6, fig3_det), 0.3, GYS)  # noqa: E731
    assert length(1.97 - TOL_X) < 50.0 < length(1.97 + TOL_X)
    assert length(1.97) == pytest.approx(50.0, abs=2.0)


@pytest.mark.parametrize("mu_s, expected", [(0.3, 1.02), (0.1, 1.86)])
def test_threshold_for_twenty_percent(mu_s, expected, fig3_det):
    x = solve_threshold_for_error(0.20, SourceModel(mu_s, math.pi / 6), fig3_det)
    assert x == pytest.approx(expected, abs=TOL_X)


def test_threshold_for_half_is_zero(fig3_det, fig3_source):
    assert solve_threshold_for_error(0.5, fig3_source, fig3_det) == 0.0


def test_unachievable_error_target(fig3_det, fig3_source):
    with pytest.raises(Unachievable):
        solve_threshold_for_error(1e-6, fig3_source, fig3_det)


def test_max_threshold_at_fifty_km(fig3_det, fig3_source):
    x = max_threshold_for_length(50.0, fig3_source, fig3_det, GYS)
    assert x == pytest.approx(1.97, abs=TOL_X)
    assert _e(x, 0.3, math.pi / 6, fig3_det) == pytest.approx(0.0936, abs=TOL_E)


def test_shorter_target_gives_smaller_threshold(fig3_det, fig3_source):
    assert max_threshold_for_length(25.0, fig3_source, fig3_det, GYS) < max_threshold_for_length(
        50.0, fig3_source, fig3_det, GYS
    )


def test_zero_km_target_keeps_clamp(fig3_det, fig3_source):
    x = max_threshold_for_length(0.0, fig3_source, fig3_det, GYS)
    p_at = _p_post(x, 0.3, math.pi / 6, fig3_det)
    assert GYS.mu_e * p_at >= 0.3
    assert GYS.mu_e * _p_post(x + 2 * attack.BISECT_TOL, 0.3, math.pi / 6, fig3_det) < 0.3


def test_unachievable_length_target(fig3_det, fig3_source):
    with pytest.raises(Unachievable):
        max_threshold_for_length(-1.0, fig3_source, fig3_det, GYS)
    # single-photon resend of a mu_s = 5 pulse is already ~33 km at x_th = 0
    with pytest.raises(Unachievable):
        max_threshold_for_length(1.0, SourceModel(5.0, math.pi / 6), fig3_det, GYS.with_mu_e(MuEMode.SINGLE_PHOTON))


def test_non_monotone_objective_is_reported(monkeypatch, fig3_det, fig3_source):
    wobble = lambda x, *a: 0.3 + 0.01 * math.sin(5 * x)  # noqa: E731
    monkeypatch.setattr(attack, "_error_at", wobble)
    with pytest.raises(NonMonotoneBracket):
        solve_threshold_for_error(0.2, fig3_source, fig3_det)


def test_intensity_at_eve():
    assert intensity_at_eve(EveCoupling(1.0, 100.0, 0.003)) == pytest.approx(0.3, rel=1e-15)
    assert intensity_at_eve(EveCoupling(0.0, 100.0, 0.003)) == 0.0
    assert intensity_at_eve(EveCoupling(0.5, 100.0, 0.003)) == pytest.approx(0.15, rel=1e-15)


GRID = [(d, m) for d in (0.0, math.pi / 8, math.pi / 6, math.pi / 4) for m in (0.1, 0.3, 0.5)]
XS = np.round(np.arange(0.0, 4.0001, 0.05), 10)


@pytest.mark.parametrize("delta, mu_s", GRID)
def test_scans_over_threshold(delta, mu_s, fig3_det):
    src = SourceModel(mu_s, delta)
    rows = [summarize(ThresholdPolicy(float(x)), src, fig3_det, GYS) for x in XS]
    es = [r.error_rate for r in rows]
    ps = [r.p_post for r in rows]
    ls = [r.equiv_length_km for r in rows]
    assert all(0.0 <= e <= 0.5 + 1e-12 for e in es)
    assert all(b <= a + 1e-9 for a, b in zip(es, es[1:]))
    assert all(b <= a + 1e-12 for a, b in zip(ps, ps[1:]))
    assert all(b >= a - 1e-9 for a, b in zip(ls, ls[1:]))


@pytest.mark.parametrize("delta, mu_s", GRID)
def test_length_nonincreasing_in_mu_e(delta, mu_s, fig3_det):
    p = _p_post(1.8, mu_s, delta, fig3_det)
    lengths = [equivalent_length_km(p, mu_s, GYS.with_mu_e(MuEMode.CUSTOM, v)) for v in (1.0, 2.0, 5.0, 1 / 0.045, 50.0)]
    assert all(b <= a for a, b in zip(lengths, lengths[1:]))


@pytest.mark.parametrize("delta", [0.0, math.pi / 8, math.pi / 6, math.pi / 4])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_four_state_symmetry(delta, k, fig3_det, xth2):
    ref = error_rate(basis_probabilities(xth2, SourceModel(0.3, delta), fig3_det))
    got = error_rate(basis_probabilities(xth2, SourceModel(0.3, delta, alice_phase=k * math.pi / 2), fig3_det))
    assert got == pytest.approx(ref, abs=1e-9)


@pytest.mark.parametrize("target", [0.12, 0.15, 0.2, 0.3])
def test_error_solver_inverse_consistency(target, fig3_det, fig3_source):
    x = solve_threshold_for_error(target, fig3_source, fig3_det)
    h = 1e-3
    slope = abs(_e(x + h, 0.3, math.pi / 6, fig3_det) - _e(x - h, 0.3, math.pi / 6, fig3_det)) / (2 * h)
    assert _e(x, 0.3, math.pi / 6, fig3_det) <= target + 1e-12
    assert abs(_e(x, 0.3, math.pi / 6, fig3_det) - target) <= 2 * attack.BISECT_TOL * slope * 1.5


@pytest.mark.parametrize("target", [10.0, 30.0, 50.0, 60.0])
def test_length_solver_inverse_consistency(target, fig3_det, fig3_source):
    x = max_threshold_for_length(target, fig3_source, fig3_det, GYS)
    length = lambda t: equivalent_length_km(_p_post(t, 0.3, math.pi / 6, fig3_det), 0.3, GYS)  # noqa: E731
    h = 1e-3
    slope = abs(length(x + h) - length(x - h)) / (2 * h)
    assert length(x) <= target + 1e-9
    assert abs(length(x) - target) <= 2 * attack.BISECT_TOL * slope * 1.5
