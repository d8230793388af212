"""Observable consequences of the intercept-and-resend attack.

From the four valid-outcome probabilities this module derives the error rate
Eve induces, her post-selection probability, the fiber length whose loss hides
the blocked pulses, and threshold solvers that invert those relations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from prpqkd.errors import (
    DegenerateDenominator,
    InvalidIntensity,
    NonMonotoneBracket,
    Unachievable,
)
from prpqkd.model import (
    BasisProbabilities,
    ChannelModel,
    EveCoupling,
    HomodyneModel,
    SourceModel,
    ThresholdPolicy,
)
from prpqkd.quadrature import DEFAULT_SETTINGS, IntegrationSettings, basis_probabilities

# Beyond x_th = 8 every probability is negligible for mu_s <= 1, kappa ~ 1.
XTH_BRACKET = (0.0, 8.0)
BISECT_TOL = 1e-4
PRESCAN_STEP = 0.1
# allowed upward wiggle in a "nonincreasing" pre-scan (quadrature noise)
MONOTONE_SLACK = 1e-9


@dataclass(frozen=True)
class AttackSummary:
    error_rate: float
    p_post: float
    equiv_length_km: float


def error_rate(bp: BasisProbabilities) -> float:
    """Error rate Eve introduces among the pulses she resends.

    Wrong decisions in the matching basis always cause an error; any decision in
    the conjugate basis causes one half of the time.

    Raises:
        DegenerateDenominator: if no outcome is ever valid.
    """
    total = bp.total
    if total <= 0.0:
        raise DegenerateDenominator("all valid-outcome probabilities are zero; threshold too large")
    return (bp.p0_minus + 0.5 * (bp.ppi2_plus + bp.ppi2_minus)) / total


def post_selection_probability(bp: BasisProbabilities) -> float:
    """Probability that Eve's outcome is valid, averaged over her two bases."""
    return min(0.5 * bp.total, 1.0)


def equivalent_length_km(p_post: float, mu_s: float, channel: ChannelModel) -> float:
    """Fiber length whose transmittance matches Bob's count rate under attack.

    Zero when Eve's resent flux ``mu_E * p_post`` already covers ``mu_s``;
    infinite when ``p_post`` is zero.

    Raises:
        InvalidIntensity: if ``mu_s <= 0``.
    """
    if not mu_s > 0.0:
        raise InvalidIntensity(f"mu_s must be > 0, got {mu_s}")
    ratio = channel.mu_e * p_post / mu_s
    if ratio >= 1.0:
        return 0.0
    if ratio <= 0.0:
        return math.inf
    return -(10.0 / channel.loss_db_per_km) * math.log10(ratio)


def intensity_at_eve(coupling: EveCoupling) -> float:
    """Signal intensity leaving Alice's zone, ``gamma * beta * n_a_in``."""
    return coupling.gamma * coupling.beta * coupling.n_a_in


def summarize(
    policy: ThresholdPolicy,
    source: SourceModel,
    det: HomodyneModel,
    channel: ChannelModel,
    settings: IntegrationSettings = DEFAULT_SETTINGS,
) -> AttackSummary:
    bp = basis_probabilities(policy, source, det, settings)
    p_post = post_selection_probability(bp)
    return AttackSummary(error_rate(bp), p_post, equivalent_length_km(p_post, source.mu_s, channel))


def _error_at(x_th: float, source, det, settings) -> float:
    return error_rate(basis_probabilities(ThresholdPolicy(x_th), source, det, settings))


def _length_at(x_th: float, source, det, channel, settings) -> float:
    bp = basis_probabilities(ThresholdPolicy(x_th), source, det, settings)
    return equivalent_length_km(post_selection_probability(bp), source.mu_s, channel)


def _prescan(fn, decreasing: bool) -> list[tuple[float, float]]:
    lo, hi = XTH_BRACKET
    n = round((hi - lo) / PRESCAN_STEP)
    points = [(lo + i * (hi - lo) / n, 0.0) for i in range(n + 1)]
    points = [(x, fn(x)) for x, _ in points]
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        bad = y1 > y0 + MONOTONE_SLACK if decreasing else y1 < y0 - MONOTONE_SLACK
        if bad:
            raise NonMonotoneBracket(
                f"objective is not {'non-increasing' if decreasing else 'non-decreasing'} "
                f"between x_th={x0:.3f} ({y0:.6g}) and x_th={x1:.3f} ({y1:.6g})"
            )
    return points


def _bisect(pred, lo: float, hi: float) -> tuple[float, float]:
    # pred(lo) is False, pred(hi) is True
    while hi - lo >= BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


def solve_threshold_for_error(
    target_e: float,
    source: SourceModel,
    det: HomodyneModel,
    settings: IntegrationSettings = DEFAULT_SETTINGS,
) -> float:
    """Smallest threshold in [0, 8] at which the induced error rate is <= ``target_e``.

    Raises:
        Unachievable: if even ``x_th = 8`` leaves the error above the target.
        NonMonotoneBracket: if the error rate is not non-increasing on the bracket.
    """

    def err(x: float) -> float:
        try:
            return _error_at(x, source, det, settings)
        except DegenerateDenominator:
            return math.inf

    points = _prescan(err, decreasing=True)
    if points[0][1] <= target_e:
        return points[0][0]
    if points[-1][1] > target_e:
        raise Unachievable(f"error rate {points[-1][1]:.6g} at x_th={XTH_BRACKET[1]} exceeds target {target_e}")
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        if y1 <= target_e:
            break
    _, hi = _bisect(lambda x: err(x) <= target_e, x0, x1)
    return hi


def max_threshold_for_length(
    target_km: float,
    source: SourceModel,
    det: HomodyneModel,
    channel: ChannelModel,
    settings: IntegrationSettings = DEFAULT_SETTINGS,
) -> float:
    """Largest threshold in [0, 8] whose equivalent fiber length is <= ``target_km``.

    Raises:
        Unachievable: if the length at ``x_th = 0`` already exceeds the target.
        NonMonotoneBracket: if the length is not non-decreasing on the bracket.
    """
    if target_km < 0.0:
        raise Unachievable(f"target length must be >= 0, got {target_km}")

    def length(x: float) -> float:
        return _length_at(x, source, det, channel, settings)

    points = _prescan(length, decreasing=False)
    if points[0][1] > target_km:
        raise Unachievable(f"equivalent length {points[0][1]:.4g} km at x_th=0 exceeds {target_km} km")
    if points[-1][1] <= target_km:
        return points[-1][0]
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        if y1 > target_km:
            break
    lo, _ = _bisect(lambda x: length(x) > target_km, x0, x1)
    return lo
