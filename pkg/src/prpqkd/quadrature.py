"""Quadrature-amplitude densities and thresholded outcome probabilities.

Eve's homodyne outcome for a coherent pulse of intensity ``mu_s`` and total phase
``phi + theta`` is Gaussian with mean ``lambda * sqrt(mu_s) * cos(phi + theta)``
and standard deviation ``kappa / 2``. The random phase ``theta`` is uniform on
``[0, delta]`` and unknown to Eve, so every quantity here is a theta-average.

Tail probabilities are integrated over ``x`` in closed form (``erfc``), leaving one
adaptive Gauss-Kronrod (7/15) quadrature over theta done by the kernel backend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from prpqkd._backend import kernels
from prpqkd.errors import IntegrationFailure, ValidationError
from prpqkd.model import (
    HALF_PI,
    BasisProbabilities,
    HomodyneModel,
    Side,
    SourceModel,
    ThresholdPolicy,
)

_KIND_DENSITY = 0
_KIND_UPPER = 1
_KIND_LOWER = 2


@dataclass(frozen=True)
class IntegrationSettings:
    """Tolerance and refinement cap for the theta quadrature.

    ``abs_tol`` bounds the estimated absolute error of the theta-average itself,
    not of the unnormalised integral.
    """

    abs_tol: float = 1e-10
    max_subdivisions: int = 2**14

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0.0):
            raise ValidationError(f"abs_tol must be > 0, got {self.abs_tol}")
        if int(self.max_subdivisions) != self.max_subdivisions or self.max_subdivisions < 1:
            raise ValidationError(f"max_subdivisions must be an integer >= 1, got {self.max_subdivisions}")


DEFAULT_SETTINGS = IntegrationSettings()


def mean_quadrature(phi: float, theta: float, source: SourceModel, det: HomodyneModel) -> float:
    """Centre of the quadrature distribution, ``lambda sqrt(mu_s) cos(phi + theta)``."""
    return det.lambda_eff * source.amplitude * math.cos(phi + theta)


def density_given_theta(x: float, phi: float, theta: float, source: SourceModel, det: HomodyneModel) -> float:
    """Quadrature density for a known random phase ``theta``."""
    kappa = det.kappa
    d = x - mean_quadrature(phi, theta, source, det)
    return math.sqrt(2.0 / math.pi) / kappa * math.exp(-2.0 * d * d / (kappa * kappa))


def _average(kind: int, x: float, phi: float, source: SourceModel, det: HomodyneModel, settings: IntegrationSettings) -> float:
    value, err, ok = kernels.theta_average(
        kind,
        float(x),
        float(phi),
        det.lambda_eff * source.amplitude,
        det.kappa,
        source.delta,
        settings.abs_tol,
        int(settings.max_subdivisions),
    )
    if not ok:
        raise IntegrationFailure(
            f"theta quadrature stopped at error {err:.3g} > {settings.abs_tol:.3g} "
            f"after {settings.max_subdivisions} subintervals"
        )
    return value


def density_marginal(
    x: float,
    phi: float,
    source: SourceModel,
    det: HomodyneModel,
    settings: IntegrationSettings = DEFAULT_SETTINGS,
) -> float:
    """Quadrature density averaged over the unknown random phase.

    With ``delta = 0`` this is exactly :func:`density_given_theta` at ``theta = 0``.

    Raises:
        IntegrationFailure: if the quadrature cannot reach ``settings.abs_tol``.
    """
    if source.delta == 0.0:
        return density_given_theta(x, phi, 0.0, source, det)
    return max(_average(_KIND_DENSITY, x, phi, source, det, settings), 0.0)


def outcome_probability(
    phi: float,
    side: Side,
    policy: ThresholdPolicy,
    source: SourceModel,
    det: HomodyneModel,
    settings: IntegrationSettings = DEFAULT_SETTINGS,
) -> float:
    """Probability that Eve's quadrature lands in the plus (``x >= x_th``) or minus
    (``x <= -x_th``) acceptance region for total phase ``phi``."""
    if side is Side.PLUS:
        p = _average(_KIND_UPPER, policy.x_th, phi, source, det, settings)
    elif side is Side.MINUS:
        p = _average(_KIND_LOWER, -policy.x_th, phi, source, det, settings)
    else:
        raise TypeError(f"side must be a Side, got {side!r}")
    return min(max(p, 0.0), 1.0)


def basis_probabilities(
    policy: ThresholdPolicy,
    source: SourceModel,
    det: HomodyneModel,
    settings: IntegrationSettings = DEFAULT_SETTINGS,
) -> BasisProbabilities:
    """The four valid-outcome probabilities for both of Eve's bases.

    Eve measures with phase 0 or pi/2. The basis whose total phase
    ``alice_phase - eve_phase`` is 0 or pi is the matching one; its outcomes are
    reported as correct (``p0_plus``) or wrong (``p0_minus``) decisions, so the
    result has the same meaning for all four of Alice's phases. The conjugate
    basis pair is reported in the total-phase-pi/2 orientation (a total phase of
    3pi/2 is the mirror image, plus and minus swapped). With Alice's phase at 0
    this is ``P_0^+, P_0^-, P_{pi/2}^+, P_{pi/2}^-``.
    """
    k = source.alice_phase_index
    matching_eve = k % 2
    m_match = (k - matching_eve) % 4  # 0 or 2
    m_conj = (k - (1 - matching_eve)) % 4  # 1 or 3

    def prob(m: int, side: Side) -> float:
        return outcome_probability(m * HALF_PI, side, policy, source, det, settings)

    plus_m, minus_m = prob(m_match, Side.PLUS), prob(m_match, Side.MINUS)
    plus_c, minus_c = prob(m_conj, Side.PLUS), prob(m_conj, Side.MINUS)
    if m_match == 2:
        plus_m, minus_m = minus_m, plus_m
    if m_conj == 3:
        plus_c, minus_c = minus_c, plus_c
    return BasisProbabilities(plus_m, minus_m, plus_c, minus_c)
