"""One-decoy-state estimation and GLLP key rate under the attack.

Alice and Bob believe the source phase is fully random and estimate the
single-photon yield and error from a signal (``mu``) and a decoy (``nu``)
intensity. Eve, unable to tell the two apart, runs the same homodyne attack on
both and resends single photons, so Bob's gains and error rates become

    Q   = eta_Bob * Q' + (1 - eta_Bob) * Y0
    E*Q = eta_Bob * Q' * E' + (1 - eta_Bob) * Y0 * e0

with ``Q'`` the post-selection probability and ``E'`` the induced error rate at
that intensity.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

from prpqkd.attack import error_rate, post_selection_probability
from prpqkd.errors import (
    DomainError,
    InvalidDecoyPair,
    InvalidGain,
    NonpositiveYield,
    PRPError,
    ValidationError,
    ZeroGain,
)
from prpqkd.model import ChannelModel, DecoyParams, HomodyneModel, SourceModel, ThresholdPolicy
from prpqkd.quadrature import DEFAULT_SETTINGS, IntegrationSettings, basis_probabilities

FLAG_E1_CLAMPED = "e1_clamped"
FLAG_NEGATIVE_YIELD = "negative_yield"


@dataclass(frozen=True)
class GainsUnderAttack:
    q_mu: float
    q_nu: float
    e_mu: float
    e_nu: float
    # Eve-side quantities the gains were built from
    q_mu_eve: float = math.nan
    q_nu_eve: float = math.nan
    e_mu_eve: float = math.nan
    e_nu_eve: float = math.nan

    def __post_init__(self) -> None:
        for name in ("q_mu", "q_nu", "e_mu", "e_nu"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValidationError(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class KeyRateReport:
    """Decoy estimates and key rate.

    ``rate`` is ``None`` when the yield bound is not positive (rate undefined);
    ``e1_upper`` is ``None`` in the same case. ``flags`` lists conditions a sweep
    consumer should see (``nonpositive_yield``, ``negative_yield``,
    ``e1_clamped``).
    """

    y1_lower: float
    e1_upper: float | None
    q1_lower: float
    rate: float | None
    l_eq_km: float
    flags: tuple[str, ...] = ()

    @property
    def positive(self) -> bool:
        return self.rate is not None and self.rate > 0.0


def _check_pair(dp: DecoyParams) -> None:
    if not dp.mu > dp.nu > 0.0:
        raise InvalidDecoyPair(f"need mu > nu > 0, got mu={dp.mu}, nu={dp.nu}")


def yield_single_lower(q_mu: float, q_nu: float, dp: DecoyParams) -> float:
    """Lower bound on the single-photon yield from one decoy; may be negative."""
    _check_pair(dp)
    mu, nu = dp.mu, dp.nu
    return mu / (mu * nu - nu * nu) * (q_nu * math.exp(nu) - q_mu * math.exp(mu) * nu * nu / (mu * mu))


def error_single_upper(e_nu: float, q_nu: float, y1_lower: float, dp: DecoyParams) -> float:
    """Upper bound on the single-photon error rate.

    Raises:
        NonpositiveYield: if ``y1_lower <= 0``.
    """
    if not y1_lower > 0.0:
        raise NonpositiveYield(f"single-photon yield bound is {y1_lower:.6g}")
    return e_nu * q_nu * math.exp(dp.nu) / (y1_lower * dp.nu)


def binary_entropy(x: float) -> float:
    """Binary Shannon entropy in bits, with ``H(0) = H(1) = 0``.

    Raises:
        DomainError: outside [0, 1].
    """
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary entropy needs 0 <= x <= 1, got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def bob_statistics(q_eve: float, e_eve: float, channel: ChannelModel) -> tuple[float, float]:
    """Bob's gain and error rate given Eve's post-selection probability and error."""
    eta, y0, e0 = channel.eta_bob, channel.y0, channel.e0
    background = (1.0 - eta) * y0
    q = eta * q_eve + background
    if q <= 0.0:
        raise ZeroGain("Bob's gain is zero (no valid outcomes and no dark counts)")
    return q, (eta * q_eve * e_eve + background * e0) / q


def gains_under_attack(
    source_mu: SourceModel,
    source_nu: SourceModel,
    policy: ThresholdPolicy,
    det: HomodyneModel,
    channel: ChannelModel,
    settings: IntegrationSettings = DEFAULT_SETTINGS,
) -> GainsUnderAttack:
    """Bob's gains and error rates for the signal and decoy pulses under attack.

    The two sources must share ``delta``; their ``mu_s`` are the signal and decoy
    intensities. When Eve never gets a valid outcome her error rate is irrelevant
    (it is multiplied by zero) and is taken as 0.
    """
    if source_mu.delta != source_nu.delta:
        raise ValidationError("signal and decoy sources must share delta")
    stats = []
    for src in (source_mu, source_nu):
        bp = basis_probabilities(policy, src, det, settings)
        q_eve = post_selection_probability(bp)
        e_eve = error_rate(bp) if bp.total > 0.0 else 0.0
        stats.append((q_eve, e_eve, *bob_statistics(q_eve, e_eve, channel)))
    (qm_e, em_e, qm, em), (qn_e, en_e, qn, en) = stats
    return GainsUnderAttack(qm, qn, em, en, qm_e, qn_e, em_e, en_e)


def equivalent_length_decoy_km(q_mu: float, dp: DecoyParams, channel: ChannelModel) -> float:
    """Fiber length at which Bob would expect the observed signal gain.

    Raises:
        InvalidGain: if ``q_mu`` is not in (0, 1].
    """
    if not 0.0 < q_mu <= 1.0:
        raise InvalidGain(f"q_mu must lie in (0, 1], got {q_mu}")
    ratio = q_mu / (dp.mu * channel.eta_bob)
    if ratio >= 1.0:
        return 0.0
    return -(10.0 / channel.loss_db_per_km) * math.log10(ratio)


def key_rate_under_attack(dp: DecoyParams, gains: GainsUnderAttack, channel: ChannelModel) -> KeyRateReport:
    """GLLP key rate the legitimate parties would estimate.

    The rate is not clamped at zero. A single-photon error bound above 1/2 is
    clamped to 1/2 inside the entropy and flagged.
    """
    flags: list[str] = []
    y1 = yield_single_lower(gains.q_mu, gains.q_nu, dp)
    q1 = dp.mu * math.exp(-dp.mu) * y1
    l_eq = equivalent_length_decoy_km(gains.q_mu, dp, channel)
    try:
        e1 = error_single_upper(gains.e_nu, gains.q_nu, y1, dp)
    except NonpositiveYield:
        flags.append(NonpositiveYield.flag)
        if y1 < 0.0:
            flags.append(FLAG_NEGATIVE_YIELD)
        return KeyRateReport(y1, None, q1, None, l_eq, tuple(flags))
    if e1 > 0.5:
        flags.append(FLAG_E1_CLAMPED)
    rate = dp.q * (
        -gains.q_mu * dp.f_ec * binary_entropy(gains.e_mu) + q1 * (1.0 - binary_entropy(min(e1, 0.5)))
    )
    return KeyRateReport(y1, e1, q1, rate, l_eq, tuple(flags))


def attacked_key_rate(
    x_th: float,
    delta: float,
    dp: DecoyParams,
    det: HomodyneModel,
    channel: ChannelModel,
    settings: IntegrationSettings = DEFAULT_SETTINGS,
) -> tuple[GainsUnderAttack, KeyRateReport]:
    """Full pipeline at one threshold: Eve's statistics -> gains -> key rate."""
    gains = gains_under_attack(
        SourceModel(dp.mu, delta), SourceModel(dp.nu, delta), ThresholdPolicy(x_th), det, channel, settings
    )
    return gains, key_rate_under_attack(dp, gains, channel)


def rate_sign_change(
    lo: float,
    hi: float,
    delta: float,
    dp: DecoyParams,
    det: HomodyneModel,
    channel: ChannelModel,
    step: float = 0.01,
    tol: float = 1e-4,
    settings: IntegrationSettings = DEFAULT_SETTINGS,
) -> float | None:
    """First threshold in ``[lo, hi]`` where the key rate turns positive.

    Scans upward in ``step`` and bisects the first non-positive -> positive
    transition to ``tol``. Returns ``None`` if no such transition exists.
    """

    def positive(x: float) -> bool:
        return attacked_key_rate(x, delta, dp, det, channel, settings)[1].positive

    n = max(1, math.ceil((hi - lo) / step - 1e-9))
    prev_x, prev_pos = lo, positive(lo)
    for i in range(1, n + 1):
        x = min(lo + i * step, hi)
        pos = positive(x)
        if pos and not prev_pos:
            a, b = prev_x, x
            while b - a >= tol:
                mid = 0.5 * (a + b)
                if positive(mid):
                    b = mid
                else:
                    a = mid
            return 0.5 * (a + b)
        prev_x, prev_pos = x, pos
    return None


@dataclass(frozen=True)
class SweepCell:
    mu: float
    nu: float
    gains: GainsUnderAttack | None
    report: KeyRateReport | None
    flag: str

    @property
    def positive(self) -> bool:
        return self.report is not None and self.report.positive


def _cell(mu: float, nu: float, delta: float, x_th: float, det, channel, settings) -> SweepCell:
    try:
        dp = DecoyParams(mu, nu)
    except ValidationError:
        return SweepCell(mu, nu, None, None, InvalidDecoyPair.flag)
    try:
        gains, report = attacked_key_rate(x_th, delta, dp, det, channel, settings)
    except PRPError as exc:
        return SweepCell(mu, nu, None, None, exc.flag)
    flag = ";".join(report.flags) if report.flags else ("positive" if report.positive else "")
    return SweepCell(mu, nu, gains, report, flag)


def sweep_mu_nu(
    mus: Sequence[float],
    nus: Sequence[float],
    delta: float,
    x_th: float,
    det: HomodyneModel,
    channel: ChannelModel,
    settings: IntegrationSettings = DEFAULT_SETTINGS,
    workers: int = 1,
) -> list[SweepCell]:
    """Key rate on the ``mus x nus`` grid, row-major (``mu`` outer).

    Bad cells are flagged and the sweep carries on. Output order follows the grid
    whatever ``workers`` is.
    """
    pairs: Iterable[tuple[float, float]] = list(itertools.product(mus, nus))

    def run(pair: tuple[float, float]) -> SweepCell:
        return _cell(pair[0], pair[1], delta, x_th, det, channel, settings)

    if workers <= 1:
        return [run(p) for p in pairs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, pairs))
