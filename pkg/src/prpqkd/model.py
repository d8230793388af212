"""Domain types, presets and the key-value configuration format.

All model objects are frozen dataclasses that validate themselves on construction
and raise :class:`~prpqkd.errors.ValidationError` on bad input.

Configuration files are plain text, one ``key = value`` per line, ``#`` starts a
comment. Recognised keys::

    mu_s, delta_deg, alice_phase_deg       -> SourceModel
    lambda, kappa                          -> HomodyneModel
    x_th                                   -> ThresholdPolicy
    a_db_km, eta_bob, y0, e0, mu_e_mode, mu_e  -> ChannelModel
    mu, nu                                 -> DecoyParams
    beta, n_a_in, gamma                    -> EveCoupling

Angles are degrees in the file and radians everywhere in the API.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields
from typing import Any, Mapping

from prpqkd.errors import ValidationError

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi


def _check(condition: bool, message: str) -> None:
    if not condition:
        raise ValidationError(message)


def _finite(name: str, value: float) -> float:
    value = float(value)
    _check(math.isfinite(value), f"{name} must be finite, got {value!r}")
    return value


class Side(enum.Enum):
    PLUS = "plus"
    MINUS = "minus"


class Outcome(enum.Enum):
    PLUS_VALID = "plus"
    MINUS_VALID = "minus"
    INCONCLUSIVE = "inconclusive"

    @property
    def is_valid(self) -> bool:
        return self is not Outcome.INCONCLUSIVE


class MuEMode(enum.Enum):
    """Intensity Eve resends to Bob after a valid outcome."""

    SINGLE_PHOTON = "single_photon"
    COMPENSATED = "compensated"
    CUSTOM = "custom"


@dataclass(frozen=True)
class SourceModel:
    """Alice's outgoing signal pulse.

    Attributes:
        mu_s: mean photon number of the signal pulse leaving Alice.
        delta: width of the random phase range in radians; the phase is uniform on
            ``[0, delta]`` and ``delta = 0`` is a point mass at zero.
        alice_phase: BB84 encoding phase, a multiple of pi/2 in ``[0, 2pi)``.
    """

    mu_s: float
    delta: float
    alice_phase: float = 0.0

    def __post_init__(self) -> None:
        mu_s = _finite("mu_s", self.mu_s)
        delta = _finite("delta", self.delta)
        phase = _finite("alice_phase", self.alice_phase)
        _check(mu_s >= 0.0, f"mu_s must be >= 0, got {mu_s}")
        _check(0.0 <= delta <= TWO_PI, f"delta must lie in [0, 2pi], got {delta}")
        k = round(phase / HALF_PI)
        _check(
            k in (0, 1, 2, 3) and abs(phase - k * HALF_PI) < 1e-9,
            f"alice_phase must be one of 0, pi/2, pi, 3pi/2, got {phase}",
        )
        object.__setattr__(self, "mu_s", mu_s)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "alice_phase", k * HALF_PI)

    @property
    def alice_phase_index(self) -> int:
        return round(self.alice_phase / HALF_PI)

    @property
    def amplitude(self) -> float:
        """sqrt(mu_s), the coherent amplitude."""
        return math.sqrt(self.mu_s)

    def with_intensity(self, mu_s: float) -> SourceModel:
        return SourceModel(mu_s, self.delta, self.alice_phase)

    @classmethod
    def from_degrees(cls, mu_s: float, delta_deg: float, alice_phase_deg: float = 0.0) -> SourceModel:
        return cls(mu_s, math.radians(delta_deg), math.radians(alice_phase_deg))


@dataclass(frozen=True)
class HomodyneModel:
    """Eve's homodyne detector.

    ``lambda_eff`` scales the measured amplitude and ``kappa`` broadens the
    quadrature noise; ``lambda_eff = kappa = 1`` is a perfect detector. The local
    oscillator is taken as strong and is already absorbed into the normalised
    quadrature.
    """

    lambda_eff: float = 1.0
    kappa: float = 1.0

    def __post_init__(self) -> None:
        lam = _finite("lambda_eff", self.lambda_eff)
        kappa = _finite("kappa", self.kappa)
        _check(0.0 < lam <= 1.0, f"lambda_eff must lie in (0, 1], got {lam}")
        _check(kappa > 0.0, f"kappa must be > 0, got {kappa}")
        object.__setattr__(self, "lambda_eff", lam)
        object.__setattr__(self, "kappa", kappa)

    @property
    def is_perfect(self) -> bool:
        return self.lambda_eff == 1.0 and self.kappa == 1.0

    @property
    def noise_std(self) -> float:
        """Standard deviation of the measured quadrature, kappa/2."""
        return 0.5 * self.kappa


@dataclass(frozen=True)
class ThresholdPolicy:
    """Symmetric acceptance thresholds ``+x_th`` / ``-x_th``."""

    x_th: float

    def __post_init__(self) -> None:
        x_th = _finite("x_th", self.x_th)
        _check(x_th >= 0.0, f"x_th must be >= 0, got {x_th}")
        object.__setattr__(self, "x_th", x_th)

    def classify(self, x: float) -> Outcome:
        # closed intervals; at x_th = 0 the plus branch wins at x = 0
        if x >= self.x_th:
            return Outcome.PLUS_VALID
        if x <= -self.x_th:
            return Outcome.MINUS_VALID
        return Outcome.INCONCLUSIVE


@dataclass(frozen=True)
class ChannelModel:
    """Fiber and Bob-side parameters.

    Attributes:
        loss_db_per_km: fiber attenuation ``a``.
        eta_bob: Bob's overall transmittance including detector efficiency.
        y0: dark-count probability per gate.
        e0: error rate of dark counts, always 1/2.
        mu_e_mode: how strong a pulse Eve resends after a valid outcome.
        mu_e_custom: resend intensity when ``mu_e_mode`` is CUSTOM.
    """

    loss_db_per_km: float
    eta_bob: float
    y0: float
    e0: float = 0.5
    mu_e_mode: MuEMode = MuEMode.COMPENSATED
    mu_e_custom: float | None = None

    def __post_init__(self) -> None:
        a = _finite("loss_db_per_km", self.loss_db_per_km)
        eta = _finite("eta_bob", self.eta_bob)
        y0 = _finite("y0", self.y0)
        e0 = _finite("e0", self.e0)
        mode = MuEMode(self.mu_e_mode)
        _check(a > 0.0, f"loss_db_per_km must be > 0, got {a}")
        _check(0.0 < eta <= 1.0, f"eta_bob must lie in (0, 1], got {eta}")
        _check(0.0 <= y0 < 1.0, f"y0 must lie in [0, 1), got {y0}")
        _check(e0 == 0.5, f"e0 is fixed at 0.5, got {e0}")
        custom = self.mu_e_custom
        if mode is MuEMode.CUSTOM:
            _check(custom is not None, "mu_e_custom is required when mu_e_mode is CUSTOM")
            custom = _finite("mu_e_custom", custom)
            _check(custom > 0.0, f"mu_e_custom must be > 0, got {custom}")
        else:
            _check(custom is None, "mu_e_custom is only allowed with mu_e_mode CUSTOM")
        object.__setattr__(self, "loss_db_per_km", a)
        object.__setattr__(self, "eta_bob", eta)
        object.__setattr__(self, "y0", y0)
        object.__setattr__(self, "e0", e0)
        object.__setattr__(self, "mu_e_mode", mode)
        object.__setattr__(self, "mu_e_custom", custom)

    @property
    def mu_e(self) -> float:
        """Mean photon number of the pulse Eve resends to Bob."""
        if self.mu_e_mode is MuEMode.SINGLE_PHOTON:
            return 1.0
        if self.mu_e_mode is MuEMode.COMPENSATED:
            return 1.0 / self.eta_bob
        return self.mu_e_custom  # type: ignore[return-value]

    def transmittance(self, length_km: float) -> float:
        return 10.0 ** (-self.loss_db_per_km * length_km / 10.0)

    def with_mu_e(self, mode: MuEMode, custom: float | None = None) -> ChannelModel:
        return ChannelModel(self.loss_db_per_km, self.eta_bob, self.y0, self.e0, mode, custom)


@dataclass(frozen=True)
class DecoyParams:
    """One-decoy protocol parameters; ``q`` and ``f_ec`` are protocol constants."""

    mu: float
    nu: float
    q: float = 0.5
    f_ec: float = 1.22

    def __post_init__(self) -> None:
        mu = _finite("mu", self.mu)
        nu = _finite("nu", self.nu)
        _check(nu > 0.0, f"nu must be > 0, got {nu}")
        _check(mu > nu, f"mu must exceed nu, got mu={mu}, nu={nu}")
        _check(self.q == 0.5, f"q is fixed at 1/2, got {self.q}")
        _check(self.f_ec == 1.22, f"f_ec is fixed at 1.22, got {self.f_ec}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "nu", nu)


# slack for quadrature round-off when probabilities are assembled
_PROB_SLACK = 1e-9


@dataclass(frozen=True)
class BasisProbabilities:
    """Valid-outcome probabilities for Eve's matching (0) and conjugate (pi/2) basis.

    ``p0_plus`` is the probability of a correct decision in the matching basis and
    ``p0_minus`` the probability of a wrong one.
    """

    p0_plus: float
    p0_minus: float
    ppi2_plus: float
    ppi2_minus: float

    def __post_init__(self) -> None:
        for f in fields(self):
            v = _finite(f.name, getattr(self, f.name))
            _check(-_PROB_SLACK <= v <= 1.0 + _PROB_SLACK, f"{f.name} must lie in [0, 1], got {v}")
            object.__setattr__(self, f.name, min(max(v, 0.0), 1.0))
        _check(self.p0_plus + self.p0_minus <= 1.0 + _PROB_SLACK, "p0_plus + p0_minus exceeds 1")
        _check(self.ppi2_plus + self.ppi2_minus <= 1.0 + _PROB_SLACK, "ppi2_plus + ppi2_minus exceeds 1")

    @property
    def total(self) -> float:
        return self.p0_plus + self.p0_minus + self.ppi2_plus + self.ppi2_minus

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.p0_plus, self.p0_minus, self.ppi2_plus, self.ppi2_minus)


@dataclass(frozen=True)
class EveCoupling:
    """Intensity accounting for the pulses Eve injects into Alice's zone.

    ``beta`` is the share of the total input ``n_a_in`` put into the signal pulse
    (1 when Eve can drop the reference pulse, 1/2 when Alice monitors both), and
    ``gamma`` the transmittance of Alice's attenuator.
    """

    beta: float
    n_a_in: float
    gamma: float

    def __post_init__(self) -> None:
        beta = _finite("beta", self.beta)
        n_a_in = _finite("n_a_in", self.n_a_in)
        gamma = _finite("gamma", self.gamma)
        _check(0.0 <= beta <= 1.0, f"beta must lie in [0, 1], got {beta}")
        _check(n_a_in >= 0.0, f"n_a_in must be >= 0, got {n_a_in}")
        _check(0.0 < gamma <= 1.0, f"gamma must lie in (0, 1], got {gamma}")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "n_a_in", n_a_in)
        object.__setattr__(self, "gamma", gamma)

    @property
    def n_signal(self) -> float:
        return self.beta * self.n_a_in

    @property
    def n_reference(self) -> float:
        return (1.0 - self.beta) * self.n_a_in


def preset_gys() -> ChannelModel:
    """GYS experimental channel: 0.21 dB/km fiber, eta_Bob = 4.5 %, Y0 = 1.7e-6."""
    return ChannelModel(
        loss_db_per_km=0.21,
        eta_bob=0.045,
        y0=1.7e-6,
        e0=0.5,
        mu_e_mode=MuEMode.COMPENSATED,
    )


def preset_fig3_homodyne() -> HomodyneModel:
    """Measured imperfect homodyne detector, lambda = 0.75 and kappa = 1.1."""
    return HomodyneModel(lambda_eff=0.75, kappa=1.1)


def preset_perfect_homodyne() -> HomodyneModel:
    return HomodyneModel(1.0, 1.0)


# ---------------------------------------------------------------------------
# key = value configuration files

_FLOAT_KEYS = {
    "mu_s", "delta_deg", "alice_phase_deg", "x_th", "lambda", "kappa",
    "a_db_km", "eta_bob", "y0", "e0", "mu_e", "mu", "nu", "beta", "n_a_in", "gamma",
}
_STR_KEYS = {"mu_e_mode"}
CONFIG_KEYS = frozenset(_FLOAT_KEYS | _STR_KEYS)


def parse_config(text: str) -> dict[str, Any]:
    """Parse ``key = value`` text into a dict of canonical keys.

    Raises:
        ValidationError: on unknown keys, duplicates or malformed lines.
    """
    out: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ValidationError(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise ValidationError(f"line {lineno}: duplicate key {key!r}")
        if key in _FLOAT_KEYS:
            try:
                out[key] = float(value)
            except ValueError:
                raise ValidationError(f"line {lineno}: {key} needs a number, got {value!r}") from None
        else:
            try:
                out[key] = MuEMode(value.lower()).value
            except ValueError:
                raise ValidationError(f"line {lineno}: bad mu_e_mode {value!r}") from None
    return out


def load_config(path: str) -> dict[str, Any]:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def dump_config(**models: Any) -> str:
    """Serialise model objects to config text; floats are written with ``repr``.

    Accepted keywords: ``source``, ``homodyne``, ``policy``, ``channel``,
    ``decoy``, ``coupling``.
    """
    lines: list[str] = []

    def put(key: str, value: Any) -> None:
        lines.append(f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}")

    for name, obj in models.items():
        if obj is None:
            continue
        if isinstance(obj, SourceModel):
            put("mu_s", obj.mu_s)
            put("delta_deg", math.degrees(obj.delta))
            put("alice_phase_deg", 90.0 * obj.alice_phase_index)
        elif isinstance(obj, HomodyneModel):
            put("lambda", obj.lambda_eff)
            put("kappa", obj.kappa)
        elif isinstance(obj, ThresholdPolicy):
            put("x_th", obj.x_th)
        elif isinstance(obj, ChannelModel):
            put("a_db_km", obj.loss_db_per_km)
            put("eta_bob", obj.eta_bob)
            put("y0", obj.y0)
            put("e0", obj.e0)
            put("mu_e_mode", obj.mu_e_mode.value)
            if obj.mu_e_custom is not None:
                put("mu_e", obj.mu_e_custom)
        elif isinstance(obj, DecoyParams):
            put("mu", obj.mu)
            put("nu", obj.nu)
        elif isinstance(obj, EveCoupling):
            put("beta", obj.beta)
            put("n_a_in", obj.n_a_in)
            put("gamma", obj.gamma)
        else:
            raise TypeError(f"cannot serialise {name}={obj!r}")
    return "\n".join(lines) + "\n"


def source_from_config(cfg: Mapping[str, Any]) -> SourceModel:
    return SourceModel.from_degrees(cfg["mu_s"], cfg["delta_deg"], cfg.get("alice_phase_deg", 0.0))


def homodyne_from_config(cfg: Mapping[str, Any]) -> HomodyneModel:
    return HomodyneModel(cfg.get("lambda", 1.0), cfg.get("kappa", 1.0))


def policy_from_config(cfg: Mapping[str, Any]) -> ThresholdPolicy:
    return ThresholdPolicy(cfg["x_th"])


def channel_from_config(cfg: Mapping[str, Any]) -> ChannelModel:
    mode = MuEMode(cfg.get("mu_e_mode", MuEMode.COMPENSATED.value))
    return ChannelModel(
        loss_db_per_km=cfg["a_db_km"],
        eta_bob=cfg["eta_bob"],
        y0=cfg["y0"],
        e0=cfg.get("e0", 0.5),
        mu_e_mode=mode,
        mu_e_custom=cfg.get("mu_e") if mode is MuEMode.CUSTOM else None,
    )


def decoy_from_config(cfg: Mapping[str, Any]) -> DecoyParams:
    return DecoyParams(cfg["mu"], cfg["nu"])


def coupling_from_config(cfg: Mapping[str, Any]) -> EveCoupling:
    return EveCoupling(cfg["beta"], cfg["n_a_in"], cfg["gamma"])
