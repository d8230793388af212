"""Trial-level Monte Carlo of the attack, used as an independent oracle.

Each trial draws Alice's BB84 phase, Eve's basis, the random phase ``theta`` and a
Gaussian quadrature sample, then applies Eve's threshold rule. A mismatched
basis counts as an error through an explicit fair coin, so every tally is a plain
Bernoulli count.

Randomness is Philox4x32-10 (Random123) keyed by the 64-bit seed and indexed by
trial number; Gaussian samples use the Box-Muller cosine branch. Trial ``i``
therefore depends only on ``(seed, i)``, so any split of the trial range into
chunks reproduces the serial tallies exactly. The stream layout is documented
in :mod:`prpqkd._purecore`.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator

from prpqkd import _purecore
from prpqkd._backend import kernels
from prpqkd.errors import NoValidOutcomes, ValidationError
from prpqkd.model import HALF_PI, HomodyneModel, Outcome, Side, SourceModel, ThresholdPolicy

DEFAULT_SEED = 20120101
# fixed so that results never depend on the worker count
CHUNK_TRIALS = 1 << 22
TRIAL_LOG_MAX_ROWS = 100_000


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_err: float
    n: int
    seed: int

    @classmethod
    def from_counts(cls, hits: int, n: int, seed: int) -> McEstimate:
        if n < 1:
            raise ValidationError("an estimate needs n >= 1")
        p = hits / n
        return cls(p, math.sqrt(p * (1.0 - p) / n), n, seed)

    def z_score(self, reference: float) -> float:
        diff = self.mean - reference
        if self.std_err == 0.0:
            return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
        return diff / self.std_err


@dataclass(frozen=True)
class Tally:
    n: int
    n_plus: int
    n_minus: int
    n_error: int

    @property
    def n_valid(self) -> int:
        return self.n_plus + self.n_minus

    def __add__(self, other: Tally) -> Tally:
        return Tally(self.n + other.n, self.n_plus + other.n_plus, self.n_minus + other.n_minus, self.n_error + other.n_error)


@dataclass(frozen=True)
class TrialRecord:
    index: int
    alice_phase: float
    eve_basis: float
    theta: float
    x: float
    outcome: Outcome
    is_error: bool | None  # None for inconclusive outcomes


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValidationError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def tally(
    n: int,
    seed: int,
    source: SourceModel,
    det: HomodyneModel,
    policy: ThresholdPolicy,
    phase_index: int = -1,
    workers: int = 1,
    start: int = 0,
) -> Tally:
    """Run ``n`` trials and count outcomes.

    ``phase_index`` in 0..3 fixes the total phase to ``phase_index * pi/2``;
    negative values draw Alice's phase and Eve's basis per trial.
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    seed = _check_seed(seed)
    amp = det.lambda_eff * source.amplitude
    chunks = [(start + s, min(CHUNK_TRIALS, n - s)) for s in range(0, n, CHUNK_TRIALS)]

    def run(chunk: tuple[int, int]) -> Tally:
        lo, size = chunk
        p, m, e = kernels.mc_tally(seed, lo, size, amp, det.kappa, source.delta, policy.x_th, phase_index)
        return Tally(size, p, m, e)

    if workers <= 1 or len(chunks) == 1:
        parts = [run(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
    total = Tally(0, 0, 0, 0)
    for part in parts:
        total = total + part
    return total


def estimate_attack(
    n: int,
    seed: int,
    source: SourceModel,
    det: HomodyneModel,
    policy: ThresholdPolicy,
    workers: int = 1,
) -> tuple[McEstimate, McEstimate]:
    """Monte Carlo error rate (among valid outcomes) and post-selection probability.

    Raises:
        NoValidOutcomes: if no trial produced a valid outcome.
    """
    t = tally(n, seed, source, det, policy, workers=workers)
    if t.n_valid == 0:
        raise NoValidOutcomes(f"no valid outcomes in {n} trials at x_th={policy.x_th}")
    return McEstimate.from_counts(t.n_error, t.n_valid, seed), McEstimate.from_counts(t.n_valid, n, seed)


def estimate_outcome_probability(
    n: int,
    seed: int,
    phi_index: int,
    side: Side,
    source: SourceModel,
    det: HomodyneModel,
    policy: ThresholdPolicy,
    workers: int = 1,
) -> McEstimate:
    """Frequency of a plus/minus valid outcome at fixed total phase ``phi_index * pi/2``."""
    if phi_index not in (0, 1, 2, 3):
        raise ValidationError(f"phi_index must be 0..3, got {phi_index}")
    t = tally(n, seed, source, det, policy, phase_index=phi_index, workers=workers)
    hits = t.n_plus if side is Side.PLUS else t.n_minus
    return McEstimate.from_counts(hits, n, seed)


def sample_quadratures(n: int, seed: int, phi_index: int, source: SourceModel, det: HomodyneModel, start: int = 0):
    """Raw quadrature samples at fixed total phase, as a numpy array."""
    block = _purecore.sample_block(
        _check_seed(seed), start, n, det.lambda_eff * source.amplitude, det.kappa, source.delta, phi_index
    )
    return block["x"]


def _records(block, start: int, policy: ThresholdPolicy) -> Iterator[TrialRecord]:
    for j in range(len(block["x"])):
        x = float(block["x"][j])
        m = int(block["m"][j])
        outcome = policy.classify(x)
        if outcome is Outcome.INCONCLUSIVE:
            is_error = None
        elif m % 2 == 1:
            is_error = bool(block["coin"][j])
        else:
            is_error = (outcome is Outcome.MINUS_VALID) == (m == 0)
        yield TrialRecord(
            index=start + j,
            alice_phase=int(block["alice"][j]) * HALF_PI,
            eve_basis=int(block["eve"][j]) * HALF_PI,
            theta=float(block["theta"][j]),
            x=x,
            outcome=outcome,
            is_error=is_error,
        )


def iter_trials(
    n: int,
    seed: int,
    source: SourceModel,
    det: HomodyneModel,
    policy: ThresholdPolicy,
    start: int = 0,
) -> Iterator[TrialRecord]:
    """Yield individual trial records ``start .. start+n-1``."""
    seed = _check_seed(seed)
    amp = det.lambda_eff * source.amplitude
    step = 1 << 16
    for lo in range(start, start + n, step):
        size = min(step, start + n - lo)
        block = _purecore.sample_block(seed, lo, size, amp, det.kappa, source.delta, -1)
        yield from _records(block, lo, policy)


def simulate_trial(
    seed: int,
    index: int,
    source: SourceModel,
    det: HomodyneModel,
    policy: ThresholdPolicy,
) -> TrialRecord:
    """The single trial number ``index`` of the stream keyed by ``seed``."""
    return next(iter_trials(1, seed, source, det, policy, start=index))


def write_trial_log(
    path: str,
    n: int,
    seed: int,
    source: SourceModel,
    det: HomodyneModel,
    policy: ThresholdPolicy,
    max_rows: int = TRIAL_LOG_MAX_ROWS,
) -> int:
    """Write up to ``max_rows`` trial records as CSV; returns the number written."""
    rows = min(n, max_rows)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "alice_phase", "eve_basis", "theta", "x", "outcome", "is_error"])
        for rec in iter_trials(rows, seed, source, det, policy):
            writer.writerow(
                [
                    rec.index,
                    f"{rec.alice_phase:.12g}",
                    f"{rec.eve_basis:.12g}",
                    f"{rec.theta:.12g}",
                    f"{rec.x:.12g}",
                    rec.outcome.value,
                    "NA" if rec.is_error is None else int(rec.is_error),
                ]
            )
    return rows
