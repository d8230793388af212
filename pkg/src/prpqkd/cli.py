"""Command-line front end.

Subcommands: ``density``, ``error-rate``, ``keyrate``, ``mc``, ``reproduce``.
Angles are given in degrees. Exit status: 0 success, 1 usage error,
2 computation error, 3 tolerance / oracle failure.
"""

from __future__ import annotations

import argparse
import itertools
import math
import sys
from typing import Any, Sequence

from prpqkd import __version__
from prpqkd._backend import BACKEND
from prpqkd.attack import equivalent_length_km, error_rate, post_selection_probability
from prpqkd.decoy import attacked_key_rate
from prpqkd.errors import PRPError, ValidationError
from prpqkd.model import (
    ChannelModel,
    DecoyParams,
    HomodyneModel,
    MuEMode,
    SourceModel,
    ThresholdPolicy,
    load_config,
)
from prpqkd.montecarlo import DEFAULT_SEED, estimate_attack, write_trial_log
from prpqkd.quadrature import IntegrationSettings, basis_probabilities, density_marginal
from prpqkd.reproduce import KEYRATE_COLUMNS, SCENARIOS, run, summary_table
from prpqkd.table import Table

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_COMPUTE = 2
EXIT_TOLERANCE = 3

DEFAULTS: dict[str, Any] = {
    "mu_s": 0.3,
    "delta_deg": 30.0,
    "alice_phase_deg": 0.0,
    "x_th": 2.0,
    "lambda": 1.0,
    "kappa": 1.0,
    "a_db_km": 0.21,
    "eta_bob": 0.045,
    "y0": 1.7e-6,
    "e0": 0.5,
    "mu_e_mode": "compensated",
    "mu_e": None,
    "mu": 0.48,
    "nu": 0.05,
}

PRESETS: dict[str, dict[str, Any]] = {
    "gys": {"a_db_km": 0.21, "eta_bob": 0.045, "y0": 1.7e-6, "e0": 0.5, "mu_e_mode": "compensated"},
    "fig3": {"lambda": 0.75, "kappa": 1.1},
    "perfect": {"lambda": 1.0, "kappa": 1.0},
}

# CLI flag dest -> canonical config key
_PARAM_FLAGS = {
    "mu_s": "--mu-s",
    "delta_deg": "--delta-deg",
    "x_th": "--x-th",
    "lambda": "--lambda",
    "kappa": "--kappa",
    "a_db_km": "--a-db-km",
    "eta_bob": "--eta-bob",
    "y0": "--y0",
    "mu_e": "--mu-e",
    "mu": "--mu",
    "nu": "--nu",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit with 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_model_args(p: argparse.ArgumentParser, sweepable: Sequence[str]) -> None:
    g = p.add_argument_group("model parameters (later sources override earlier: defaults, --preset, --config, flags)")
    g.add_argument("--config", help="key = value parameter file")
    g.add_argument("--preset", action="append", choices=sorted(PRESETS), default=[],
                   help="named parameter set; repeatable")
    for key, flag in _PARAM_FLAGS.items():
        g.add_argument(flag, dest=key, type=float, default=None)
    g.add_argument("--mu-e-mode", dest="mu_e_mode", choices=[m.value for m in MuEMode], default=None)
    g.add_argument("--abs-tol", type=float, default=1e-10, help="theta quadrature tolerance")
    if sweepable:
        g.add_argument("--sweep", action="append", default=[], metavar="NAME=START:STOP:STEP",
                       help=f"sweep a parameter (repeatable, row-major); NAME in {', '.join(sweepable)}")
    o = p.add_argument_group("output")
    o.add_argument("--out", help="also write CSV files into this directory")
    o.add_argument("--json", action="store_true", help="write a JSON mirror next to each CSV")


def _resolve(args: argparse.Namespace) -> dict[str, Any]:
    params = dict(DEFAULTS)
    for name in args.preset:
        params.update(PRESETS[name])
    if args.config:
        try:
            params.update(load_config(args.config))
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
    for key in list(_PARAM_FLAGS) + ["mu_e_mode"]:
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    return params


def _parse_sweep(specs: Sequence[str], allowed: Sequence[str]) -> list[tuple[str, list[float]]]:
    axes = []
    for spec in specs:
        try:
            name, rng = spec.split("=", 1)
            start, stop, step = (float(v) for v in rng.split(":"))
        except ValueError:
            raise UsageError(f"bad --sweep {spec!r}; expected NAME=START:STOP:STEP") from None
        name = name.strip().replace("-", "_")
        if name not in allowed:
            raise UsageError(f"cannot sweep {name!r}; choose from {', '.join(allowed)}")
        if step <= 0 or stop < start:
            raise UsageError(f"bad --sweep range {spec!r}")
        n = int(math.floor((stop - start) / step + 1e-9))
        axes.append((name, [round(start + i * step, 12) for i in range(n + 1)]))
    return axes


def _grid(params: dict[str, Any], axes: list[tuple[str, list[float]]]) -> list[dict[str, Any]]:
    if not axes:
        return [params]
    names = [a[0] for a in axes]
    return [{**params, **dict(zip(names, combo))} for combo in itertools.product(*(a[1] for a in axes))]


def _source(p: dict[str, Any]) -> SourceModel:
    return SourceModel.from_degrees(p["mu_s"], p["delta_deg"], p.get("alice_phase_deg", 0.0))


def _homodyne(p: dict[str, Any]) -> HomodyneModel:
    return HomodyneModel(p["lambda"], p["kappa"])


def _channel(p: dict[str, Any]) -> ChannelModel:
    mode = MuEMode(p["mu_e_mode"])
    return ChannelModel(p["a_db_km"], p["eta_bob"], p["y0"], p.get("e0", 0.5), mode,
                        p.get("mu_e") if mode is MuEMode.CUSTOM else None)


def _echo(p: dict[str, Any], keys: Sequence[str]) -> dict[str, Any]:
    return {k: p[k] for k in keys if p.get(k) is not None}


def _failure_status(exc: PRPError, quiet: bool) -> int:
    if not quiet:
        print(f"prpqkd: {exc.flag}: {exc}", file=sys.stderr)
    # bad parameter values are a usage problem, anything else failed to compute
    return EXIT_USAGE if isinstance(exc, ValidationError) else EXIT_COMPUTE


def _emit(tables: Sequence[Table], args: argparse.Namespace) -> None:
    for t in tables:
        sys.stdout.write(t.to_csv())
        if args.out:
            t.write(args.out, json_mirror=args.json)


def cmd_density(args: argparse.Namespace) -> int:
    p = _resolve(args)
    src, det = _source(p), _homodyne(p)
    settings = IntegrationSettings(args.abs_tol)
    if args.step <= 0 or args.x_max < args.x_min:
        raise UsageError("need --step > 0 and --x-max >= --x-min")
    n = int(math.floor((args.x_max - args.x_min) / args.step + 1e-9))
    t = Table("density", ["x", "p_phi0", "p_phi90", "p_phi180", "p_phi270"],
              _echo(p, ["mu_s", "delta_deg", "lambda", "kappa"]))
    for i in range(n + 1):
        x = round(args.x_min + i * args.step, 12)
        t.add(x, *(density_marginal(x, k * math.pi / 2, src, det, settings) for k in range(4)))
    _emit([t], args)
    return EXIT_OK


ERROR_RATE_COLUMNS = ["delta_deg", "mu_s", "x_th", "lambda", "kappa", "p0_plus", "p0_minus", "ppi2_plus",
                      "ppi2_minus", "error_rate", "p_post", "equiv_length_km", "flag"]


def cmd_error_rate(args: argparse.Namespace) -> int:
    base = _resolve(args)
    axes = _parse_sweep(args.sweep, ["x_th", "delta_deg", "mu_s", "lambda", "kappa"])
    settings = IntegrationSettings(args.abs_tol)
    t = Table("error_rate", ERROR_RATE_COLUMNS,
              _echo(base, ["a_db_km", "eta_bob", "mu_e_mode", "mu_e"]) | {"sweep": " ".join(args.sweep) or None})
    status = EXIT_OK
    for p in _grid(base, axes):
        lead = [p["delta_deg"], p["mu_s"], p["x_th"], p["lambda"], p["kappa"]]
        try:
            src = _source(p)
            bp = basis_probabilities(ThresholdPolicy(p["x_th"]), src, _homodyne(p), settings)
            p_post = post_selection_probability(bp)
            try:
                length = equivalent_length_km(p_post, src.mu_s, _channel(p))
            except PRPError:
                length = None
            t.add(*lead, *bp.as_tuple(), error_rate(bp), p_post, length, "")
        except PRPError as exc:
            status = max(status, _failure_status(exc, quiet=bool(axes)))
            t.add(*lead, *([None] * 7), exc.flag)
    _emit([t], args)
    return EXIT_OK if axes else status


def cmd_keyrate(args: argparse.Namespace) -> int:
    base = _resolve(args)
    axes = _parse_sweep(args.sweep, ["x_th", "delta_deg", "lambda", "kappa", "mu", "nu"])
    settings = IntegrationSettings(args.abs_tol)
    t = Table("keyrate", KEYRATE_COLUMNS,
              _echo(base, ["a_db_km", "eta_bob", "y0"]) | {"sweep": " ".join(args.sweep) or None})
    status = EXIT_OK
    for p in _grid(base, axes):
        lead = [p["delta_deg"], p["x_th"], p["lambda"], p["kappa"], p["mu"], p["nu"]]
        try:
            dp = DecoyParams(p["mu"], p["nu"])
            gains, rep = attacked_key_rate(p["x_th"], math.radians(p["delta_deg"]), dp, _homodyne(p), _channel(p), settings)
        except PRPError as exc:
            status = max(status, _failure_status(exc, quiet=bool(axes)))
            flag = "invalid_decoy_pair" if isinstance(exc, ValidationError) and p["mu"] <= p["nu"] else exc.flag
            t.add(*lead, *([None] * 9), flag)
            continue
        if rep.rate is None:
            status = max(status, EXIT_COMPUTE)
        t.add(*lead, gains.q_mu, gains.e_mu, gains.q_nu, gains.e_nu, rep.y1_lower, rep.e1_upper,
              rep.q1_lower, rep.rate, rep.l_eq_km, ";".join(rep.flags))
    _emit([t], args)
    return EXIT_OK if axes else status


def cmd_mc(args: argparse.Namespace) -> int:
    p = _resolve(args)
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    src, det, policy = _source(p), _homodyne(p), ThresholdPolicy(p["x_th"])
    bp = basis_probabilities(policy, src, det, IntegrationSettings(args.abs_tol))
    analytic = {"p_post": post_selection_probability(bp)}
    try:
        analytic["error_rate"] = error_rate(bp)
    except PRPError:
        analytic["error_rate"] = None
    t = Table("mc", ["quantity", "analytic", "mc_mean", "std_err", "z", "n", "seed", "flag"],
              _echo(p, ["mu_s", "delta_deg", "x_th", "lambda", "kappa"]) | {"n": args.n, "seed": args.seed})
    worst = 0.0
    try:
        e_est, p_est = estimate_attack(args.n, args.seed, src, det, policy, workers=args.workers)
    except PRPError as exc:
        t.add("error_rate", analytic["error_rate"], None, None, None, args.n, args.seed, exc.flag)
        t.add("p_post", analytic["p_post"], None, None, None, args.n, args.seed, exc.flag)
        _emit([t], args)
        return EXIT_TOLERANCE
    for name, est in (("error_rate", e_est), ("p_post", p_est)):
        ref = analytic[name]
        z = est.z_score(ref) if ref is not None else None
        flag = "" if z is not None and abs(z) <= 4.0 else "z_exceeds_4"
        if z is None or abs(z) > 4.0:
            worst = math.inf
        t.add(name, ref, est.mean, est.std_err, z, est.n, est.seed, flag)
    if args.trial_log:
        write_trial_log(args.trial_log, args.n, args.seed, src, det, policy, max_rows=args.trial_log_rows)
    _emit([t], args)
    return EXIT_TOLERANCE if worst > 4.0 else EXIT_OK


def cmd_reproduce(args: argparse.Namespace) -> int:
    ids = list(SCENARIOS) if args.figure_id == "all" else [args.figure_id]
    failed = False
    for fid in ids:
        tables, checks = run(fid)
        summary = summary_table(fid, checks)
        for t in [*tables, summary]:
            t.write(args.out, json_mirror=args.json)
        sys.stdout.write(summary.to_csv())
        failed = failed or not all(c.passed for c in checks)
    return EXIT_TOLERANCE if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="prpqkd", description="Intercept-resend analysis for two-way BB84 with incomplete phase randomization.")
    parser.add_argument("--version", action="version", version=f"prpqkd {__version__} (kernels: {BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("density", help="quadrature density for the four BB84 phases")
    _add_model_args(p, ())
    p.add_argument("--x-min", type=float, default=-3.0)
    p.add_argument("--x-max", type=float, default=3.0)
    p.add_argument("--step", type=float, default=0.01)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("error-rate", help="induced error rate, post-selection and equivalent length")
    _add_model_args(p, ["x_th", "delta_deg", "mu_s", "lambda", "kappa"])
    p.set_defaults(func=cmd_error_rate)

    p = sub.add_parser("keyrate", help="one-decoy GLLP key rate under attack")
    _add_model_args(p, ["x_th", "delta_deg", "lambda", "kappa", "mu", "nu"])
    p.set_defaults(func=cmd_keyrate)

    p = sub.add_parser("mc", help="Monte Carlo against the analytic error rate and post-selection")
    _add_model_args(p, ())
    p.add_argument("--n", type=int, default=10**6, help="number of trials")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--trial-log", help="CSV file receiving individual trials")
    p.add_argument("--trial-log-rows", type=int, default=10_000)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("reproduce", help="regenerate a published figure or table")
    p.add_argument("figure_id", choices=[*SCENARIOS, "all"])
    p.add_argument("--out", default=".", help="output directory (default: current directory)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"prpqkd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"prpqkd: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PRPError as exc:
        print(f"prpqkd: computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
