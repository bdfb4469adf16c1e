"""Command-line entry point: solve / rate / estimate / test / prior / simulate.

Exit codes: 0 success, 1 input error, 2 numerical failure (solver bracket
cap).  Every JSON output embeds {tool_version, config_hash, seed} so any
artifact can be reproduced from its own metadata.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys

import numpy as np

from ._version import __version__
from .config import ConfigError, parse_config
from .estimators import (
    EstimationInput,
    adaptive_estimate,
    collier_estimate,
    default_zeta,
    family_estimate,
    linear_test,
    nonsymmetric_estimate,
    oracle_estimate,
    plugin_estimate,
    unknown_sigma_estimate,
)
from .loading import LoadingSpec, LoadingVector, drop_zero_loadings, make_loading
from .lowerbound import build_prior, chi2_mixture_bound, prior_moments, sample_prior
from .rates import RateCalculator, closed_form_for_spec
from .sim import risk_grid, run_risk
from .threshold import BracketError, solve_adaptive_beta, solve_beta, solve_lambda_H

__all__ = ["main", "console_main"]


class CliError(ValueError):
    """User input error; reported on stderr with exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # input errors exit 1, not argparse's 2
        raise CliError(message)


def _meta(params: dict, seed: int | None = None) -> dict:
    blob = json.dumps(params, sort_keys=True, separators=(",", ":"))
    return {
        "tool_version": __version__,
        "config_hash": hashlib.sha256(blob.encode("utf-8")).hexdigest(),
        "seed": seed,
    }


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _add_loading_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--loading-spec", choices=["homogeneous", "two_phase", "exp_decay"],
                   help="generated loading family")
    p.add_argument("--d", type=int, help="dimension for a generated loading")
    p.add_argument("--gamma-d", type=float, help="two_phase head-count exponent")
    p.add_argument("--gamma-lambda", type=float, help="two_phase head-value exponent")
    p.add_argument("--c", type=float, help="exp_decay scale of the decay profile c*x^gamma")
    p.add_argument("--gamma", type=float, help="exp_decay exponent (>= 1)")
    p.add_argument("--loading-file", help="explicit loading, one float per line")
    p.add_argument("--drop-zeros", action="store_true",
                   help="drop zero entries from --loading-file before validation")


def _loading_from_args(args) -> tuple[LoadingVector, LoadingSpec | None]:
    if args.loading_file:
        values = _read_floats(args.loading_file)
        if args.drop_zeros:
            values, kept = drop_zero_loadings(values)
            dropped = len(_read_floats(args.loading_file)) - len(kept)
            if dropped:
                print(f"dropped {dropped} zero loadings", file=sys.stderr)
        spec = LoadingSpec(kind="explicit", values=tuple(float(v) for v in values))
        return make_loading(spec), spec
    if not args.loading_spec:
        raise CliError("one of --loading-spec or --loading-file is required")
    if args.d is None:
        raise CliError("--d is required with --loading-spec")
    spec = LoadingSpec(kind=args.loading_spec, d=args.d, gamma_d=args.gamma_d,
                       gamma_lambda=args.gamma_lambda, c=args.c, gamma=args.gamma)
    return make_loading(spec), spec


def _read_floats(path: str) -> np.ndarray:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            vals = [float(line) for line in fh if line.strip()]
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read floats from {path}: {exc}") from exc
    return np.asarray(vals, dtype=float)


def _loading_params(args) -> dict:
    return {k: getattr(args, k, None) for k in
            ("loading_spec", "d", "gamma_d", "gamma_lambda", "c", "gamma", "loading_file")}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_solve(args) -> int:
    loading, _spec = _loading_from_args(args)
    if args.equation == "oracle":
        if args.target is not None:
            target = args.target
        elif args.s is not None:
            target = args.s / 2.0
        else:
            raise CliError("oracle equation needs --s or --target")
        sol = solve_beta(loading, args.alpha, target)
    elif args.equation == "adaptive":
        if args.s is None:
            raise CliError("adaptive equation needs --s")
        sol = solve_adaptive_beta(loading, args.alpha, args.s)
    else:
        if args.s is None:
            raise CliError("asym equation needs --s")
        sol = solve_lambda_H(loading, args.alpha, args.s)
    payload = sol.to_dict()
    payload["meta"] = _meta({**_loading_params(args), "alpha": args.alpha,
                             "equation": args.equation, "s": args.s, "target": args.target})
    _emit(payload, args.out)
    return 0


def _rate_row(calc: RateCalculator, spec: LoadingSpec | None, alpha: float, s: int) -> dict:
    prof = calc.oracle(s)
    adp = calc.adaptive(s)
    closed = closed_form_for_spec(spec, alpha, s) if spec is not None else None
    return {
        "s": s,
        "beta": prof.beta,
        "lambda_o": prof.lambda_o,
        "nu": prof.nu,
        "j1": prof.j1,
        "phi_o": prof.phi_o,
        "lambda_star": adp.lambda_star,
        "nu_star": adp.nu_star,
        "phi_star": adp.phi_star,
        "phi_adp": adp.phi_adp,
        "closed_form": closed,
        "ratio": (prof.phi_o / closed) if closed else None,
    }


def _cmd_rate(args) -> int:
    loading, spec = _loading_from_args(args)
    if spec is not None and spec.kind == "explicit":
        spec = None
    calc = RateCalculator(loading, args.alpha)
    meta = _meta({**_loading_params(args), "alpha": args.alpha, "s": args.s,
                  "s_grid": args.s_grid})
    if args.csv:
        if args.s_grid:
            grid = [int(x) for x in args.s_grid.split(",")]
        else:
            grid = [args.s] if args.s else list(range(1, min(loading.d, 32) + 1))
        cols = ["s", "beta", "lambda_o", "nu", "j1", "phi_o", "lambda_star",
                "nu_star", "phi_star", "phi_adp", "closed_form", "ratio"]
        lines = ["# sparsefn " + __version__ + " config_hash=" + meta["config_hash"]
                 + " seed=None", ",".join(cols)]
        for s in grid:
            row = _rate_row(calc, spec, args.alpha, s)
            lines.append(",".join("" if row[c] is None else repr(row[c])
                                  if isinstance(row[c], float) else str(row[c])
                                  for c in cols))
        text = "\n".join(lines) + "\n"
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    if args.s is None:
        raise CliError("rate needs --s (or --csv with --s-grid)")
    payload = _rate_row(calc, spec, args.alpha, args.s)
    payload["s_star"] = calc.s_star()
    payload["s0"] = calc.s0()
    payload["meta"] = meta
    _emit(payload, args.out)
    return 0


def _input_from_args(args, loading: LoadingVector) -> EstimationInput:
    y = _read_floats(args.y_file)
    sigma = None if args.sigma_unknown else args.sigma
    return EstimationInput(y, loading, args.alpha, args.tau, sigma=sigma,
                           kappa=args.kappa)


def _run_variant(args, inp: EstimationInput):
    v = args.variant
    if v == "oracle":
        return oracle_estimate(inp, args.s)
    if v == "family":
        return family_estimate(inp, args.s)
    if v == "adaptive":
        zeta = args.zeta if args.zeta is not None else default_zeta(inp.alpha)
        return adaptive_estimate(inp, zeta)
    if v == "nonsym":
        return nonsymmetric_estimate(inp, args.s, args.c_h)
    if v == "unknown-sigma":
        return unknown_sigma_estimate(inp, args.s, args.gamma_split, args.shuffle_blocks)
    if v == "collier":
        return collier_estimate(inp, args.s)
    return plugin_estimate(inp)


def _estimate_meta(args, **extra) -> dict:
    return _meta({**_loading_params(args), "variant": args.variant, "s": args.s,
                  "alpha": args.alpha, "tau": args.tau, "sigma": args.sigma,
                  "sigma_unknown": args.sigma_unknown, "kappa": args.kappa,
                  "zeta": args.zeta, "gamma_split": args.gamma_split,
                  "y_file": args.y_file, **extra})


def _cmd_estimate(args) -> int:
    loading, _spec = _loading_from_args(args)
    inp = _input_from_args(args, loading)
    if args.variant not in ("adaptive", "plugin") and args.s is None:
        raise CliError(f"--variant {args.variant} needs --s")
    res = _run_variant(args, inp)
    payload = {
        "value": res.value,
        "s_used": res.s_used,
        "threshold": res.threshold,
        "kept_indices": list(res.kept_indices),
        "variant": res.variant,
        "meta": _estimate_meta(args),
    }
    _emit(payload, args.out)
    return 0


def _cmd_test(args) -> int:
    loading, _spec = _loading_from_args(args)
    inp = _input_from_args(args, loading)
    if args.s is None:
        raise CliError("test needs --s")
    if args.variant != "oracle":
        raise CliError("the test statistic is defined through the known-sparsity "
                       "thresholding estimator; only --variant oracle is supported")
    res = linear_test(inp, args.s, args.t0, args.B)
    payload = {"decision": res.decision, "statistic": res.statistic,
               "threshold": res.threshold,
               "meta": _estimate_meta(args, t0=args.t0, B=args.B)}
    _emit(payload, args.out)
    return 0


def _cmd_prior(args) -> int:
    loading, _spec = _loading_from_args(args)
    prior = build_prior(loading, args.alpha, args.s, args.c1, args.c_alpha2)
    mom = prior_moments(prior)
    bound = chi2_mixture_bound(prior, args.alpha, args.c_alpha1)
    payload = {
        "s": prior.s,
        "c1": prior.c1,
        "c_alpha2": prior.c_alpha2,
        "lambda_o": prior.lambda_o,
        "nu": prior.nu,
        "sum_pi": float(prior.pi.sum()),
        "moments": {"mean_support": mom.mean_support, "var_support": mom.var_support,
                    "mean_L": mom.mean_L, "var_L": mom.var_L},
        "chi2_bound": bound.bound,
        "tv_bound": bound.tv_bound,
        "meta": _meta({**_loading_params(args), "alpha": args.alpha, "s": args.s,
                       "c1": args.c1, "c_alpha2": args.c_alpha2}, seed=args.seed),
    }
    if args.samples:
        theta = sample_prior(prior, args.seed, size=args.samples)
        with open(args.samples_out, "w", encoding="utf-8") as fh:
            for row in theta:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")
        payload["samples_written"] = args.samples
        payload["samples_file"] = args.samples_out
    _emit(payload, args.out)
    return 0


def _cmd_simulate(args) -> int:
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(f"cannot read config: {exc}") from exc
    cfg = parse_config(text)
    workers = args.workers or cfg.workers or int(os.environ.get("SPARSEFN_WORKERS", "1"))
    if cfg.grid:
        report = risk_grid(cfg.sim, cfg.grid, workers=workers)
    else:
        report = run_risk(cfg.sim)
    text_out = report.to_csv() if args.format == "csv" else report.to_json() + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text_out)
        print(f"wrote {len(report.rows)} rows to {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text_out)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _build_parser() -> _Parser:
    parser = _Parser(prog="sparsefn",
                     description="Minimax and adaptive estimation of sparse linear functionals")
    parser.add_argument("--version", action="version", version=f"sparsefn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a threshold equation")
    _add_loading_args(p)
    p.add_argument("--alpha", type=float, required=True, help="noise tail exponent")
    p.add_argument("--s", type=int, help="sparsity level")
    p.add_argument("--target", type=float, help="explicit right-hand side (oracle only)")
    p.add_argument("--equation", choices=["oracle", "adaptive", "asym"], default="oracle",
                   help="which implicit equation to solve (default oracle)")
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("rate", help="compute rate profiles")
    _add_loading_args(p)
    p.add_argument("--alpha", type=float, required=True, help="noise tail exponent")
    p.add_argument("--s", type=int, help="sparsity level")
    p.add_argument("--csv", action="store_true", help="emit one CSV row per s")
    p.add_argument("--s-grid", help="comma-separated s values for --csv")
    p.add_argument("--out", help="write output here instead of stdout")
    p.set_defaults(func=_cmd_rate)

    for name, helptext in (("estimate", "run one estimator on observations"),
                           ("test", "run the linear-functional test")):
        p = sub.add_parser(name, help=helptext)
        _add_loading_args(p)
        p.add_argument("--variant", default="oracle",
                       choices=["oracle", "family", "adaptive", "nonsym",
                                "unknown-sigma", "collier", "plugin"],
                       help="estimator variant (default oracle)")
        p.add_argument("--s", type=int, help="sparsity level")
        p.add_argument("--alpha", type=float, required=True, help="noise tail exponent")
        p.add_argument("--tau", type=float, required=True, help="noise tail scale")
        p.add_argument("--sigma", type=float, default=1.0, help="noise level (default 1)")
        p.add_argument("--sigma-unknown", action="store_true",
                       help="treat sigma as unknown (median-of-means route)")
        p.add_argument("--kappa", type=float, default=1.0,
                       help="threshold multiplier (default 1)")
        p.add_argument("--zeta", type=float, default=None,
                       help="Lepski band constant (default 1e3 for alpha>=2 else 1e4)")
        p.add_argument("--gamma-split", type=float, default=0.5,
                       help="median-of-means block fraction (default 0.5)")
        p.add_argument("--shuffle-blocks", type=int, default=None, metavar="SEED",
                       help="permute coordinates with this seed before "
                            "median-of-means blocking (default off)")
        p.add_argument("--c-h", type=float, default=None,
                       help="nonsym threshold constant (default tau*4^(1/alpha))")
        p.add_argument("--y-file", required=True, help="observations, one float per line")
        p.add_argument("--out", help="write JSON here instead of stdout")
        if name == "test":
            p.add_argument("--t0", type=float, required=True, help="null value of the functional")
            p.add_argument("--B", type=float, required=True, help="rejection threshold constant")
            p.set_defaults(func=_cmd_test)
        else:
            p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("prior", help="build the least-favorable prior")
    _add_loading_args(p)
    p.add_argument("--alpha", type=float, required=True, help="noise tail exponent")
    p.add_argument("--s", type=int, required=True, help="sparsity level")
    p.add_argument("--c1", type=float, default=0.5, help="activation mass constant (default 0.5)")
    p.add_argument("--c-alpha2", type=float, default=1.0, help="value scale constant (default 1)")
    p.add_argument("--c-alpha1", type=float, default=1.0,
                   help="chi-square bound constant (default 1)")
    p.add_argument("--samples", type=int, default=0, help="also draw this many theta vectors")
    p.add_argument("--samples-out", default="prior_samples.txt",
                   help="file for --samples (one vector per line)")
    p.add_argument("--seed", type=int, default=0, help="sampling seed (default 0)")
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=_cmd_prior)

    p = sub.add_parser("simulate", help="run a replicated risk experiment from a config file")
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--workers", type=int, default=None,
                   help="worker count (default SPARSEFN_WORKERS or 1)")
    p.add_argument("--format", choices=["csv", "json"], default="csv",
                   help="output format (default csv)")
    p.set_defaults(func=_cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except BracketError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    console_main()
