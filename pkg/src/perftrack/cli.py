"""Command-line front end: reproduce the fleet-charging experiment, evaluate
envelopes from supplied constants, and fit tail descriptors to sample files.

Exit codes: 0 success, 1 usage error, 2 invalid config or IO failure, 3 runtime
failure.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bounds import (BoundInputs, limsup_bound, markov_envelope, opgd_envelope,
                     ospgd_expectation_envelope, ospgd_hp_envelope)
from .config import ConfigError, ScenarioConfig, load_scenario
from .harness import run_experiment, write_metadata_json, write_result_csv
from .subweibull import SubWeibull, fit_subweibull, tail_bound

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the CLI contract wants 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _fmt(value: float) -> str:
    return "%.17g" % value


def _float_list(text: str) -> np.ndarray:
    try:
        return np.array([float(part) for part in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")


def _cmd_reproduce_ev(args) -> int:
    config = load_scenario(args.config) if args.config else ScenarioConfig()
    overrides = {}
    for name in ("seed", "replications", "workers"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if overrides:
        config = replace(config, **overrides)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = run_experiment(config)
    csv_path = out_dir / "result.csv"
    meta_path = out_dir / "metadata.json"
    write_result_csv(result, csv_path)
    write_metadata_json(result, meta_path)
    print(f"wrote {csv_path} ({result.horizon} steps, "
          f"{config.replications} replications) and {meta_path}")
    print(f"contraction condition holds at all steps: {result.contraction.all_ok}")
    return EXIT_OK


def _per_step(values: np.ndarray, n: int, flag: str,
              parser: argparse.ArgumentParser) -> np.ndarray:
    if values.size == 1:
        return np.full(n, float(values[0]))
    if values.size != n:
        parser.error(f"{flag} must be scalar or have {n} entries, got {values.size}")
    return values


def _cmd_bounds(args, parser: argparse.ArgumentParser) -> int:
    if args.steps < 1:
        parser.error("--steps must be >= 1")
    n = args.steps
    lambdas = _per_step(args.lam, n, "--lambda", parser)
    phis = _per_step(args.phi, n, "--phi", parser)
    if args.limsup:
        lam_tilde = float(lambdas.max())
        if lam_tilde >= 1.0:
            raise ConfigError(
                f"asymptotic bound undefined: contraction factor {lam_tilde:.6g} >= 1")
        print(f"limsup_opgd={_fmt(limsup_bound(lam_tilde, float(phis.max())))}",
              file=sys.stderr)
    inputs = BoundInputs(lambdas=lambdas, phis=phis, e0=args.e0,
                         etas=np.full(n, args.eta),
                         xi_means=np.full(n, args.xi_mean),
                         theta=args.theta, nus=np.full(n, args.nu),
                         delta=args.delta)
    env_opgd = opgd_envelope(inputs)
    env_exp = ospgd_expectation_envelope(inputs)
    env_hp = ospgd_hp_envelope(inputs)
    env_markov = markov_envelope(inputs)
    print("t,env_opgd,env_exp,env_hp,env_markov")
    for t in range(n):
        print(",".join([str(t + 1), _fmt(env_opgd[t]), _fmt(env_exp[t]),
                        _fmt(env_hp[t]), _fmt(env_markov[t])]))
    return EXIT_OK


def _read_samples(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    values = []
    for rownum, line in enumerate(lines, start=1):
        text = line.strip()
        if not text:
            continue
        try:
            values.append(float(text))
        except ValueError:
            raise ConfigError(f"{path}: row {rownum}: not a number: {text!r}") from None
    if not values:
        raise ConfigError(f"{path}: no samples found")
    return np.array(values)


def _cmd_fit_tail(args) -> int:
    if args.grid_points < 1:
        raise ConfigError("--grid-points must be >= 1")
    samples = _read_samples(args.input)
    nu_hat = fit_subweibull(samples, args.theta, k_max=args.k_max)
    print(f"nu_hat,{_fmt(nu_hat)}")
    magnitudes = np.abs(samples)
    top = float(magnitudes.max())
    if nu_hat == 0.0 or top == 0.0:
        raise ConfigError("all samples are zero; no tail to tabulate")
    descriptor = SubWeibull(args.theta, nu_hat)
    print("eps,empirical_tail,tail_bound")
    for j in range(1, args.grid_points + 1):
        eps = top * j / args.grid_points
        empirical = float(np.mean(magnitudes >= eps))
        print(",".join([_fmt(eps), _fmt(empirical), _fmt(tail_bound(descriptor, eps))]))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="perftrack",
                     description="Track performatively stable points of "
                                 "time-varying decision-dependent problems.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_ev = sub.add_parser("reproduce-ev",
                          help="run the fleet-charging experiment and write "
                               "result.csv + metadata.json")
    p_ev.add_argument("--config", help="TOML scenario file (defaults used when omitted)")
    p_ev.add_argument("--out-dir", required=True, help="output directory")
    p_ev.add_argument("--seed", type=int, default=None)
    p_ev.add_argument("--replications", type=int, default=None)
    p_ev.add_argument("--workers", type=int, default=None)
    p_ev.set_defaults(func=_cmd_reproduce_ev)

    p_b = sub.add_parser("bounds",
                         help="evaluate tracking envelopes for supplied constants")
    p_b.add_argument("--lambda", dest="lam", type=_float_list, required=True,
                     help="contraction factor: scalar or comma-separated per-step list")
    p_b.add_argument("--phi", type=_float_list, required=True,
                     help="drift: scalar or comma-separated per-step list")
    p_b.add_argument("--e0", type=float, required=True)
    p_b.add_argument("--eta", type=float, required=True)
    p_b.add_argument("--xi-mean", dest="xi_mean", type=float, required=True,
                     help="mean gradient error E[xi] (0 for the noiseless table)")
    p_b.add_argument("--theta", type=float, required=True)
    p_b.add_argument("--nu", type=float, required=True,
                     help="sub-Weibull proxy scale of xi (0 for the noiseless table)")
    p_b.add_argument("--delta", type=float, required=True)
    p_b.add_argument("--steps", type=int, required=True,
                     help="number of update steps; row t bounds the error after t updates")
    p_b.add_argument("--limsup", action="store_true",
                     help="also print the asymptotic bound (to stderr)")
    p_b.set_defaults(func=lambda args, _p=p_b: _cmd_bounds(args, _p))

    p_f = sub.add_parser("fit-tail",
                         help="fit a sub-Weibull scale to samples and tabulate "
                              "empirical tail vs certified bound")
    p_f.add_argument("--input", required=True, help="file with one sample per line")
    p_f.add_argument("--theta", type=float, required=True)
    p_f.add_argument("--k-max", dest="k_max", type=int, default=10)
    p_f.add_argument("--grid-points", dest="grid_points", type=int, default=20)
    p_f.set_defaults(func=_cmd_fit_tail)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except SystemExit as exc:
        # parser.error inside a command (flag-combination problems)
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
