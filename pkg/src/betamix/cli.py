"""Command-line front end: generate | estimate | oracle | experiment.

Exit codes: 0 success, 2 usage or domain error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .errors import NumericalError, ParameterError
from .core import BoundParams, MixingEnvelope, SmoothnessSpec, skip_length_continuous
from .kde import BandwidthRule, estimate_beta_kde, gaussian_kernel
from .finite import estimate_beta_finite
from .oracles import (
    ARSpec,
    FiniteChainSpec,
    acf_estimate,
    beta_exact_finite,
    beta_from_acf,
    beta_gaussian_ar1,
    jansson_bounds,
    skip_length_ar1,
)
from .generate import (
    gen_ar1,
    gen_finite_chain,
    gen_lognormal_ar1,
    read_path_file,
    write_path_file,
)
from .experiment import load_config, run_experiment_to_csv

_KDE_ESTIMATORS = ("kde-scott", "kde-smooth", "kde-k0")
_ESTIMATORS = _KDE_ESTIMATORS + ("finite", "acf")


def _read_matrix(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(t) for t in line.split(",")])
    return np.array(rows)


def _cmd_generate(args) -> int:
    if args.model in ("ar1", "lognormal-ar1"):
        spec = ARSpec(phi=args.phi, sigma=args.sigma)
        gen = gen_ar1 if args.model == "ar1" else gen_lognormal_ar1
        path = gen(spec, args.n, args.seed)
    else:
        if args.matrix is None:
            raise ParameterError("model finite-chain needs --matrix")
        chain = FiniteChainSpec.from_transition(_read_matrix(args.matrix))
        path = gen_finite_chain(chain, args.n, args.seed)
    write_path_file(path, args.out, model=args.model, seed=args.seed)
    return 0


def _resolve_cli_skip(args, n: int) -> int:
    token = args.k
    if token.startswith("ar1:"):
        return skip_length_ar1(float(token[4:]), n)
    if token == "auto":
        env = MixingEnvelope(eta=args.eta, gamma=args.gamma)
        smooth = SmoothnessSpec(s=args.s, besov_bound=args.besov)
        params = BoundParams.from_kernel(env, smooth, gaussian_kernel(), l1=args.l1)
        return skip_length_continuous(env, smooth, params, n)
    try:
        return int(token)
    except ValueError as exc:
        raise ParameterError(f"bad --k value {token!r}") from exc


def _cmd_estimate(args) -> int:
    path = read_path_file(args.path, alphabet_size=args.alphabet_size)
    if args.estimator == "acf":
        rho = acf_estimate(path, args.m).rho_hat
        value = beta_from_acf(rho)
        print(f"acf,{args.m},0,{path.n - args.m},{value!r},{value!r}")
        return 0
    if args.estimator == "finite":
        if args.k == "auto":
            env = MixingEnvelope(eta=args.eta, gamma=args.gamma)
            est = estimate_beta_finite(path, args.m, "auto", envelope=env)
        else:
            est = estimate_beta_finite(path, args.m, int(args.k))
        raw = est.beta_hat
    else:
        if path.is_finite:
            raise ParameterError(
                "KDE estimators need a real-valued path; this file holds symbols"
            )
        if args.estimator == "kde-k0":
            k = 0
        else:
            k = _resolve_cli_skip(args, path.n)
        rule = (
            BandwidthRule.smoothness_adapted()
            if args.estimator == "kde-smooth"
            else BandwidthRule.scott()
        )
        smooth = (
            SmoothnessSpec(s=args.s, besov_bound=args.besov)
            if args.estimator == "kde-smooth"
            else None
        )
        est = estimate_beta_kde(path, args.m, k, bandwidth_rule=rule, smoothness=smooth)
        raw = est.diagnostics["raw_beta_hat"]
    print(f"{args.estimator},{est.m},{est.k},{est.n_pairs},{est.beta_hat!r},{raw!r}")
    return 0


def _cmd_oracle(args) -> int:
    if args.oracle == "ar1-beta":
        value = beta_gaussian_ar1(ARSpec(phi=args.phi), args.m)
        print(f"{value:.12g}")
    elif args.oracle == "chain-beta":
        chain = FiniteChainSpec.from_transition(_read_matrix(args.matrix))
        value = beta_exact_finite(chain, args.m)
        print(f"{value:.12g}")
    else:  # jansson
        bounds = jansson_bounds(args.rho)
        print(f"{bounds.lower:.12g},{bounds.upper:.12g}")
    return 0


def _cmd_experiment(args) -> int:
    config = load_config(args.config)
    count = run_experiment_to_csv(config, args.out, jobs=args.jobs)
    print(f"wrote {count} rows to {args.out}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="betamix",
        description="Estimate beta-mixing coefficients from a single sample path.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="sample a process path to a file")
    gen.add_argument("--model", required=True, choices=("ar1", "lognormal-ar1", "finite-chain"))
    gen.add_argument("--phi", type=float, default=0.5)
    gen.add_argument("--sigma", type=float, default=1.0)
    gen.add_argument("--matrix", help="CSV transition matrix, one row per state")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=_cmd_generate)

    est = sub.add_parser("estimate", help="estimate beta(m) from a path file")
    est.add_argument("--path", required=True)
    est.add_argument("--estimator", required=True, choices=_ESTIMATORS)
    est.add_argument("--m", type=int, required=True)
    est.add_argument("--k", default="ar1:0.9",
                     help="skip length: integer, 'auto', or 'ar1:<b>' (default ar1:0.9)")
    est.add_argument("--eta", type=float, default=1.0)
    est.add_argument("--gamma", type=float, default=0.3)
    est.add_argument("--s", type=float, default=3.0)
    est.add_argument("--besov", type=float, default=1.0)
    est.add_argument("--l1", type=float, default=2.0)
    est.add_argument("--alphabet-size", type=int)
    est.set_defaults(func=_cmd_estimate)

    orc = sub.add_parser("oracle", help="ground-truth beta values and bounds")
    orc_sub = orc.add_subparsers(dest="oracle", required=True)
    ar1b = orc_sub.add_parser("ar1-beta", help="true beta(m) of a Gaussian AR(1) process")
    ar1b.add_argument("--phi", type=float, required=True)
    ar1b.add_argument("--m", type=int, required=True)
    chb = orc_sub.add_parser("chain-beta", help="exact beta(m) of a finite chain")
    chb.add_argument("--matrix", required=True)
    chb.add_argument("--m", type=int, required=True)
    jan = orc_sub.add_parser("jansson", help="correlation-based sandwich bounds")
    jan.add_argument("--rho", type=float, required=True)
    orc.set_defaults(func=_cmd_oracle)

    exp = sub.add_parser("experiment", help="run a convergence experiment to CSV")
    exp.add_argument("--config", required=True)
    exp.add_argument("--out", required=True)
    exp.add_argument("--jobs", type=int, default=1)
    exp.set_defaults(func=_cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        # replicate failures from the experiment runner carry their context
        print(f"error: {exc}", file=sys.stderr)
        cause = exc.__cause__
        return 3 if isinstance(cause, NumericalError) else 2


if __name__ == "__main__":
    sys.exit(main())
