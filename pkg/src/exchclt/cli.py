"""Command line front door.

Subcommands::

    exchclt run      --config PATH [--out-dir PATH] [--seed N] [--threads N]
    exchclt check    --config PATH [--out-dir PATH] [--seed N] [--threads N]
    exchclt identity [--m-max N] [--n-rep N] [--seed N]

Exit codes: 0 success, 1 a cell failed (or the identity check was violated),
2 configuration error.
"""

import argparse
import csv
import logging
import math
from pathlib import Path
import sys

import numpy as np

from exchclt.config import load_config
from exchclt.errors import CellError, ConfigError
from exchclt.generators import gen_iid_symmetric, hypothesis_profile
from exchclt.hypothesis_checks import VERDICT_EPS, check_conditions
from exchclt.engine import run_experiment
from exchclt.statistics import proof_identity_residual
from exchclt.streams import derive_stream

logger = logging.getLogger("exchclt")

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG = 0, 1, 2

REPORT_HEADER = (
    "experiment,generator,statistic,gamma,m,n_rep,seed,ks,w1,sample_mean,sample_var,"
    "pair_corr,pair_corr_ci,max_exc_eps,max_exc_prob,quad_var,quad_eps,quad_prob,"
    "marg_sym_ks,joint_sym_ks"
).split(",")

CONDITIONS_HEADER = (
    "experiment,generator,gamma,m,n_rep,seed,k,pair_corr,pair_corr_ci,cond1_pass,"
    "max_exc_eps,max_exc_prob,quad_var,quad_eps,quad_prob,marg_sym_ks,marg_sym_crit,"
    "joint_sym_ks,joint_sym_crit"
).split(",")

IDENTITY_TOL = 1e-12


def fmt(x):
    """Shortest round-trip text for numbers; stable across runs."""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _quad_variant(spec):
    return "lemma_k" if spec.statistic.kind == "weber" else "theorem_m"


def report_rows(report):
    """CSV rows for one experiment: one per (m, eps), eps-free fields repeated."""
    spec = report.spec
    variant = _quad_variant(spec)
    for cell in report.cells:
        cond, gof = cell.conditions, cell.gof
        for eps in spec.epsilons:
            yield [
                spec.name, spec.generator.family, spec.statistic.kind,
                fmt(spec.schedule.gamma), fmt(cell.m), fmt(cell.n_rep), fmt(spec.master_seed),
                fmt(gof.ks), fmt(gof.wasserstein1), fmt(gof.sample_mean), fmt(gof.sample_var),
                fmt(cond.pair_corr.value), fmt(cond.pair_corr.ci_halfwidth),
                fmt(eps), fmt(cond.max_exceedance_prob(eps)),
                variant, fmt(eps), fmt(cond.quad_concentration_prob(eps, variant)),
                fmt(cond.marginal_symmetry_ks), fmt(cond.joint_sign_symmetry_ks),
            ]


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _resolve(args):
    config = load_config(args.config, seed_override=args.seed)
    out_dir = Path(args.out_dir if args.out_dir is not None else config.out_dir)
    threads = args.threads if args.threads is not None else config.threads
    out_dir.mkdir(parents=True, exist_ok=True)
    return config, out_dir, max(1, threads)


def cmd_run(args):
    config, out_dir, threads = _resolve(args)
    rows = []
    for spec in config.experiments:
        report = run_experiment(spec, threads=threads)
        for cell in report.cells:
            print(f"{spec.name} m={cell.m} ks={cell.gof.ks:.5f} "
                  f"w1={cell.gof.wasserstein1:.5f} var={cell.gof.sample_var:.5f}")
            if spec.write_samples:
                _write_csv(out_dir / f"samples_{spec.name}_{cell.m}.csv", [spec.statistic.kind],
                           ([fmt(v)] for v in cell.sample.values))
        if spec.write_reports:
            rows.extend(report_rows(report))
    _write_csv(out_dir / "report.csv", REPORT_HEADER, rows)
    return EXIT_OK


def cmd_check(args):
    config, out_dir, threads = _resolve(args)
    rows = []
    for spec in config.experiments:
        profile = hypothesis_profile(spec.generator)
        for m in spec.schedule.m_values:
            try:
                cond = check_conditions(spec.generator, m, spec.n_rep, spec.master_seed,
                                        k=spec.lemma_k(m), epsilons=spec.epsilons,
                                        threads=threads)
            except Exception as exc:
                raise CellError(spec.name, m, exc) from exc
            verdict = {
                "cond1": cond.cond1_pass,
                "cond2": cond.cond2_pass() if VERDICT_EPS in spec.epsilons else None,
                "cond3": cond.cond3_pass() if VERDICT_EPS in spec.epsilons else None,
                "marg_sym": cond.marginal_symmetry_pass,
                "joint_sym": cond.joint_sign_symmetry_pass,
            }
            shown = " ".join(f"{k}={'-' if v is None else ('PASS' if v else 'FAIL')}"
                             for k, v in verdict.items())
            print(f"{spec.name} m={m} {shown}")
            for eps in spec.epsilons:
                for variant in ("lemma_k", "theorem_m"):
                    rows.append([
                        spec.name, spec.generator.family, fmt(spec.schedule.gamma), fmt(m),
                        fmt(spec.n_rep), fmt(spec.master_seed), fmt(cond.k),
                        fmt(cond.pair_corr.value), fmt(cond.pair_corr.ci_halfwidth),
                        fmt(cond.cond1_pass), fmt(eps), fmt(cond.max_exceedance_prob(eps)),
                        variant, fmt(eps), fmt(cond.quad_concentration_prob(eps, variant)),
                        fmt(cond.marginal_symmetry_ks), fmt(cond.marginal_symmetry_crit),
                        fmt(cond.joint_sign_symmetry_ks), fmt(cond.joint_sign_symmetry_crit),
                    ])
        print(f"{spec.name} expected: {profile}")
    _write_csv(out_dir / "conditions.csv", CONDITIONS_HEADER, rows)
    return EXIT_OK


def identity_check(m_max, n_rep, seed):
    """Largest residual and largest tolerance ratio over ``n_rep`` standard normal rows.

    Replicate ``r`` uses the even length ``2 + 2 * (r mod m_max/2)``, cycling
    through every even size up to ``m_max``.
    """
    if m_max < 2 or m_max % 2:
        raise ConfigError(f"m_max must be even and >= 2, got {m_max}", field="m_max")
    if n_rep < 1:
        raise ConfigError(f"n_rep must be >= 1, got {n_rep}", field="n_rep")
    half = m_max // 2
    worst_residual = 0.0
    worst_ratio = 0.0
    for r in range(n_rep):
        m = 2 + 2 * (r % half)
        x = gen_iid_symmetric("std_normal", m, derive_stream(seed, m, r)).values
        residual = proof_identity_residual(x)
        worst_residual = max(worst_residual, residual)
        worst_ratio = max(worst_ratio, residual / (IDENTITY_TOL * (1.0 + np.abs(x).mean())))
    return worst_residual, worst_ratio


def cmd_identity(args):
    residual, ratio = identity_check(args.m_max, args.n_rep, args.seed)
    print(f"max residual {residual:.3e} (worst fraction of tolerance {ratio:.3e})")
    return EXIT_OK if ratio <= 1.0 else EXIT_FAILURE


def build_parser():
    parser = argparse.ArgumentParser(prog="exchclt", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, help_ in (("run", cmd_run, "run experiments and write report.csv"),
                              ("check", cmd_check, "estimate hypothesis conditions only")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--out-dir", metavar="PATH")
        p.add_argument("--seed", type=int, metavar="N", help="overrides every seed in the config")
        p.add_argument("--threads", type=int, metavar="N", help="hint only; results do not change")
        p.set_defaults(func=func)
    p = sub.add_parser("identity", help="check the sign-flip identity on random rows")
    p.add_argument("--m-max", type=int, default=1000, metavar="N")
    p.add_argument("--n-rep", type=int, default=1000, metavar="N")
    p.add_argument("--seed", type=int, default=0, metavar="N")
    p.set_defaults(func=cmd_identity)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "seed", None) is not None and not 0 <= args.seed < 1 << 64:
        print("error: --seed must be a 64-bit unsigned integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CellError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
