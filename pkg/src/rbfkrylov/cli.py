"""Command-line interface: single solves and table sweeps.

Examples::

    rbfkrylov solve --domain sphere --dist random --dims 10 10 10 \\
        --solver glsqr --out run.txt
    rbfkrylov table --config table.cfg --out table.csv

``solve`` writes a key = value report plus ``*_convergence.csv`` and
``*_convergence.png`` next to it; ``table`` writes the CSV plus
``*_errors.png``.  Flags override config-file entries, which override the
built-in defaults.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import experiment, report


def _add_solve_flags(parser: argparse.ArgumentParser) -> None:
    # every value is parsed by experiment.parse_config so flags and config
    # files behave identically
    parser.add_argument("--config", help="config file of key = value lines")
    parser.add_argument("--domain", help="cube | sphere | file:PATH")
    parser.add_argument("--dist", help="uniform | random | halton")
    parser.add_argument("--dims", nargs="+", help="M N P (or one value for M=N=P)")
    parser.add_argument("--solver", help="ggmres | glsqr")
    parser.add_argument("--epsilon", help="kernel shape parameter")
    parser.add_argument("--wavenumber", help="Helmholtz wavenumber k")
    parser.add_argument("--boundary-a", help="boundary operator coefficient a")
    parser.add_argument("--boundary-b", help="boundary operator coefficient b")
    parser.add_argument("--exact", help="manufactured solution: cx,cy,cz,sigma[;...]")
    parser.add_argument("--mu", help="gcv | fixed:V | discrepancy:NU")
    parser.add_argument("--restart", help="Arnoldi cycle length (ggmres)")
    parser.add_argument("--tau", help="relative-change stopping tolerance")
    parser.add_argument("--tol", help="relative-residual stopping tolerance")
    parser.add_argument("--maxit", help="max outer iterations / bidiagonalization steps")
    parser.add_argument("--compress", help="dense | hmatrix")
    parser.add_argument("--eta", help="admissibility parameter")
    parser.add_argument("--aca-tol", help="ACA relative tolerance")
    parser.add_argument("--leaf-threshold", help="cluster-tree leaf size")
    parser.add_argument("--seed", help="random seed")
    parser.add_argument("--out", help="output path")
    parser.add_argument("--no-figures", action="store_true",
                        help="skip rendering PNG figures")


def _collect_mapping(args: argparse.Namespace) -> dict:
    mapping = {}
    if args.config:
        mapping.update(experiment.read_config_file(args.config))
    skip = {"command", "config", "out", "no_figures"}
    for key, value in vars(args).items():
        if key in skip or value is None:
            continue
        if key == "dims":
            value = " ".join(value)
        mapping[key.replace("_", "-")] = value
    return mapping


def _cmd_solve(args: argparse.Namespace) -> int:
    cfg = experiment.parse_config(_collect_mapping(args))
    record = experiment.run_experiment(cfg)
    if args.out:
        out = Path(args.out)
        report.write_run_report(record, out)
        stem = out.parent / out.stem
        report.write_convergence_csv(record, f"{stem}_convergence.csv")
        if not args.no_figures:
            report.render_convergence_figure(record, f"{stem}_convergence.png")
        print(f"wrote {out}")
    else:
        report.write_run_report(record, "/dev/stdout")
    return 0


def _cmd_table(args: argparse.Namespace) -> int:
    if not args.config:
        print("table requires --config", file=sys.stderr)
        return 2
    mapping = experiment.read_config_file(args.config)
    configs = experiment.expand_table_config(mapping)
    rows = experiment.run_table(configs)
    out = Path(args.out) if args.out else Path("table.csv")
    report.write_table_csv(rows, out)
    if not args.no_figures:
        stem = out.parent / out.stem
        report.render_table_figure(rows, f"{stem}_errors.png")
    failures = sum(1 for _, record, _ in rows if record is None)
    print(f"wrote {out} ({len(rows)} rows, {failures} failed)")
    return 0 if failures == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rbfkrylov",
                                     description="Tensor Krylov solvers for "
                                                 "multiquadric RBF collocation")
    sub = parser.add_subparsers(dest="command", required=True)
    solve = sub.add_parser("solve", help="run one experiment")
    _add_solve_flags(solve)
    table = sub.add_parser("table", help="run a sweep from a config file")
    table.add_argument("--config", required=True, help="table config file")
    table.add_argument("--out", help="output CSV path")
    table.add_argument("--no-figures", action="store_true",
                       help="skip rendering PNG figures")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "solve":
        return _cmd_solve(args)
    return _cmd_table(args)


if __name__ == "__main__":
    sys.exit(main())
