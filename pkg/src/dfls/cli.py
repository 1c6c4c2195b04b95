"""Command-line front end.

Exit codes: 0 success, 1 reproduction failure, 2 parse/validation error,
3 no DF subsystem, 4 ill-conditioned rank decision, 5 unphysical state,
6 engineering infeasible.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .analysis import align_gauge, decompose
from .config import RunConfig, parse_config
from .core import basis_permutation
from .dynamics import correlation_block_norm, df_stability, evolve_moments, log_negativity_two_mode, purity
from .errors import ConfigError, DFLSError, EngineeringInfeasibleError, IllConditionedRankError
from .report import AnalysisReport, analyze
from .reproduce import ALIASES, EXAMPLE_IDS, run_checks
from .scenarios import optomech, ring_trap, ring_trap_reference_T1, solve_optomech_df, solve_ring_df

EXIT_OK, EXIT_REPRO, EXIT_CONFIG, EXIT_NO_DF, EXIT_RANK, EXIT_UNPHYSICAL, EXIT_INFEASIBLE = range(7)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _tolerances(cfg: RunConfig, tol_rank: float | None, tol_margin: float | None) -> tuple[float, float]:
    tr = cfg.tolerances.tol_rank if tol_rank is None else tol_rank
    tm = cfg.tolerances.tol_margin if tol_margin is None else tol_margin
    for name, val in (("tol-rank", tr), ("tol-margin", tm)):
        if not 0 < val < 1:
            raise ConfigError(f"--{name} must lie in (0, 1), got {val}")
    return tr, tm


def cmd_analyze(cfg: RunConfig, tol_rank: float | None = None, tol_margin: float | None = None) -> AnalysisReport:
    tr, tm = _tolerances(cfg, tol_rank, tol_margin)
    sys_ = cfg.build_system()
    return analyze(sys_, tol_rank=tr, tol_margin=tm, candidate_G=cfg.candidate_hamiltonian(sys_.n))


def cmd_stability(cfg: RunConfig, tol_rank: float | None = None, tol_margin: float | None = None) -> dict | None:
    tr, tm = _tolerances(cfg, tol_rank, tol_margin)
    dec = decompose(cfg.build_system(), tr)
    if dec is None:
        return None
    rep = df_stability(dec.G_DF, dec.A2, tm)
    return {
        "df_dimension": dec.ell,
        "eig_A1": [[z.real, z.imag] for z in rep.eig_A1],
        "eig_A2": [[z.real, z.imag] for z in rep.eig_A2],
        "worst_pair_real": rep.worst_pair_real,
        "stable": rep.stable,
        "marginal": rep.marginal,
        "a2_hurwitz": rep.a2_hurwitz,
        "gdf_psd": rep.gdf_psd,
        "shortcut_used": rep.shortcut_used,
    }


def cmd_simulate(cfg: RunConfig, tol_rank: float | None = None) -> str:
    """Time series as CSV text: t, means, upper-triangle covariance, purity, and (when defined) correlation norm and E_N."""
    if cfg.time_grid is None:
        raise ConfigError("simulate needs a 'time_grid' section")
    tr, _ = _tolerances(cfg, tol_rank, None)
    sys_ = cfg.build_system()
    n = sys_.n
    m0 = cfg.initial_moments(n)
    dec = decompose(sys_, tr)
    traj = evolve_moments(sys_.A, sys_.D, m0, cfg.time_grid.times(), tol_psd=cfg.tolerances.tol_psd)

    labels = [f"{c}{i + 1}" for i in range(n) for c in ("q", "p")]
    iu = np.triu_indices(2 * n)
    header = ["t"] + [f"mean_{x}" for x in labels]
    header += [f"cov_{labels[i]}_{labels[j]}" for i, j in zip(*iu)]
    header.append("purity")
    with_corr = dec is not None
    if with_corr:
        header.append("correlation_block_norm")
    if n == 2:
        header.append("log_negativity")

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for t, mom in zip(cfg.time_grid.times(), traj):
        row = [t, *mom.mean, *mom.cov[iu], purity(mom.cov)]
        if with_corr:
            row.append(correlation_block_norm(dec.T.T @ mom.cov @ dec.T, dec.ell))
        if n == 2:
            row.append(log_negativity_two_mode(mom.cov).log_negativity)
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def cmd_engineer(cfg: RunConfig, tol_rank: float | None = None, tol_margin: float | None = None) -> dict:
    """Solve for the auxiliary parameters, then re-assemble and re-analyze the result."""
    tr, tm = _tolerances(cfg, tol_rank, tol_margin)
    if cfg.scenario is None or cfg.scenario.kind not in ("optomech", "optomech-extended", "ring-trap"):
        raise ConfigError("engineer needs a scenario of kind 'optomech-extended' or 'ring-trap'")
    p = cfg.scenario.params

    def need(*keys):
        missing = [k for k in keys if k not in p]
        if missing:
            raise ConfigError(f"scenario.params is missing {missing}")
        return [float(p[k]) for k in keys]

    extra = {}
    if cfg.scenario.kind == "ring-trap":
        omega, k, kappa = need("omega", "k", "kappa")
        wp, k2, k3 = solve_ring_df(omega, k)
        solution = {"omega_prime": wp, "k2": k2, "k3": k3}
        sys_ = ring_trap(omega, wp, k, k2, k3, kappa)
    else:
        m, omega, gamma, kappa, g = need("m", "omega", "gamma", "kappa", "g")
        mu, nu = solve_optomech_df(m, omega, gamma, kappa, g)
        solution = {"mu": mu, "nu": nu}
        sys_ = optomech(m, omega, gamma, kappa, (g, mu, nu))
    report = analyze(sys_, tol_rank=tr, tol_margin=tm)
    if report.df_dimension == 0:
        raise EngineeringInfeasibleError("solved parameters do not produce a DF subsystem")
    if cfg.scenario.kind == "ring-trap":
        dec = align_gauge(decompose(sys_, tr), ring_trap_reference_T1())
        extra["G_DF_relative_coordinates_grouped"] = basis_permutation(2).matrix_to_grouped(dec.G_DF).tolist()
    return {"kind": cfg.scenario.kind, "solution": solution, "report": report.to_dict(), **extra}


def _load(args) -> RunConfig:
    if not args.config:
        raise ConfigError("--config PATH is required")
    path = Path(args.config)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _run_analyze(args) -> int:
    cfg = _load(args)
    report = cmd_analyze(cfg, args.tol_rank, args.tol_margin)
    print(report.to_json() if args.format == "machine" else report.to_text())
    out = args.out or cfg.output.report
    if out:
        Path(out).write_text(report.to_json() + "\n", encoding="utf-8")
    return EXIT_OK if report.df_dimension > 0 else EXIT_NO_DF


def _run_stability(args) -> int:
    cfg = _load(args)
    result = cmd_stability(cfg, args.tol_rank, args.tol_margin)
    if result is None:
        print("no decoherence-free subsystem")
        return EXIT_NO_DF
    if args.format == "machine":
        print(json.dumps(result, indent=2))
    else:
        print(f"DF modes (ell): {result['df_dimension']}")
        print(f"worst pair real part: {_fmt(result['worst_pair_real'])}")
        print(f"verdict: {'stable' if result['stable'] else 'marginal' if result['marginal'] else 'not stable'}")
        print(f"G_DF >= 0: {result['gdf_psd']}; A2 Hurwitz: {result['a2_hurwitz']}")
    if args.out:
        Path(args.out).write_text(json.dumps(result, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def _run_simulate(args) -> int:
    cfg = _load(args)
    _emit(cmd_simulate(cfg, args.tol_rank), args.out or cfg.output.csv)
    return EXIT_OK


def _run_engineer(args) -> int:
    cfg = _load(args)
    result = cmd_engineer(cfg, args.tol_rank, args.tol_margin)
    if args.format == "machine":
        print(json.dumps(result, indent=2))
    else:
        print(f"scenario: {result['kind']}")
        for key, val in result["solution"].items():
            print(f"{key} = {_fmt(val)}")
        print(AnalysisReport.from_dict(result["report"]).to_text())
    if args.out:
        Path(args.out).write_text(json.dumps(result, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def _run_reproduce(args) -> int:
    example = args.example or "all"
    try:
        rows = run_checks(example)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from exc
    if args.format == "machine":
        print(json.dumps([row.__dict__ for row in rows], indent=2))
    else:
        for row in rows:
            status = "PASS" if row.passed else "FAIL"
            print(f"{status}  [{row.example}] {row.name}: expected {row.expected}; computed {row.computed}; tol {row.tol:g}")
    failed = [row for row in rows if not row.passed]
    if failed:
        print(f"{len(failed)} of {len(rows)} checks failed; first: [{failed[0].example}] {failed[0].name}", file=sys.stderr)
        return EXIT_REPRO
    print(f"all {len(rows)} checks passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--tol-rank", type=float, default=None, help="relative singular-value cutoff (default 1e-9)")
    common.add_argument("--tol-margin", type=float, default=None, help="stability margin (default 1e-10)")
    common.add_argument("--out", metavar="PATH", help="write the machine-readable result (or CSV) here")
    common.add_argument("--format", choices=("text", "machine"), default="text", help="stdout format")

    parser = argparse.ArgumentParser(
        prog="dfls", description="Decoherence-free subsystems of linear open quantum systems."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="find and decompose the DF subsystem").set_defaults(func=_run_analyze)
    sub.add_parser("stability", parents=[common], help="DF/D correlation decay test").set_defaults(func=_run_stability)
    sub.add_parser("simulate", parents=[common], help="propagate Gaussian moments to CSV").set_defaults(func=_run_simulate)
    sub.add_parser("engineer", parents=[common], help="solve auxiliary parameters for a DF mode").set_defaults(func=_run_engineer)
    rp = sub.add_parser("reproduce", parents=[common], help="run the worked-example regression table")
    ids = ", ".join(EXAMPLE_IDS + ("all",)) + "; aliases " + ", ".join(f"{k}={v}" for k, v in ALIASES.items())
    rp.add_argument("--example", metavar="ID", default="all", help=f"one of {ids}")
    rp.set_defaults(func=_run_reproduce)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except IllConditionedRankError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("hint: rerun with a different --tol-rank", file=sys.stderr)
        return EXIT_RANK
    except DFLSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
