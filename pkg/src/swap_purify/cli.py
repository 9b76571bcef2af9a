"""Command-line front end: ``swap-purify {trajectory,simulate,bounds,sweep,verify}``.

Exit status is 0 on success, 1 when the input fails validation and 2 when
``verify`` finds a violated invariant.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bounds as bd
from . import experiment as ex
from . import protocol as pr
from . import verification as vf
from .rng import derive_seed
from .spectrum import Spectrum, SpectrumError

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_VERIFY_FAILED = 2


def _float_list(text: str) -> list:
    try:
        return [float(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from exc
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _common(p: argparse.ArgumentParser, with_state: bool = True) -> None:
    p.add_argument("--config", type=Path, help="TOML experiment file")
    p.add_argument("--seed", type=_u64, help="master seed (unsigned 64-bit)")
    p.add_argument("--epsilon", type=_float_list, help="comma-separated target infidelities")
    p.add_argument("--replicas", type=int, help="Monte Carlo replicas per point")
    p.add_argument("--mode", choices=(pr.EXACT, pr.ORACLE), help="exact spectra or density oracle")
    p.add_argument("--out", type=Path, help="output directory (default: stdout for tables)")
    p.add_argument("--format", choices=("csv", "jsonl"), default=None)
    p.add_argument("--deterministic", action="store_true", help="omit the timestamp header field")
    if with_state:
        g = p.add_mutually_exclusive_group()
        g.add_argument("--spectrum", type=_float_list, help="eigenvalues, e.g. 0.7,0.2,0.1")
        g.add_argument("--depolarized", type=_float_list, metavar="D,DELTA",
                       help="depolarized state of dimension D and strength DELTA")
        p.add_argument("--levels", type=int, help="recursion depth (default: derived from --epsilon)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swap-purify", description="Simulate and bound recursive swap-test purification.")
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("trajectory", help="dump the deterministic orbit of one state"))
    _common(sub.add_parser("simulate", help="Monte Carlo ledgers for one state"))
    _common(sub.add_parser("bounds", help="evaluate every analytic bound"))
    _common(sub.add_parser("sweep", help="run a full experiment from --config"), with_state=False)
    v = sub.add_parser("verify", help="run the invariant suites")
    v.add_argument("--full", action="store_true", help="acceptance-size samples (minutes)")
    return parser


def _state(args) -> Spectrum:
    """Single initial state from --spectrum, --depolarized or the first config point."""
    if args.spectrum is not None:
        return Spectrum(args.spectrum)
    if args.depolarized is not None:
        if len(args.depolarized) != 2:
            raise SpectrumError("--depolarized takes D,DELTA")
        return Spectrum.depolarized(args.depolarized[0], args.depolarized[1])
    if args.config is not None:
        spec = ex.load_spec(args.config)
        if not spec.points:
            raise ex.ConfigError("config has no [[point]] entries")
        return ex.build_spectrum(spec.points[0])
    raise ex.ConfigError("give --spectrum, --depolarized or --config")


def _levels(args, s: Spectrum) -> list:
    """(epsilon, levels) pairs to run."""
    if args.levels is not None:
        if args.levels < 0:
            raise ex.ConfigError("--levels must be non-negative")
        return [(None, args.levels)]
    eps = args.epsilon or [1e-2]
    return [(e, pr.levels_to_epsilon(s, e)) for e in eps]


def _write(text: str, args, name: str) -> None:
    if args.out is None:
        sys.stdout.write(text)
        return
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / name).write_text(text)


def _meta(name, cols, args) -> dict:
    return ex._header(name, cols, args.deterministic)


def cmd_trajectory(args) -> int:
    s = _state(args)
    fmt = args.format or "csv"
    n = max(lv for _, lv in _levels(args, s))
    rows = [{"point_id": 0, "k": r.k, "lambda1": r.spectrum.lambda1, "p_k": r.p, "E": r.e,
             "gap": r.gap, "eta": r.eta, "stage": r.stage} for r in pr.trajectory(s, n).levels]
    cols = ex.TRAJECTORY_COLUMNS
    _write(ex.render_table(rows, cols, fmt, _meta("trajectory", cols, args)), args, f"trajectory.{fmt}")
    return EXIT_OK


SIM_COLUMNS = ("epsilon", "levels", "mode", "replicas", "mean", "std", "stderr",
               "closed_form", "z", "retry_factors")


def cmd_simulate(args) -> int:
    s = _state(args)
    fmt = args.format or "csv"
    replicas = 1000 if args.replicas is None else args.replicas
    if replicas < 1:
        raise ex.ConfigError("--replicas must be positive for simulate")
    seed = args.seed or 0
    mode = args.mode or pr.EXACT
    rows = []
    for j, (eps, n) in enumerate(_levels(args, s)):
        sub = derive_seed(seed, 0, j)
        if mode == pr.ORACLE:
            mc = pr.density_monte_carlo(s, n, replicas, sub)
        else:
            mc = pr.monte_carlo(s, n, replicas, sub)
        exact = pr.expected_samples_closed_form(s, n)
        rows.append({
            "epsilon": eps, "levels": n, "mode": mode, "replicas": replicas, "mean": mc.mean,
            "std": mc.std, "stderr": mc.stderr, "closed_form": exact,
            "z": (mc.mean - exact) / mc.stderr if mc.stderr > 0 else None,
            "retry_factors": " ".join(repr(float(x)) for x in mc.retry_factor_means()) if n else "",
        })
    _write(ex.render_table(rows, SIM_COLUMNS, fmt, _meta("simulate", SIM_COLUMNS, args)),
           args, f"simulate.{fmt}")
    return EXIT_OK


BOUND_COLUMNS = ("epsilon", "bound", "value", "integral_value", "case", "loose", "details")


def cmd_bounds(args) -> int:
    s = _state(args)
    fmt = args.format or "csv"
    rows = []
    for eps in args.epsilon or [1e-2]:
        if not 0 < eps < 1 - s.lambda1:
            raise bd.BoundDomainError(f"epsilon {eps} must lie in (0, 1 - lambda1)")
        for name, rep in bd.all_bounds(s, eps).items():
            if rep is None:
                rows.append({"epsilon": eps, "bound": name, "case": "not_applicable"})
                continue
            rows.append({"epsilon": eps, "bound": name, "value": rep.value,
                         "integral_value": rep.integral_value, "case": rep.case_taken,
                         "loose": rep.loose, "details": json.dumps(rep.details, sort_keys=True)})
        sl = bd.stage_lengths(s, eps)
        for label, v in zip(("stage1_length", "stage2_length", "stage3_length"), sl):
            rows.append({"epsilon": eps, "bound": label, "value": v})
    _write(ex.render_table(rows, BOUND_COLUMNS, fmt, _meta("bounds", BOUND_COLUMNS, args)),
           args, f"bounds.{fmt}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.config is None:
        raise ex.ConfigError("sweep needs --config")
    overrides = {"seed": args.seed, "epsilon": args.epsilon, "replicas": args.replicas,
                 "mode": args.mode, "format": args.format,
                 "out": None if args.out is None else str(args.out)}
    spec = ex.load_spec(args.config, overrides)
    rs = ex.run_experiment(spec)
    try:
        paths = ex.emit_results(rs, deterministic=args.deterministic)
    except OSError as exc:
        print(f"error: cannot write results: {exc}", file=sys.stderr)
        return EXIT_INVALID
    for p in paths:
        print(f"wrote {p}")
    skipped = sum(r["status"] == "skipped" for r in rs.rows)
    print(f"{len(rs.rows)} rows ({skipped} skipped)")
    print(rs.soundness_line())
    return EXIT_OK


def cmd_verify(args) -> int:
    results = vf.full_suite() if args.full else vf.quick_suite()
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VERIFY_FAILED if failed else EXIT_OK


COMMANDS = {"trajectory": cmd_trajectory, "simulate": cmd_simulate, "bounds": cmd_bounds,
            "sweep": cmd_sweep, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        return COMMANDS[args.command](args)
    except (ex.ConfigError, SpectrumError, bd.BoundDomainError, pr.ProtocolError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
