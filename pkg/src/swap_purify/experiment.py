"""Parameter sweeps: TOML configuration in, CSV or JSON-lines tables out.

A configuration looks like::

    seed = 7
    epsilon = [1e-2, 1e-3]
    replicas = 1000          # 0 disables the Monte Carlo columns
    mode = "exact"           # or "oracle"

    [output]
    dir = "results"
    format = "csv"

    [[point]]
    kind = "depolarized"     # d, delta
    d = [2, 4, 8]
    delta = [0.2, 0.5]

    [[point]]
    kind = "spectrum"        # explicit eigenvalues
    values = [0.6, 0.3, 0.1]

    [[point]]
    kind = "general_noisy"   # eta, tail
    eta = 0.3
    tail = [0.7, 0.3]

    [[point]]
    kind = "gap_sweep"       # two eigenvalues 0.5 +/- gap/2
    gap = [0.1, 0.5, 0.9]

List-valued fields of a ``[[point]]`` table (other than ``values`` and
``tail``) are expanded as a cartesian product, so one table can describe a
whole grid. Points that do not give a valid spectrum are kept as skipped rows
with a reason code.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import tomli

from . import __version__
from . import bounds as bd
from . import density_oracle as dm
from . import protocol as pr
from .rng import derive_seed, validate_seed
from .spectrum import Spectrum, SpectrumError, flat_tail_spectrum

POINT_KINDS = ("depolarized", "spectrum", "general_noisy", "gap_sweep")
_VECTOR_FIELDS = {"values", "tail"}
_REQUIRED = {
    "depolarized": ("d", "delta"),
    "spectrum": ("values",),
    "general_noisy": ("eta", "tail"),
    "gap_sweep": ("gap",),
}
# Monte Carlo is skipped when replicas * expected copies exceeds this.
DEFAULT_COPY_BUDGET = 2e9


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GridPoint:
    point_id: int
    kind: str
    params: dict


@dataclass
class ExperimentSpec:
    points: list
    epsilons: tuple = (1e-2,)
    replicas: int = 0
    mode: str = pr.EXACT
    seed: int = 0
    out_dir: str = "results"
    fmt: str = "csv"
    copy_budget: float = DEFAULT_COPY_BUDGET


def _expand(table: dict) -> list:
    table = dict(table)
    kind = table.pop("kind", None)
    if kind not in POINT_KINDS:
        raise ConfigError(f"point kind must be one of {POINT_KINDS}, got {kind!r}")
    missing = [k for k in _REQUIRED[kind] if k not in table]
    if missing:
        raise ConfigError(f"{kind} point is missing {', '.join(missing)}")
    keys = sorted(table)
    axes = []
    for k in keys:
        v = table[k]
        if k in _VECTOR_FIELDS:
            if v and isinstance(v[0], list):
                axes.append(v)
            else:
                axes.append([v])
        else:
            axes.append(v if isinstance(v, list) else [v])
    return [(kind, dict(zip(keys, combo))) for combo in itertools.product(*axes)]


def parse_spec(text: str, overrides: dict | None = None) -> ExperimentSpec:
    """Parse TOML text; ``overrides`` (e.g. from CLI flags) win over the file."""
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    tables = raw.get("point", [])
    if not isinstance(tables, list):
        raise ConfigError("[[point]] must be an array of tables")
    points = []
    for table in tables:
        for kind, params in _expand(table):
            points.append(GridPoint(len(points), kind, params))
    output = raw.get("output", {})
    eps = overrides.get("epsilon", raw.get("epsilon", [1e-2]))
    eps = tuple(float(e) for e in (eps if isinstance(eps, list | tuple) else [eps]))
    if not eps or any(not 0 < e < 1 for e in eps):
        raise ConfigError(f"epsilon values must lie in (0, 1), got {eps}")
    replicas = int(overrides.get("replicas", raw.get("replicas", 0)))
    if replicas < 0:
        raise ConfigError("replicas must be non-negative")
    mode = overrides.get("mode", raw.get("mode", pr.EXACT))
    if mode not in (pr.EXACT, pr.ORACLE):
        raise ConfigError(f"mode must be 'exact' or 'oracle', got {mode!r}")
    try:
        seed = validate_seed(overrides.get("seed", raw.get("seed", 0)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    fmt = overrides.get("format", output.get("format", "csv"))
    if fmt not in ("csv", "jsonl"):
        raise ConfigError(f"format must be 'csv' or 'jsonl', got {fmt!r}")
    return ExperimentSpec(
        points=points, epsilons=eps, replicas=replicas, mode=mode, seed=seed,
        out_dir=str(overrides.get("out", output.get("dir", "results"))), fmt=fmt,
        copy_budget=float(raw.get("copy_budget", DEFAULT_COPY_BUDGET)),
    )


def load_spec(path, overrides: dict | None = None) -> ExperimentSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_spec(text, overrides)


def build_spectrum(point: GridPoint) -> Spectrum:
    p = point.params
    if point.kind == "depolarized":
        d = p["d"]
        if int(d) != d:
            raise SpectrumError(f"d must be an integer, got {d!r}")
        return Spectrum.depolarized(int(d), float(p["delta"]))
    if point.kind == "spectrum":
        return Spectrum(p["values"])
    if point.kind == "general_noisy":
        return Spectrum.general_noisy(float(p["eta"]), p["tail"])
    gap = float(p["gap"])
    if not 0 < gap < 1:
        raise SpectrumError(f"gap must lie in (0, 1), got {gap!r}")
    l1 = float(p.get("lambda1", 0.5 + gap / 2.0))
    return flat_tail_spectrum(l1, l1 - gap) if l1 - gap > 0 else Spectrum([1.0, 0.0])


COLUMNS = (
    "point_id", "kind", "params", "dim", "lambda1", "lambda2", "gap", "epsilon",
    "status", "reason", "levels_used", "expected_samples",
    "mc_replicas", "mc_mean", "mc_std", "mc_stderr", "mc_z",
    "levels_upper_bound", "levels_upper_bound_int", "levels_case",
    "proof1_bound", "proof1_bound_int", "proof1_case",
    "proof2_bound", "proof2_case", "proof2_loose",
    "lower_lambda1", "lower_gap", "lower_two_eigs", "tightness_ratio",
    "stage1_bound", "stage2_bound", "stage3_bound",
    "stage1_observed", "stage2_observed", "stage3_observed",
    "levels_sound", "stages_sound",
)
TRAJECTORY_COLUMNS = ("point_id", "k", "lambda1", "p_k", "E", "gap", "eta", "stage")


@dataclass
class ResultSet:
    spec: ExperimentSpec
    rows: list = field(default_factory=list)
    trajectories: list = field(default_factory=list)

    def soundness(self) -> tuple[int, int]:
        """(rows with levels_used <= levels bound, rows that have a bound)."""
        checked = [r for r in self.rows if r.get("levels_sound") is not None]
        return sum(bool(r["levels_sound"]) for r in checked), len(checked)

    def soundness_line(self) -> str:
        ok, n = self.soundness()
        verdict = "PASS" if ok == n else "FAIL"
        return f"soundness {verdict}: levels_used <= levels_upper_bound on {ok}/{n} rows"


def _value(rep):
    return None if rep is None else rep.value


def _case(rep):
    return None if rep is None else rep.case_taken


def _row_template(point: GridPoint, eps: float) -> dict:
    row = dict.fromkeys(COLUMNS)
    row.update(point_id=point.point_id, kind=point.kind,
               params=json.dumps(point.params, sort_keys=True), epsilon=eps)
    return row


def _simulate(spec: ExperimentSpec, s: Spectrum, n: int, seed: int, row: dict) -> None:
    if spec.replicas == 0:
        return
    expected = row["expected_samples"]
    if spec.mode == pr.ORACLE:
        if s.dim > dm.MAX_DIM or n > pr.MAX_ORACLE_LEVELS:
            row["reason"] = "oracle_size_limit"
            return
        mc = pr.density_monte_carlo(dm.diagonal_state(s), n, spec.replicas, seed)
    else:
        if expected * spec.replicas > spec.copy_budget:
            row["reason"] = "mc_budget_exceeded"
            return
        mc = pr.monte_carlo(s, n, spec.replicas, seed)
    row.update(mc_replicas=spec.replicas, mc_mean=mc.mean, mc_std=mc.std, mc_stderr=mc.stderr,
               mc_z=(mc.mean - expected) / mc.stderr if mc.stderr > 0 else None)


def run_point(spec: ExperimentSpec, point: GridPoint) -> tuple[list, list]:
    """Rows (one per epsilon) and trajectory rows for a single grid point."""
    rows = []
    try:
        s = build_spectrum(point)
    except (SpectrumError, ValueError, TypeError) as exc:
        for eps in spec.epsilons:
            row = _row_template(point, eps)
            msg = str(exc)
            code = "degenerate_principal" if ("degenerate" in msg or "not unique" in msg) else "invalid_spectrum"
            row.update(status="skipped", reason=code)
            rows.append(row)
        return rows, []
    deepest = 0
    for j, eps in enumerate(spec.epsilons):
        row = _row_template(point, eps)
        row.update(dim=s.dim, lambda1=s.lambda1, lambda2=s.lambda2, gap=s.gap, status="ok")
        n = pr.levels_to_epsilon(s, eps)
        deepest = max(deepest, n)
        traj = pr.trajectory(s, n)
        row.update(levels_used=n, expected_samples=pr.expected_samples_closed_form(s, n))
        seed = derive_seed(spec.seed, point.point_id, j)
        _simulate(spec, s, n, seed, row)
        reps = bd.all_bounds(s, eps) if eps < 1.0 - s.lambda1 else dict.fromkeys(
            ("levels_upper_bound", "sample_upper_bound_proof1", "sample_upper_bound_proof2",
             "lower_bound_lambda1", "lower_bound_gap", "lower_bound_two_eigs"))
        lv = reps["levels_upper_bound"]
        p1, p2 = reps["sample_upper_bound_proof1"], reps["sample_upper_bound_proof2"]
        row.update(
            levels_upper_bound=_value(lv), levels_case=_case(lv),
            levels_upper_bound_int=None if lv is None else lv.integral_value,
            proof1_bound=_value(p1), proof1_case=_case(p1),
            proof1_bound_int=None if p1 is None else p1.integral_value,
            proof2_bound=_value(p2), proof2_case=_case(p2),
            proof2_loose=None if p2 is None else p2.loose,
            lower_lambda1=_value(reps["lower_bound_lambda1"]),
            lower_gap=_value(reps["lower_bound_gap"]),
            lower_two_eigs=_value(reps["lower_bound_two_eigs"]),
        )
        uppers = [v for v in (row["proof1_bound_int"], row["proof2_bound"]) if v is not None]
        lowers = [v for v in (row["lower_lambda1"], row["lower_gap"], row["lower_two_eigs"])
                  if v is not None and v > 0]
        if uppers and lowers:
            row["tightness_ratio"] = min(uppers) / max(lowers)
        if lv is None:
            row["reason"] = row["reason"] or ("epsilon_already_met" if n == 0 else "bounds_out_of_domain")
        else:
            row["levels_sound"] = n <= lv.integral_value
            sl = bd.stage_lengths(s, eps)
            obs = traj.stage_counts()
            row.update(stage1_bound=sl.l1, stage2_bound=sl.l2, stage3_bound=sl.t3,
                       stage1_observed=obs[0], stage2_observed=obs[1], stage3_observed=obs[2],
                       stages_sound=obs[0] <= sl.l1 and obs[1] <= sl.l2 and obs[2] <= sl.t3)
        rows.append(row)
    traj_rows = [
        {"point_id": point.point_id, "k": rec.k, "lambda1": rec.spectrum.lambda1, "p_k": rec.p,
         "E": rec.e, "gap": rec.gap, "eta": rec.eta, "stage": rec.stage}
        for rec in pr.trajectory(s, deepest).levels
    ]
    return rows, traj_rows


def run_experiment(spec: ExperimentSpec) -> ResultSet:
    """Evaluate every grid point in order; results depend only on the spec."""
    rs = ResultSet(spec)
    for point in spec.points:
        rows, traj = run_point(spec, point)
        rs.rows.extend(rows)
        rs.trajectories.extend(traj)
    return rs


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool | np.bool_):
        return "true" if v else "false"
    if isinstance(v, float | np.floating):
        return repr(float(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, float | np.floating):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    return v


def _header(kind: str, columns, deterministic: bool) -> dict:
    meta = {"table": kind, "version": __version__, "columns": list(columns)}
    if not deterministic:
        meta["generated"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return meta


def render_table(rows, columns, fmt: str, meta: dict) -> str:
    buf = io.StringIO()
    if fmt == "csv":
        extra = "".join(f" {k}={v};" for k, v in meta.items() if k not in ("columns",))
        buf.write(f"#{extra} columns: {','.join(columns)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])
    elif fmt == "jsonl":
        buf.write(json.dumps({"meta": meta}, sort_keys=True) + "\n")
        for r in rows:
            buf.write(json.dumps({c: _jsonable(r.get(c)) for c in columns}) + "\n")
    else:
        raise ConfigError(f"unknown format {fmt!r}")
    return buf.getvalue()


def emit_results(rs: ResultSet, out_dir=None, fmt: str | None = None,
                 deterministic: bool = False) -> list:
    """Write ``results`` and ``trajectory`` tables; returns the paths written."""
    fmt = fmt or rs.spec.fmt
    out = Path(out_dir if out_dir is not None else rs.spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, rows, cols in (("results", rs.rows, COLUMNS),
                             ("trajectory", rs.trajectories, TRAJECTORY_COLUMNS)):
        path = out / f"{name}.{fmt}"
        text = render_table(rows, cols, fmt, _header(name, cols, deterministic))
        with open(path, "w", newline="") as fh:
            fh.write(text)
        paths.append(path)
    return paths


def read_csv_table(path) -> list:
    """Parse a table written by :func:`emit_results` (values stay strings)."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))
