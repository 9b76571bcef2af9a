"""Invariant suites shared by ``swap-purify verify`` and the test-suite.

Each check takes its sample sizes as arguments so the CLI can run a quick
version and the tests the full one. A check returns a :class:`CheckResult`
and never raises on a violated invariant.
"""
from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import bounds as bd
from . import density_oracle as dm
from . import protocol as pr
from .spectrum import (
    INVARIANT_TOL,
    Spectrum,
    dominates,
    eigen_delta_recurrence,
    f_map,
    f_map_generalized,
    SpectrumError,
    flat_tail_spectrum,
    gammas,
    progress_measure,
    random_generalized_spectrum,
    random_spectrum,
    s_projection,
    success_probability,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    summary: str
    elapsed: float = 0.0
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.summary} ({self.elapsed:.2f}s)"


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.elapsed = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_timed
def check_oracle_equivalence(samples: int = 500, dims=range(2, 7), seed: int = 0) -> CheckResult:
    """Swap-test channel on explicit matrices against the spectral F map."""
    rng = np.random.default_rng(seed)
    dims = list(dims)
    worst_ev = worst_p = worst_vec = 0.0
    for i in range(samples):
        d = dims[i % len(dims)]
        rho = dm.random_density_matrix(d, rng)
        good, bad = dm.swap_test_channel(rho, rho)
        out = good.post_state
        worst_ev = max(worst_ev, np.max(np.abs(dm.spectrum_of(out).values - f_map(dm.spectrum_of(rho)).values)))
        worst_p = max(worst_p, abs(good.probability - 0.5 * (1.0 + rho.purity())),
                      abs(good.probability + bad.probability - 1.0))
        psi = dm.principal_eigenvector(rho)
        worst_vec = max(worst_vec, 1.0 - abs(np.vdot(psi, dm.principal_eigenvector(out))) ** 2)
    passed = worst_ev <= 1e-9 and worst_p <= 1e-10 and worst_vec <= 1e-9
    return CheckResult(
        "oracle_equivalence", passed,
        f"{samples} states, max eigenvalue err {worst_ev:.2e}, max probability err {worst_p:.2e}",
        details={"eigenvalue_error": worst_ev, "probability_error": worst_p, "eigvec_infidelity": worst_vec},
    )


@_timed
def check_recurrence(dims=range(2, 17), deltas=None) -> CheckResult:
    """Scalar noise recurrence against the F map on depolarized spectra."""
    if deltas is None:
        deltas = np.linspace(0.025, 0.975, 20)
    worst = 0.0
    for d in dims:
        for delta in deltas:
            s = Spectrum.depolarized(d, float(delta))
            nxt, p = eigen_delta_recurrence(float(delta), d)
            worst = max(worst, np.max(np.abs(f_map(s).values - Spectrum.depolarized(d, nxt).values)),
                        abs(p - success_probability(s)))
    ref_delta, ref_p = eigen_delta_recurrence(0.5, 2)
    worked = abs(ref_delta - 5.0 / 13.0) <= 1e-12 and abs(ref_p - 0.8125) <= 1e-12
    n = len(list(dims)) * len(deltas)
    return CheckResult(
        "recurrence_consistency", worst <= 1e-12 and worked,
        f"{n} (d, delta) points, max err {worst:.2e}, worked point {'ok' if worked else 'wrong'}",
        details={"max_error": worst, "worked_point": (ref_delta, ref_p)},
    )


@_timed
def check_reduction(samples: int = 1000, depth: int = 30, seed: int = 1, tol: float = 1e-10) -> CheckResult:
    """Iterates of a generalized spectrum dominate iterates of its projection."""
    rng = np.random.default_rng(seed)
    violations = 0
    comparisons = 0
    for _ in range(samples):
        g = random_generalized_spectrum(rng)
        a, b = g, s_projection(g)
        for _k in range(depth + 1):
            comparisons += 1
            if not dominates(a, b, tol):
                violations += 1
            a, b = f_map_generalized(a), f_map_generalized(b)
    return CheckResult(
        "reduction_chain", violations == 0,
        f"{samples} spectra x {depth + 1} depths, {violations} violations",
        details={"violations": violations, "comparisons": comparisons},
    )


def _sandwich_spectrum(rng, i: int) -> Spectrum:
    d = int(rng.integers(2, 65))
    return random_spectrum(d, rng, concentration=(0.1, 0.5, 1.0, 5.0, 50.0)[i % 5])


@_timed
def check_gamma_sandwich(samples: int = 1000, seed: int = 2, tol: float = INVARIANT_TOL) -> CheckResult:
    """Per-step ratio bounds on the terms and sum of the progress measure."""
    rng = np.random.default_rng(seed)
    counts = dict.fromkeys(
        ("gamma_lower", "gamma_upper", "e_lambda1", "e_self", "e_eta", "eta_le_e", "inv_lambda1"), 0)
    for i in range(samples):
        s = _sandwich_spectrum(rng, i)
        f = f_map(s)
        l1 = s.lambda1
        rate = math.exp(-1.0 / (1.0 / l1 + 1.5))
        g0, g1 = gammas(s), gammas(f)
        mask = g0 > 0
        ratio = g1[mask] / g0[mask]
        counts["gamma_lower"] += int(np.sum(ratio < math.exp(-l1) - tol))
        counts["gamma_upper"] += int(np.sum(ratio > rate + tol))
        e0, e1 = progress_measure(s), progress_measure(f)
        r = e1 / e0
        counts["e_lambda1"] += r > rate + tol
        counts["e_self"] += r > math.exp(-1.0 / (e0 + 2.5)) + tol
        counts["e_eta"] += r > 0.5 * (1.0 + s.eta) + tol
        counts["eta_le_e"] += s.eta > e0 + tol
        counts["inv_lambda1"] += 1.0 / l1 > 1.0 + e0 + tol
    total = sum(counts.values())
    return CheckResult("gamma_sandwich", total == 0, f"{samples} spectra, {total} violations",
                       details={k: int(v) for k, v in counts.items()})


def soundness_grid(pairs: int = 1200, seed: int = 3):
    """(spectrum, epsilon) pairs covering flat tails, Dirichlet draws and small gaps."""
    rng = np.random.default_rng(seed)
    eps_list = (1e-2, 1e-3, 1e-4)
    out = []
    i = 0
    while len(out) < pairs:
        kind = i % 3
        if kind == 0:
            d = int(rng.integers(2, 65))
            s = Spectrum.depolarized(d, float(rng.uniform(0.02, 0.98)))
        elif kind == 1:
            s = _sandwich_spectrum(rng, i)
        else:
            # Worst-case shape: a flat tail under a chosen (lambda1, lambda2).
            gap = float(10 ** rng.uniform(-2.5, 0))
            l1 = float(rng.uniform(gap, 1.0))
            l2 = l1 - gap
            s = _flat_tail(l1, l2) if l2 > 0 else None
        i += 1
        if s is None or s.lambda2 <= 0 or s.dim > 64:
            continue
        eps = eps_list[len(out) % 3]
        if eps < 1.0 - s.lambda1:
            out.append((s, eps))
    return out


def _flat_tail(l1: float, l2: float) -> Spectrum | None:
    try:
        s = flat_tail_spectrum(l1, l2)
    except SpectrumError:
        return None
    return s if s.dim <= 64 else None


@_timed
def check_bound_soundness(pairs: int = 1200, seed: int = 3) -> CheckResult:
    """Simulated levels, stage lengths and expected copies against the upper bounds."""
    grid = soundness_grid(pairs, seed)
    v = dict.fromkeys(("levels", "stage1", "stage2", "stage3", "proof1", "proof2"), 0)
    literal_proof1_exceeded = 0
    worst_ratio = {"proof1": 0.0, "proof2": 0.0}
    for s, eps in grid:
        n = pr.levels_to_epsilon(s, eps)
        lb = bd.levels_upper_bound(s.lambda1, s.lambda2, eps)
        v["levels"] += n > lb.integral_value
        traj = pr.trajectory(s, n)
        obs = traj.stage_counts()
        sl = bd.stage_lengths(s, eps)
        v["stage1"] += obs[0] > sl.l1
        v["stage2"] += obs[1] > sl.l2
        v["stage3"] += obs[2] > sl.t3
        c = float(2.0 ** n / np.prod([rec.p for rec in traj.levels[:-1]]))
        p1 = bd.sample_upper_bound_proof1(s.lambda1, s.lambda2, eps)
        p2 = bd.sample_upper_bound_proof2(s.lambda1, s.gap, eps)
        v["proof1"] += c > p1.integral_value * (1 + 1e-12)
        v["proof2"] += c > p2.integral_value * (1 + 1e-12)
        literal_proof1_exceeded += c > p1.value
        worst_ratio["proof1"] = max(worst_ratio["proof1"], c / p1.integral_value)
        worst_ratio["proof2"] = max(worst_ratio["proof2"], c / p2.integral_value)
    total = sum(v.values())
    return CheckResult(
        "bound_soundness", total == 0 and len(grid) >= pairs,
        f"{len(grid)} pairs, {total} violations "
        f"(literal real-level proof-1 value exceeded on {literal_proof1_exceeded})",
        details={"violations": {k: int(x) for k, x in v.items()}, "pairs": len(grid),
                 "literal_proof1_exceeded": int(literal_proof1_exceeded), "worst_ratio": worst_ratio},
    )


MC_CONFIGS = (
    ("depolarized d=2 delta=0.5", Spectrum.depolarized(2, 0.5), 8),
    ("depolarized d=4 delta=0.3", Spectrum.depolarized(4, 0.3), 6),
    ("depolarized d=8 delta=0.6", Spectrum.depolarized(8, 0.6), 5),
    ("depolarized d=16 delta=0.2", Spectrum.depolarized(16, 0.2), 7),
    ("depolarized d=3 delta=0.8", Spectrum.depolarized(3, 0.8), 4),
    ("spectrum (0.7, 0.2, 0.1)", Spectrum([0.7, 0.2, 0.1]), 8),
    ("spectrum (0.5, 0.3, 0.15, 0.05)", Spectrum([0.5, 0.3, 0.15, 0.05]), 6),
    ("general eta=0.4 tail (0.5, 0.3, 0.2)", Spectrum.general_noisy(0.4, [0.5, 0.3, 0.2]), 5),
    ("general eta=0.2 tail (0.9, 0.1)", Spectrum.general_noisy(0.2, [0.9, 0.1]), 8),
    ("spectrum (0.4, 0.35, 0.25)", Spectrum([0.4, 0.35, 0.25]), 3),
)


@_timed
def check_monte_carlo(replicas: int = 100_000, seed: int = 4, configs=MC_CONFIGS) -> CheckResult:
    """Empirical mean copy count against ``2**n / prod(p_k)``."""
    rows = []
    ok = True
    for label, s, n in configs:
        mc = pr.monte_carlo(s, n, replicas, seed)
        exact = pr.expected_samples_closed_form(s, n)
        z = (mc.mean - exact) / mc.stderr
        retry = mc.retry_factor_means()
        retry_ok = bool(np.all(retry >= 1.0) and np.all(retry <= 2.0 + 3 * mc.retry_factor_stderr()))
        ok &= abs(z) <= 3.0 and retry_ok
        rows.append({"config": label, "n": n, "mean": mc.mean, "stderr": mc.stderr,
                     "closed_form": exact, "z": z, "retry_ok": retry_ok})
    worst = max(abs(r["z"]) for r in rows)
    return CheckResult("monte_carlo_vs_closed_form", ok,
                       f"{len(rows)} configs x {replicas} replicas, max |z| {worst:.2f}",
                       details={"rows": rows})


@_timed
def check_memory(runs_per_level: int = 1000, max_level: int = 10, seed: int = 5) -> CheckResult:
    """Peak registers of the depth-first schedule never exceed ``n + 1``."""
    s = Spectrum.depolarized(4, 0.6)
    worst_excess = -math.inf
    runs = 0
    peaks = {}
    for n in range(1, max_level + 1):
        ps = pr.p_sequence(s, n)
        tree = pr.attempt_tree(ps, seed, np.arange(runs_per_level), keep=True)
        peak = 0
        for i in range(runs_per_level):
            res = pr.replay_depth_first(n, pr.tree_draw(tree, i))
            peak = max(peak, res.max_registers)
            runs += 1
        peaks[n] = peak
        worst_excess = max(worst_excess, peak - (n + 1))
    return CheckResult("streaming_memory", worst_excess <= 0,
                       f"{runs} runs, n <= {max_level}, max peak - (n+1) = {worst_excess}",
                       details={"peak_by_level": peaks})


@_timed
def check_low_noise_ratio(points: int = 400, bound: float = 36.0) -> CheckResult:
    """Proof-1 upper bound over the lambda1 lower bound for lambda1 in [2/3, 0.999].

    The high-gap branch needs ``gap >= 2/3``, i.e. ``lambda2 <= lambda1 - 2/3``,
    which only exists for ``lambda1 > 2/3``; the grid covers that region.
    """
    worst = worst_int = 0.0
    evaluated = 0
    for l1 in np.linspace(2.0 / 3.0, 0.999, points):
        top = min(1.0 - l1, l1 - 2.0 / 3.0)
        if top <= 0:
            continue
        for frac in (1e-3, 0.25, 0.5, 0.75, 1.0):
            l2 = top * frac
            if l2 <= 0 or l1 - l2 < 2.0 / 3.0:
                continue
            eps = (1.0 - l1) / 10.0
            up = bd.sample_upper_bound_proof1(l1, l2, eps)
            low = bd.lower_bound_lambda1(l1, eps).value
            worst = max(worst, up.value / low)
            worst_int = max(worst_int, up.integral_value / low)
            evaluated += 1
    return CheckResult("low_noise_optimality", worst <= bound and evaluated > 0,
                       f"{evaluated} points, max ratio {worst:.3f} (integer-level {worst_int:.3f})",
                       details={"max_ratio": worst, "max_integral_ratio": worst_int, "points": evaluated})


@_timed
def check_oracle_vs_exact(replicas: int = 200, seed: int = 6, alpha: float = 0.01) -> CheckResult:
    """Density-oracle runs reproduce the exact trajectory and copy statistics."""
    cases = ((Spectrum.depolarized(2, 0.5), 3), (Spectrum([0.5, 0.3, 0.15, 0.05]), 2))
    rng = np.random.default_rng(seed)
    ok = True
    rows = []
    for s, n in cases:
        rho = dm.diagonal_state(s, dm.haar_unitary(s.dim, rng))
        traj_d, _ = pr.run_density(pr.ProtocolConfig(rho, n, pr.ORACLE, seed))
        traj_e = pr.trajectory(s, n)
        err = max(np.max(np.abs(a.spectrum.values - b.spectrum.values))
                  for a, b in zip(traj_d.levels, traj_e.levels))
        dens = pr.density_monte_carlo(rho, n, replicas, seed)
        exact = pr.monte_carlo(s, n, replicas, seed + 1)
        pval = stats.mannwhitneyu(dens.copies, exact.copies).pvalue
        ok &= err <= 1e-9 and pval >= alpha
        rows.append({"dim": s.dim, "n": n, "trajectory_error": err, "p_value": pval})
    return CheckResult("oracle_vs_exact", ok,
                       f"{len(rows)} cases, max trajectory err {max(r['trajectory_error'] for r in rows):.2e}, "
                       f"min p-value {min(r['p_value'] for r in rows):.3f}", details={"rows": rows})


DETERMINISM_CONFIG = """\
seed = 11
epsilon = [1e-2, 1e-3]
replicas = 50
mode = "exact"

[[point]]
kind = "depolarized"
d = [2, 4]
delta = [0.3, 0.6]

[[point]]
kind = "spectrum"
values = [0.6, 0.3, 0.1]

[[point]]
kind = "gap_sweep"
gap = [0.2, 0.5, 0.8]
"""


@_timed
def check_determinism(config_text: str = DETERMINISM_CONFIG) -> CheckResult:
    """Two sweeps with the same seed write byte-identical files."""
    from .experiment import emit_results, parse_spec, run_experiment

    with tempfile.TemporaryDirectory() as tmp:
        blobs = []
        for run in ("a", "b"):
            spec = parse_spec(config_text)
            paths = emit_results(run_experiment(spec), Path(tmp) / run, "csv", deterministic=True)
            blobs.append({p.name: p.read_bytes() for p in paths})
    same = blobs[0] == blobs[1]
    return CheckResult("determinism", same, f"{len(blobs[0])} files {'identical' if same else 'differ'}")


def quick_suite() -> list:
    """Reduced-size versions of every check, a few seconds in total."""
    return [
        check_oracle_equivalence(60),
        check_recurrence(range(2, 9), np.linspace(0.05, 0.95, 6)),
        check_reduction(100, 30),
        check_gamma_sandwich(200),
        check_bound_soundness(150),
        check_monte_carlo(5000, configs=MC_CONFIGS[:4]),
        check_memory(50, 6),
        check_low_noise_ratio(50),
        check_oracle_vs_exact(40),
        check_determinism(),
    ]


def full_suite() -> list:
    return [
        check_oracle_equivalence(),
        check_recurrence(),
        check_reduction(),
        check_gamma_sandwich(),
        check_bound_soundness(),
        check_monte_carlo(),
        check_memory(),
        check_low_noise_ratio(),
        check_oracle_vs_exact(),
        check_determinism(),
    ]
