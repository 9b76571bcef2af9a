"""
How tight are the level and copy bounds?
========================================

Sweep two-eigenvalue states lambda = 0.5 +/- gap/2 and a few depolarized
qudits, then compare levels used and expected copies with the upper and
lower bounds. Uses the same machinery as ``swap-purify sweep``.
"""
import sys
from pathlib import Path

from swap_purify import experiment as ex

quick = "--quick" in sys.argv
config = Path(__file__).with_name("configs") / "gap_sweep.toml"
overrides = {"replicas": 0, "epsilon": [1e-2]} if quick else {"replicas": 0}
rs = ex.run_experiment(ex.load_spec(config, overrides))

print(f"{'kind':<13} {'lambda1':>8} {'gap':>6} {'eps':>7} {'n':>3} {'n_ub':>6} "
      f"{'E[copies]':>11} {'proof1':>10} {'lower':>10} {'ratio':>8}")
for r in rs.rows:
    if r["status"] != "ok":
        print(f"{r['kind']:<13} skipped: {r['reason']}")
        continue
    lower = max(v for v in (r["lower_lambda1"], r["lower_gap"], r["lower_two_eigs"], 0.0) if v is not None)
    fmt = lambda v: "-" if v is None else f"{v:.3g}"
    print(f"{r['kind']:<13} {r['lambda1']:>8.4f} {r['gap']:>6.3f} {r['epsilon']:>7.0e} {r['levels_used']:>3} "
          f"{r['levels_upper_bound']:>6.2f} {r['expected_samples']:>11.4g} {fmt(r['proof1_bound']):>10} "
          f"{fmt(lower):>10} {fmt(r['tightness_ratio']):>8}")
print()
print(rs.soundness_line())
