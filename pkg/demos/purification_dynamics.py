"""
Eigenvalue dynamics under repeated purification
===============================================

Follow a few spectra through the map level by level and watch the progress
measure E pass through the three stages.
"""
import sys

from swap_purify import bounds as bd
from swap_purify import protocol as pr
from swap_purify.spectrum import Spectrum

quick = "--quick" in sys.argv
eps = 1e-2 if quick else 1e-4

cases = {
    "qubit, delta=0.5": Spectrum.depolarized(2, 0.5),
    "d=16 depolarized, delta=0.8": Spectrum.depolarized(16, 0.8),
    "near-degenerate top pair": Spectrum([0.36, 0.34, 0.2, 0.1]),
}

for name, s in cases.items():
    traj = pr.trajectory(s, pr.levels_to_epsilon(s, eps))
    print(f"\n{name}: lambda = {s.values.round(4)}")
    print(f"{'k':>3} {'lambda1':>10} {'gap':>10} {'E':>10} {'p':>8} stage")
    for rec in traj.levels:
        print(f"{rec.k:>3} {rec.spectrum.lambda1:>10.6f} {rec.gap:>10.6f} {rec.e:>10.4g} {rec.p:>8.5f} {rec.stage}")
    sl = bd.stage_lengths(s, eps)
    print("observed stage lengths", traj.stage_counts(), " bounds", (sl.l1, round(sl.l2, 2), sl.t3))
