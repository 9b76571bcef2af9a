"""
Copies consumed by the recursive protocol
=========================================

Each level retries until its swap test accepts, so the number of base
copies is random. Compare Monte Carlo ledgers with the closed form
2^n / (p_0 ... p_{n-1}) and look at the per-level retry factors.
"""
import sys

import numpy as np

from swap_purify import protocol as pr
from swap_purify.spectrum import Spectrum

quick = "--quick" in sys.argv
replicas = 2_000 if quick else 100_000
s = Spectrum.depolarized(3, 0.6)

print(f"spectrum {s.values.round(4)}, {replicas} replicas per row")
print(f"{'n':>2} {'closed form':>12} {'MC mean':>12} {'stderr':>9} {'z':>6}")
for n in range(1, 8):
    mc = pr.monte_carlo(s, n, replicas, seed=11)
    exact = pr.expected_samples_closed_form(s, n)
    print(f"{n:>2} {exact:>12.3f} {mc.mean:>12.3f} {mc.stderr:>9.3f} {(mc.mean - exact) / mc.stderr:>6.2f}")

# Retry factor at level k: attempts per call, always between 1 and 2 on average.
mc = pr.monte_carlo(s, 7, replicas, seed=12)
print("\nretry factors by level:", np.round(mc.retry_factor_means(), 4))
print("1/p by level:          ", np.round(1 / pr.p_sequence(s, 7), 4))

# Memory: the streaming schedule never holds more than n+1 registers.
peaks = [pr.streaming_memory_trace(pr.ProtocolConfig(s, 6, seed=i)) for i in range(50 if quick else 500)]
print(f"\npeak registers at n=6 over {len(peaks)} runs: max {max(peaks)} (n+1 = 7)")
