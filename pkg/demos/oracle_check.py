"""
Swap test on density matrices versus the spectral map
=====================================================

Run the swap test on two copies of a random qudit state and compare the
post-selected state's spectrum with the closed-form map on eigenvalues.
"""
import sys

import numpy as np

from swap_purify import density_oracle as dm
from swap_purify.spectrum import f_map, success_probability

quick = "--quick" in sys.argv
rng = np.random.default_rng(7)

# One state in detail.
rho = dm.random_density_matrix(3, rng, min_gap=0.05)
s = dm.spectrum_of(rho)
accept, reject = dm.swap_test_channel(rho, rho)
print("input spectrum     ", np.round(s.values, 6))
print("swap-test output   ", np.round(dm.spectrum_of(accept.post_state).values, 6))
print("spectral map       ", np.round(f_map(s).values, 6))
print(f"accept probability  {accept.probability:.12f}  vs  {success_probability(s):.12f}")

# Many states of several dimensions: worst disagreement.
err_vals, err_p = 0.0, 0.0
trials = 20 if quick else 200
for d in range(2, 7):
    for _ in range(trials):
        rho = dm.random_density_matrix(d, rng, min_gap=1e-3)
        s = dm.spectrum_of(rho)
        accept, _ = dm.swap_test_channel(rho, rho)
        err_vals = max(err_vals, np.abs(dm.spectrum_of(accept.post_state).values - f_map(s).values).max())
        err_p = max(err_p, abs(accept.probability - success_probability(s)))
print(f"\n{5 * trials} states, d = 2..6")
print(f"max eigenvalue error    {err_vals:.2e}")
print(f"max probability error   {err_p:.2e}")

# The principal eigenvector survives and fidelity with it only grows.
psi = dm.principal_eigenvector(rho)
out = dm.swap_test_channel(rho, rho)[0].post_state
print(f"\nfidelity with principal eigenvector: {dm.fidelity_pure(psi, rho):.6f} -> {dm.fidelity_pure(psi, out):.6f}")
