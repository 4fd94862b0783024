"""
Haar averages: exact forms against sampling
===========================================

The average inner product of two generators is a fourth-moment Haar
integral.  It has a closed form; here it is compared with the explicit
permutation formula and with plain Monte Carlo from two reference states.
"""

import numpy as np

from canonham import (
    HaarSampler,
    avg_inner_product,
    avg_inner_product_mc,
    avg_inner_product_permutation,
    canonical_hamiltonian,
    from_hamiltonian,
    lindblad_haar_hamiltonian_mc,
    random_hpta,
)

rng = np.random.default_rng(1)
d = 2
m, _, _ = random_hpta(d, rng)
n, _, _ = random_hpta(d, rng)

print("closed form     ", avg_inner_product(m, n))
print("permutations    ", avg_inner_product_permutation(m, n))
for i, ref in enumerate([np.array([1, 0]), np.array([0.6, 0.8j])]):
    est, se = avg_inner_product_mc(m, n, HaarSampler(d, i), 100000, reference=ref)
    print(f"MC, reference {i} {est:.5f} +- {se:.5f}")

# restricted to Hamiltonian maps the product is 2/(d(d+1)) tr(H1 H2)
sz = np.diag([1.0, -1.0])
print("<Phi_z, Phi_z> =", avg_inner_product(from_hamiltonian(sz), from_hamiltonian(sz)), "expected", 2 / 3)

# the Haar-integral Hamiltonian agrees with the canonical one
h_mc, se = lindblad_haar_hamiltonian_mc(m, HaarSampler(d, 7), 100000)
print("canonical H:\n", canonical_hamiltonian(m).round(4))
print("Haar MC H:\n", h_mc.round(4))
print("stderr:\n", se.round(4))
