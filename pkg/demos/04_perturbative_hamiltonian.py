"""
Weak coupling: the canonical Hamiltonian order by order
=======================================================

At first order the system sees the bath-averaged coupling.  At second order
the canonical Hamiltonian picks up a time-dependent correction.  We compare
the expansion with the canonical Hamiltonian of the exact generator.
"""

import numpy as np

from canonham import BipartiteSystem, canonical_hamiltonian, extract_generator, recursive_generator
from canonham.operators import random_hermitian
from canonham.perturbation import canonical_h1, canonical_h2, perturbative_hamiltonian

rng = np.random.default_rng(5)
sz = np.diag([1.0, -1.0])
h_b = np.diag([0.5, -0.5])
rho_b = np.diag([0.7, 0.3])  # stationary under h_B
v = random_hermitian(4, rng)
base = BipartiteSystem(2, 2, sz, h_b, v, 1.0, rho_b)

print("order-1 canonical H:\n", canonical_h1(base).round(5))
for t in (0.25, 0.5, 1.0):
    print(f"t={t}: order-2 canonical H\n", canonical_h2(base, t).round(5))

# truncation error of the generator series against the exact generator
t = 1.0
gens = recursive_generator(base, 3, [t])
for lam in (1e-1, 1e-2, 1e-3):
    exact, _ = extract_generator(base.with_coupling(lam), t)
    res = [np.linalg.norm(exact.rep - gens.resum(lam, t, k).rep) for k in (1, 2, 3)]
    s = base.with_coupling(lam)
    h_err = np.abs(canonical_hamiltonian(exact, tol=1e-8) - perturbative_hamiltonian(s, t)).max()
    print(f"lambda={lam:g}: truncation residual K=1..3 {np.array(res)}, H error through order 2 {h_err:.2e}")
