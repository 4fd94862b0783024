"""
Generators of exact reduced dynamics
====================================

Two qubits evolve under a fixed Hamiltonian.  The reduced channel on the first
qubit has a time-local generator wherever the channel is invertible.  With a
full SWAP coupling the channel becomes a constant map at t = pi/2, where no
generator exists.
"""

import numpy as np

from canonham import (
    BipartiteSystem,
    canonical_trajectory,
    extract_generator,
    integrate_master_equation,
    reduced_channel,
    swap_operator,
    trace_distance,
)
from canonham.operators import random_density_matrix, random_hermitian

zero = np.zeros((2, 2))
swap = BipartiteSystem(2, 2, zero, zero, swap_operator(2), 1.0, np.diag([1.0, 0.0]))
grid = np.linspace(0, np.pi, 21)
traj = canonical_trajectory(swap, grid)
for t, ok, cond, dec in zip(traj.times, traj.valid, traj.condition_numbers, traj.decompositions):
    rates = "-" if dec is None else np.round(dec.rates, 4)
    print(f"t={t:5.3f} valid={ok!s:5} cond={cond:9.3e} rates={rates}")

# a random system: integrating the extracted master equation reproduces the channel
rng = np.random.default_rng(3)
sys = BipartiteSystem(2, 2, random_hermitian(2, rng), random_hermitian(2, rng), random_hermitian(4, rng), 1.0, random_density_matrix(2, rng))
rho0 = random_density_matrix(2, rng)
rho = integrate_master_equation(lambda t: extract_generator(sys, t)[0], rho0, 1.0, 1e-3)
print("trace distance after t=1:", trace_distance(rho, reduced_channel(sys, 1.0)(rho0)))
