import numpy as np

from canonham.dynamics import BipartiteSystem
from canonham.operators import random_density_matrix, random_hermitian


def random_system(rng, lam=1.0, d_A=2, d_B=2, stationary=True):
    """Random bipartite system; with ``stationary`` the bath state commutes with ``h_B``."""
    h_a = random_hermitian(d_A, rng)
    h_b = random_hermitian(d_B, rng)
    v = random_hermitian(d_A * d_B, rng)
    if stationary:
        _, w = np.linalg.eigh(h_b)
        rho = (w * rng.dirichlet(np.ones(d_B))) @ w.conj().T
    else:
        rho = random_density_matrix(d_B, rng)
    return BipartiteSystem(d_A, d_B, h_a, h_b, v, lam, rho)


def loglog_slope(xs, ys):
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])
