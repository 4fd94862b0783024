"""Weak-coupling expansion of the time-local generator.

With ``H = H0 + lam V`` the interaction-picture propagator expands in Dyson
terms ``U^(k)``, obtained here by integrating the hierarchy
``dU^(k)/dt = -i V_int(t) U^(k-1)`` with fixed-step RK4.  The channel and its
derivative expand order by order, and the generator follows from the
recursion ``L^(k) = (Ndot^(k) - sum_{m<k} L^(m) o N^(k-m)) o (N^(0))^{-1}``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .canonical import canonical_hamiltonian
from .dynamics import check_grid, reduced_map_rep
from .operators import Evolution, commutator, dag, hermitian, partial_trace
from .superop import Superoperator, from_hamiltonian

DYSON_STEP = 1e-3


def v_interaction(sys, t):
    """``V_int(t) = exp(i H0 t) V exp(-i H0 t)`` with ``H0 = h_A (x) I + I (x) h_B``."""
    vi = sys.free_evolution.conjugate(sys.v, t)
    return 0.5 * (vi + dag(vi))


@dataclass(frozen=True, eq=False)
class DysonTerms:
    """``terms[i, k] = U^(k)(times[i])`` for ``k = 0 .. k_max``."""

    k_max: int
    times: np.ndarray
    terms: np.ndarray

    def index(self, t):
        i = int(np.argmin(np.abs(self.times - t)))
        if not np.isclose(self.times[i], t, rtol=0.0, atol=1e-12):
            raise ValueError(f"t={t!r} is not on the Dyson grid")
        return i

    def at(self, k, t):
        self._check_order(k)
        return self.terms[self.index(t), k]

    def _check_order(self, k):
        if not 0 <= k <= self.k_max:
            raise ValueError(f"order {k} outside 0..{self.k_max}")

    def resum(self, lam, t, order=None):
        """``sum_{k <= order} lam^k U^(k)(t)``."""
        order = self.k_max if order is None else order
        self._check_order(order)
        i = self.index(t)
        return sum(lam ** k * self.terms[i, k] for k in range(order + 1))


def _hierarchy_rhs(sys, t, u):
    du = np.zeros_like(u)
    du[1:] = -1j * v_interaction(sys, t) @ u[:-1]
    return du


def dyson_terms(sys, k_max, grid, step=DYSON_STEP):
    """Integrate the Dyson hierarchy from ``t = 0`` through every grid point.

    Between consecutive grid points the interval is split into equal RK4
    steps no longer than ``step``, so every grid point is hit exactly.
    """
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    if step <= 0:
        raise ValueError("step must be positive")
    grid = check_grid(grid)
    dim = sys.d_A * sys.d_B
    u = np.zeros((k_max + 1, dim, dim), complex)
    u[0] = np.eye(dim)
    out = np.empty((len(grid), k_max + 1, dim, dim), complex)
    t = 0.0
    for i, target in enumerate(grid):
        n = int(np.ceil((target - t) / step - 1e-9))
        if n > 0:
            h = (target - t) / n
            for j in range(n):
                s = t + j * h
                k1 = _hierarchy_rhs(sys, s, u)
                k2 = _hierarchy_rhs(sys, s + h / 2, u + h / 2 * k1)
                k3 = _hierarchy_rhs(sys, s + h / 2, u + h / 2 * k2)
                k4 = _hierarchy_rhs(sys, s + h, u + h * k3)
                u = u + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i] = u
        t = target
    out.flags.writeable = False
    return DysonTerms(k_max, grid, out)


def _rotation_rep(h_a, t):
    # M -> w M w^dag with w = exp(-i h_A t)
    w = Evolution(h_a).at(t)
    return np.kron(w.conj(), w)


def _channel_rep(sys, us, k):
    rep = 0
    for m in range(k + 1):
        rep = rep + reduced_map_rep(us[m], us[k - m], sys.rho_B0, sys.d_A, sys.d_B)
    return rep


def perturbative_channel(sys, dyson, k, t):
    """``N^(k)_t(M) = exp(-i h_A t) tr_B[sum_{m+n=k} U^(m) (M (x) rho_B0) U^(n)dag] exp(i h_A t)``."""
    us = dyson.terms[dyson.index(t)]
    dyson._check_order(k)
    return Superoperator(_rotation_rep(sys.h_A, t) @ _channel_rep(sys, us, k))


def perturbative_channel_derivative(sys, dyson, k, t):
    """Analytic ``d/dt N^(k)_t`` by the product rule with ``dU^(k)/dt = -i V_int U^(k-1)``."""
    us = dyson.terms[dyson.index(t)]
    dyson._check_order(k)
    dus = np.zeros_like(us)
    dus[1:] = -1j * v_interaction(sys, t) @ us[:-1]
    rot = _rotation_rep(sys.h_A, t)
    inner = 0
    for m in range(k + 1):
        inner = inner + reduced_map_rep(dus[m], us[k - m], sys.rho_B0, sys.d_A, sys.d_B)
        inner = inner + reduced_map_rep(us[m], dus[k - m], sys.rho_B0, sys.d_A, sys.d_B)
    rep = from_hamiltonian(sys.h_A).rep @ rot @ _channel_rep(sys, us, k) + rot @ inner
    return Superoperator(rep)


@dataclass(frozen=True, eq=False)
class PerturbativeGenerator:
    """``generators[i][k] = L^(k)`` at ``times[i]``."""

    k_max: int
    times: np.ndarray
    generators: list

    def at(self, k, t):
        i = int(np.argmin(np.abs(self.times - t)))
        if not np.isclose(self.times[i], t, rtol=0.0, atol=1e-12):
            raise ValueError(f"t={t!r} is not on the grid")
        return self.generators[i][k]

    def resum(self, lam, t, order=None):
        """``sum_{k <= order} lam^k L^(k)_t``."""
        order = self.k_max if order is None else order
        if not 0 <= order <= self.k_max:
            raise ValueError(f"order {order} outside 0..{self.k_max}")
        rep = sum(lam ** k * self.at(k, t).rep for k in range(order + 1))
        return Superoperator(rep)


def recursive_generator(sys, k_max, grid, step=DYSON_STEP):
    """Generator coefficients ``L^(0..k_max)`` on ``grid`` via the order-by-order recursion."""
    dyson = dyson_terms(sys, k_max, grid, step)
    l0 = from_hamiltonian(sys.h_A)
    gens = []
    for t in dyson.times:
        # inverse of the zeroth-order channel: M -> exp(i h_A t) M exp(-i h_A t)
        undo = _rotation_rep(sys.h_A, -t)
        chans = [perturbative_channel(sys, dyson, k, t).rep for k in range(k_max + 1)]
        ls = [l0]
        for k in range(1, k_max + 1):
            rep = perturbative_channel_derivative(sys, dyson, k, t).rep
            for m in range(k):
                rep = rep - ls[m].rep @ chans[k - m]
            ls.append(Superoperator(rep @ undo))
        gens.append(ls)
    return PerturbativeGenerator(k_max, dyson.times, gens)


def _integrated_interaction(sys, t, step):
    """``int_0^t V_int(s) ds`` by composite Simpson with spacing at most ``step``."""
    n = max(2, 2 * int(np.ceil(t / (2 * step) - 1e-9)))
    s = np.linspace(0.0, t, n + 1)
    vals = np.array([v_interaction(sys, x) for x in s])
    return simpson(vals, x=s, axis=0)


def _second_order_data(sys, t, step):
    """``(V_tilde, rho_B(t), V_hat)`` entering the order-2 closed forms.

    ``V_tilde = exp(-i H0 t) (int_0^t V_int) exp(i H0 t)``, ``rho_B(t)`` is the
    freely evolved bath state and ``V_hat = tr_B(V rho_B(t))``.
    """
    w = sys.free_evolution.at(t)
    vt = w @ _integrated_interaction(sys, t, step) @ dag(w)
    vt = 0.5 * (vt + dag(vt))
    wb = Evolution(sys.h_B).at(t)
    rho = wb @ sys.rho_B0 @ dag(wb)
    vhat = partial_trace(sys.v @ np.kron(np.eye(sys.d_A), rho), "B", sys.d_A, sys.d_B)
    return vt, rho, vhat


def first_order_generator(sys, t=0.0):
    """``L^(1)(M) = -i[tr_B(V rho_B(t)), M]``; time independent when ``h_B`` fixes ``rho_B0``."""
    wb = Evolution(sys.h_B).at(t)
    rho = wb @ sys.rho_B0 @ dag(wb)
    vhat = partial_trace(sys.v @ np.kron(np.eye(sys.d_A), rho), "B", sys.d_A, sys.d_B)
    return from_hamiltonian(0.5 * (vhat + dag(vhat)))


def closed_form_L2(sys, t, step=DYSON_STEP):
    """``L^(2)_t(M) = tr_B[V - V_hat (x) I, [M (x) rho_B(t), V_tilde]]``.

    The time integral is done by Simpson's rule, so the error is ``O(step^4)``.
    At ``t = 0`` this is the zero map.
    """
    d_A, d_B = sys.d_A, sys.d_B
    if t == 0:
        return Superoperator.zero(d_A)
    vt, rho, vhat = _second_order_data(sys, t, step)
    outer = sys.v - np.kron(vhat, np.eye(d_B))
    eye = np.eye(d_A * d_B)
    # [O, X Vt - Vt X] expanded into four tr_B[p X q^dag] pieces
    rep = reduced_map_rep(outer, vt, rho, d_A, d_B)
    rep = rep - reduced_map_rep(outer @ vt, eye, rho, d_A, d_B)
    rep = rep - reduced_map_rep(eye, outer @ vt, rho, d_A, d_B)
    rep = rep + reduced_map_rep(vt, outer, rho, d_A, d_B)
    return Superoperator(rep)


def canonical_h1(sys, t=0.0):
    """Order-1 canonical Hamiltonian: traceless part of ``tr_B(V rho_B(t))``."""
    return canonical_hamiltonian(first_order_generator(sys, t))


def canonical_h2(sys, t, step=DYSON_STEP):
    """Order-2 canonical Hamiltonian in closed form, trace removed.

    ``H = (1/2id) tr_B(Vt [V_B, rho]) + (1/2id) tr_B(V [Vt_B, rho])
    + (1/2i) tr_B([V, Vt] rho) + (1/2i) [tr_B(Vt rho), V_hat]`` with
    ``V_B = tr_A V``, ``Vt_B = tr_A Vt`` and ``rho = rho_B(t)``.
    """
    d_A, d_B = sys.d_A, sys.d_B
    if t == 0:
        return hermitian(np.zeros((d_A, d_A)))
    vt, rho, vhat = _second_order_data(sys, t, step)
    eye_a = np.eye(d_A)

    def tr_b(x):
        return partial_trace(x, "B", d_A, d_B)

    v_b = partial_trace(sys.v, "A", d_A, d_B)
    vt_b = partial_trace(vt, "A", d_A, d_B)
    h = tr_b(vt @ np.kron(eye_a, commutator(v_b, rho))) / (2j * d_A)
    h += tr_b(sys.v @ np.kron(eye_a, commutator(vt_b, rho))) / (2j * d_A)
    h += tr_b(commutator(sys.v, vt) @ np.kron(eye_a, rho)) / 2j
    h += commutator(tr_b(vt @ np.kron(eye_a, rho)), vhat) / 2j
    h = 0.5 * (h + dag(h))
    return hermitian(h - np.trace(h) / d_A * eye_a)


def perturbative_hamiltonian(sys, t, step=DYSON_STEP):
    """Canonical Hamiltonian through order 2 at the system's coupling ``lam``."""
    d = sys.d_A
    h0 = sys.h_A - np.trace(sys.h_A) / d * np.eye(d)
    return h0 + sys.lam * canonical_h1(sys, t) + sys.lam ** 2 * canonical_h2(sys, t, step)
