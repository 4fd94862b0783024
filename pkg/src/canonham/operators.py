"""Dense operator primitives: products, partial traces, propagators, bases.

Operators are plain ``numpy`` complex arrays.  The helpers :func:`hermitian`
and :func:`density_matrix` act as construction gates: they validate, copy and
return a read-only array, so downstream code can assume the invariants hold.

Vectorization is column-stacking throughout: ``vec(|a><b|)`` sits at index
``b * d + a``, so that ``vec(A X B) = kron(B.T, A) @ vec(X)``.
"""

import numpy as np

from .errors import DimensionError, NotDensityMatrixError, NotHermitianError

HERMITIAN_RTOL = 1e-12
STATE_TOL = 1e-10


def _frozen(m):
    m = np.array(m, dtype=complex, copy=True)
    m.flags.writeable = False
    return m


def as_matrix(m, square=True):
    """Coerce ``m`` to a finite 2-d complex array (a copy)."""
    m = np.array(m, dtype=complex)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def dag(m):
    return np.conj(np.swapaxes(m, -1, -2))


def hermiticity_residual(m):
    """``max|M - M^dagger|`` relative to ``1 + max|M|``."""
    m = np.asarray(m)
    return float(np.max(np.abs(m - dag(m)), initial=0.0) / (1.0 + np.max(np.abs(m), initial=0.0)))


def hermitian(m, rtol=HERMITIAN_RTOL):
    """Validate that ``m`` is Hermitian and return its symmetrized copy.

    Raises:
        NotHermitianError: if ``max|M - M^dagger| > rtol * (1 + max|M|)``.
    """
    m = as_matrix(m)
    res = hermiticity_residual(m)
    if res > rtol:
        raise NotHermitianError(f"matrix is not Hermitian (relative residual {res:.3e} > {rtol:g})", residual=res)
    return _frozen(0.5 * (m + dag(m)))


def density_matrix(m, tol=STATE_TOL):
    """Validate a density operator: Hermitian, PSD and unit trace."""
    rho = hermitian(m)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise NotDensityMatrixError(f"trace is {tr!r}, expected 1")
    lam_min = np.linalg.eigvalsh(rho)[0]
    if lam_min < -tol:
        raise NotDensityMatrixError(f"minimum eigenvalue {lam_min:.3e} is negative")
    return rho


def vec(m):
    """Column-stacking vectorization; works on stacks ``(..., d, d)``."""
    m = np.asarray(m)
    return np.swapaxes(m, -1, -2).reshape(*m.shape[:-2], -1)


def unvec(v, d=None):
    v = np.asarray(v)
    if d is None:
        d = int(round(np.sqrt(v.shape[-1])))
    if d * d != v.shape[-1]:
        raise DimensionError(f"vector of length {v.shape[-1]} is not a vectorized square matrix")
    return np.swapaxes(v.reshape(*v.shape[:-1], d, d), -1, -2)


def commutator(a, b):
    return a @ b - b @ a


def anticommutator(a, b):
    return a @ b + b @ a


def tensor_product(a, b):
    """Kronecker product with the first factor as the major index."""
    return np.kron(as_matrix(a, square=False), as_matrix(b, square=False))


def partial_trace(m, subsystem, d_A, d_B):
    """Trace out subsystem ``"A"`` or ``"B"`` of an operator on ``C^d_A (x) C^d_B``."""
    m = np.asarray(m, dtype=complex)
    n = d_A * d_B
    if m.shape != (n, n):
        raise DimensionError(f"operator of shape {m.shape} does not act on {d_A}x{d_B} = {n} dimensions")
    t = m.reshape(d_A, d_B, d_A, d_B)
    if subsystem == "B":
        return np.einsum("ajbj->ab", t)
    if subsystem == "A":
        return np.einsum("iaib->ab", t)
    raise ValueError(f"subsystem must be 'A' or 'B', got {subsystem!r}")


def swap_operator(d):
    """SWAP on ``C^d (x) C^d``."""
    s = np.zeros((d, d, d, d))
    idx = np.arange(d)
    s[idx[:, None], idx[None, :], idx[None, :], idx[:, None]] = 1.0
    return s.reshape(d * d, d * d).astype(complex)


class Evolution:
    """Unitary evolution ``exp(-i h t)`` from one cached eigendecomposition.

    The eigenbasis is computed once, so evaluating many times on a grid costs
    one matrix product per time.
    """

    def __init__(self, h):
        self.h = hermitian(h)
        try:
            self.energies, self.basis = np.linalg.eigh(self.h)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(f"eigendecomposition failed: {exc}") from exc

    @property
    def dim(self):
        return self.h.shape[0]

    def at(self, t):
        phases = np.exp(-1j * self.energies * t)
        return (self.basis * phases) @ dag(self.basis)

    def conjugate(self, m, t):
        """``exp(i h t) m exp(-i h t)``, the Heisenberg-picture rotation."""
        u = self.at(t)
        return dag(u) @ m @ u


def propagator(h, t):
    """Return ``exp(-i h t)`` for Hermitian ``h``."""
    return Evolution(h).at(t)


def traceless_basis(d):
    """Traceless Hermitian basis with ``tr(H_j H_k) = d(d+1)/2 * delta_jk``.

    Generalized Gell-Mann matrices (symmetric and antisymmetric off-diagonal
    pairs in row-major order, then the diagonal ones), each rescaled from the
    usual ``tr(G^2) = 2`` normalization.

    Returns:
        Array of shape ``(d*d - 1, d, d)``.
    """
    if d < 2:
        raise ValueError("traceless basis needs d >= 2")
    mats = []
    for j in range(d):
        for k in range(j + 1, d):
            s = np.zeros((d, d), complex)
            s[j, k] = s[k, j] = 1.0
            a = np.zeros((d, d), complex)
            a[j, k] = -1j
            a[k, j] = 1j
            mats += [s, a]
    for l in range(1, d):
        g = np.zeros((d, d), complex)
        g[np.arange(l), np.arange(l)] = 1.0
        g[l, l] = -l
        mats.append(np.sqrt(2.0 / (l * (l + 1))) * g)
    basis = np.array(mats) * np.sqrt(d * (d + 1) / 4.0)
    basis.flags.writeable = False
    return basis


def random_hermitian(d, rng, scale=1.0, traceless=False):
    """GUE-like random Hermitian matrix, normalized to unit spectral radius times ``scale``."""
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = 0.5 * (g + dag(g))
    if traceless:
        h -= np.trace(h) / d * np.eye(d)
    return scale * h / np.max(np.abs(np.linalg.eigvalsh(h)))


def random_density_matrix(d, rng, rank=None):
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ dag(g)
    return rho / np.trace(rho).real
