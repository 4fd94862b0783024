"""Canonical Hamiltonian and minimal dissipator of an HPTA generator.

The space of HPTA superoperators splits orthogonally into Hamiltonian maps
``M -> -i[H, M]`` and their complement.  Projecting a generator onto the
Hamiltonian part picks out the Hamiltonian whose dissipator has the smallest
Haar-averaged norm; the dissipator left over is the unique one with
traceless jump operators.

Everything here is a pure function of immutable inputs.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionError
from .haar import fourth_moment_contract_permutation, mc_average
from .operators import dag, hermitian, random_hermitian, traceless_basis
from .superop import (
    HPTA_TOL,
    RANK_TOL,
    Superoperator,
    adjoint,
    from_hamiltonian,
    from_lindblad,
    lindblad_term,
    pseudo_kraus,
    require_hpta,
)

MARKOV_TOL = 1e-9


class InnerProduct(str, Enum):
    AVG = "avg"
    HS = "hs"
    CHOI_HS = "choi_hs"


def _images(s):
    """``out[a, b] = s(|a><b|)`` as an array of shape ``(d, d, d, d)``."""
    d = s.d
    # rep columns are indexed b*d + a and hold column-stacked images
    cols = s.rep.T.reshape(d, d, d, d)  # [b, a, j, i] with image[i, j]
    return cols.transpose(1, 0, 3, 2)


def _same_dim(m, n):
    if m.d != n.d:
        raise DimensionError(f"dimension mismatch: {m.d} vs {n.d}")


def avg_inner_product(m, n):
    """Exact Haar-averaged inner product ``<m, n>_avg``.

    The defining average over a random pure state ``phi`` and a random
    probe ``psi`` reduces to ``(1/d) E_phi tr[m(phi) n(phi)]``, and for pure
    states ``E[phi (x) phi] = (I + SWAP)/(d(d+1))``.
    """
    _same_dim(m, n)
    d = m.d
    a, b = _images(m), _images(n)
    eye = np.eye(d)
    direct = np.trace(m(eye) @ n(eye))
    exchange = np.einsum("abij,baji->", a, b)
    return float(np.real(direct + exchange) / (d * d * (d + 1)))


def avg_inner_product_permutation(m, n, reference=0):
    """``<m, n>_avg`` through the explicit four-permutation Haar formula.

    Independent of :func:`avg_inner_product`; costs ``O(d^8)``.
    """
    _same_dim(m, n)
    d = m.d
    a, b = _images(m), _images(n)
    table = np.einsum("acij,beji->acbe", a, b)
    return float(np.real(fourth_moment_contract_permutation(table, d, reference)) / d)


def hs_inner_product(m, n):
    """``tr(m* o n)`` over operator space."""
    _same_dim(m, n)
    return float(np.real(np.trace(dag(m.rep) @ n.rep)))


def choi_hs_inner_product(m, n):
    """``tr(Choi(m)^dag Choi(n))``."""
    _same_dim(m, n)
    return float(np.real(np.trace(dag(m.choi) @ n.choi)))


_INNER = {
    InnerProduct.AVG: avg_inner_product,
    InnerProduct.HS: hs_inner_product,
    InnerProduct.CHOI_HS: choi_hs_inner_product,
}


def inner_product(m, n, kind=InnerProduct.AVG):
    return _INNER[InnerProduct(kind)](m, n)


def avg_norm(s):
    return float(np.sqrt(max(avg_inner_product(s, s), 0.0)))


def _traceless(h):
    d = h.shape[0]
    return h - np.trace(h) / d * np.eye(d)


def kraus_free_contraction(s):
    """``A[b, c] = sum_a <a| s(|a><b|) |c>``.

    For ``s(M) = sum_j g_j E_j M E_j^dag`` this equals ``sum_j g_j tr(E_j) E_j^dag``.
    """
    return np.einsum("abac->bc", _images(s))


def canonical_hamiltonian(s, tol=HPTA_TOL):
    """Traceless canonical Hamiltonian of an HPTA generator.

    Computed as ``(A - A^dag) / (2 i d)`` from :func:`kraus_free_contraction`,
    which avoids any eigendecomposition.

    Raises:
        NotHPTAError: if ``s`` fails the HPTA check at ``tol``.
    """
    require_hpta(s, tol)
    a = kraus_free_contraction(s)
    h = (a - dag(a)) / (2j * s.d)
    return hermitian(_traceless(0.5 * (h + dag(h))))


def canonical_hamiltonian_kraus(s, rank_tol=RANK_TOL):
    """Same Hamiltonian from a pseudo-Kraus decomposition.

    ``H = (1/(2 i d)) sum_j g_j (tr(E_j) E_j^dag - tr(E_j^dag) E_j)``.
    """
    pk = pseudo_kraus(s, rank_tol)
    d = s.d
    h = np.zeros((d, d), complex)
    for g, e in zip(pk.weights, pk.operators):
        tr = np.trace(e)
        h += g * (tr * dag(e) - np.conj(tr) * e)
    h /= 2j * d
    return _traceless(0.5 * (h + dag(h)))


def projected_hamiltonian(s, kind=InnerProduct.AVG, inner=None):
    """Hamiltonian of the orthogonal projection of ``s`` onto Hamiltonian maps.

    Solves the Gram system over the traceless basis for the chosen inner
    product (or a custom ``inner(m, n)``), without assuming the basis is
    orthonormal for it.
    """
    inner = inner or _INNER[InnerProduct(kind)]
    basis = traceless_basis(s.d)
    phis = [from_hamiltonian(h) for h in basis]
    gram = np.array([[inner(p, q) for q in phis] for p in phis])
    rhs = np.array([inner(p, s) for p in phis])
    coef = np.linalg.solve(gram, rhs)
    return np.einsum("j,jab->ab", coef, basis)


def canonical_dissipator(s, tol=HPTA_TOL):
    return s - from_hamiltonian(canonical_hamiltonian(s, tol))


def _traceless_projector(d):
    phi = np.eye(d).reshape(-1)
    return np.eye(d * d) - np.outer(phi, phi) / d


def kossakowski_matrix(s):
    """Choi matrix compressed onto traceless operators: ``P Choi(s) P``.

    Its eigenvectors are traceless jump operators of the canonical
    dissipator, and its eigenvalues the corresponding rates.
    """
    p = _traceless_projector(s.d)
    k = p @ s.choi @ p
    return 0.5 * (k + dag(k))


@dataclass(frozen=True)
class CanonicalDecomposition:
    """``s = -i[hamiltonian, .] + sum_j rates[j] (L_j . L_j^dag - {L_j^dag L_j, .}/2)``
    with traceless ``hamiltonian`` and traceless ``jumps[j]``."""

    hamiltonian: np.ndarray
    rates: np.ndarray
    jumps: np.ndarray
    d: int
    method: str = "minimal"

    @property
    def jump_terms(self):
        return list(zip(self.rates.tolist(), self.jumps))

    def dissipator(self):
        rep = np.zeros((self.d ** 2, self.d ** 2), complex)
        for g, l in zip(self.rates, self.jumps):
            rep += lindblad_term(g, l)
        return Superoperator(rep)

    def reassemble(self):
        return from_hamiltonian(self.hamiltonian) + self.dissipator()


def canonicalize(s, rank_tol=RANK_TOL, jumps="minimal", tol=HPTA_TOL):
    """Split an HPTA generator into canonical Hamiltonian and traceless-jump dissipator.

    Args:
        s: HPTA superoperator.
        rank_tol: relative cutoff for discarding rates, measured against the
            largest Choi eigenvalue of ``s``.
        jumps: ``"minimal"`` diagonalizes the Choi matrix compressed onto
            traceless operators, giving the fewest terms (rates are
            nonnegative exactly when ``s`` is Markovian).
            ``"pseudo_kraus"`` keeps the raw pseudo-Kraus weights of ``s`` and
            shifts each ``E_j`` to ``E_j - tr(E_j)/d``; the rates are then
            sign-indefinite even for Markovian generators.
    """
    h = canonical_hamiltonian(s, tol)
    d = s.d
    if jumps == "pseudo_kraus":
        pk = pseudo_kraus(s, rank_tol)
        rates = pk.weights
        ops = pk.operators - np.einsum("jaa->j", pk.operators)[:, None, None] / d * np.eye(d)
    elif jumps == "minimal":
        scale = np.max(np.abs(np.linalg.eigvalsh(0.5 * (s.choi + dag(s.choi)))), initial=0.0)
        gammas, vecs = np.linalg.eigh(kossakowski_matrix(s))
        keep = np.abs(gammas) > rank_tol * scale
        order = np.argsort(-gammas[keep])
        rates = gammas[keep][order]
        ops = vecs[:, keep][:, order].T.reshape(-1, d, d)
        ops = ops - np.einsum("jaa->j", ops)[:, None, None] / d * np.eye(d)
    else:
        raise ValueError(f"unknown jump method {jumps!r}")
    return CanonicalDecomposition(h, np.asarray(rates, float), np.asarray(ops, complex), d, jumps)


def canonical_rates(s):
    """All ``d^2 - 1`` canonical rates (compressed Choi eigenvalues), sorted descending.

    The compression annihilates ``vec(I)``; that null direction is dropped.
    """
    vals, vecs = np.linalg.eigh(kossakowski_matrix(s))
    phi = np.eye(s.d).reshape(-1) / np.sqrt(s.d)
    drop = int(np.argmax(np.abs(vecs.conj().T @ phi)))
    return np.sort(np.delete(vals, drop))[::-1]


def markovianity_check(s, tol=MARKOV_TOL):
    """True iff ``s`` admits a traceless-jump Lindblad form with nonnegative rates.

    Equivalently the compressed Choi matrix is PSD; eigenvalues down to
    ``-tol * max|eig|`` are accepted.
    """
    require_hpta(s)
    vals = np.linalg.eigvalsh(kossakowski_matrix(s))
    top = np.max(np.abs(vals))
    return bool(top == 0.0 or vals[0] >= -tol * top)


def psi_map(s, m):
    """``Psi(M) = s*(M) - B M - M B^dag`` with ``B = int dU s*(U^dag) U``.

    The Haar integral is exact: ``B = A / d`` with ``A`` from
    :func:`kraus_free_contraction`.  The third term uses ``M`` itself (the
    positive-argument reading, where ``M^dag = M``).
    """
    require_hpta(s)
    b = kraus_free_contraction(s) / s.d
    m = np.asarray(m, complex)
    return adjoint(s)(m) - b @ m - m @ dag(b)


def psi_superoperator(s):
    return Superoperator.from_function(lambda m: psi_map(s, m), s.d)


def lindblad_haar_hamiltonian_mc(s, sampler, n_samples):
    """Monte Carlo estimate of ``(1/2i) int dU (U^dag s(U) - s(U^dag) U)``, trace removed.

    Returns:
        ``(H, stderr)`` where ``stderr`` is complex, real and imaginary parts
        giving the standard errors of the real and imaginary parts of ``H``.
    """
    require_hpta(s)
    d = s.d
    eye = np.eye(d)

    def estimand(us):
        h = (dag(us) @ s(us) - s(dag(us)) @ us) / 2j
        tr = np.einsum("naa->n", h)
        return h - tr[:, None, None] / d * eye

    return mc_average(sampler, n_samples, estimand, vectorized=True)


def avg_inner_product_mc(m, n, sampler, n_samples, reference=None):
    """Monte Carlo estimate of ``<m, n>_avg`` straight from its definition.

    A pair of independent unitaries ``(U, V)`` is drawn per sample; the state
    is ``U|ref>``, the probe ``V|ref>``.  ``reference`` defaults to ``|0>``.

    Returns:
        ``(mean, stderr)`` of the real part.
    """
    _same_dim(m, n)
    d = m.d
    ref = np.zeros(d, complex)
    if reference is None:
        ref[0] = 1.0
    else:
        ref = np.asarray(reference, complex)
        ref = ref / np.linalg.norm(ref)
    probe_sampler = sampler.spawn(1)

    def estimand(us):
        vs = probe_sampler.sample_batch(len(us))
        phi = us @ ref
        psi = vs @ ref
        rho = phi[:, :, None] * phi.conj()[:, None, :]
        prod = m(rho) @ n(rho)
        return np.real(np.einsum("ni,nij,nj->n", psi.conj(), prod, psi))

    return mc_average(sampler, n_samples, estimand, vectorized=True)


def gauge_shift(h, terms, alphas):
    """Shift jumps ``L_j -> L_j - a_j I`` and compensate the Hamiltonian.

    ``H -> H + sum_j g_j/(2i) (a_j L_j^dag - conj(a_j) L_j)`` keeps the
    generator unchanged.
    """
    h = np.array(h, complex)
    d = h.shape[0]
    new_terms = []
    for (g, l), a in zip(terms, alphas):
        l = np.asarray(l, complex)
        h = h + g / 2j * (a * dag(l) - np.conj(a) * l)
        new_terms.append((g, l - a * np.eye(d)))
    return 0.5 * (h + dag(h)), new_terms


@dataclass(frozen=True)
class MinimalityReport:
    squared_norm: float
    max_pythagorean_residual: float
    max_orthogonality_residual: float
    oracle_hamiltonian_residual: float
    trials: int
    rtol: float
    orth_tol: float

    @property
    def passed(self):
        return (
            self.max_pythagorean_residual <= self.rtol
            and self.max_orthogonality_residual <= self.orth_tol
            and self.oracle_hamiltonian_residual <= self.rtol
        )


def pythagorean_residuals(dissipator, g):
    """Relative Pythagorean defect and scaled orthogonality for ``D`` and ``Phi_G``."""
    phi_g = from_hamiltonian(g)
    dd = avg_inner_product(dissipator, dissipator)
    gg = avg_inner_product(phi_g, phi_g)
    total = avg_inner_product(dissipator + phi_g, dissipator + phi_g)
    pyth = abs(total - dd - gg) / max(total, np.finfo(float).tiny)
    orth = abs(avg_inner_product(dissipator, phi_g)) / max(1.0, np.sqrt(dd * gg))
    return pyth, orth


def minimality_certificate(s, trials=100, rng=None, rtol=1e-8, orth_tol=1e-10):
    """Certify that the canonical dissipator has minimal average norm.

    For ``trials`` random traceless Hermitian ``G``, checks
    ``||D + Phi_G||^2 = ||D||^2 + ||Phi_G||^2`` and ``<D, Phi_G> = 0``.  As an
    independent oracle, the quadratic ``||s - Phi_H||^2`` is minimized over
    the traceless basis by normal equations built from the four-permutation
    Haar formula; the minimizer must match the canonical Hamiltonian.
    """
    rng = np.random.default_rng(rng)
    h = canonical_hamiltonian(s)
    dis = s - from_hamiltonian(h)
    pyth = orth = 0.0
    for _ in range(trials):
        g = random_hermitian(s.d, rng, scale=rng.uniform(0.1, 2.0), traceless=True)
        p, o = pythagorean_residuals(dis, g)
        pyth, orth = max(pyth, p), max(orth, o)
    h_oracle = projected_hamiltonian(s, inner=avg_inner_product_permutation)
    oracle_res = float(np.max(np.abs(h_oracle - h)) / max(1.0, np.max(np.abs(h))))
    return MinimalityReport(
        avg_inner_product(dis, dis), float(pyth), float(orth), oracle_res, trials, rtol, orth_tol
    )


@dataclass(frozen=True)
class ProjectionReport:
    hamiltonians: dict
    max_discrepancy: float
    tol: float

    @property
    def passed(self):
        return self.max_discrepancy <= self.tol


def projection_equivalence(s, tol=1e-10):
    """Project ``s`` onto Hamiltonian maps under all three inner products and compare.

    The canonical (contraction-formula) Hamiltonian is included as a fourth
    entry; ``max_discrepancy`` is the largest entrywise difference.
    """
    hams = {kind.value: projected_hamiltonian(s, kind) for kind in InnerProduct}
    hams["contraction"] = np.asarray(canonical_hamiltonian(s))
    vals = list(hams.values())
    disc = max(float(np.max(np.abs(a - b))) for a in vals for b in vals)
    return ProjectionReport(hams, disc, tol)


def random_hpta(d, rng, n_terms=None, scale=1.0, markovian=False):
    """Random HPTA generator: a Hamiltonian part plus Lindblad terms with generic jumps.

    Rates are of mixed sign unless ``markovian``; jumps are not traceless, so
    the presented Hamiltonian is not canonical.
    """
    n_terms = d * d if n_terms is None else n_terms
    h = random_hermitian(d, rng, scale)
    terms = []
    for _ in range(n_terms):
        l = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) * scale / np.sqrt(2 * d)
        rate = rng.uniform(0.1, 1.0) if markovian else rng.uniform(-1.0, 1.0)
        terms.append((rate, l))
    return from_lindblad(h, terms), h, terms
