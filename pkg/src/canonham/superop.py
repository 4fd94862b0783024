"""Superoperators on B(H): matrix and Choi forms, Lindblad construction, pseudo-Kraus.

A :class:`Superoperator` stores the ``d^2 x d^2`` matrix acting on
column-stacked operators.  The Choi matrix uses the output-factor-first
convention ``Choi(L) = sum_ab L(|a><b|) (x) |a><b|``, so an operator ``E``
appears in the Choi spectrum as its row-major flattening.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NotHPTAError
from .operators import as_matrix, dag, hermitian, unvec, vec

HPTA_TOL = 1e-10
RANK_TOL = 1e-10


def _rep_to_choi(rep, d):
    return rep.reshape(d, d, d, d).transpose(1, 3, 0, 2).reshape(d * d, d * d)


def _choi_to_rep(choi, d):
    return choi.reshape(d, d, d, d).transpose(2, 0, 3, 1).reshape(d * d, d * d)


class Superoperator:
    """Linear map on ``d x d`` operators.

    Instances are immutable; arithmetic returns new objects.  ``s(m)`` applies
    the map to an operator or to a stack of operators of shape ``(..., d, d)``.
    """

    __slots__ = ("d", "rep", "choi")

    def __init__(self, rep):
        rep = as_matrix(rep)
        d = int(round(np.sqrt(rep.shape[0])))
        if d * d != rep.shape[0]:
            raise DimensionError(f"superoperator matrix of size {rep.shape[0]} is not d^2 x d^2")
        rep.flags.writeable = False
        choi = _rep_to_choi(rep, d).copy()
        choi.flags.writeable = False
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "rep", rep)
        object.__setattr__(self, "choi", choi)

    def __setattr__(self, name, value):
        raise AttributeError("Superoperator is immutable")

    @classmethod
    def from_function(cls, f, d):
        """Tabulate a linear map given as a Python callable on ``d x d`` matrices."""
        rep = np.empty((d * d, d * d), complex)
        for b in range(d):
            for a in range(d):
                e = np.zeros((d, d), complex)
                e[a, b] = 1.0
                rep[:, b * d + a] = vec(np.asarray(f(e)))
        return cls(rep)

    @classmethod
    def identity(cls, d):
        return cls(np.eye(d * d))

    @classmethod
    def zero(cls, d):
        return cls(np.zeros((d * d, d * d)))

    def __call__(self, m):
        m = np.asarray(m)
        if m.shape[-2:] != (self.d, self.d):
            raise DimensionError(f"operand of shape {m.shape} does not match d={self.d}")
        return unvec(vec(m) @ self.rep.T, self.d)

    def _check(self, other):
        if not isinstance(other, Superoperator):
            return NotImplemented
        if other.d != self.d:
            raise DimensionError(f"dimension mismatch: {self.d} vs {other.d}")
        return other

    def __matmul__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Superoperator(self.rep @ other.rep)

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Superoperator(self.rep + other.rep)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Superoperator(self.rep - other.rep)

    def __neg__(self):
        return Superoperator(-self.rep)

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        return Superoperator(c * self.rep)

    __rmul__ = __mul__

    def adjoint(self):
        return adjoint(self)

    def norm(self):
        """Frobenius norm of the matrix representation."""
        return float(np.linalg.norm(self.rep))

    def __repr__(self):
        return f"Superoperator(d={self.d})"


def from_hamiltonian(h):
    """The map ``M -> -i[h, M]``."""
    h = hermitian(h)
    eye = np.eye(h.shape[0])
    return Superoperator(-1j * (np.kron(eye, h) - np.kron(h.T, eye)))


def lindblad_term(rate, jump):
    """Matrix of ``M -> rate * (L M L^dag - {L^dag L, M}/2)``."""
    jump = as_matrix(jump)
    eye = np.eye(jump.shape[0])
    k = dag(jump) @ jump
    return rate * (np.kron(jump.conj(), jump) - 0.5 * (np.kron(eye, k) + np.kron(k.T, eye)))


def from_lindblad(h, terms=()):
    """Generator ``-i[h, .] + sum_j g_j (L_j . L_j^dag - {L_j^dag L_j, .}/2)``.

    Args:
        h: Hermitian operator (``d x d``).
        terms: iterable of ``(rate, jump_operator)`` pairs; rates are real and
            may be negative.
    """
    s = from_hamiltonian(h)
    rep = np.array(s.rep)
    for rate, jump in terms:
        jump = as_matrix(jump)
        if jump.shape != (s.d, s.d):
            raise DimensionError(f"jump operator of shape {jump.shape} does not match d={s.d}")
        if np.iscomplexobj(rate) and np.imag(rate) != 0:
            raise ValueError("Lindblad rates must be real")
        rep += lindblad_term(float(np.real(rate)), jump)
    return Superoperator(rep)


def conjugation(a, weight=1.0):
    """The map ``M -> weight * a M a^dag``."""
    a = as_matrix(a)
    return Superoperator(weight * np.kron(a.conj(), a))


def to_choi(s):
    return np.array(s.choi)


def from_choi(c):
    c = as_matrix(c)
    d = int(round(np.sqrt(c.shape[0])))
    if d * d != c.shape[0]:
        raise DimensionError(f"Choi matrix of size {c.shape[0]} is not d^2 x d^2")
    return Superoperator(_choi_to_rep(c, d))


def adjoint(s):
    """Adjoint w.r.t. the Hilbert-Schmidt product: ``tr(s*(A)^dag B) = tr(A^dag s(B))``."""
    return Superoperator(dag(s.rep))


@dataclass(frozen=True)
class HPTAReport:
    hermiticity_residual: float
    trace_residual: float
    tol: float

    @property
    def hermiticity_preserving(self):
        return self.hermiticity_residual <= self.tol

    @property
    def trace_annihilating(self):
        return self.trace_residual <= self.tol

    def __bool__(self):
        return self.hermiticity_preserving and self.trace_annihilating


def is_hpta(s, tol=HPTA_TOL):
    """Check hermiticity preservation (Choi Hermitian) and trace annihilation (``s*(I) = 0``).

    Residuals are max-entry norms relative to ``1 + max|rep|``.  The returned
    report is truthy iff both pass.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    scale = 1.0 + np.max(np.abs(s.rep))
    herm = np.max(np.abs(s.choi - dag(s.choi))) / scale
    trace = np.max(np.abs(adjoint(s)(np.eye(s.d)))) / scale
    return HPTAReport(float(herm), float(trace), tol)


def require_hpta(s, tol=HPTA_TOL):
    report = is_hpta(s, tol)
    if not report:
        raise NotHPTAError(
            f"superoperator is not HPTA (hermiticity residual {report.hermiticity_residual:.3e}, "
            f"trace residual {report.trace_residual:.3e}, tol {tol:g})",
            hermiticity_residual=report.hermiticity_residual,
            trace_residual=report.trace_residual,
        )
    return report


@dataclass(frozen=True)
class PseudoKrausDecomposition:
    """``s(M) = sum_j weights[j] * E_j M E_j^dag`` with real, possibly negative, weights.

    The ``E_j`` come from unit-norm Choi eigenvectors, so ``tr(E_j^dag E_k) = delta_jk``.
    """

    weights: np.ndarray
    operators: np.ndarray
    d: int = field(default=0)

    def __len__(self):
        return len(self.weights)

    def to_superoperator(self):
        rep = np.zeros((self.d ** 2, self.d ** 2), complex)
        for g, e in zip(self.weights, self.operators):
            rep += g * np.kron(e.conj(), e)
        return Superoperator(rep)

    def trace_condition(self):
        """``sum_j g_j E_j^dag E_j``; vanishes iff the source is trace-annihilating."""
        return np.einsum("j,jki,jkl->il", self.weights, self.operators.conj(), self.operators)


def pseudo_kraus(s, rank_tol=RANK_TOL, herm_tol=HPTA_TOL):
    """Pseudo-Kraus decomposition from the Choi eigendecomposition.

    Eigenpairs with ``|g| <= rank_tol * max|g|`` are discarded; the zero map
    gives an empty decomposition.

    Raises:
        NotHPTAError: if the Choi matrix is not Hermitian (the map is not
            hermiticity-preserving); carries the residual.
    """
    choi = s.choi
    res = float(np.max(np.abs(choi - dag(choi))) / (1.0 + np.max(np.abs(s.rep))))
    if res > herm_tol:
        raise NotHPTAError(
            f"Choi matrix is not Hermitian (residual {res:.3e}); map is not hermiticity-preserving",
            hermiticity_residual=res,
        )
    d = s.d
    gammas, vecs = np.linalg.eigh(0.5 * (choi + dag(choi)))
    top = np.max(np.abs(gammas))
    if top == 0.0:
        return PseudoKrausDecomposition(np.zeros(0), np.zeros((0, d, d), complex), d)
    keep = np.abs(gammas) > rank_tol * top
    order = np.argsort(-gammas[keep])
    weights = gammas[keep][order]
    ops = vecs[:, keep][:, order].T.reshape(-1, d, d)
    return PseudoKrausDecomposition(weights, ops, d)


def is_completely_positive(s, tol=RANK_TOL):
    """``s`` is CP iff all Choi eigenvalues are >= ``-tol * max|eig|``."""
    gammas = np.linalg.eigvalsh(0.5 * (s.choi + dag(s.choi)))
    top = np.max(np.abs(gammas))
    return bool(top == 0.0 or gammas[0] >= -tol * top)
