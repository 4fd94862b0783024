import numpy as np
import pytest
from conftest import SM, SX, SY, SZ
from hypothesis import given, settings
from hypothesis import strategies as st

from canonham.canonical import random_hpta
from canonham.errors import DimensionError, NotHPTAError
from canonham.superop import (
    Superoperator,
    adjoint,
    conjugation,
    from_choi,
    from_hamiltonian,
    from_lindblad,
    is_completely_positive,
    is_hpta,
    pseudo_kraus,
    require_hpta,
    to_choi,
)


def test_from_hamiltonian_examples():
    assert np.allclose(from_hamiltonian(np.zeros((2, 2))).rep, 0)
    phi = from_hamiltonian(SZ)
    assert np.allclose(phi(SX), 2 * SY)
    assert np.allclose(phi(SZ), 0)
    assert is_hpta(phi)


def test_from_lindblad_examples():
    ad = from_lindblad(np.zeros((2, 2)), [(1.0, SM)])
    assert np.allclose(ad(np.diag([0, 1])), np.diag([1, -1]))
    dep = from_lindblad(np.zeros((2, 2)), [(1.0, p) for p in (SX, SY, SZ)])
    assert np.allclose(dep(SZ), -4 * SZ)
    assert np.allclose(from_lindblad(SZ, []).rep, from_hamiltonian(SZ).rep)


def test_from_lindblad_matches_direct_action(rng):
    s, h, terms = random_hpta(3, rng)
    m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    direct = -1j * (h @ m - m @ h)
    for g, l in terms:
        k = l.conj().T @ l
        direct += g * (l @ m @ l.conj().T - 0.5 * (k @ m + m @ k))
    assert np.allclose(s(m), direct)


def test_from_lindblad_rejects_bad_dims():
    with pytest.raises(DimensionError):
        from_lindblad(SZ, [(1.0, np.eye(3))])


def test_choi_examples():
    phi = np.eye(2).reshape(-1)
    assert np.allclose(to_choi(Superoperator.identity(2)), np.outer(phi, phi))
    for d in (2, 3):
        depol = Superoperator.from_function(lambda m: np.trace(m) * np.eye(d) / d, d)
        assert np.allclose(to_choi(depol), np.eye(d * d) / d)


def test_choi_definition_and_round_trip(rng):
    s, _, _ = random_hpta(3, rng)
    d = 3
    choi = sum(
        np.kron(s(np.outer(np.eye(d)[a], np.eye(d)[b])), np.outer(np.eye(d)[a], np.eye(d)[b]))
        for a in range(d)
        for b in range(d)
    )
    assert np.allclose(to_choi(s), choi)
    assert np.max(np.abs(from_choi(to_choi(s)).rep - s.rep)) < 1e-12
    with pytest.raises(DimensionError):
        from_choi(np.eye(5))


def test_adjoint_trace_identity(rng):
    s = Superoperator(rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9)))
    sa = adjoint(s)
    for a in range(3):
        for b in range(3):
            x = np.zeros((3, 3))
            x[a, b] = 1
            y = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
            lhs = np.trace(sa(x).conj().T @ y)
            rhs = np.trace(x.conj().T @ s(y))
            assert abs(lhs - rhs) < 1e-12


def test_adjoint_of_pseudo_kraus_swaps_operators(rng):
    e = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    s = conjugation(e, 0.7)
    assert np.allclose(adjoint(s).rep, conjugation(e.conj().T, 0.7).rep)


def test_is_hpta_examples(rng):
    s, _, _ = random_hpta(2, rng)
    assert is_hpta(s)
    ident = is_hpta(Superoperator.identity(2))
    assert not ident and ident.hermiticity_preserving and not ident.trace_annihilating
    depol = Superoperator.from_function(lambda m: np.trace(m) * np.eye(2) / 2 - m, 2)
    assert is_hpta(depol)
    with pytest.raises(NotHPTAError) as info:
        require_hpta(Superoperator.identity(2))
    assert info.value.trace_residual > 0


def test_pseudo_kraus_examples():
    pk = pseudo_kraus(conjugation(SX))
    assert len(pk) == 1 and np.isclose(pk.weights[0], 2)
    assert np.allclose(pk.to_superoperator().rep, conjugation(SX).rep)
    pk = pseudo_kraus(from_hamiltonian(SZ))
    assert np.allclose(sorted(pk.weights), [-2, 2])
    assert np.max(np.abs(pk.to_superoperator().rep - from_hamiltonian(SZ).rep)) < 1e-12
    assert len(pseudo_kraus(Superoperator.zero(2))) == 0


def test_pseudo_kraus_rejects_non_hermitian_choi():
    s = Superoperator(np.diag([1, 1j, 0, 0]))
    with pytest.raises(NotHPTAError) as info:
        pseudo_kraus(s)
    assert info.value.hermiticity_residual > 0


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.sampled_from([2, 3]))
def test_pseudo_kraus_reconstruction(seed, d):
    s, _, _ = random_hpta(d, np.random.default_rng(seed))
    pk = pseudo_kraus(s)
    assert np.max(np.abs(pk.to_superoperator().rep - s.rep)) < 1e-10
    # trace annihilation shows up as sum g E^dag E = 0
    assert np.max(np.abs(pk.trace_condition())) < 1e-10
    gram = np.einsum("jab,kab->jk", pk.operators.conj(), pk.operators)
    assert np.allclose(gram, np.eye(len(pk)), atol=1e-10)


def test_complete_positivity():
    assert is_completely_positive(conjugation(SX))
    assert not is_completely_positive(from_hamiltonian(SZ))


def test_superoperator_algebra(rng):
    a = Superoperator(rng.normal(size=(4, 4)))
    b = Superoperator(rng.normal(size=(4, 4)))
    m = rng.normal(size=(2, 2))
    assert np.allclose((a @ b)(m), a(b(m)))
    assert np.allclose((a + b)(m), a(m) + b(m))
    assert np.allclose((2 * a - b)(m), 2 * a(m) - b(m))
    assert np.allclose(a(np.stack([m, m]))[1], a(m))
    with pytest.raises(AttributeError):
        a.rep = None
    with pytest.raises(ValueError):
        a.rep[0, 0] = 1
    with pytest.raises(DimensionError):
        a @ Superoperator.identity(3)
