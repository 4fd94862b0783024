import numpy as np
import pytest
from conftest import SM, SP, SX, SY, SZ
from hypothesis import given, settings
from hypothesis import strategies as st

from canonham.canonical import (
    InnerProduct,
    avg_inner_product,
    avg_inner_product_mc,
    avg_inner_product_permutation,
    avg_norm,
    canonical_dissipator,
    canonical_hamiltonian,
    canonical_hamiltonian_kraus,
    canonical_rates,
    canonicalize,
    choi_hs_inner_product,
    gauge_shift,
    hs_inner_product,
    inner_product,
    kraus_free_contraction,
    lindblad_haar_hamiltonian_mc,
    markovianity_check,
    minimality_certificate,
    projected_hamiltonian,
    projection_equivalence,
    psi_map,
    psi_superoperator,
    random_hpta,
)
from canonham.errors import DimensionError, NotHPTAError
from canonham.haar import HaarSampler
from canonham.operators import anticommutator, commutator, random_hermitian
from canonham.superop import Superoperator, adjoint, from_hamiltonian, from_lindblad, pseudo_kraus

Z2 = np.zeros((2, 2))


def traceless_dissipator(d, rng, n=3, rates=None):
    terms = []
    for j in range(n):
        l = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        l -= np.trace(l) / d * np.eye(d)
        terms.append((1.0 if rates is None else rates[j], l))
    return from_lindblad(np.zeros((d, d)), terms)


def test_avg_inner_product_examples():
    assert np.isclose(avg_inner_product(from_hamiltonian(SZ), from_hamiltonian(SZ)), 2 / 3)
    assert abs(avg_inner_product(from_hamiltonian(SZ), from_hamiltonian(SX))) < 1e-15
    assert avg_inner_product(Superoperator.zero(2), from_hamiltonian(SZ)) == 0.0
    assert np.isclose(avg_norm(from_hamiltonian(SZ)) ** 2, 2 / 3)


def test_avg_inner_product_symmetric_and_matches_permutation(rng):
    for d in (2, 3):
        m, _, _ = random_hpta(d, rng)
        n, _, _ = random_hpta(d, rng)
        a = avg_inner_product(m, n)
        assert np.isclose(a, avg_inner_product(n, m), rtol=1e-12)
        assert np.isclose(a, avg_inner_product_permutation(m, n), rtol=1e-12, atol=1e-14)
        assert np.isclose(a, avg_inner_product_permutation(m, n, reference=d - 1), rtol=1e-12, atol=1e-14)
    with pytest.raises(DimensionError):
        avg_inner_product(m, from_hamiltonian(SZ))


def test_avg_inner_product_mc(rng):
    m, _, _ = random_hpta(2, rng)
    est, se = avg_inner_product_mc(m, m, HaarSampler(2, 3), 50000)
    assert abs(est - avg_inner_product(m, m)) <= 4 * se


def test_hs_and_choi_hs_examples(rng):
    phi = from_hamiltonian(SZ)
    assert np.isclose(hs_inner_product(phi, phi), 8)
    assert np.isclose(choi_hs_inner_product(phi, phi), 8)
    zero = Superoperator.identity(2) - Superoperator.identity(2)
    assert hs_inner_product(zero, phi) == 0 and choi_hs_inner_product(zero, phi) == 0


def test_hamiltonian_inner_product_constants(rng):
    # avg: 2/(d(d+1)) tr(H1 H2); HS and Choi-HS: 2d tr(H1 H2)
    for d in (2, 3, 4):
        h1 = random_hermitian(d, rng, traceless=True)
        h2 = random_hermitian(d, rng, traceless=True)
        p1, p2 = from_hamiltonian(h1), from_hamiltonian(h2)
        t = np.trace(h1 @ h2).real
        assert np.isclose(avg_inner_product(p1, p2), 2 / (d * (d + 1)) * t, rtol=1e-10, atol=1e-14)
        assert np.isclose(hs_inner_product(p1, p2), 2 * d * t, rtol=1e-10, atol=1e-13)
        assert np.isclose(choi_hs_inner_product(p1, p2), 2 * d * t, rtol=1e-10, atol=1e-13)
        s, _, _ = random_hpta(d, rng)
        for kind in InnerProduct:
            assert np.isclose(inner_product(s, s, kind), inner_product(s, s, kind.value))


def test_canonical_hamiltonian_examples(rng):
    assert np.allclose(canonical_hamiltonian(from_hamiltonian(SZ)), SZ)
    dep = from_lindblad(Z2, [(1.0, p) for p in (SX, SY, SZ)])
    assert np.allclose(canonical_hamiltonian(dep), 0, atol=1e-15)
    s = from_lindblad(Z2, [(1.0, SM + 0.3 * np.eye(2))])
    expected = (0.3 / 2j) * (SP - SM)
    assert np.allclose(canonical_hamiltonian(s), expected, atol=1e-14)
    assert np.allclose(expected, [[0, 0.15j], [-0.15j, 0]])


def test_canonical_hamiltonian_rejects_non_hpta():
    with pytest.raises(NotHPTAError) as info:
        canonical_hamiltonian(Superoperator.identity(2))
    assert info.value.trace_residual > 0


def test_projection_idempotence(rng):
    for d in (2, 3, 4):
        h = random_hermitian(d, rng)
        out = canonical_hamiltonian(from_hamiltonian(h))
        assert np.allclose(out, h - np.trace(h) / d * np.eye(d), atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.sampled_from([2, 3, 4]))
def test_contraction_equals_kraus_form(seed, d):
    s, _, _ = random_hpta(d, np.random.default_rng(seed))
    h = canonical_hamiltonian(s)
    assert np.allclose(h, canonical_hamiltonian_kraus(s), atol=1e-10)
    assert abs(np.trace(h)) < 1e-12
    assert np.allclose(h, h.conj().T)


def test_kraus_free_contraction_formula(rng):
    s, _, _ = random_hpta(3, rng, n_terms=2)
    a = kraus_free_contraction(s)
    pk = pseudo_kraus(s)
    expected = sum(g * np.trace(e) * e.conj().T for g, e in zip(pk.weights, pk.operators))
    assert np.allclose(a, expected)


def test_canonicalize_examples():
    ad = from_lindblad(Z2, [(0.5, SM)])
    dec = canonicalize(ad)
    assert np.allclose(dec.hamiltonian, 0)
    assert np.allclose(dec.rates, [0.5])
    l = dec.jumps[0]
    phase = l[0, 1] / abs(l[0, 1])
    assert np.allclose(l / phase, SM)
    assert np.max(np.abs(dec.reassemble().rep - ad.rep)) < 1e-14

    dec = canonicalize(from_hamiltonian(SZ))
    assert np.allclose(dec.hamiltonian, SZ) and len(dec.rates) == 0

    shifted = from_lindblad(Z2, [(1.0, SM + 0.3 * np.eye(2))])
    dec = canonicalize(shifted)
    h_pred, _ = gauge_shift(Z2, [(1.0, SM + 0.3 * np.eye(2))], [0.3])
    assert np.allclose(dec.hamiltonian, h_pred, atol=1e-14)
    assert np.allclose(np.einsum("jaa->j", dec.jumps), 0, atol=1e-14)
    assert np.max(np.abs(dec.reassemble().rep - shifted.rep)) < 1e-13


@pytest.mark.parametrize("method", ["minimal", "pseudo_kraus"])
def test_canonicalize_reassembles(rng, method):
    for d in (2, 3):
        s, _, _ = random_hpta(d, rng)
        dec = canonicalize(s, jumps=method)
        assert np.max(np.abs(dec.reassemble().rep - s.rep)) < 1e-10
        assert np.allclose(np.einsum("jaa->j", dec.jumps), 0, atol=1e-12)
        assert np.allclose(dec.dissipator().rep, canonical_dissipator(s).rep, atol=1e-10)
    with pytest.raises(ValueError):
        canonicalize(s, jumps="other")


def test_pseudo_kraus_rates_are_sign_indefinite_for_markovian(rng):
    s, _, _ = random_hpta(2, rng, markovian=True)
    assert markovianity_check(s)
    assert canonicalize(s, jumps="pseudo_kraus").rates.min() < 0
    assert canonicalize(s).rates.min() >= -1e-12


def test_canonical_rates(rng):
    s, _, _ = random_hpta(3, rng, n_terms=3, markovian=True)
    r = canonical_rates(s)
    assert len(r) == 8 and np.all(np.diff(r) <= 1e-15)
    assert np.allclose(r[:3], canonicalize(s).rates)
    assert np.allclose(r[3:], 0, atol=1e-12)


def test_lindblad_haar_mc_examples(rng):
    h, se = lindblad_haar_hamiltonian_mc(Superoperator.zero(2), HaarSampler(2, 0), 1000)
    assert np.array_equal(h, np.zeros((2, 2))) and np.all(se == 0)
    dis = traceless_dissipator(2, rng)
    h, se = lindblad_haar_hamiltonian_mc(dis, HaarSampler(2, 1), 50000)
    assert np.all(np.abs(h.real) <= 4 * se.real + 1e-12)
    assert np.all(np.abs(h.imag) <= 4 * se.imag + 1e-12)


def test_minimality_certificate(rng):
    s, _, _ = random_hpta(2, rng)
    rep = minimality_certificate(s, trials=100, rng=1)
    assert rep.passed and rep.trials == 100
    dis = traceless_dissipator(2, rng)
    assert minimality_certificate(dis, trials=5, rng=2).passed


def test_noncanonical_dissipator_is_larger(rng):
    s, _, _ = random_hpta(2, rng)
    h = canonical_hamiltonian(s)
    g = random_hermitian(2, rng, traceless=True)
    d_can = s - from_hamiltonian(h)
    d_other = s - from_hamiltonian(h + g)
    assert avg_norm(d_other) > avg_norm(d_can)


def test_projection_equivalence_examples(rng):
    rep = projection_equivalence(from_hamiltonian(SX))
    assert rep.passed
    for h in rep.hamiltonians.values():
        assert np.allclose(h, SX)
    rep = projection_equivalence(traceless_dissipator(3, rng))
    assert rep.passed
    for h in rep.hamiltonians.values():
        assert np.allclose(h, 0, atol=1e-12)
    s, _, _ = random_hpta(3, rng)
    assert projection_equivalence(s).passed
    assert np.allclose(projected_hamiltonian(s, "hs"), canonical_hamiltonian(s), atol=1e-10)


def test_markovianity_examples():
    assert markovianity_check(from_lindblad(Z2, [(0.5, SM)]))
    assert not markovianity_check(from_lindblad(Z2, [(-0.5, SM)]))
    assert markovianity_check(from_hamiltonian(SZ))
    assert markovianity_check(Superoperator.zero(2))
    with pytest.raises(NotHPTAError):
        markovianity_check(Superoperator.identity(2))


def test_markovianity_ignores_jump_traces():
    # a positive-rate term with a non-traceless jump is still Markovian
    assert markovianity_check(from_lindblad(Z2, [(1.0, SM + 0.3 * np.eye(2))]))


def test_full_haar_identity(rng):
    # s*(rho) = i[H, rho] + Psi(rho) - {Psi(I), rho}/2
    for d in (2, 3):
        s, _, _ = random_hpta(d, rng, markovian=True)
        h = canonical_hamiltonian(s)
        rho = random_hermitian(d, rng)
        psi_i = psi_map(s, np.eye(d))
        rhs = 1j * commutator(h, rho) + psi_map(s, rho) - 0.5 * anticommutator(psi_i, rho)
        assert np.max(np.abs(adjoint(s)(rho) - rhs)) < 1e-10
        psi = psi_superoperator(s)
        assert np.allclose(psi(rho), psi_map(s, rho))


def test_gauge_shift_invariance(rng):
    for d in (2, 3):
        h = random_hermitian(d, rng)
        terms = [(rng.uniform(-1, 1), rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) for _ in range(3)]
        alphas = rng.normal(size=3) + 1j * rng.normal(size=3)
        s = from_lindblad(h, terms)
        h2, terms2 = gauge_shift(h, terms, alphas)
        s2 = from_lindblad(h2, terms2)
        assert np.max(np.abs(s.rep - s2.rep)) < 1e-12
        assert np.allclose(canonical_hamiltonian(s), canonical_hamiltonian(s2), atol=1e-10)
