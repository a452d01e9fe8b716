from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from simorbit.chain import GeneratorMatrix
from simorbit.errors import NotBirthDeath
from simorbit.families import birth_death_generator, constant_rate_generator
from simorbit.purebirth import PureBirthLink, pure_birth_conjugate, pure_birth_spectral

from conftest import L5_PRINTED, PI_L5


def test_inverse_is_exact_in_rationals():
    n = 7
    link = PureBirthLink(n)
    A = [[Fraction(link.matrix[i, j]) for j in range(n)] for i in range(n)]
    B = [[Fraction(int(link.inverse[i, j])) for j in range(n)] for i in range(n)]
    prod = [[sum(A[i][k] * B[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
    assert prod == [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


@pytest.mark.parametrize("n", [2, 5, 17, 50])
def test_inverse_matches_generic_inversion(n):
    link = PureBirthLink(n)
    np.testing.assert_allclose(link.inverse, np.linalg.inv(link.matrix), atol=1e-12)


def test_printed_pair(g5):
    conj = pure_birth_conjugate(g5)
    np.testing.assert_allclose(conj.L.matrix, L5_PRINTED, atol=1e-12)
    np.testing.assert_allclose(conj.pi_L, PI_L5, atol=1e-12)
    assert conj.markovian and conj.condition_set == "rates"


def test_constant_rate_conditions():
    lam = 0.7
    conj = pure_birth_conjugate(constant_rate_generator(6, lam))
    assert conj.markovian
    alt = [c.value for c in conj.conditions if c.kind.startswith("alternating")]
    assert all(abs(v) < 1e-12 or abs(v - lam) < 1e-12 for v in alt)
    assert conj.L.matrix[0, 2] == pytest.approx(lam, abs=1e-12)


def test_violated_rate_is_reported():
    b = np.array([1.0, 1.0, 1.0, 1.0, 1.0, 0.0])
    d = np.array([0.0, 1.0, 9.0, 1.0, 1.0, 1.0])
    conj = pure_birth_conjugate(birth_death_generator(b[:-1], d[1:]))
    assert not conj.markovian
    bad = conj.failed()
    assert bad
    off = conj.L.matrix - np.diag(np.diag(conj.L.matrix))
    for c in bad:
        assert off[c.x, c.y] < 0 and c.value == pytest.approx(c.matrix_value, abs=1e-12)
    assert {(c.x, c.y) for c in bad} == {tuple(ix) for ix in np.argwhere(off < -1e-12)}


def test_small_state_space_uses_direct_signs():
    conj = pure_birth_conjugate(constant_rate_generator(2, 1.0))
    assert conj.condition_set == "direct"
    assert all(c.kind == "direct" for c in conj.conditions)


def test_non_birth_death_rejected():
    G = GeneratorMatrix([[-1.0, 0.5, 0.5], [0.5, -1.0, 0.5], [0.5, 0.5, -1.0]])
    with pytest.raises(NotBirthDeath):
        pure_birth_conjugate(G)


def test_spectral_system_of_printed_pair(g5):
    res = pure_birth_spectral(g5, times=[0.0, 1.0, 2.0])
    sys = res.system
    k0 = int(np.argmax(sys.eigenvalues.real))
    np.testing.assert_allclose(sys.basis[:, k0], 1.0, atol=1e-10)
    np.testing.assert_allclose(sys.dual[:, k0] * sys.pi, PI_L5, atol=1e-10)
    K = (sys.basis * np.exp(sys.eigenvalues)[None, :]) @ (sys.dual * sys.pi[:, None]).T
    np.testing.assert_allclose(np.real(K), sla.expm(L5_PRINTED), atol=1e-10)
    assert np.all(res.tv <= res.tv_bound)


def test_constant_rate_spectrum_shape():
    lam = 1.3
    res = pure_birth_spectral(constant_rate_generator(8, lam))
    rates = np.sort(-res.system.eigenvalues.real)
    assert rates[0] == pytest.approx(0.0, abs=1e-10)
    assert np.all(rates >= -1e-10) and np.all(rates <= 4 * lam + 1e-10)
    cos = 1 - rates / (2 * lam)
    assert np.all(np.abs(cos) <= 1 + 1e-12)
    L = pure_birth_conjugate(constant_rate_generator(8, lam)).L.matrix
    np.testing.assert_allclose(rates, np.sort(np.linalg.eigvals(-L).real), atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 10), st.integers(0, 2**32 - 1))
def test_conjugate_invariants(rho, seed):
    rng = np.random.default_rng(seed)
    G = birth_death_generator(rng.uniform(0.1, 2.0, rho), rng.uniform(0.1, 2.0, rho))
    conj = pure_birth_conjugate(G)
    L = conj.L.matrix
    np.testing.assert_allclose(L.sum(axis=1), 0.0, atol=1e-12)
    np.testing.assert_allclose(conj.pi_L @ L, 0.0, atol=1e-10)
    np.testing.assert_allclose(conj.pi_L, G.pi @ PureBirthLink(rho + 1).matrix, atol=1e-15)
    assert np.all(np.diag(L) < 0)
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(L).real), np.sort(np.linalg.eigvals(G.matrix).real), atol=1e-9)
