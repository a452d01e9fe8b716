import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simorbit.chain import GeneratorMatrix, StochasticKernel, inner, permutation_matrix
from simorbit.errors import DimensionMismatch, InvalidChain, SingularLink, StateSpaceTooLarge
from simorbit.orbit import (
    IntertwiningLink,
    adjoint_link,
    birth_death_from_spectrum,
    condition_number,
    is_unitary_link,
    lanczos_jacobi,
    markov_invertible_is_permutation,
    permutation_link,
    permutation_orbit,
    verify_similarity,
)
from simorbit.purebirth import PureBirthLink
from simorbit.samplers import random_reversible_kernel

from conftest import L5_PRINTED, PI_L5


def test_identity_link_verifies(gmc4):
    pair = verify_similarity(gmc4, gmc4, np.eye(4))
    assert pair.verified and pair.residual == 0.0


def test_dimension_mismatch(gmc4):
    with pytest.raises(DimensionMismatch):
        verify_similarity(gmc4, StochasticKernel(np.full((3, 3), 1 / 3), np.full(3, 1 / 3)), np.eye(3))


def test_pure_birth_pair_verifies(g5):
    Lam = PureBirthLink(5).matrix
    L = GeneratorMatrix(L5_PRINTED, PI_L5, markovian=False)
    # G Lam = Lam L, i.e. G is the image side
    pair = verify_similarity(g5, L, Lam)
    assert pair.residual <= 1e-12
    assert pair.verified


def test_singular_link_rejected():
    link = IntertwiningLink(np.array([[1.0, 1.0], [1.0, 1.0]]), [0.5, 0.5], [0.5, 0.5])
    with pytest.raises(SingularLink):
        condition_number(link)


def test_adjoint_examples(rng):
    S = rng.normal(size=(3, 3))
    S = S + S.T
    u = np.full(3, 1 / 3)
    np.testing.assert_allclose(adjoint_link(IntertwiningLink(S, u, u)).matrix, S, atol=1e-15)
    pi = rng.dirichlet(np.ones(3))
    np.testing.assert_allclose(adjoint_link(IntertwiningLink(np.eye(3), pi, pi)).matrix, np.eye(3), atol=1e-15)


def test_adjoint_identity_random_pairs(rng):
    Lam = rng.normal(size=(4, 4))
    piQ, pi = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
    link = IntertwiningLink(Lam, piQ, pi)
    hat = adjoint_link(link)
    for _ in range(100):
        f, g = rng.normal(size=4), rng.normal(size=4)
        assert abs(inner(Lam @ f, g, pi) - inner(f, hat.matrix @ g, piQ)) <= 1e-10
    np.testing.assert_allclose(adjoint_link(hat).matrix, Lam, atol=1e-12)
    assert abs(hat.kappa - link.kappa) <= 1e-10 * link.kappa


def test_kappa_of_identity_and_permutations(rng):
    pi = rng.dirichlet(np.ones(4))
    assert abs(IntertwiningLink(np.eye(4), pi, pi).kappa - 1.0) < 1e-12
    link = permutation_link([2, 0, 3, 1], pi)
    assert abs(link.kappa - 1.0) < 1e-12
    assert is_unitary_link(link)
    assert is_unitary_link(IntertwiningLink(np.eye(4), pi, pi))


def test_pure_birth_kappa_by_ratio_maximisation(g5, rng):
    from scipy.optimize import minimize

    pb = PureBirthLink(5)
    link = IntertwiningLink(pb.matrix, PI_L5, g5.pi)
    assert not is_unitary_link(link)

    def ratio(f, M, dom, cod):
        return np.sqrt(np.sum(cod * (M @ f) ** 2) / np.sum(dom * f**2))

    def best(M, dom, cod):
        vals = [-minimize(lambda f: -ratio(f, M, dom, cod), rng.normal(size=5)).fun for _ in range(20)]
        return max(vals)

    brute = best(pb.matrix, PI_L5, g5.pi) * best(np.linalg.inv(pb.matrix), g5.pi, PI_L5)
    assert abs(brute - link.kappa) <= 1e-6 * link.kappa


def test_permutation_orbit_examples():
    assert len(permutation_orbit(StochasticKernel(np.eye(3), np.full(3, 1 / 3)))) == 1
    Q = StochasticKernel([[0.7, 0.3], [0.4, 0.6]]).with_stationary()
    orbit = permutation_orbit(Q)
    got = sorted(tuple(K.matrix.ravel()) for K in orbit)
    want = sorted([(0.7, 0.3, 0.4, 0.6), (0.6, 0.4, 0.3, 0.7)])
    np.testing.assert_allclose(got, want, atol=1e-15)


def test_permutation_orbit_too_large():
    with pytest.raises(StateSpaceTooLarge):
        permutation_orbit(StochasticKernel(np.full((9, 9), 1 / 9)))


def test_three_state_orbit_spectra(rng):
    Q = StochasticKernel(rng.dirichlet(np.ones(3), size=3)).with_stationary()
    orbit = permutation_orbit(Q)
    assert len(orbit) == 6
    ref = np.sort_complex(np.linalg.eigvals(Q.matrix))
    for K in orbit:
        np.testing.assert_allclose(K.matrix.sum(axis=1), 1.0, atol=1e-14)
        np.testing.assert_allclose(K.pi @ K.matrix, K.pi, atol=1e-12)
        np.testing.assert_allclose(np.sort_complex(np.linalg.eigvals(K.matrix)), ref, atol=1e-10)


def test_markov_inverse_examples():
    for perm in itertools.permutations(range(3)):
        assert markov_invertible_is_permutation(permutation_matrix(perm))
    assert not markov_invertible_is_permutation(np.array([[0.5, 0.5], [0.0, 1.0]]))
    D = np.array([[0.6, 0.2, 0.2], [0.2, 0.6, 0.2], [0.2, 0.2, 0.6]])
    assert not markov_invertible_is_permutation(D)
    with pytest.raises(SingularLink):
        markov_invertible_is_permutation(np.full((2, 2), 0.5))


def _exact_inverse_nonnegative(rows):
    M = [[Fraction(x) for x in r] for r in rows]
    n = len(M)
    A = [r[:] + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(M)]
    for c in range(n):
        p = next((r for r in range(c, n) if A[r][c] != 0), None)
        if p is None:
            return None
        A[c], A[p] = A[p], A[c]
        piv = A[c][c]
        A[c] = [x / piv for x in A[c]]
        for r in range(n):
            if r != c and A[r][c] != 0:
                fac = A[r][c]
                A[r] = [x - fac * y for x, y in zip(A[r], A[c])]
    return all(x >= 0 for r in A for x in r[n:])


def test_markov_inverse_on_rational_grid_of_halves():
    parts = [r for r in itertools.product(range(3), repeat=3) if sum(r) == 2]
    for rows in itertools.product(parts, repeat=3):
        M = [[Fraction(x, 2) for x in r] for r in rows]
        truth = _exact_inverse_nonnegative(M)
        if truth is None:
            continue
        A = np.array(M, dtype=float)
        if np.linalg.cond(A) > 1e12:
            continue
        assert markov_invertible_is_permutation(A) == truth


def test_spectrum_examples():
    np.testing.assert_array_equal(birth_death_from_spectrum([1.0]).matrix, [[1.0]])
    np.testing.assert_allclose(birth_death_from_spectrum([1.0, 0.0]).matrix, [[0.5, 0.5], [0.5, 0.5]], atol=1e-12)
    Q = birth_death_from_spectrum([1.0, 0.54, 0.28, 0.18])
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(Q.matrix).real), [0.18, 0.28, 0.54, 1.0], atol=1e-8)
    assert np.all(Q.matrix >= 0)
    assert np.allclose(np.triu(Q.matrix, 2), 0) and np.allclose(np.tril(Q.matrix, -2), 0)


def test_spectrum_input_validation():
    with pytest.raises(InvalidChain):
        birth_death_from_spectrum([0.5, 0.2])
    with pytest.raises(InvalidChain):
        birth_death_from_spectrum([1.0, 0.5, 0.5])


def test_lanczos_recovers_nodes(rng):
    nodes = np.sort(rng.uniform(-1, 1, 7))
    w = rng.dirichlet(np.ones(7))
    a, b = lanczos_jacobi(nodes, w)
    J = np.diag(a) + np.diag(b, 1) + np.diag(b, -1)
    ev, V = np.linalg.eigh(J)
    np.testing.assert_allclose(ev, nodes, atol=1e-12)
    np.testing.assert_allclose(V[0] ** 2, w, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 9), st.integers(0, 2**32 - 1))
def test_spectrum_round_trip_whenever_returned(n, seed):
    rng = np.random.default_rng(seed)
    eigs = np.concatenate([[1.0], rng.uniform(-0.95, 0.99, n - 1)])
    if np.min(np.diff(np.sort(eigs))) < 1e-6:
        return
    try:
        Q = birth_death_from_spectrum(eigs, seed=seed)
    except Exception as exc:  # only the documented failure is allowed
        assert type(exc).__name__ == "SpectrumInfeasible"
        return
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(Q.matrix).real), np.sort(eigs), atol=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.integers(4, 8), st.integers(0, 2**32 - 1))
def test_verified_pairs_share_spectrum(n, seed):
    from simorbit.samplers import gmc_similarity_pair

    p = gmc_similarity_pair(n, np.random.default_rng(seed))
    a = np.sort(np.linalg.eigvals(p.P.matrix).real)
    b = np.sort(np.linalg.eigvals(p.Q.matrix).real)
    np.testing.assert_allclose(a, b, atol=1e-8)
    assert p.link.kappa >= 1.0


def test_reversible_kernel_permuted_stays_stochastic(rng):
    Q = random_reversible_kernel(4, rng)
    for K in permutation_orbit(Q):
        assert np.all(K.matrix >= 0)
