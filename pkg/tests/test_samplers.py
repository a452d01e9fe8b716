import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from simorbit.chain import is_reversible, is_stochastically_monotone
from simorbit.gmc import check_gmc
from simorbit.samplers import (
    random_generator_pair,
    random_gmc_plus,
    random_kernel,
    random_monotone_kernel,
    random_reversible_generator,
    random_reversible_kernel,
    random_similarity_pair,
)


def test_samplers_are_seed_deterministic():
    a = random_gmc_plus(6, np.random.default_rng(9)).matrix
    b = random_gmc_plus(6, np.random.default_rng(9)).matrix
    np.testing.assert_array_equal(a, b)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_basic_samplers(n, seed):
    rng = np.random.default_rng(seed)
    K = random_kernel(n, rng)
    np.testing.assert_allclose(K.matrix.sum(axis=1), 1.0, atol=1e-12)
    assert is_reversible(random_reversible_kernel(n, rng))
    assert is_stochastically_monotone(random_monotone_kernel(n, rng).matrix)
    G = random_reversible_generator(n, rng)
    np.testing.assert_allclose(G.matrix.sum(axis=1), 0.0, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 12), st.integers(0, 2**32 - 1))
def test_lazy_class_sampler(n, seed):
    P = random_gmc_plus(n, np.random.default_rng(seed))
    assert P.size == n and check_gmc(P).member_plus


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pairs_intertwine(seed):
    rng = np.random.default_rng(seed)
    for p in (random_similarity_pair(rng, 4, 10), random_generator_pair(rng, 3, 12)):
        Lam = p.link.matrix
        res = np.max(np.abs(p.P.matrix @ Lam - Lam @ p.Q.matrix))
        assert res <= 1e-9 * max(1.0, np.abs(Lam).max())
