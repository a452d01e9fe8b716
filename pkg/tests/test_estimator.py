import math

import numpy as np
import pytest
from scipy import stats

from simorbit.chain import GeneratorMatrix, inner, weighted_adjoint
from simorbit.errors import MissingDensity, NotMarkovian, ValidationError
from simorbit.estimator import (
    FunctionalSpec,
    dsa_check,
    error_bounds,
    estimate_functional,
    exact_functional,
    fit_rate,
    operator_a,
    replica_rngs,
    riemann_functional,
    seminorms,
    simulate_paths,
)
from simorbit.families import two_state_generator
from simorbit.samplers import random_reversible_generator
from simorbit.spectral import decompose

from conftest import L5_PRINTED, PI_L5

NS = [8, 16, 32, 64, 128, 256]


def test_spec_validation():
    with pytest.raises(ValidationError):
        FunctionalSpec(np.ones(2), 0.0, 4)
    with pytest.raises(ValidationError):
        FunctionalSpec(np.ones(2), 1.0, 0)
    with pytest.raises(ValidationError):
        FunctionalSpec(np.ones(2), 1.0, 4, s=1.5)
    assert FunctionalSpec(np.ones(2), 2.0, 8).delta == 0.25


def test_reversible_a_is_l_squared(rng):
    G = random_reversible_generator(6, rng)
    A = operator_a(G)
    np.testing.assert_allclose(A, G.matrix @ G.matrix, atol=1e-10)


def test_a_is_self_adjoint_for_pure_birth(rng):
    L = GeneratorMatrix(L5_PRINTED, PI_L5)
    A = operator_a(L)
    np.testing.assert_allclose(weighted_adjoint(A, PI_L5), A, atol=1e-10)
    for _ in range(50):
        f, g = rng.normal(size=5), rng.normal(size=5)
        assert abs(inner(A @ f, g, PI_L5) - inner(f, A @ g, PI_L5)) <= 1e-10
    assert np.linalg.eigvals(np.sqrt(PI_L5)[:, None] * A / np.sqrt(PI_L5)[None, :]).real.min() >= -1e-10


def test_constant_function_has_zero_seminorm(g5):
    A = operator_a(g5)
    for s in (0.0, 0.5, 1.0):
        assert seminorms(A, g5.pi, np.ones(5), s).seminorm_s == pytest.approx(0.0, abs=1e-12)


def test_seminorm_against_direct_spectral_sum(rng):
    G = random_reversible_generator(5, rng)
    A = operator_a(G)
    s = np.sqrt(G.pi)
    ev, U = np.linalg.eigh(s[:, None] * G.matrix / s[None, :])
    f = rng.normal(size=5)
    c = U.T @ (s * f)
    nz = np.abs(ev) > 1e-10
    for p in (0.0, 0.5, 1.0):
        want = math.sqrt(np.sum(np.abs(ev[nz]) ** (2 * p) * c[nz] ** 2))
        assert seminorms(A, G.pi, f, p).seminorm_s == pytest.approx(want, rel=1e-9)


def test_dsa_on_reversible_chains(rng):
    for _ in range(20):
        G = random_reversible_generator(int(rng.integers(2, 7)), rng)
        sys = decompose(G)
        A = operator_a(G, sys=sys)
        for s in (0.0, 0.5, 1.0):
            chk = dsa_check(sys, A, rng.normal(size=G.size), s)
            assert chk.holds and chk.holds_kappa


def test_dsa_corrected_form_on_pure_birth(rng):
    L = GeneratorMatrix(L5_PRINTED, PI_L5)
    sys = decompose(L)
    A = operator_a(L, sys=sys)
    for s in (0.0, 0.5, 1.0):
        for _ in range(100):
            assert dsa_check(sys, A, rng.normal(size=5), s).holds_kappa


def test_one_state_path_is_constant():
    paths = simulate_paths(GeneratorMatrix([[0.0]], [1.0]), 0, 5.0, 3)
    for ts, xs in zip(paths.times, paths.states):
        assert ts.tolist() == [0.0] and xs.tolist() == [0]


def test_non_markov_generator_rejected():
    L = GeneratorMatrix([[-1.0, 1.5, -0.5], [0.5, -1.0, 0.5], [0.0, 0.5, -0.5]], markovian=False)
    with pytest.raises(NotMarkovian):
        simulate_paths(L, 0, 1.0, 2)


def test_seeding_is_per_replica():
    G = two_state_generator(1.0, 2.0)
    a = simulate_paths(G, 0, 3.0, 5, seed=7)
    b = simulate_paths(G, 0, 3.0, 9, seed=7)
    for r in range(5):
        np.testing.assert_array_equal(a.times[r], b.times[r])
    r0 = replica_rngs(7, 2)[1].random()
    assert r0 == replica_rngs(7, 4)[1].random()


def test_occupation_matches_stationary_law():
    a, b, T = 1.0, 2.0, 1000.0
    G = two_state_generator(a, b)
    paths = simulate_paths(G, None, T, 200, seed=3)
    occ = exact_functional(paths, [1.0, 0.0]) / T
    se = occ.std(ddof=1) / math.sqrt(occ.size)
    assert abs(occ.mean() - G.pi[0]) <= 3 * se


def test_holding_times_are_exponential():
    G = two_state_generator(1.0, 2.0)
    paths = simulate_paths(G, 0, 50.0, 400, seed=11)
    hold = []
    for ts, xs in zip(paths.times, paths.states):
        d = np.diff(ts)
        hold.extend(d[xs[:-1] == 0])
    hold = np.array(hold[:10_000])
    assert hold.size == 10_000
    assert stats.kstest(hold, "expon", args=(0, 1.0)).pvalue > 0.01


def test_constant_function_is_exact(g5):
    paths = simulate_paths(g5, None, 4.0, 20, seed=1)
    res = estimate_functional(paths, FunctionalSpec(np.ones(5), 4.0, 7))
    np.testing.assert_allclose(res.gamma, 4.0, atol=1e-12)
    np.testing.assert_allclose(res.gamma_hat, 4.0, atol=1e-12)
    assert res.rmse == pytest.approx(0.0, abs=1e-12)
    A = operator_a(g5)
    assert error_bounds(FunctionalSpec(np.ones(5), 4.0, 7), seminorms(A, g5.pi, np.ones(5), 1.0)) == 0.0


def test_riemann_converges_on_fixed_paths(g5, rng):
    paths = simulate_paths(g5, None, 2.0, 50, seed=2)
    f = rng.normal(size=5)
    g = exact_functional(paths, f)
    errs = [np.sqrt(np.mean((riemann_functional(paths, f, n) - g) ** 2)) for n in (10, 100, 10_000)]
    assert errs[0] > errs[1] > errs[2] and errs[2] < 1e-2


def test_bound_kinds(g5):
    A = operator_a(g5)
    f = np.arange(5.0)
    norms = seminorms(A, g5.pi, f, 1.0)
    spec = FunctionalSpec(f, 10.0, 32, 1.0)
    st_ = error_bounds(spec, norms)
    assert st_ == pytest.approx(math.sqrt(norms.seminorm_s * norms.norm_pi * 10.0 * spec.delta**2))
    dens = np.full(5, 4.0)
    assert error_bounds(spec, norms, "nonstationary", density=dens) == pytest.approx(2 * st_)
    assert error_bounds(spec, norms, "average") > 0
    with pytest.raises(MissingDensity):
        error_bounds(spec, norms, "nonstationary")


@pytest.mark.slow
@pytest.mark.parametrize("s", [0.5, 1.0])
def test_rate_on_two_state_chain(s):
    G = two_state_generator(1.0, 2.0)
    A = operator_a(G)
    f = np.array([1.0, 0.0])
    paths = simulate_paths(G, None, 10.0, 4000, seed=5)
    fit = fit_rate(paths, f, NS, seminorms(A, G.pi, f, s))
    # finite state spaces give every f full smoothness, so the slope stays near 1
    assert fit.passes
    assert 0.85 <= fit.slope <= 1.15
    assert np.ptp(np.log(fit.c_hat)) < 1.0
