import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simorbit.chain import StochasticKernel
from simorbit.errors import FamilyTooSmall, NotInGmcPlus
from simorbit.families import lazy_birth_death, two_state
from simorbit.fsst import (
    PhaseTypeMixture,
    cutoff_record,
    fsst_distribution,
    phase_tail,
    sample_fsst,
    separation_curve,
    separation_cutoff,
    separation_distance,
    separation_mixing_time,
)
from simorbit.samplers import random_gmc_plus


def _mixture(weights, thetas, mode):
    thetas = np.asarray(thetas, dtype=float)
    return PhaseTypeMixture(np.asarray(weights, dtype=float), 1 - thetas, mode, thetas)


def _dp_tail(weights, thetas, n_max):
    """Mixture tail from convolved geometric pmfs on 0..n_max."""
    pmf = np.zeros(n_max + 1)
    pmf[0] = 1.0
    out = weights[0] * pmf.copy()
    for k, th in enumerate(thetas, start=1):
        g = np.zeros(n_max + 1)
        j = np.arange(1, n_max + 1)
        g[1:] = th * (1 - th) ** (j - 1)
        pmf = np.convolve(pmf, g)[: n_max + 1]
        out = out + weights[k] * pmf
    return 1.0 - np.cumsum(out)


def test_two_state_lazy_chain():
    a, b = 0.1, 0.25
    mix = fsst_distribution(two_state(a, b), strict=False)
    np.testing.assert_allclose(mix.weights, [0.0, 1.0], atol=1e-12)
    assert mix.thetas[0] == pytest.approx(a + b, abs=1e-12)
    ns = np.arange(30)
    np.testing.assert_allclose(phase_tail(mix, ns), (1 - a - b) ** ns, atol=1e-12)


def test_stationary_start_has_zero_time(gmc4):
    mix = fsst_distribution(gmc4, start=gmc4.pi, strict=False)
    assert mix.weights[0] == pytest.approx(1.0, abs=1e-10)
    assert phase_tail(mix, 0) == pytest.approx(0.0, abs=1e-10)


def test_example_tail_equals_separation(gmc4):
    mix = fsst_distribution(gmc4, strict=False)
    assert np.all(mix.weights >= 0) and mix.weights.sum() == pytest.approx(1.0, abs=1e-10)
    s = separation_curve(gmc4, 100)
    np.testing.assert_allclose(phase_tail(mix, np.arange(101)), s, atol=1e-10)
    np.testing.assert_allclose(_dp_tail(mix.weights, mix.thetas, 100), s, atol=1e-10)


def test_example_is_rejected_when_strict(gmc4):
    with pytest.raises(NotInGmcPlus):
        fsst_distribution(gmc4)


def test_single_geometric_tail():
    mix = _mixture([0.0, 1.0], [0.35], "discrete")
    ns = np.arange(20)
    np.testing.assert_allclose(phase_tail(mix, ns), 0.65**ns, atol=1e-14)


def test_two_exponentials_closed_form():
    t1, t2 = 0.7, 1.9
    mix = _mixture([0.0, 0.0, 1.0], [t1, t2], "continuous")
    for t in (0.0, 0.3, 1.0, 4.0):
        want = (t2 * math.exp(-t1 * t) - t1 * math.exp(-t2 * t)) / (t2 - t1)
        assert phase_tail(mix, t) == pytest.approx(want, abs=1e-12)


def test_repeated_rates_give_gamma_tail():
    th = 0.8
    mix = _mixture([0.0, 0.0, 1.0], [th, th], "continuous")
    for t in (0.5, 2.0, 6.0):
        assert phase_tail(mix, t) == pytest.approx(math.exp(-th * t) * (1 + th * t), abs=1e-12)


def test_separation_examples():
    P = StochasticKernel([[0.5, 0.5, 0.0], [0.25, 0.5, 0.25], [0.0, 0.5, 0.5]]).with_stationary()
    assert separation_distance(P, 0, "max") == 1.0
    half = two_state(0.5, 0.5)
    for n in range(1, 6):
        assert separation_distance(half, n) == pytest.approx(0.0, abs=1e-15)


def test_separation_max_dominates_single_state(gmc4):
    worst = separation_curve(gmc4, 40, "max")
    for x in range(4):
        assert np.all(separation_curve(gmc4, 40, x) <= worst + 1e-15)


def test_lazy_birth_death_weights_all_in_top_phase():
    mix = fsst_distribution(lazy_birth_death(10))
    assert mix.weights[0] == pytest.approx(0.0, abs=1e-10)
    np.testing.assert_allclose(mix.tails, 1.0, atol=1e-9)


def test_cutoff_family_too_small():
    with pytest.raises(FamilyTooSmall):
        separation_cutoff([lazy_birth_death(5), lazy_birth_death(6)])


def test_constant_two_state_family_has_no_trend():
    fam = [two_state(0.25, 0.25)] * 4
    d = separation_cutoff(fam, strict=False)
    prods = [r.product for r in d.records]
    np.testing.assert_allclose(prods, prods[0], atol=1e-14)
    assert not d.verdict


def test_lazy_family_trend_and_mixing_ratio():
    sizes = (8, 12, 16)
    fam = [lazy_birth_death(n) for n in sizes]
    d = separation_cutoff(fam, threshold=1.0)
    assert d.verdict
    for eps in (0.25, 0.5):
        gaps = [abs(separation_mixing_time(P, eps) / r.t - 1) for P, r in zip(fam, d.records)]
        assert gaps[0] > gaps[1] > gaps[2]


def test_moments_match_sampling(rng):
    # w = 1 here, so the variance equals rho^2
    P = lazy_birth_death(8)
    mix = fsst_distribution(P)
    rec = cutoff_record(mix, 8)
    assert rec.variance == pytest.approx(rec.rho_sq, rel=1e-10)
    T = sample_fsst(mix, 100_000, rng)
    se_mean = T.std() / math.sqrt(T.size)
    assert abs(T.mean() - rec.t) <= 3 * se_mean
    c4 = np.mean((T - T.mean()) ** 4)
    se_var = math.sqrt((c4 - T.var() ** 2) / T.size)
    assert abs(T.var(ddof=1) - rec.rho_sq) <= 3 * se_var


def test_sampler_matches_separation_tail(gmc4, rng):
    mix = fsst_distribution(gmc4, strict=False)
    T = sample_fsst(mix, 50_000, rng)
    s = separation_curve(gmc4, 10)
    emp = np.array([(T > n).mean() for n in range(11)])
    np.testing.assert_allclose(emp, s, atol=4 * math.sqrt(0.25 / T.size))


def test_continuous_tail_matches_continuised_separation():
    from simorbit.chain import GeneratorMatrix
    from simorbit.fsst import continuous_separation

    P = lazy_birth_death(6)
    mix = fsst_distribution(P, "continuous")
    L = GeneratorMatrix(P.matrix - np.eye(P.size), P.pi)
    for t in (0.0, 0.5, 3.0, 12.0):
        assert phase_tail(mix, t) == pytest.approx(continuous_separation(L, t), abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(4, 8), st.integers(0, 2**32 - 1))
def test_tail_identity_on_lazy_class(n, seed):
    P = random_gmc_plus(n, np.random.default_rng(seed))
    mix = fsst_distribution(P)
    assert mix.weights.min() >= -1e-10
    np.testing.assert_allclose(phase_tail(mix, np.arange(201)), separation_curve(P, 200), atol=1e-9)
    rec = cutoff_record(mix, n)
    assert rec.rho_sq <= rec.t / rec.theta_min
