"""Random chain generators used by the property tests and the acceptance suite.

Every sampler takes a :class:`numpy.random.Generator` and is deterministic
given its state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import GeneratorMatrix, StochasticKernel, is_irreducible, stationary_distribution, time_reversal
from .errors import SimOrbitError
from .families import constant_rate_generator
from .gmc import check_gmc
from .orbit import IntertwiningLink, birth_death_from_spectrum, permutation_link, verify_similarity
from .purebirth import pure_birth_conjugate


def random_reversible_kernel(n: int, rng: np.random.Generator, density: float = 1.0,
                             laziness: float = 0.0) -> StochasticKernel:
    """Random walk on a random weighted graph; reversible by construction."""
    while True:
        W = rng.random((n, n))
        W = W + W.T
        if density < 1.0:
            mask = rng.random((n, n)) < density
            mask = mask | mask.T
            W = W * mask
        W = W + np.diag(laziness * W.sum(axis=1) + 1e-3)
        if is_irreducible(W):
            break
    P = W / W.sum(axis=1, keepdims=True)
    pi = W.sum(axis=1) / W.sum()
    return StochasticKernel(P, pi)


def random_kernel(n: int, rng: np.random.Generator, alpha: float = 1.0) -> StochasticKernel:
    """Dense kernel with Dirichlet rows; generally non-reversible and non-normal."""
    P = rng.dirichlet(np.full(n, alpha), size=n)
    return StochasticKernel(P).with_stationary()


def random_monotone_kernel(n: int, rng: np.random.Generator) -> StochasticKernel:
    """Stochastically monotone kernel.

    Cumulative rows must be non-decreasing along a row and non-increasing down
    a column. Sorting rows and then columns of a uniform matrix gives both.
    """
    while True:
        U = np.sort(rng.random((n, n - 1)), axis=1)
        U = -np.sort(-U, axis=0)
        C = np.hstack([U, np.ones((n, 1))])
        P = np.diff(np.hstack([np.zeros((n, 1)), C]), axis=1)
        P = np.clip(P, 0.0, None)
        P /= P.sum(axis=1, keepdims=True)
        if is_irreducible(P):
            return StochasticKernel(P).with_stationary()


def random_gmc_plus(n: int, rng: np.random.Generator, max_tries: int = 1000) -> StochasticKernel:
    """Kernel in the lazy generalised monotonicity class on ``n >= 4`` states.

    The Siegmund dual ``D`` of the time reversal is drawn directly: tridiagonal
    on ``0..rho-1`` with down rates ``b``, up rates ``a``, holding ``d >= 1/2``,
    an absorbing column ``v`` and ``e_rho`` as its last row. Its row tail sums
    ``C[x, y] = sum_{x' >= x} D[y, x']`` are the cumulative rows of the
    reversal. They are monotone in ``y`` when ``v`` and the row sums ``s`` are
    non-decreasing and ``a <= 1/2``, so ``d = s - a - b - v`` is solved for
    after drawing sorted ``s``. Reducible draws are rejected.
    """
    if n < 4:
        raise ValueError("need at least 4 states")
    rho = n - 1
    for _ in range(max_tries):
        cap = rng.uniform(0.02, 0.15)
        a = rng.uniform(0.1, 1.0, size=rho) * cap
        b = rng.uniform(0.1, 1.0, size=rho) * cap
        a[-1] = 0.0
        b[0] = 0.0
        v = np.sort(rng.uniform(0.0, 1.0, size=rho)) * cap
        s = np.sort(rng.uniform(0.5 + 3 * cap, 1.0, size=rho))
        d = s - a - b - v
        D = np.zeros((n, n))
        idx = np.arange(rho)
        D[idx, idx] = d
        D[idx[:-1], idx[1:]] = a[:-1]
        D[idx[1:], idx[:-1]] = b[1:]
        D[idx, rho] += v
        D[rho, rho] = 1.0
        C = np.cumsum(D[:, ::-1], axis=1)[:, ::-1].T
        Phat = np.diff(np.hstack([np.zeros((n, 1)), C]), axis=1)
        Phat = np.clip(Phat, 0.0, None)
        Phat /= Phat.sum(axis=1, keepdims=True)
        if not is_irreducible(Phat):
            continue
        try:
            pi = stationary_distribution(Phat)
            P = time_reversal(StochasticKernel(Phat, pi))
            if check_gmc(P).member_plus:
                return P
        except SimOrbitError:
            continue
    raise RuntimeError("GMc+ sampler exhausted its retries")


def random_birth_death_generator(n: int, rng: np.random.Generator, low: float = 0.2,
                                 high: float = 2.0) -> GeneratorMatrix:
    b = rng.uniform(low, high, size=n - 1)
    d = rng.uniform(low, high, size=n - 1)
    G = np.diag(b, 1) + np.diag(d, -1)
    G -= np.diag(G.sum(axis=1))
    return GeneratorMatrix(G).with_stationary()


def random_reversible_generator(n: int, rng: np.random.Generator) -> GeneratorMatrix:
    pi = rng.dirichlet(np.full(n, 2.0))
    W = rng.random((n, n))
    W = W + W.T
    np.fill_diagonal(W, 0.0)
    L = W / pi[:, None]
    L -= np.diag(L.sum(axis=1))
    return GeneratorMatrix(L, pi)


# ----------------------------------------------------------------------------
# similarity pairs
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SamplePair:
    """``P Lam = Lam Q`` with ``Q`` normal in ``l2(pi_Q)``."""

    P: StochasticKernel | GeneratorMatrix
    Q: StochasticKernel | GeneratorMatrix
    link: IntertwiningLink
    source: str


def _eigen_link(P: np.ndarray, Q: StochasticKernel) -> np.ndarray:
    ep, Vp = np.linalg.eig(P)
    eq, Vq = np.linalg.eig(Q.matrix)
    Vp = Vp[:, np.argsort(ep.real)].real
    Vq = Vq[:, np.argsort(eq.real)].real
    return Vp @ np.linalg.inv(Vq)


def gmc_similarity_pair(n: int, rng: np.random.Generator) -> SamplePair:
    """Non-reversible GMc+ kernel linked to a birth-death kernel of equal spectrum."""
    while True:
        P = random_gmc_plus(n, rng)
        ev = np.sort(np.linalg.eigvals(P.matrix).real)
        if np.min(np.diff(ev)) < 1e-3:
            continue
        try:
            Q = birth_death_from_spectrum(ev, seed=int(rng.integers(2**31)))
            Lam = _eigen_link(P.matrix, Q)
            pair = verify_similarity(P, Q, Lam)
        except SimOrbitError:
            continue
        # a partner with near-zero mass fixes the stationary law only to ~1e-8 relative
        if pair.verified and pair.link.kappa < 1e8 and Q.pi.min() >= 1e-6:
            return SamplePair(P, Q, pair.link, "gmc")


def reversible_pair(n: int, rng: np.random.Generator) -> SamplePair:
    P = random_reversible_kernel(n, rng, laziness=float(rng.uniform(0, 1)))
    return SamplePair(P, P, IntertwiningLink(np.eye(n), P.pi, P.pi), "reversible")


def permutation_pair(n: int, rng: np.random.Generator) -> SamplePair:
    """Conjugate of a reversible kernel by a random relabelling."""
    Q = random_reversible_kernel(n, rng)
    perm = rng.permutation(n)
    link = permutation_link(perm, Q.pi)
    P = link.matrix @ Q.matrix @ link.inverse
    P = StochasticKernel(np.clip(P, 0.0, None) / np.clip(P, 0.0, None).sum(axis=1, keepdims=True))
    pair = verify_similarity(P.with_stationary(), Q, link.matrix)
    return SamplePair(pair.P, Q, pair.link, "permutation")


def random_similarity_pair(rng: np.random.Generator, n_min: int = 4, n_max: int = 10) -> SamplePair:
    n = int(rng.integers(n_min, n_max + 1))
    kind = rng.choice(["gmc", "gmc", "reversible", "permutation"])
    if kind == "gmc":
        return gmc_similarity_pair(n, rng)
    if kind == "reversible":
        return reversible_pair(n, rng)
    return permutation_pair(n, rng)


def pure_birth_pair(n: int, rng: np.random.Generator) -> SamplePair:
    """Pure-birth conjugate ``L`` of a constant-rate reflecting generator ``G``.

    Markovian conjugates need several rate combinations to vanish exactly, so
    generic random rates almost never qualify; the constant-rate walk with a
    random speed always does.
    """
    G = constant_rate_generator(n - 1, float(rng.uniform(0.2, 3.0)))
    conj = pure_birth_conjugate(G)
    link = IntertwiningLink(conj.link.inverse, G.pi, conj.pi_L)
    return SamplePair(conj.L, G, link, "purebirth")


def random_generator_pair(rng: np.random.Generator, n_min: int = 3, n_max: int = 12) -> SamplePair:
    """Random generator in a similarity orbit, with its normal partner and link."""
    n = int(rng.integers(n_min, n_max + 1))
    kind = rng.choice(["kernel", "reversible", "purebirth"])
    if kind == "kernel" and n >= 4:
        p = gmc_similarity_pair(n, rng)
        L = GeneratorMatrix(p.P.matrix - np.eye(n), p.P.pi)
        G = GeneratorMatrix(p.Q.matrix - np.eye(n), p.Q.pi)
        return SamplePair(L, G, p.link, "kernel")
    if kind == "purebirth" and n >= 3:
        return pure_birth_pair(n, rng)
    G = random_reversible_generator(n, rng)
    return SamplePair(G, G, IntertwiningLink(np.eye(n), G.pi, G.pi), "reversible")
