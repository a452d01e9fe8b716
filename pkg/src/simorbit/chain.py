"""Finite Markov kernels, generators and the structural predicates on them.

States are labelled ``0..rho``. Every object is immutable: the arrays held by
:class:`StochasticKernel` and :class:`GeneratorMatrix` are flagged
read-only on construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.sparse.csgraph import connected_components

from .config import DEFAULT_TOL, ToleranceConfig
from .errors import InvalidChain, MissingInvariant, NoUniqueStationary, ReducibleChain

ArrayLike = Union[np.ndarray, Sequence[Sequence[float]]]


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


def as_measure(weights, *, distribution: bool = True) -> np.ndarray:
    """Validate a strictly positive measure and return it as a read-only array.

    With ``distribution=True`` the weights are rescaled to sum to one.
    """
    w = np.array(weights, dtype=float).ravel()
    if w.size == 0 or not np.all(np.isfinite(w)):
        raise InvalidChain("measure must be a non-empty finite vector")
    if np.any(w <= 0):
        raise InvalidChain("measure must be strictly positive")
    # rescaling is skipped at rounding level so stored vectors round-trip bit for bit
    if distribution and abs(w.sum() - 1.0) > 8 * np.finfo(float).eps * w.size:
        w = w / w.sum()
    w.setflags(write=False)
    return w


def _check_square(m: np.ndarray) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidChain(f"matrix must be square, got shape {m.shape}")
    if m.shape[0] < 1:
        raise InvalidChain("matrix must have at least one state")
    if not np.all(np.isfinite(m)):
        raise InvalidChain("matrix has non-finite entries")


@dataclass(frozen=True)
class StochasticKernel:
    """Row-stochastic transition matrix with an optional invariant measure.

    Parameters
    ----------
    matrix : array_like, shape (n, n)
        Transition probabilities.
    pi : array_like, optional
        Invariant distribution. When given it is normalised and
        ``pi @ matrix == pi`` is checked against ``tol.invariant``.
    labels : sequence of str, optional
        Display names for the states.
    """

    matrix: np.ndarray
    pi: np.ndarray | None = None
    labels: tuple | None = None
    tol: ToleranceConfig = field(default=DEFAULT_TOL, repr=False, compare=False)

    def __post_init__(self):
        m = _frozen(self.matrix)
        _check_square(m)
        t = self.tol.stochastic
        if np.any(m < -t) or np.any(m > 1 + t):
            raise InvalidChain("kernel entries must lie in [0, 1]")
        if np.max(np.abs(m.sum(axis=1) - 1.0)) > max(t, 1e-12) * m.shape[0]:
            raise InvalidChain("kernel rows must sum to 1")
        object.__setattr__(self, "matrix", m)
        if self.pi is not None:
            pi = as_measure(self.pi)
            if pi.size != m.shape[0]:
                raise InvalidChain("pi has the wrong length")
            if np.max(np.abs(pi @ m - pi)) > self.tol.invariant:
                raise InvalidChain("pi is not invariant for the kernel")
            object.__setattr__(self, "pi", pi)
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != m.shape[0]:
                raise InvalidChain("labels have the wrong length")
            object.__setattr__(self, "labels", labels)

    kind = "kernel"

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def rho(self) -> int:
        return self.size - 1

    def with_stationary(self) -> "StochasticKernel":
        """Return a copy carrying its stationary distribution."""
        if self.pi is not None:
            return self
        return StochasticKernel(self.matrix, stationary_distribution(self), self.labels, self.tol)

    def require_pi(self) -> np.ndarray:
        if self.pi is None:
            raise MissingInvariant("kernel has no invariant measure attached")
        return self.pi


@dataclass(frozen=True)
class GeneratorMatrix:
    """Continuous-time generator with an optional invariant measure.

    ``markovian=False`` admits conjugated generators whose off-diagonal
    entries may be negative. Rows must still sum to zero. With
    ``submarkovian=True`` rows may sum to a negative value instead.
    """

    matrix: np.ndarray
    pi: np.ndarray | None = None
    labels: tuple | None = None
    markovian: bool = True
    submarkovian: bool = False
    tol: ToleranceConfig = field(default=DEFAULT_TOL, repr=False, compare=False)

    def __post_init__(self):
        m = _frozen(self.matrix)
        _check_square(m)
        t = max(self.tol.stochastic, 1e-12)
        scale = max(1.0, float(np.max(np.abs(m))))
        off = m - np.diag(np.diag(m))
        if self.markovian and np.any(off < -t * scale):
            raise InvalidChain("generator off-diagonal entries must be non-negative")
        rows = m.sum(axis=1)
        if self.submarkovian:
            if np.any(rows > t * scale * m.shape[0]):
                raise InvalidChain("sub-Markovian generator rows must sum to <= 0")
        elif np.max(np.abs(rows)) > t * scale * m.shape[0]:
            raise InvalidChain("generator rows must sum to 0")
        object.__setattr__(self, "matrix", m)
        if self.pi is not None:
            pi = as_measure(self.pi)
            if pi.size != m.shape[0]:
                raise InvalidChain("pi has the wrong length")
            if np.max(np.abs(pi @ m)) > self.tol.invariant * scale:
                raise InvalidChain("pi is not invariant for the generator")
            object.__setattr__(self, "pi", pi)
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != m.shape[0]:
                raise InvalidChain("labels have the wrong length")
            object.__setattr__(self, "labels", labels)

    kind = "generator"

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def rho(self) -> int:
        return self.size - 1

    def with_stationary(self) -> "GeneratorMatrix":
        if self.pi is not None:
            return self
        return GeneratorMatrix(
            self.matrix, stationary_distribution(self), self.labels,
            self.markovian, self.submarkovian, self.tol,
        )

    def require_pi(self) -> np.ndarray:
        if self.pi is None:
            raise MissingInvariant("generator has no invariant measure attached")
        return self.pi


Chain = Union[StochasticKernel, GeneratorMatrix]


def infer_chain(matrix: ArrayLike, pi=None, labels=None, tol: ToleranceConfig = DEFAULT_TOL) -> Chain:
    """Build a kernel if rows sum to one, a generator if they sum to zero."""
    m = np.asarray(matrix, dtype=float)
    _check_square(m)
    rows = m.sum(axis=1)
    if np.allclose(rows, 1.0, atol=1e-9):
        return StochasticKernel(m, pi, labels, tol)
    if np.allclose(rows, 0.0, atol=1e-9):
        return GeneratorMatrix(m, pi, labels, tol=tol)
    raise InvalidChain("rows sum neither to 1 nor to 0")


# ----------------------------------------------------------------------------
# weighted l2(pi) helpers
# ----------------------------------------------------------------------------

def inner(f, g, pi) -> complex | float:
    """``<f, g>_pi = sum f(x) conj(g(x)) pi(x)``."""
    return np.sum(np.asarray(f) * np.conj(np.asarray(g)) * np.asarray(pi))


def norm(f, pi) -> float:
    return float(np.sqrt(np.real(inner(f, f, pi))))


def weighted_operator_norm(M: np.ndarray, pi_domain, pi_codomain=None) -> float:
    """Operator norm of ``M : l2(pi_domain) -> l2(pi_codomain)``.

    Uses the isometry ``f -> D^{1/2} f`` to reduce to an ordinary spectral norm.
    """
    pi_domain = np.asarray(pi_domain, dtype=float)
    pi_codomain = pi_domain if pi_codomain is None else np.asarray(pi_codomain, dtype=float)
    S = np.sqrt(pi_codomain)[:, None] * np.asarray(M) / np.sqrt(pi_domain)[None, :]
    return float(np.linalg.norm(S, 2))


def weighted_adjoint(M: np.ndarray, pi_domain, pi_codomain=None) -> np.ndarray:
    """Adjoint of ``M : l2(pi_domain) -> l2(pi_codomain)``.

    ``M_hat(x, y) = conj(M(y, x)) pi_codomain(y) / pi_domain(x)``.
    """
    pi_domain = np.asarray(pi_domain, dtype=float)
    pi_codomain = pi_domain if pi_codomain is None else np.asarray(pi_codomain, dtype=float)
    return np.conj(np.asarray(M)).T * pi_codomain[None, :] / pi_domain[:, None]


# ----------------------------------------------------------------------------
# core operations
# ----------------------------------------------------------------------------

def _adjacency(m: np.ndarray, tol: float) -> np.ndarray:
    a = np.abs(m) > tol
    np.fill_diagonal(a, False)
    return a


def is_irreducible(chain: Chain | ArrayLike) -> bool:
    m = chain.matrix if isinstance(chain, (StochasticKernel, GeneratorMatrix)) else np.asarray(chain, float)
    if m.shape[0] == 1:
        return True
    n_comp, _ = connected_components(_adjacency(m, 0.0), directed=True, connection="strong")
    return n_comp == 1


def stationary_distribution(chain: Chain | ArrayLike, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Unique stationary distribution of an irreducible kernel or generator.

    The left null vector of ``P - I`` (or ``L``) is read off an SVD. If the
    null vector is not sign-definite, power iteration on the (uniformised)
    chain is used as a fallback.

    Raises
    ------
    ReducibleChain
        If the transition graph is not strongly connected.
    NoUniqueStationary
        If the numerical null space is not one-dimensional.
    """
    if isinstance(chain, (StochasticKernel, GeneratorMatrix)):
        m = chain.matrix
        is_gen = isinstance(chain, GeneratorMatrix)
    else:
        m = np.asarray(chain, dtype=float)
        is_gen = abs(m.sum(axis=1)).max() < 1e-9
    n = m.shape[0]
    if not is_irreducible(m):
        raise ReducibleChain("transition graph is not strongly connected")
    if n == 1:
        return as_measure([1.0])
    A = m if is_gen else m - np.eye(n)
    _, s, vh = np.linalg.svd(A.T)
    scale = max(1.0, s[0])
    null_dim = int(np.sum(s <= 1e-10 * scale))
    if null_dim != 1:
        raise NoUniqueStationary(f"null space has dimension {null_dim}")
    v = vh[-1]
    v = v / v.sum()
    if np.any(v <= 0):
        v = _power_stationary(m, is_gen)
    return as_measure(v)


def _power_stationary(m: np.ndarray, is_gen: bool, iters: int = 100000) -> np.ndarray:
    n = m.shape[0]
    if is_gen:
        rate = float(np.max(-np.diag(m))) or 1.0
        K = np.eye(n) + m / rate
    else:
        K = m
    K = 0.5 * (np.eye(n) + K)  # lazy version kills periodicity
    v = np.full(n, 1.0 / n)
    for _ in range(iters):
        w = v @ K
        if np.max(np.abs(w - v)) < 1e-15:
            break
        v = w
    if np.any(v <= 0):
        raise NoUniqueStationary("stationary vector is not strictly positive")
    return v / v.sum()


def time_reversal(chain: Chain) -> Chain:
    """Adjoint in ``l2(pi)``: ``pi(x) P_hat(x, y) = pi(y) P(y, x)``."""
    pi = chain.require_pi()
    R = chain.matrix.T * pi[None, :] / pi[:, None]
    if isinstance(chain, StochasticKernel):
        R = np.clip(R, 0.0, None)
        R = R / R.sum(axis=1, keepdims=True)
        return StochasticKernel(R, pi, chain.labels, chain.tol)
    return GeneratorMatrix(R, pi, chain.labels, chain.markovian, chain.submarkovian, chain.tol)


def _reversed_matrix(chain: Chain) -> np.ndarray:
    # unvalidated reversal: structural tests must not fail on rounding in pi
    pi = chain.require_pi()
    return chain.matrix.T * pi[None, :] / pi[:, None]


def is_reversible(chain: Chain) -> bool:
    R = _reversed_matrix(chain)
    return bool(np.max(np.abs(R - chain.matrix)) <= chain.tol.structural)


def is_normal(chain: Chain) -> bool:
    P = chain.matrix
    R = _reversed_matrix(chain)
    return bool(np.max(np.abs(P @ R - R @ P)) <= chain.tol.structural)


def is_birth_death(M: Chain | ArrayLike, tol: float = 1e-12) -> bool:
    """True iff the matrix is tridiagonal."""
    m = M.matrix if isinstance(M, (StochasticKernel, GeneratorMatrix)) else np.asarray(M, float)
    n = m.shape[0]
    i, j = np.indices((n, n))
    return bool(np.all(np.abs(m[np.abs(i - j) > 1]) <= tol))


def cumulative_rows(M: ArrayLike) -> np.ndarray:
    """``C[x, k] = M(x, {0..k})``."""
    return np.cumsum(np.asarray(M, dtype=float), axis=1)


def is_stochastically_monotone(M: Chain | ArrayLike, tol: float = 1e-12) -> bool:
    """``P(x+1, [0,k]) <= P(x, [0,k])`` for every ``x`` and ``k``."""
    m = M.matrix if isinstance(M, (StochasticKernel, GeneratorMatrix)) else np.asarray(M, float)
    C = cumulative_rows(m)
    return bool(np.all(C[1:] <= C[:-1] + tol))


def spectrum(M: Chain | ArrayLike) -> np.ndarray:
    """Eigenvalues sorted by decreasing real part, then imaginary part."""
    m = M.matrix if isinstance(M, (StochasticKernel, GeneratorMatrix)) else np.asarray(M, float)
    ev = np.linalg.eigvals(m)
    return ev[np.lexsort((-ev.imag, -ev.real))]


def permutation_matrix(perm: Sequence[int]) -> np.ndarray:
    """Matrix with ``(Pi f)(x) = f(perm[x])``."""
    n = len(perm)
    M = np.zeros((n, n))
    M[np.arange(n), np.asarray(perm)] = 1.0
    return M
