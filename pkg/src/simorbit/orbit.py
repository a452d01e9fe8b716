"""Similarity links between kernels and the operations built on them.

A link ``Lam : l2(pi_Q) -> l2(pi)`` intertwines ``P`` and ``Q`` when
``P Lam = Lam Q``. Weighted norms are reduced to ordinary ones through
``S = D_pi^{1/2} Lam D_{pi_Q}^{-1/2}``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .chain import (
    Chain,
    StochasticKernel,
    as_measure,
    is_irreducible,
    permutation_matrix,
    weighted_adjoint,
)
from .config import DEFAULT_TOL, ToleranceConfig
from .errors import (
    DimensionMismatch,
    InternalCheckFailed,
    InvalidChain,
    MissingInvariant,
    SingularLink,
    SpectrumInfeasible,
    StateSpaceTooLarge,
)

MAX_ORBIT_SIZE = 8


@dataclass(frozen=True, eq=False)
class IntertwiningLink:
    """Invertible link ``Lam : l2(domain_pi) -> l2(codomain_pi)``.

    ``domain_pi`` is the measure of the normal partner ``Q`` and
    ``codomain_pi`` that of ``P``.
    """

    matrix: np.ndarray
    domain_pi: np.ndarray
    codomain_pi: np.ndarray
    tol: ToleranceConfig = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch("link must be square")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        dp = as_measure(self.domain_pi)
        cp = as_measure(self.codomain_pi)
        if dp.size != m.shape[0] or cp.size != m.shape[0]:
            raise DimensionMismatch("link measures do not match the link size")
        object.__setattr__(self, "domain_pi", dp)
        object.__setattr__(self, "codomain_pi", cp)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def singular_values(self) -> np.ndarray:
        S = np.sqrt(self.codomain_pi)[:, None] * self.matrix / np.sqrt(self.domain_pi)[None, :]
        return np.linalg.svd(S, compute_uv=False)

    @cached_property
    def inverse(self) -> np.ndarray:
        s = self.singular_values
        if s[-1] <= 0 or s[0] / s[-1] > self.tol.kappa_max:
            raise SingularLink(f"link condition number exceeds {self.tol.kappa_max:g}")
        inv = np.linalg.inv(self.matrix)
        n = self.size
        resid = np.max(np.abs(self.matrix @ inv - np.eye(n)))
        if resid > max(1e-10, 1e-14 * s[0] / s[-1]):
            raise SingularLink(f"inverse residual {resid:.3g} too large")
        inv.setflags(write=False)
        return inv

    @property
    def norm(self) -> float:
        return float(self.singular_values[0])

    @property
    def inverse_norm(self) -> float:
        return float(1.0 / self.singular_values[-1])

    @property
    def kappa(self) -> float:
        s = self.singular_values
        if s[-1] <= 0:
            return float("inf")
        return float(s[0] / s[-1])

    def to_dict(self) -> dict:
        return {
            "matrix": self.matrix.tolist(),
            "domain_pi": self.domain_pi.tolist(),
            "codomain_pi": self.codomain_pi.tolist(),
        }


@dataclass(frozen=True, eq=False)
class SimilarityPair:
    P: Chain
    Q: Chain
    link: IntertwiningLink
    residual: float
    adjoint_residual: float
    verified: bool


def _as_link(Lam, P: Chain, Q: Chain, tol: ToleranceConfig) -> IntertwiningLink:
    if isinstance(Lam, IntertwiningLink):
        return Lam
    if P.pi is None or Q.pi is None:
        raise MissingInvariant("both chains need invariant measures to build a link")
    return IntertwiningLink(Lam, Q.pi, P.pi, tol)


def verify_similarity(P: Chain, Q: Chain, Lam, tol: ToleranceConfig | None = None) -> SimilarityPair:
    """Check ``P Lam = Lam Q`` and the adjoint relation ``Q_hat Lam_hat = Lam_hat P_hat``.

    Residuals are max-abs entrywise and are compared against
    ``tol.similarity`` scaled by the size of the entries involved.

    Raises
    ------
    DimensionMismatch
        If the three matrices do not share a size.
    SingularLink
        If the link is numerically singular or too badly conditioned.
    """
    tol = tol or P.tol
    P = P.with_stationary()
    Q = Q.with_stationary()
    if P.size != Q.size:
        raise DimensionMismatch(f"P has size {P.size}, Q has size {Q.size}")
    if type(P) is not type(Q):
        raise DimensionMismatch("P and Q must both be kernels or both generators")
    link = _as_link(Lam, P, Q, tol)
    if link.size != P.size:
        raise DimensionMismatch("link size does not match the chains")
    _ = link.inverse
    Lm = link.matrix
    scale = max(1.0, float(np.max(np.abs(Lm)))) * max(1.0, float(np.max(np.abs(P.matrix))))
    residual = float(np.max(np.abs(P.matrix @ Lm - Lm @ Q.matrix)))
    pi, piQ = link.codomain_pi, link.domain_pi
    Lhat = weighted_adjoint(Lm, piQ, pi)
    Phat = weighted_adjoint(P.matrix, pi)
    Qhat = weighted_adjoint(Q.matrix, piQ)
    hscale = max(1.0, float(np.max(np.abs(Lhat)))) * max(1.0, float(np.max(np.abs(Phat))))
    adj_res = float(np.max(np.abs(Qhat @ Lhat - Lhat @ Phat)))
    ok = residual <= tol.similarity * scale and adj_res <= tol.similarity * hscale
    return SimilarityPair(P, Q, link, residual, adj_res, bool(ok))


def adjoint_link(link: IntertwiningLink) -> IntertwiningLink:
    """``Lam_hat(x, y) = Lam(y, x) pi(y) / pi_Q(x)``, mapping ``l2(pi) -> l2(pi_Q)``."""
    if link.domain_pi is None or link.codomain_pi is None:
        raise MissingInvariant("link measures are required")
    M = weighted_adjoint(link.matrix, link.domain_pi, link.codomain_pi)
    return IntertwiningLink(np.real(M), link.codomain_pi, link.domain_pi, link.tol)


def condition_number(link: IntertwiningLink) -> float:
    """Weighted condition number ``||Lam|| ||Lam^{-1}||``.

    Raises
    ------
    SingularLink
        If the link is singular to working precision.
    """
    _ = link.inverse
    return link.kappa


def is_unitary_link(link: IntertwiningLink) -> bool:
    try:
        inv = link.inverse
    except SingularLink:
        return False
    hat = adjoint_link(link).matrix
    return bool(np.max(np.abs(inv - hat)) <= link.tol.structural)


def permutation_orbit(Q: StochasticKernel) -> list[StochasticKernel]:
    """Distinct conjugates ``Pi_s Q Pi_s^{-1}`` over all permutations ``s``.

    Raises
    ------
    StateSpaceTooLarge
        For more than eight states.
    """
    n = Q.size
    if n > MAX_ORBIT_SIZE:
        raise StateSpaceTooLarge(f"orbit enumeration limited to {MAX_ORBIT_SIZE} states")
    pi = Q.pi
    out: list[StochasticKernel] = []
    for perm in itertools.permutations(range(n)):
        Pm = permutation_matrix(perm)
        M = Pm @ Q.matrix @ Pm.T
        if any(np.max(np.abs(M - K.matrix)) <= 1e-14 for K in out):
            continue
        new_pi = None if pi is None else pi[list(perm)]
        out.append(StochasticKernel(M, new_pi, tol=Q.tol))
    return out


def markov_invertible_is_permutation(Lam, tol: float = 1e-12) -> bool:
    """Whether a stochastic link has an entrywise non-negative inverse.

    A ``True`` answer is cross-checked: the link must then be a 0/1
    permutation matrix.

    Raises
    ------
    SingularLink
        If the matrix is not invertible.
    """
    M = Lam.matrix if isinstance(Lam, StochasticKernel) else np.asarray(Lam, dtype=float)
    try:
        inv = np.linalg.inv(M)
    except np.linalg.LinAlgError as exc:
        raise SingularLink("link is singular") from exc
    if np.linalg.cond(M) > 1e12:
        raise SingularLink("link is numerically singular")
    nonneg = bool(np.all(inv >= -tol))
    if nonneg:
        is_perm = np.all((np.abs(M) < 1e-12) | (np.abs(M - 1) < 1e-12)) and np.allclose(
            M.sum(axis=0), 1.0
        )
        if not is_perm:
            raise InternalCheckFailed("non-negative inverse but the link is not a permutation")
    return nonneg


def lanczos_jacobi(nodes: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Jacobi matrix whose spectral measure at ``e_0`` is ``sum w_i delta_{nodes_i}``.

    Lanczos on ``diag(nodes)`` started from ``sqrt(weights)``, with full
    reorthogonalisation.

    Returns
    -------
    alpha, beta : ndarray
        Diagonal (length n) and off-diagonal (length n-1).
    """
    x = np.asarray(nodes, dtype=float)
    w = np.asarray(weights, dtype=float)
    n = x.size
    V = np.zeros((n, n))
    alpha = np.zeros(n)
    beta = np.zeros(max(n - 1, 0))
    v = np.sqrt(w / w.sum())
    V[:, 0] = v
    for k in range(n):
        u = x * V[:, k]
        alpha[k] = V[:, k] @ u
        if k == n - 1:
            break
        u = u - V[:, : k + 1] @ (V[:, : k + 1].T @ u)
        u = u - V[:, : k + 1] @ (V[:, : k + 1].T @ u)
        b = np.linalg.norm(u)
        if b <= 1e-14:
            raise SpectrumInfeasible("Lanczos breakdown: nodes are not distinct")
        beta[k] = b
        V[:, k + 1] = u / b
    return alpha, beta


def _jacobi_to_kernel(alpha: np.ndarray, beta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    J = np.diag(alpha) + np.diag(beta, 1) + np.diag(beta, -1)
    evals, evecs = np.linalg.eigh(J)
    u = evecs[:, np.argmax(evals)]
    u = u * np.sign(u.sum())
    pi = u**2
    Q = J * u[None, :] / u[:, None]
    return Q, pi / pi.sum()


def birth_death_from_spectrum(
    eigs,
    stationary_hint=None,
    *,
    weights=None,
    retries: int = 20,
    seed: int = 0,
    tol: ToleranceConfig = DEFAULT_TOL,
) -> StochasticKernel:
    """Irreducible birth-death kernel with a prescribed real spectrum.

    A Jacobi matrix ``J`` with spectrum ``eigs`` is built from spectral
    weights by Lanczos. If ``u`` is its positive Perron vector, then
    ``Q = D_u^{-1} J D_u`` is tridiagonal with unit row sums and stationary
    law ``u**2``. The weight on eigenvalue 1 equals ``pi(0)``.

    Parameters
    ----------
    eigs : sequence of float
        Distinct reals in (-1, 1] containing 1 exactly once.
    stationary_hint : array_like, optional
        Preferred stationary law; its first entry fixes the weight on 1.
    weights : array_like, optional
        Explicit spectral weights, in the order of ``eigs``.
    retries : int
        Number of random Dirichlet weight draws tried after the default.
    seed : int
        Seed for the retry weights.

    Raises
    ------
    SpectrumInfeasible
        If no tried weight vector yields non-negative diagonal entries.
    """
    lam = np.asarray(eigs, dtype=float).ravel()
    n = lam.size
    if n == 0:
        raise InvalidChain("empty spectrum")
    if np.sum(np.abs(lam - 1.0) < 1e-12) != 1:
        raise InvalidChain("spectrum must contain 1 exactly once")
    if np.any(lam <= -1.0) or np.any(lam > 1.0 + 1e-12):
        raise InvalidChain("eigenvalues must lie in (-1, 1]")
    if n > 1 and np.min(np.diff(np.sort(lam))) < tol.distinct:
        raise InvalidChain("eigenvalues must be distinct")
    if n == 1:
        return StochasticKernel([[1.0]], [1.0], tol=tol)
    one = int(np.argmin(np.abs(lam - 1.0)))

    candidates = []
    if weights is not None:
        candidates.append(np.asarray(weights, dtype=float))
    elif stationary_hint is not None:
        h = as_measure(stationary_hint)
        w = np.full(n, (1.0 - h[0]) / (n - 1))
        w[one] = h[0]
        candidates.append(w)
    else:
        candidates.append(np.full(n, 1.0 / n))
    rng = np.random.default_rng(seed)
    for _ in range(retries):
        candidates.append(rng.dirichlet(np.ones(n)))

    for w in candidates:
        if np.any(w <= 0):
            continue
        try:
            alpha, beta = lanczos_jacobi(lam, w)
        except SpectrumInfeasible:
            continue
        Q, pi = _jacobi_to_kernel(alpha, beta)
        if np.min(np.diag(Q)) < -1e-13 or np.any(pi <= 0):
            continue
        Q = np.where(np.abs(Q) < 1e-15, 0.0, Q)
        Q = np.clip(Q, 0.0, 1.0)
        Q = Q / Q.sum(axis=1, keepdims=True)
        got = np.sort(np.linalg.eigvals(Q).real)
        if np.max(np.abs(got - np.sort(lam))) > 1e-8 or not is_irreducible(Q):
            continue
        return StochasticKernel(Q, pi, tol=tol)
    raise SpectrumInfeasible("no weight choice produced a stochastic tridiagonal kernel")


def permutation_link(perm, pi_Q) -> IntertwiningLink:
    """Unitary link ``Pi_s`` with the permuted measure on its codomain.

    With ``P = Pi Q Pi^T`` one has ``P Pi = Pi Q``; ``P`` is invariant for the
    measure ``pi_Q[perm]``.
    """
    Pm = permutation_matrix(perm)
    pi_Q = as_measure(pi_Q)
    return IntertwiningLink(Pm, pi_Q, pi_Q[list(perm)])

