"""Spectral decompositions of non-self-adjoint kernels and the bounds they give.

A :class:`SpectralSystem` stores eigenvalues ``lam_k``, a Riesz basis ``f_k``
(columns of ``basis``) and its biorthogonal family ``f*_k`` (columns of
``dual``), normalised so that

    P^n(x, y) = sum_k lam_k^n f_k(x) conj(f*_k(y)) pi(y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .chain import (
    Chain,
    GeneratorMatrix,
    StochasticKernel,
    is_reversible,
    weighted_adjoint,
    weighted_operator_norm,
)
from .config import ToleranceConfig
from .errors import (
    ComplexSpectrum,
    InternalCheckFailed,
    NotDiagonalizable,
    UnsupportedP,
    ValidationError,
)
from .orbit import IntertwiningLink, SimilarityPair, adjoint_link, verify_similarity


@dataclass(frozen=True, eq=False)
class SpectralSystem:
    """Eigen-triple of a kernel or generator in ``l2(pi)``.

    Attributes
    ----------
    eigenvalues : ndarray
        Sorted by decreasing real part, so the stationary atom comes first.
    basis, dual : ndarray
        Columns ``f_k`` and ``f*_k`` with ``<f_k, f*_m>_pi = delta_km``.
    pi : ndarray
        Reference measure of the decomposed chain.
    real : bool
        All imaginary parts below ``tol.real_imag``.
    distinct : bool
        All eigenvalue gaps at least ``tol.distinct``.
    generator : bool
        Whether the decomposed object is a generator.
    origin : str
        ``"link"``, ``"self-adjoint"`` or ``"eigenvectors"``.
    """

    eigenvalues: np.ndarray
    basis: np.ndarray
    dual: np.ndarray
    pi: np.ndarray
    real: bool
    distinct: bool
    generator: bool
    origin: str
    link: IntertwiningLink | None = None
    partner_basis: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.eigenvalues.size

    @property
    def projector_rows(self) -> np.ndarray:
        """Row ``k`` holds ``conj(f*_k) * pi``, the left eigenvector paired with ``f_k``."""
        return np.conj(self.dual).T * self.pi[None, :]

    def gram(self) -> np.ndarray:
        """``G[k, m] = <f_k, f*_m>_pi``; equals the identity for a valid system."""
        return (self.basis.T * self.pi[None, :]) @ np.conj(self.dual)

    def projection(self, k: int) -> np.ndarray:
        """Eigenprojection ``F_k = f_k (conj(f*_k) pi)^T``."""
        return np.outer(self.basis[:, k], self.projector_rows[k])

    def rates(self) -> np.ndarray:
        """``gamma_k = -lam_k`` for generators, ``1 - lam_k`` for kernels."""
        ev = self.eigenvalues
        return -ev if self.generator else 1.0 - ev

    def require_real(self) -> None:
        if not self.real:
            raise ComplexSpectrum("operation needs a real spectrum")


def min_gap(ev: np.ndarray) -> float:
    """Smallest distance between two eigenvalues (``inf`` for one eigenvalue)."""
    if ev.size < 2:
        return float("inf")
    d = np.abs(ev[:, None] - ev[None, :])
    np.fill_diagonal(d, np.inf)
    return float(d.min())


def _sort_order(ev: np.ndarray) -> np.ndarray:
    return np.lexsort((-ev.imag, -np.round(ev.real, 13)))


def _finish(ev, F, Fs, pi, tol, generator, origin, link=None, G=None) -> SpectralSystem:
    order = _sort_order(ev)
    ev, F, Fs = ev[order], F[:, order], Fs[:, order]
    G = None if G is None else G[:, order]
    real = bool(np.max(np.abs(ev.imag), initial=0.0) < tol.real_imag)
    if real:
        ev = ev.real
        if np.max(np.abs(F.imag), initial=0.0) < 1e-9 and np.max(np.abs(Fs.imag), initial=0.0) < 1e-9:
            F, Fs = F.real, Fs.real
            G = None if G is None else G.real
    distinct = bool(min_gap(ev) >= tol.distinct)
    for a in (ev, F, Fs):
        a.setflags(write=False)
    sys = SpectralSystem(ev, F, Fs, pi, real, distinct, generator, origin, link, G)
    err = np.max(np.abs(sys.gram() - np.eye(ev.size)))
    if err > tol.biorthogonal * max(1.0, _kappa_scale(sys)):
        raise InternalCheckFailed(f"biorthogonality residual {err:.3g}")
    return sys


def _kappa_scale(sys: SpectralSystem) -> float:
    if sys.link is not None:
        return sys.link.kappa
    if sys.origin == "eigenvectors":
        return _eigvec_kappa(sys)
    return 1.0


def _orthonormal_eigvecs(M: np.ndarray, pi: np.ndarray, self_adjoint: bool):
    """Eigenpairs of a normal operator on ``l2(pi)`` with ``l2(pi)``-orthonormal vectors."""
    s = np.sqrt(pi)
    S = s[:, None] * M / s[None, :]
    if self_adjoint:
        S = 0.5 * (S + S.T)
        ev, U = np.linalg.eigh(S)
        # sign convention: the largest-magnitude entry of each vector is positive
        idx = np.argmax(np.abs(U) - 1e-12 * np.arange(U.shape[0])[:, None], axis=0)
        U = U * np.sign(U[idx, np.arange(U.shape[1])])[None, :]
        ev = ev.astype(complex)
    else:
        T, U = sla.schur(S.astype(complex), output="complex")
        ev = np.diag(T).copy()
    return ev, U / s[:, None]


def decompose(
    P: Chain,
    link: IntertwiningLink | SimilarityPair | None = None,
    Q: Chain | None = None,
    tol: ToleranceConfig | None = None,
) -> SpectralSystem:
    """Spectral decomposition of a kernel or generator.

    With a link to a normal partner ``Q``, the partner's orthonormal
    eigenvectors ``g_k`` are pushed forward: ``f_k = Lam g_k`` and
    ``f*_k = Lam_hat^{-1} g_k``. Without a link, a self-adjoint chain is
    diagonalised orthogonally and any other chain through its eigenvector
    matrix, which needs distinct eigenvalues.

    Raises
    ------
    NotDiagonalizable
        No link given and two eigenvalues are closer than ``tol.distinct``.
    """
    tol = tol or P.tol
    P = P.with_stationary()
    generator = isinstance(P, GeneratorMatrix)
    if isinstance(link, SimilarityPair):
        Q = link.Q
        link = link.link
    if link is not None:
        if Q is None:
            raise ValidationError("a link needs its partner chain Q")
        Q = Q.with_stationary()
        pair = verify_similarity(P, Q, link, tol)
        if not pair.verified:
            raise ValidationError(f"similarity residual {pair.residual:.3g} too large")
        link = pair.link
        piQ = link.domain_pi
        Qm = Q.matrix
        QQh = Qm @ weighted_adjoint(Qm, piQ)
        if np.max(np.abs(QQh - weighted_adjoint(Qm, piQ) @ Qm)) > tol.structural * max(1.0, np.abs(Qm).max() ** 2):
            raise ValidationError("partner Q is not normal")
        ev, G = _orthonormal_eigvecs(Qm, piQ, is_reversible(Q))
        F = link.matrix @ G
        Fs = np.linalg.solve(adjoint_link(link).matrix, G)
        return _finish(ev, F, Fs, link.codomain_pi, tol, generator, "link", link, G)

    pi = P.pi
    if is_reversible(P):
        ev, F = _orthonormal_eigvecs(P.matrix, pi, True)
        return _finish(ev, F, F.copy(), pi, tol, generator, "self-adjoint")

    ev, V = np.linalg.eig(P.matrix)
    if min_gap(ev) < tol.distinct:
        raise NotDiagonalizable("eigenvalues are not distinct; supply a link")
    V = V.astype(complex)
    V = V / np.sqrt(np.sum(np.abs(V) ** 2 * pi[:, None], axis=0))[None, :]
    W = np.linalg.inv(V)
    Fs = np.conj(W).T / pi[:, None]
    return _finish(ev.astype(complex), V, Fs, pi, tol, generator, "eigenvectors")


def kernel_power_expansion(sys: SpectralSystem, n: int, x: int | None = None, y: int | None = None):
    """``sum_k lam_k^n f_k(x) conj(f*_k(y)) pi(y)``; full matrix if ``x`` or ``y`` is None."""
    ev = sys.eigenvalues
    coeff = ev**n if n > 0 else np.ones_like(ev)
    return _expand(sys, coeff, x, y)


def semigroup_expansion(sys: SpectralSystem, t: float, x: int | None = None, y: int | None = None):
    """``sum_k exp(t lam_k) f_k(x) conj(f*_k(y)) pi(y)`` for a generator system."""
    if t < 0:
        raise ValidationError("time must be non-negative")
    return _expand(sys, np.exp(t * sys.eigenvalues), x, y)


def _expand(sys, coeff, x, y):
    R = sys.projector_rows
    if x is None or y is None:
        M = (sys.basis * coeff[None, :]) @ R
        return M.real if sys.real or np.max(np.abs(M.imag)) < 1e-12 else M
    v = np.sum(sys.basis[x] * coeff * R[:, y])
    return float(v.real) if abs(v.imag) < 1e-12 else complex(v)


# ----------------------------------------------------------------------------
# convergence bounds
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceBound:
    """Constants of the two-phase bound ``lam*^n <= ||P^n - pi|| <= min(sigma*^n, kappa lam*^n)``.

    ``n_star`` is the first ``n`` at which the ``kappa`` branch wins; it is
    ``None`` when ``sigma* <= lam*`` and 0 when ``kappa == 1``. ``diag_flag``
    records ``max_i P(i, i) > lam*``.
    """

    lambda_star: float
    sigma_star: float
    kappa: float
    n_star: int | None
    pi_min: float
    diag_flag: bool
    link_source: str

    def to_dict(self) -> dict:
        return {
            "lambda_star": self.lambda_star,
            "sigma_star": self.sigma_star,
            "kappa": self.kappa,
            "n_star": self.n_star,
            "pi_min": self.pi_min,
            "diag_flag": self.diag_flag,
            "link_source": self.link_source,
        }


def slem(sys: SpectralSystem) -> float:
    """Largest modulus among non-stationary eigenvalues (kernels)."""
    ev = sys.eigenvalues
    return float(np.max(np.abs(ev[1:]), initial=0.0))


def second_singular_value(P: StochasticKernel) -> float:
    pi = P.require_pi()
    s = np.sqrt(pi)
    S = s[:, None] * P.matrix / s[None, :]
    sv = np.linalg.svd(S, compute_uv=False)
    return float(sv[1]) if sv.size > 1 else 0.0


def _eigvec_kappa(sys: SpectralSystem) -> float:
    S = np.sqrt(sys.pi)[:, None] * sys.basis
    return float(np.linalg.cond(S))


def convergence_bound(
    P: StochasticKernel,
    link: IntertwiningLink | SimilarityPair | None = None,
    Q: StochasticKernel | None = None,
    tol: ToleranceConfig | None = None,
) -> ConvergenceBound:
    """Bound constants for a kernel, through a link to a normal partner.

    Without a link the kernel must be normal (``kappa = 1``); otherwise its
    ``l2(pi)``-normalised eigenvector matrix acts as the link.
    """
    tol = tol or P.tol
    P = P.with_stationary()
    if isinstance(link, SimilarityPair):
        link, Q = link.link, link.Q
    if link is not None:
        sys = decompose(P, link, Q, tol)
        kappa, source = link.kappa, "link"
    else:
        sys = decompose(P, tol=tol)
        if sys.origin == "self-adjoint" or _is_normal_matrix(P):
            kappa, source = 1.0, "normal"
        else:
            kappa, source = _eigvec_kappa(sys), "eigenvectors"
    lam = slem(sys)
    sig = second_singular_value(P)
    if lam > sig + 1e-10:
        raise InternalCheckFailed(f"SLEM {lam:.6g} exceeds second singular value {sig:.6g}")
    kappa = max(kappa, 1.0)
    if kappa <= 1.0 + 1e-12:
        n_star = 0
    elif sig > lam and lam > 0:
        n_star = int(math.ceil(math.log(kappa) / (math.log(sig) - math.log(lam))))
    else:
        n_star = None
    diag = bool(np.max(np.diag(P.matrix)) > lam)
    return ConvergenceBound(lam, sig, float(kappa), n_star, float(P.pi.min()), diag, source)


def _is_normal_matrix(P: Chain) -> bool:
    R = weighted_adjoint(P.matrix, P.pi)
    return bool(np.max(np.abs(P.matrix @ R - R @ P.matrix)) <= P.tol.structural)


def evaluate_bound(b: ConvergenceBound, n: int) -> tuple[float, float]:
    """``(lam*^n, min(sigma*^n, kappa lam*^n))``."""
    if n == 0:
        return 1.0, min(1.0, b.kappa)
    lower = b.lambda_star**n
    return lower, min(b.sigma_star**n, b.kappa * lower)


def distance_operator_norm(P: StochasticKernel, n: int) -> float:
    """``||P^n - 1 pi||`` as an operator on ``l2(pi)``."""
    pi = P.require_pi()
    M = np.linalg.matrix_power(P.matrix, n) - np.outer(np.ones(P.size), pi)
    return weighted_operator_norm(M, pi)


def tv_distance(P: StochasticKernel, n: int) -> float:
    """``max_x 1/2 sum_y |P^n(x, y) - pi(y)|``."""
    pi = P.require_pi()
    M = np.linalg.matrix_power(P.matrix, n)
    return float(0.5 * np.max(np.sum(np.abs(M - pi[None, :]), axis=1)))


def tv_bound(b: ConvergenceBound, n: int) -> float:
    _, upper = evaluate_bound(b, n)
    return 0.5 * upper * math.sqrt((1.0 - b.pi_min) / b.pi_min)


def bound_curve(P: StochasticKernel, b: ConvergenceBound, ns) -> list[dict]:
    """Rows ``(n, lower, norm, upper, tv, tv_bound)`` for plotting."""
    rows = []
    for n in ns:
        lo, up = evaluate_bound(b, int(n))
        rows.append(
            {
                "n": int(n),
                "lower": lo,
                "norm": distance_operator_norm(P, int(n)),
                "upper": up,
                "tv": tv_distance(P, int(n)),
                "tv_bound": tv_bound(b, int(n)),
            }
        )
    return rows


# ----------------------------------------------------------------------------
# continuous time
# ----------------------------------------------------------------------------


def spectral_gap(G: GeneratorMatrix) -> float:
    """Smallest non-zero eigenvalue of ``-G`` for a reversible generator."""
    G = G.with_stationary()
    s = np.sqrt(G.pi)
    S = s[:, None] * G.matrix / s[None, :]
    ev = np.sort(np.linalg.eigvalsh(-0.5 * (S + S.T)))
    return float(ev[1]) if ev.size > 1 else 0.0


def _lp_exponent(p: float) -> float:
    if math.isinf(p):
        return 1.0
    return abs(1.0 - 2.0 / p)


@dataclass(frozen=True)
class LpBounds:
    p: float
    t: float
    lower: float
    upper: float
    norm: float | None
    upper_holds: bool | None

    def to_dict(self) -> dict:
        return dict(p=self.p, t=self.t, lower=self.lower, upper=self.upper,
                    norm=self.norm, upper_holds=self.upper_holds)


def lp_operator_norm(K: np.ndarray, pi: np.ndarray, p: float) -> float:
    """Induced norm of ``K`` on ``L^p(pi)`` for ``p`` in {1, 2, inf}."""
    if p == 2:
        return weighted_operator_norm(K, pi)
    if math.isinf(p):
        return float(np.max(np.sum(np.abs(K), axis=1)))
    if p == 1:
        return float(np.max(np.sum(np.abs(K) * pi[:, None], axis=0) / pi))
    raise UnsupportedP(f"exact norm only for p in {{1, 2, inf}}, got {p}")


def lp_bounds(
    L: GeneratorMatrix,
    link: IntertwiningLink | None,
    t: float,
    p: float,
    G: GeneratorMatrix | None = None,
    *,
    verify: bool = True,
    tol: ToleranceConfig | None = None,
) -> LpBounds:
    """Interpolated ``L^p(pi)`` bounds on ``||P_t - pi||``.

    ``lower = 2^{theta-1} exp(-lam t theta)`` with ``theta = tol.theta_p`` and
    ``upper = 2^{e} (kappa exp(-lam t))^{1-e}`` with ``e = |1 - 2/p|``.
    ``lam`` is the spectral gap of the reversible partner ``G`` (of ``L``
    itself when no partner is given). The lower bound is reported only.

    Raises
    ------
    UnsupportedP
        With ``verify=True`` and ``p`` outside {1, 2, inf}.
    """
    tol = tol or L.tol
    L = L.with_stationary()
    if p < 1:
        raise UnsupportedP("p must be at least 1")
    if verify and not (p in (1, 2) or math.isinf(p)):
        raise UnsupportedP(f"exact verification only for p in {{1, 2, inf}}, got {p}")
    partner = G if G is not None else L
    if G is None and not is_reversible(L):
        raise ValidationError("non-reversible generator needs its reversible partner G")
    gap = spectral_gap(partner)
    kappa = 1.0 if link is None else link.kappa
    theta = tol.theta_p
    e = _lp_exponent(p)
    lower = 2.0 ** (theta - 1.0) * math.exp(-gap * t * theta)
    upper = 2.0**e * (kappa * math.exp(-gap * t)) ** (1.0 - e)
    norm = holds = None
    if verify:
        K = sla.expm(t * L.matrix) - np.outer(np.ones(L.size), L.pi)
        norm = lp_operator_norm(K, L.pi, p)
        holds = bool(norm <= upper * (1 + 1e-9) + 1e-12)
    return LpBounds(float(p), float(t), lower, upper, norm, holds)


def _as_generator(M: Chain) -> GeneratorMatrix:
    if isinstance(M, GeneratorMatrix):
        return M.with_stationary()
    K = M.with_stationary()
    return GeneratorMatrix(K.matrix - np.eye(K.size), K.pi, tol=K.tol)


def eigentime_identity(L: Chain, link: IntertwiningLink | SimilarityPair | None = None, Q=None,
                       tol: ToleranceConfig | None = None) -> tuple[float, float]:
    """Spectral and hitting-time sides of the eigentime identity.

    ``spectral = sum 1/gamma`` over the non-zero eigenvalues ``gamma`` of
    ``-L``; ``hitting = sum_{x,y} pi(x) pi(y) E_x[tau_y]`` from one linear
    solve per target state. A kernel ``P`` is read as ``L = P - I``.

    Raises
    ------
    ComplexSpectrum
        If ``L`` has eigenvalues with non-negligible imaginary part.
    InternalCheckFailed
        If the two sides differ by more than ``1e-8`` relatively.
    """
    L = _as_generator(L)
    tol = tol or L.tol
    if isinstance(link, SimilarityPair):
        link, Q = link.link, _as_generator(link.Q)
    if link is not None:
        sys = decompose(L, link, _as_generator(Q), tol)
        ev = sys.eigenvalues
    else:
        ev = np.linalg.eigvals(L.matrix)
    if np.max(np.abs(ev.imag), initial=0.0) >= tol.real_imag:
        raise ComplexSpectrum("eigentime identity needs a real spectrum")
    gam = np.sort(-np.real(ev))
    spectral = float(np.sum(1.0 / gam[1:]))
    hitting = hitting_time_sum(L)
    if abs(spectral - hitting) > 1e-8 * abs(spectral):
        raise InternalCheckFailed(f"eigentime mismatch: {spectral!r} vs {hitting!r}")
    return spectral, hitting


def mean_hitting_times(L: GeneratorMatrix) -> np.ndarray:
    """``H[x, y] = E_x[tau_y]`` with ``H[y, y] = 0``."""
    n = L.size
    H = np.zeros((n, n))
    for y in range(n):
        keep = np.array([i for i in range(n) if i != y])
        A = -L.matrix[np.ix_(keep, keep)]
        H[keep, y] = np.linalg.solve(A, np.ones(n - 1))
    return H


def hitting_time_sum(L: GeneratorMatrix) -> float:
    pi = L.require_pi()
    return float(pi @ mean_hitting_times(L) @ pi)
