"""Conjugating a birth-death generator by the pure-birth averaging link.

``Lam(x, x) = Lam(x, x+1) = 1/2`` for ``x < rho`` and ``Lam(rho, rho) = 1``.
For a birth-death generator ``G`` the conjugate ``L = Lam^{-1} G Lam``
satisfies ``G Lam = Lam L``; it is upper Hessenberg, has the spectrum of
``G`` and invariant law ``pi_G Lam``, but need not be a Markov generator.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .chain import GeneratorMatrix, is_birth_death
from .config import ToleranceConfig
from .errors import InternalCheckFailed, NotBirthDeath
from .orbit import IntertwiningLink
from .spectral import SpectralSystem, decompose


@dataclass(frozen=True)
class PureBirthLink:
    size: int

    def __post_init__(self):
        if self.size < 2:
            raise NotBirthDeath("pure-birth link needs at least two states")

    @cached_property
    def matrix(self) -> np.ndarray:
        n = self.size
        M = 0.5 * (np.eye(n) + np.eye(n, k=1))
        M[-1, -1] = 1.0
        M.setflags(write=False)
        return M

    @cached_property
    def inverse(self) -> np.ndarray:
        """``(-1)^{y-x} (2 [y != rho] + [y == rho])`` for ``x <= y``, else 0."""
        n = self.size
        x, y = np.indices((n, n))
        M = np.where(y >= x, (-1.0) ** (y - x) * np.where(y == n - 1, 1.0, 2.0), 0.0)
        M.setflags(write=False)
        return M


def birth_death_rates(G: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``b[x] = G(x, x+1)`` (with ``b[rho] = 0``) and ``d[x] = G(x, x-1)`` (with ``d[0] = 0``)."""
    n = G.shape[0]
    b = np.zeros(n)
    d = np.zeros(n)
    b[:-1] = np.diag(G, 1)
    d[1:] = np.diag(G, -1)
    return b, d


@dataclass(frozen=True)
class RateCondition:
    """One off-diagonal entry of ``L`` evaluated from the rates and from the matrix."""

    kind: str
    x: int
    y: int
    value: float
    matrix_value: float
    ok: bool

    def to_dict(self) -> dict:
        return {"kind": self.kind, "x": self.x, "y": self.y, "value": self.value,
                "matrix_value": self.matrix_value, "ok": self.ok}


@dataclass(frozen=True, eq=False)
class PureBirthConjugate:
    G: GeneratorMatrix
    L: GeneratorMatrix
    pi_L: np.ndarray
    link: PureBirthLink
    markovian: bool
    conditions: tuple[RateCondition, ...]
    condition_set: str  # "rates" when rho >= 4, else "direct"

    def failed(self) -> list[RateCondition]:
        return [c for c in self.conditions if not c.ok]

    def to_dict(self) -> dict:
        return {
            "L": self.L.matrix.tolist(),
            "pi_L": self.pi_L.tolist(),
            "markovian": self.markovian,
            "condition_set": self.condition_set,
            "conditions": [c.to_dict() for c in self.conditions],
        }


def _rate_formulas(b: np.ndarray, d: np.ndarray) -> dict[tuple[int, int], tuple[str, float]]:
    """Off-diagonal entries of ``L`` above the subdiagonal, as functions of the rates."""
    rho = b.size - 1
    B = lambda i: b[i] if 0 <= i <= rho else 0.0  # noqa: E731
    D = lambda i: d[i] if 0 <= i <= rho else 0.0  # noqa: E731
    out = {}
    for y in range(1, rho):
        v = -D(y - 1) + B(y) + D(y + 1) * (y < rho - 1) + 0.5 * D(y + 1) * (y + 1 == rho)
        out[(y - 1, y)] = ("superdiagonal", v)
    out[(rho - 1, rho)] = ("superdiagonal_last", -D(rho - 1) + B(rho - 1) + 0.5 * D(rho))
    for y in range(2, rho):
        core = B(y - 2) + D(y - 1) - B(y) - D(y + 1) + 0.5 * D(rho) * (y == rho - 1)
        for x in range(y - 1):
            out[(x, y)] = ("alternating", (-1.0) ** (x + y) * core)
    core = B(rho - 2) + D(rho - 1) - B(rho - 1) - 0.5 * D(rho)
    for x in range(rho - 1):
        out[(x, rho)] = ("alternating_last", (-1.0) ** (x + rho) * core)
    return out


def pure_birth_conjugate(G: GeneratorMatrix, tol: ToleranceConfig | None = None) -> PureBirthConjugate:
    """``L = Lam^{-1} G Lam`` with its invariant law and a Markov-condition report.

    For ``rho >= 4`` every entry of ``L`` above the subdiagonal is computed
    from closed-form rate expressions and cross-checked against the matrix.
    For smaller state spaces the signs of the matrix entries are inspected
    directly.

    Raises
    ------
    NotBirthDeath
        If ``G`` is not a tridiagonal Markov generator.
    InternalCheckFailed
        If a rate expression disagrees with the matrix by more than 1e-10.
    """
    tol = tol or G.tol
    if not isinstance(G, GeneratorMatrix) or not G.markovian:
        raise NotBirthDeath("expected a Markov generator")
    if not is_birth_death(G.matrix):
        raise NotBirthDeath("generator is not tridiagonal")
    G = G.with_stationary()
    n, rho = G.size, G.rho
    link = PureBirthLink(n)
    if np.max(np.abs(link.inverse @ link.matrix - np.eye(n))) > 1e-14:
        raise InternalCheckFailed("closed-form pure-birth inverse is wrong")
    Lm = link.inverse @ G.matrix @ link.matrix
    Lm = np.where(np.abs(Lm) < 1e-15, 0.0, Lm)
    pi_L = G.pi @ link.matrix
    scale = max(1.0, float(np.max(np.abs(Lm))))

    conds = []
    if rho >= 4:
        b, d = birth_death_rates(G.matrix)
        for (x, y), (kind, v) in sorted(_rate_formulas(b, d).items()):
            if abs(v - Lm[x, y]) > 1e-10 * scale:
                raise InternalCheckFailed(f"rate formula for L({x},{y}) gives {v!r}, matrix {Lm[x, y]!r}")
            conds.append(RateCondition(kind, x, y, float(v), float(Lm[x, y]), bool(v >= -1e-12 * scale)))
        condition_set = "rates"
    else:
        for x in range(n):
            for y in range(x + 1, n):
                v = float(Lm[x, y])
                conds.append(RateCondition("direct", x, y, v, v, bool(v >= -1e-12 * scale)))
        condition_set = "direct"
    off = Lm - np.diag(np.diag(Lm))
    markovian = bool(np.all(off >= -1e-12 * scale))
    if markovian != all(c.ok for c in conds):
        raise InternalCheckFailed("condition report disagrees with the matrix signs")
    if np.any(np.diag(Lm) >= 0):
        raise InternalCheckFailed("conjugate has a non-negative diagonal entry")
    L = GeneratorMatrix(Lm, pi_L, markovian=markovian, tol=tol)
    return PureBirthConjugate(G, L, L.pi, link, markovian, tuple(conds), condition_set)


@dataclass(frozen=True, eq=False)
class PureBirthSpectral:
    system: SpectralSystem
    times: np.ndarray
    tv: np.ndarray
    tv_bound: np.ndarray
    kappa: float
    gap: float
    expm_residual: float

    def curve_rows(self) -> list[dict]:
        return [{"t": float(t), "tv": float(a), "tv_bound": float(b)}
                for t, a, b in zip(self.times, self.tv, self.tv_bound)]


def pure_birth_spectral(
    G: GeneratorMatrix,
    conj: PureBirthConjugate | None = None,
    times=None,
) -> PureBirthSpectral:
    """Closed-form spectral system of ``L`` and its total-variation curve.

    ``f_j = Lam^{-1} phi_j`` and ``f*_j pi_L = (phi_j pi_G) Lam`` from the
    ``l2(pi_G)``-orthonormal eigenvectors ``phi_j`` of ``G``. The closed forms
    are checked against the generic link decomposition and ``expm``.
    """
    conj = conj or pure_birth_conjugate(G)
    G, L, link = conj.G, conj.L, conj.link
    pi_G, pi_L = G.pi, conj.pi_L
    base = decompose(G)
    phi = base.basis
    F = link.inverse @ phi
    rows = (phi * pi_G[:, None]).T @ link.matrix
    Fs = rows.T / pi_L[:, None]

    ilink = IntertwiningLink(link.inverse, pi_G, pi_L, L.tol)
    generic = decompose(L, ilink, G)
    if np.max(np.abs(generic.basis - F)) > 1e-8 or np.max(np.abs(generic.dual - Fs)) > 1e-8 * ilink.kappa:
        raise InternalCheckFailed("closed-form eigenfunctions disagree with the link decomposition")
    sys = SpectralSystem(base.eigenvalues, F, Fs, pi_L, True, base.distinct, True, "link", ilink, phi)

    times = np.linspace(0.0, 10.0, 41) if times is None else np.asarray(times, dtype=float)
    gap = float(-base.eigenvalues[1]) if base.size > 1 else 0.0
    kappa = ilink.kappa
    pmin = float(pi_L.min())
    fac = 0.5 * np.sqrt((1 - pmin) / pmin)
    tv = np.empty(times.size)
    bound = np.empty(times.size)
    worst = 0.0
    for i, t in enumerate(times):
        Pt = sla.expm(t * L.matrix)
        K = (F * np.exp(t * base.eigenvalues)[None, :]) @ (Fs * pi_L[:, None]).T
        worst = max(worst, float(np.max(np.abs(K - Pt))))
        tv[i] = 0.5 * np.max(np.sum(np.abs(Pt - pi_L[None, :]), axis=1))
        bound[i] = kappa * np.exp(-gap * t) * fac
    if worst > 1e-8:
        raise InternalCheckFailed(f"spectral expansion differs from expm by {worst:.3g}")
    if np.any(tv > bound * (1 + 1e-9) + 1e-12):
        raise InternalCheckFailed("total-variation distance exceeds its bound")
    return PureBirthSpectral(sys, times, tv, bound, kappa, gap, worst)
