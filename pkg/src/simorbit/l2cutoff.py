"""Chi-squared distance, its spectral measure and L^2 / max-L^p cutoff statistics.

For a generator ``L`` with eigenprojections ``F_j`` (rates ``gamma_j`` of
``-L``) and an initial density ``f = d eta / d pi``,

    D_2(eta, t)^2 = || sum_{j : gamma_j > 0} exp(-gamma_j t) F_j^* f ||_pi^2.

The diagonal terms ``v_j = <F_j F_j^* f, f>_pi`` define the measure ``V``.
When ``L`` is normal the ``F_j^* f`` are orthogonal and the diagonal sum
equals the distance. Otherwise the cross terms are kept separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .chain import GeneratorMatrix, weighted_adjoint
from .config import ToleranceConfig
from .errors import FamilyTooSmall, NonMonotoneDistance, UnsupportedP, ValidationError
from .orbit import IntertwiningLink
from .spectral import SpectralSystem, decompose, spectral_gap


@dataclass(frozen=True, eq=False)
class Member:
    """One chain of a family: a generator, its reversible partner and a link ``L Lam = Lam G``."""

    L: GeneratorMatrix
    G: GeneratorMatrix | None = None
    link: IntertwiningLink | None = None
    eta: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "L", self.L.with_stationary())
        if self.G is not None:
            object.__setattr__(self, "G", self.G.with_stationary())

    @property
    def size(self) -> int:
        return self.L.size

    def start(self) -> np.ndarray:
        if self.eta is None:
            e = np.zeros(self.size)
            e[0] = 1.0
            return e
        return np.asarray(self.eta, dtype=float)

    def system(self) -> SpectralSystem:
        if self.link is not None:
            return decompose(self.L, self.link, self.G)
        return decompose(self.L)

    def gap(self) -> float:
        return spectral_gap(self.G if self.G is not None else self.L)

    def kappa(self) -> float:
        return 1.0 if self.link is None else self.link.kappa


def _density(eta, pi) -> np.ndarray:
    eta = np.asarray(eta, dtype=float)
    if np.any(eta < 0) or abs(eta.sum() - 1) > 1e-10:
        raise ValidationError("eta must be a probability vector")
    return eta / pi


def direct_chi_squared(L: GeneratorMatrix, eta, t: float) -> float:
    """``sum_y (eta P_t(y) / pi(y) - 1)^2 pi(y)`` with ``P_t = expm(t L)``."""
    L = L.with_stationary()
    row = np.asarray(eta, dtype=float) @ sla.expm(t * L.matrix)
    h = row / L.pi
    return float(np.sum((h - 1.0) ** 2 * L.pi))


@dataclass(frozen=True, eq=False)
class SpectralMeasureV:
    """Atoms ``(gamma_j, v_j)`` of ``V`` for a density ``f``, plus the cross-term Gram matrix.

    ``gram[j, k] = <F_j^* f, F_k^* f>_pi``; its diagonal is ``masses``.
    """

    rates: np.ndarray
    masses: np.ndarray
    gram: np.ndarray
    f: np.ndarray
    resolution_residual: float
    multiplicativity_residual: float

    def nonzero(self, eps: float = 1e-9) -> np.ndarray:
        return self.rates > eps

    def diagonal_chi_squared(self, t: float) -> float:
        m = self.nonzero()
        return float(np.sum(np.exp(-2 * self.rates[m] * t) * self.masses[m]))

    def bilinear_chi_squared(self, t: float) -> float:
        m = self.nonzero()
        e = np.exp(-self.rates[m] * t)
        return float(np.real(e @ self.gram[np.ix_(m, m)] @ e))

    def total_mass(self) -> float:
        return float(np.sum(self.masses))

    def to_dict(self) -> dict:
        return {"rates": self.rates.tolist(), "masses": self.masses.tolist(),
                "resolution_residual": self.resolution_residual,
                "multiplicativity_residual": self.multiplicativity_residual}


def spectral_measure_v(L: GeneratorMatrix, link: IntertwiningLink | None, f, G: GeneratorMatrix | None = None,
                       sys: SpectralSystem | None = None) -> SpectralMeasureV:
    """Spectral measure of ``-L`` tested against ``f``.

    Raises
    ------
    ComplexSpectrum
        If ``L`` has a non-real spectrum.
    """
    L = L.with_stationary()
    if sys is None:
        sys = decompose(L, link, G) if link is not None else decompose(L)
    sys.require_real()
    pi = sys.pi
    n = sys.size
    f = np.asarray(f, dtype=float)
    Fs = [sys.projection(k) for k in range(n)]
    res = float(np.max(np.abs(sum(Fs) - np.eye(n))))
    mult = 0.0
    for j in range(n):
        for k in range(n):
            target = Fs[j] if j == k else 0.0
            mult = max(mult, float(np.max(np.abs(Fs[j] @ Fs[k] - target))))
    vecs = np.array([np.real(weighted_adjoint(F, pi) @ f) for F in Fs])
    gram = (vecs * pi[None, :]) @ vecs.T
    masses = np.diag(gram).copy()
    rates = -np.real(sys.eigenvalues)
    return SpectralMeasureV(rates, masses, gram, f, res, mult)


@dataclass(frozen=True)
class ChiSquaredRecord:
    t: float
    direct: float
    spectral: float
    bilinear: float
    agree: bool

    @property
    def residual(self) -> float:
        return abs(self.direct - self.spectral)

    def to_dict(self) -> dict:
        return {"t": self.t, "direct": self.direct, "spectral": self.spectral,
                "bilinear": self.bilinear, "agree": self.agree}


def chi_squared_distance(L: GeneratorMatrix, eta, t: float, link: IntertwiningLink | None = None,
                         G: GeneratorMatrix | None = None, tol: ToleranceConfig | None = None) -> ChiSquaredRecord:
    """``D_2(eta, t)^2`` directly and from the spectral measure.

    ``agree`` reports whether the diagonal spectral sum matches the direct
    value within ``1e-8``. The bilinear sum always matches.

    Raises
    ------
    ComplexSpectrum
        If ``L`` has a non-real spectrum.
    """
    L = L.with_stationary()
    f = _density(eta, L.pi)
    V = spectral_measure_v(L, link, f, G)
    direct = direct_chi_squared(L, eta, t)
    spec = V.diagonal_chi_squared(t)
    bil = V.bilinear_chi_squared(t)
    return ChiSquaredRecord(float(t), direct, spec, bil, bool(abs(direct - spec) <= 1e-8))


# ----------------------------------------------------------------------------
# L^2 cutoff
# ----------------------------------------------------------------------------


def _check_monotone(fn, t_hi: float, points: int = 33) -> None:
    ts = np.linspace(0.0, t_hi, points)
    vals = np.array([fn(t) for t in ts])
    if np.any(np.diff(vals) > 1e-12 * max(1.0, vals[0])):
        raise NonMonotoneDistance("distance is not non-increasing in time")


def hitting_time(fn, level: float, rel_tol: float = 1e-9, t_max: float = 1e8,
                 check: bool = True) -> float:
    """``inf {t >= 0 : fn(t) <= level}`` for a non-increasing ``fn``, by doubling and bisection."""
    if fn(0.0) <= level:
        return 0.0
    hi = 1.0
    while fn(hi) > level:
        hi *= 2.0
        if hi > t_max:
            raise NonMonotoneDistance("distance does not fall below the level")
    if check:
        _check_monotone(fn, hi)
    lo = 0.0
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if fn(mid) <= level:
            hi = mid
        else:
            lo = mid
    return hi


class _D2:
    """Chi-squared distance curve from the spectral expansion of ``P_t``."""

    def __init__(self, member: Member, sys: SpectralSystem):
        self.pi = member.L.pi
        eta = member.start()
        self.coef = (eta @ sys.basis)
        self.rows = sys.projector_rows
        self.ev = sys.eigenvalues

    def __call__(self, t: float) -> float:
        row = np.real((self.coef * np.exp(t * self.ev)) @ self.rows)
        return float(math.sqrt(max(np.sum((row / self.pi - 1.0) ** 2 * self.pi), 0.0)))


@dataclass(frozen=True)
class L2CutoffRecord:
    size: int
    label: str
    spectral_gap: float
    t_delta: float
    lambda_C: float
    tau_C: float
    gamma: float
    b: float
    integral_2: float
    integral_3: float
    initial_mass: float
    kappa: float

    @property
    def product_2(self) -> float:
        return self.t_delta * self.lambda_C

    @property
    def product_3(self) -> float:
        return self.tau_C * self.lambda_C

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["t_lambda"] = self.product_2
        d["tau_lambda"] = self.product_3
        return d


@dataclass(frozen=True)
class L2CutoffResult:
    records: tuple[L2CutoffRecord, ...]
    delta: float
    C: float
    eps: float
    verdict_2: bool
    verdict_3: bool
    warnings: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {"delta": self.delta, "C": self.C, "eps": self.eps, "heuristic": True,
                "verdict_2": self.verdict_2, "verdict_3": self.verdict_3,
                "records": [r.to_dict() for r in self.records], "warnings": list(self.warnings)}


def l2_record(member: Member, delta: float = 1.0, C: float = 1.0, eps: float = 1.0,
              tol: ToleranceConfig | None = None) -> L2CutoffRecord:
    tol = tol or member.L.tol
    sys = member.system()
    pi = member.L.pi
    f = _density(member.start(), pi)
    V = spectral_measure_v(member.L, member.link, f, member.G, sys)
    keep = V.nonzero()
    rates, masses = V.rates[keep], V.masses[keep]
    order = np.argsort(rates)
    rates, masses = rates[order], masses[order]
    gap = member.gap()
    cum = np.cumsum(masses)
    above = np.nonzero(cum > C)[0]
    if above.size == 0:
        lam_C = math.inf
        tau = 0.0
    else:
        i0 = int(above[0])
        lam_C = float(rates[i0])
        tau = float(np.max(np.log1p(cum[i0:]) / (2.0 * rates[i0:])))
    d2 = _D2(member, sys)
    t_delta = hitting_time(d2, delta, tol.bisection_rel)
    low = rates <= lam_C
    int2 = float(np.sum(np.exp(-eps * rates[low] * t_delta) * masses[low]))
    int3 = float(np.sum(np.exp(-eps * rates[low] * tau) * masses[low]))
    gamma = 1.0 / lam_C if lam_C > 0 else math.inf
    b = gamma * math.log(lam_C * tau) if math.isfinite(lam_C) and tau > 0 else math.nan
    return L2CutoffRecord(member.size, member.label, gap, t_delta, lam_C, tau, gamma, b,
                          int2, int3, float(np.sum(f**2 * pi)), member.kappa())


def l2_cutoff_criteria(family, delta: float = 1.0, C: float = 1.0, eps: float = 1.0) -> L2CutoffResult:
    """Finite-family trend versions of the two spectral L^2-cutoff criteria.

    Criterion 2 holds on the family when ``t(delta) lambda(C)`` is strictly
    increasing and the truncated integral at ``t(delta)`` strictly decreases.
    Criterion 3 is the same with ``tau(C)`` in place of ``t(delta)``.

    Raises
    ------
    FamilyTooSmall
        With fewer than two members.
    """
    family = list(family)
    if len(family) < 2:
        raise FamilyTooSmall("need at least two family members")
    if min(delta, C, eps) <= 0:
        raise ValidationError("delta, C and eps must be positive")
    recs = tuple(l2_record(m, delta, C, eps) for m in family)
    p2 = np.array([r.product_2 for r in recs])
    p3 = np.array([r.product_3 for r in recs])
    i2 = np.array([r.integral_2 for r in recs])
    i3 = np.array([r.integral_3 for r in recs])
    v2 = bool(np.all(np.diff(p2) > 0) and np.all(np.diff(i2) < 0))
    v3 = bool(np.all(np.diff(p3) > 0) and np.all(np.diff(i3) < 0))
    warns = []
    if not np.all(np.diff([r.initial_mass for r in recs]) > 0):
        warns.append("pi(f^2) is not increasing along the family")
    return L2CutoffResult(recs, float(delta), float(C), float(eps), v2, v3, tuple(warns))


# ----------------------------------------------------------------------------
# max-L^p cutoff
# ----------------------------------------------------------------------------


def max_lp_distance(member: Member, t: float, p: float, sys: SpectralSystem | None = None) -> float:
    """``max_x || p_t(x, .) / pi - 1 ||_{L^p(pi)}``."""
    L = member.L
    K = sla.expm(t * L.matrix) if sys is None else _power(sys, t)
    H = K / L.pi[None, :] - 1.0
    if p == 2:
        return float(np.max(np.sqrt(np.sum(H**2 * L.pi[None, :], axis=1))))
    if p == 1:
        return float(np.max(np.sum(np.abs(H) * L.pi[None, :], axis=1)))
    if math.isinf(p):
        return float(np.max(np.abs(H)))
    raise UnsupportedP(f"exact distance only for p in {{1, 2, inf}}, got {p}")


def _power(sys: SpectralSystem, t: float) -> np.ndarray:
    M = (sys.basis * np.exp(t * sys.eigenvalues)[None, :]) @ sys.projector_rows
    return np.real(M)


@dataclass(frozen=True)
class LpCutoffTable:
    p: float
    eps: float
    sizes: tuple[int, ...]
    t: tuple[float, ...]
    gaps: tuple[float, ...]
    kappas: tuple[float, ...]

    @property
    def products(self) -> tuple[float, ...]:
        return tuple(a * b for a, b in zip(self.t, self.gaps))

    @property
    def kappa_max(self) -> float:
        return max(self.kappas)

    def to_dict(self) -> dict:
        return {"p": self.p, "eps": self.eps, "sizes": list(self.sizes), "t": list(self.t),
                "spectral_gap": list(self.gaps), "t_lambda": list(self.products),
                "kappa": list(self.kappas), "kappa_max": self.kappa_max,
                "increasing": bool(np.all(np.diff(self.products) > 0))}


def max_lp_cutoff_stats(family, p: float = 2, eps: float = 0.5) -> LpCutoffTable:
    """Mixing times ``t_n`` of the max-L^p distance, gaps ``lambda_n`` and ``t_n lambda_n``.

    Raises
    ------
    UnsupportedP
        For ``p`` outside {1, 2, inf}.
    """
    if not (p in (1, 2) or math.isinf(p)):
        raise UnsupportedP(f"exact distance only for p in {{1, 2, inf}}, got {p}")
    family = list(family)
    if not family:
        raise FamilyTooSmall("empty family")
    ts, gaps, kaps = [], [], []
    for m in family:
        sys = m.system()
        ts.append(hitting_time(lambda t: max_lp_distance(m, t, p, sys), eps))
        gaps.append(m.gap())
        kaps.append(m.kappa())
    return LpCutoffTable(float(p), float(eps), tuple(m.size for m in family), tuple(ts),
                         tuple(gaps), tuple(kaps))
