"""Fastest strong stationary times, separation distance and separation cutoff.

For a chain in the lazy monotonicity class started from ``eta`` (default
``delta_0``), the fastest strong stationary time is a mixture over ``k`` of
sums of ``k`` independent geometric (or exponential) variables with rates
``theta_i = 1 - lam_i``, the non-unit eigenvalues sorted non-decreasingly.
The mixture weights come from the spectral polynomials

    Q_k = prod_{i<=k} (P - lam_i I) / (1 - lam_i),
    c_k = (Gamma(k) - Gamma(k-1)) / pi(rho),  Gamma(k) = (eta Q_k)(rho).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .chain import Chain, GeneratorMatrix, StochasticKernel
from .config import ToleranceConfig
from .errors import ComplexSpectrum, FamilyTooSmall, InternalCheckFailed, NotInGmcPlus, ValidationError
from .gmc import check_gmc


@dataclass(frozen=True, eq=False)
class PhaseTypeMixture:
    """Law of ``T = G_1 + ... + G_K`` with ``P(K = k) = weights[k]``.

    ``G_i`` is geometric on ``{1, 2, ...}`` with success probability
    ``thetas[i-1]`` (discrete mode) or exponential with rate ``thetas[i-1]``
    (continuous mode).
    """

    weights: np.ndarray
    eigenvalues: np.ndarray
    mode: str
    thetas: np.ndarray
    warnings: tuple[str, ...] = field(default=())

    @property
    def rho(self) -> int:
        return self.thetas.size

    @property
    def tails(self) -> np.ndarray:
        """``w_i = sum_{j >= i} c_j`` for ``i = 1..rho``."""
        return np.cumsum(self.weights[::-1])[::-1][1:]

    def mean(self) -> float:
        return float(np.sum(self.tails / self.thetas))

    def variance(self) -> float:
        """Exact variance of the mixture."""
        th = self.thetas
        var_i = (1.0 - th) / th**2 if self.mode == "discrete" else 1.0 / th**2
        mean_k = np.concatenate([[0.0], np.cumsum(1.0 / th)])
        var_k = np.concatenate([[0.0], np.cumsum(var_i)])
        second = float(np.sum(self.weights * (var_k + mean_k**2)))
        return second - self.mean() ** 2

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "weights": self.weights.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "thetas": self.thetas.tolist(),
            "mean": self.mean(),
            "variance": self.variance(),
            "warnings": list(self.warnings),
        }


def _start_vector(start, n: int) -> np.ndarray:
    if start is None:
        start = 0
    if isinstance(start, (int, np.integer)):
        v = np.zeros(n)
        v[int(start)] = 1.0
        return v
    v = np.asarray(start, dtype=float).ravel()
    if v.size != n or np.any(v < 0) or abs(v.sum() - 1) > 1e-10:
        raise ValidationError("start must be a state or a probability vector")
    return v


def _kernel_of(chain: Chain) -> tuple[np.ndarray, np.ndarray, bool]:
    chain = chain.with_stationary()
    if isinstance(chain, GeneratorMatrix):
        return chain.matrix, chain.pi, True
    return chain.matrix, chain.pi, False


def fsst_distribution(
    P: Chain,
    mode: str = "discrete",
    start=None,
    *,
    strict: bool = True,
    tol: ToleranceConfig | None = None,
) -> PhaseTypeMixture:
    """Mixture law of the fastest strong stationary time.

    Parameters
    ----------
    P : StochasticKernel or GeneratorMatrix
        A kernel gives either mode; ``continuous`` then refers to the
        continuised chain with generator ``P - I``. A generator gives the
        continuous mode only.
    mode : {"discrete", "continuous"}
    start : int or array_like, optional
        Initial state or distribution, default state 0.
    strict : bool
        Require membership in the lazy class. With ``strict=False`` only the
        spectral preconditions and the weight signs are checked.

    Raises
    ------
    NotInGmcPlus
        Class membership fails, an eigenvalue is negative in discrete mode,
        or a weight is below ``-tol.hard_negative``.
    ComplexSpectrum
        If the spectrum is not real.
    """
    if mode not in ("discrete", "continuous"):
        raise ValidationError(f"unknown mode {mode!r}")
    tol = tol or P.tol
    M, pi, is_gen = _kernel_of(P)
    if is_gen and mode == "discrete":
        raise ValidationError("a generator only has a continuous-time FSST")
    n = M.shape[0]
    if strict:
        K = P.with_stationary()
        if is_gen:
            q = float(np.max(-np.diag(M)))
            K = StochasticKernel(np.eye(n) + M / q, pi, tol=tol)
        rep = check_gmc(K, tol)
        ok = rep.member if is_gen else (rep.member_plus or (mode == "continuous" and rep.member))
        if not ok:
            raise NotInGmcPlus(f"violated conditions {sorted(rep.violated_conditions())}")

    ev = np.linalg.eigvals(M)
    if np.max(np.abs(ev.imag)) >= tol.real_imag:
        raise ComplexSpectrum("FSST needs a real spectrum")
    ev = ev.real
    top = int(np.argmax(ev))
    rest = np.sort(np.delete(ev, top))
    if is_gen:
        thetas = -rest
        lam = rest
        factors = [(M + th * np.eye(n)) / th for th in thetas]
    else:
        lam = rest
        thetas = 1.0 - lam
        if mode == "discrete" and np.any(lam < -tol.real_imag):
            raise NotInGmcPlus("negative eigenvalue: geometric phases undefined")
        factors = [(M - l * np.eye(n)) / (1.0 - l) for l in lam]
    if np.any(thetas <= 0):
        raise InternalCheckFailed("non-positive phase rate")

    eta = _start_vector(start, n)
    gam = [eta[-1]]
    v = eta.copy()
    for F in factors:
        v = v @ F
        gam.append(v[-1])
    gam = np.array(gam)
    c = np.diff(np.concatenate([[0.0], gam])) / pi[-1]
    warnings = []
    if c.min() < -tol.hard_negative:
        raise NotInGmcPlus(f"mixture weight {c.min():.3g} is negative")
    if c.min() < -tol.clamp_negative:
        warnings.append(f"clamped weight {c.min():.3g} to zero")
    c = np.clip(c, 0.0, None)
    if abs(c.sum() - 1.0) > 1e-8:
        raise InternalCheckFailed(f"mixture weights sum to {c.sum()!r}")
    c = c / c.sum()
    for a in (c, lam, thetas):
        a.setflags(write=False)
    return PhaseTypeMixture(c, lam, mode, thetas, tuple(warnings))


def _phase_generator(thetas: np.ndarray) -> np.ndarray:
    r = thetas.size
    B = np.zeros((r + 1, r + 1))
    B[np.arange(r), np.arange(r)] = -thetas
    B[np.arange(r), np.arange(1, r + 1)] = thetas
    return B


def phase_tail(mix: PhaseTypeMixture, t):
    """``P(T > t)`` for a scalar or an array of times.

    Tails are read off the pure-birth chain that walks through the phases:
    ``P(T > t) = sum_i P(phase_t = i) w_{i+1}``. Discrete times use vector
    powers of the one-step matrix; continuous times use ``expm`` of the
    bidiagonal generator, which stays exact for repeated rates.
    """
    scalar = np.ndim(t) == 0
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts < 0):
        raise ValidationError("time must be non-negative")
    w = np.concatenate([mix.tails, [0.0]])
    B = _phase_generator(mix.thetas)
    r1 = mix.rho + 1
    out = np.empty(ts.size)
    if mix.mode == "discrete":
        steps = np.floor(ts + 1e-12).astype(int)
        K = np.eye(r1) + B
        order = np.argsort(steps)
        v = np.eye(r1)[0]
        cur = 0
        for idx in order:
            while cur < steps[idx]:
                v = v @ K
                cur += 1
            out[idx] = v @ w
    else:
        for i, s in enumerate(ts):
            out[i] = sla.expm(s * B)[0] @ w
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if scalar else out


def sample_fsst(mix: PhaseTypeMixture, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``size`` independent copies of ``T``."""
    k = rng.choice(mix.weights.size, size=size, p=mix.weights)
    T = np.zeros(size)
    for i, th in enumerate(mix.thetas, start=1):
        active = k >= i
        m = int(active.sum())
        if m == 0:
            continue
        if mix.mode == "discrete":
            T[active] += rng.geometric(th, size=m)
        else:
            T[active] += rng.exponential(1.0 / th, size=m)
    return T


# ----------------------------------------------------------------------------
# separation
# ----------------------------------------------------------------------------


def separation_curve(P: StochasticKernel, n_max: int, start=0) -> np.ndarray:
    """``s(n)`` for ``n = 0..n_max`` from a state, a distribution or ``"max"``.

    Raises
    ------
    InternalCheckFailed
        If the curve increases by more than 1e-12 (not possible in exact
        arithmetic).
    """
    P = P.with_stationary()
    pi, M, n = P.pi, P.matrix, P.size
    if isinstance(start, str) and start == "max":
        V = np.eye(n)
    else:
        V = _start_vector(start, n)[None, :]
    out = np.empty(n_max + 1)
    for k in range(n_max + 1):
        out[k] = float(np.max(1.0 - V / pi[None, :]))
        V = V @ M
    if np.any(np.diff(out) > 1e-12):
        raise InternalCheckFailed("separation distance increased")
    return out


def separation_distance(P: StochasticKernel, n: int, start=0) -> float:
    """``max_y [1 - P^n(x, y) / pi(y)]``, maximised over ``x`` when ``start="max"``."""
    return float(separation_curve(P, n, start)[-1])


def continuous_separation(L: GeneratorMatrix, t: float, start=0) -> float:
    L = L.with_stationary()
    eta = _start_vector(start, L.size)
    row = eta @ sla.expm(t * L.matrix)
    return float(np.max(1.0 - row / L.pi))


def separation_mixing_time(P: StochasticKernel, eps: float, start=0, n_max: int = 100000) -> int:
    """First ``n`` with ``s(n) <= eps``."""
    P = P.with_stationary()
    V = _start_vector(start, P.size)
    for k in range(n_max + 1):
        if np.max(1.0 - V / P.pi) <= eps:
            return k
        V = V @ P.matrix
    raise InternalCheckFailed("separation mixing time not reached")


# ----------------------------------------------------------------------------
# cutoff diagnostics
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class CutoffRecord:
    size: int
    t: float
    rho_sq: float
    theta_min: float
    w: tuple[float, ...]
    variance: float
    window: tuple[float, float]

    @property
    def product(self) -> float:
        return self.t * self.theta_min

    def to_dict(self) -> dict:
        return {"size": self.size, "t": self.t, "rho_sq": self.rho_sq,
                "theta_min": self.theta_min, "t_theta": self.product, "w": list(self.w),
                "variance": self.variance, "window": list(self.window)}


@dataclass(frozen=True)
class CutoffDiagnostics:
    """Finite-family trend check: ``t theta_min`` strictly increasing and above a threshold.

    The verdict is a heuristic for a limit statement.
    """

    records: tuple[CutoffRecord, ...]
    mode: str
    threshold: float
    verdict: bool

    def to_dict(self) -> dict:
        return {"mode": self.mode, "threshold": self.threshold, "verdict": self.verdict,
                "heuristic": True, "records": [r.to_dict() for r in self.records]}


def cutoff_record(mix: PhaseTypeMixture, size: int) -> CutoffRecord:
    th = mix.thetas
    w = mix.tails
    t = float(np.sum(w / th))
    if mix.mode == "discrete":
        rho_sq = float(np.sum(w**2 * (1.0 - th) / th**2))
    else:
        rho_sq = float(np.sum(w**2 / th**2))
    theta_min = float(th.min())
    if rho_sq > t / theta_min * (1 + 1e-12):
        raise InternalCheckFailed("rho^2 exceeds t / theta_min")
    rho = math.sqrt(rho_sq)
    window = (t, max(rho, 1.0)) if mix.mode == "discrete" else (t, rho)
    return CutoffRecord(size, t, rho_sq, theta_min, tuple(float(x) for x in w),
                        mix.variance(), window)


def separation_cutoff(family, mode: str = "discrete", threshold: float = 10.0,
                      *, strict: bool = True) -> CutoffDiagnostics:
    """Separation-cutoff statistics over a family of chains started at 0.

    Raises
    ------
    FamilyTooSmall
        With fewer than three members.
    """
    family = list(family)
    if len(family) < 3:
        raise FamilyTooSmall("need at least three family members")
    recs = tuple(cutoff_record(fsst_distribution(P, mode, 0, strict=strict), P.size) for P in family)
    prods = np.array([r.product for r in recs])
    verdict = bool(np.all(np.diff(prods) > 0) and prods[-1] > threshold)
    return CutoffDiagnostics(recs, mode, float(threshold), verdict)
