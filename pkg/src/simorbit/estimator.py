"""Riemann-sum estimation of integral functionals of continuous-time chains.

``Gamma_T(f) = int_0^T f(X_t) dt`` is approximated by
``sum_{k=1}^n f(X_{(k-1) Delta}) Delta`` with ``Delta = T / n``. Error bounds
are expressed through the self-adjoint operator

    A = sum_j |gamma_j|^2 F_j^* F_j,

where ``F_j`` are the eigenprojections of ``-L`` with rates ``gamma_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import GeneratorMatrix, weighted_adjoint
from .errors import MissingDensity, NotMarkovian, ValidationError
from .orbit import IntertwiningLink
from .spectral import SpectralSystem, decompose


@dataclass(frozen=True, eq=False)
class FunctionalSpec:
    f: np.ndarray
    T: float
    n: int
    s: float = 1.0
    start: np.ndarray | None = None  # None means the stationary law

    def __post_init__(self):
        object.__setattr__(self, "f", np.asarray(self.f, dtype=float))
        if self.T <= 0 or self.n < 1 or not 0.0 <= self.s <= 1.0:
            raise ValidationError("need T > 0, n >= 1 and 0 <= s <= 1")

    @property
    def delta(self) -> float:
        return self.T / self.n


@dataclass(frozen=True)
class SmoothnessNorms:
    norm_pi: float
    seminorm_s: float
    ainv_norm: float
    f0_norm: float
    s: float

    def to_dict(self) -> dict:
        return {"norm_pi": self.norm_pi, "seminorm_s": self.seminorm_s,
                "ainv_norm": self.ainv_norm, "f0_norm": self.f0_norm, "s": self.s}


def _system(L: GeneratorMatrix, link: IntertwiningLink | None, G: GeneratorMatrix | None) -> SpectralSystem:
    L = L.with_stationary()
    sys = decompose(L, link, G) if link is not None else decompose(L)
    sys.require_real()
    return sys


def operator_a(L: GeneratorMatrix, link: IntertwiningLink | None = None, G: GeneratorMatrix | None = None,
               sys: SpectralSystem | None = None) -> np.ndarray:
    """``A = sum_j gamma_j^2 F_j^* F_j`` as a matrix acting on functions.

    Raises
    ------
    ComplexSpectrum
        If ``L`` has a non-real spectrum.
    """
    sys = sys or _system(L, link, G)
    pi = sys.pi
    A = np.zeros((sys.size, sys.size))
    for j, lam in enumerate(np.real(sys.eigenvalues)):
        F = np.real(sys.projection(j))
        A += lam**2 * weighted_adjoint(F, pi) @ F
    return A


class _SelfAdjoint:
    """Functional calculus for a matrix self-adjoint in ``l2(pi)``."""

    def __init__(self, A: np.ndarray, pi: np.ndarray):
        self.r = np.sqrt(pi)
        S = self.r[:, None] * A / self.r[None, :]
        S = 0.5 * (S + S.T)
        mu, U = np.linalg.eigh(S)
        self.mu = np.clip(mu, 0.0, None)
        self.U = U
        self.cut = 1e-10 * max(1.0, float(self.mu.max(initial=0.0)))

    def apply(self, fn, f: np.ndarray) -> np.ndarray:
        nz = self.mu > self.cut
        d = np.zeros_like(self.mu)
        d[nz] = fn(self.mu[nz])
        return (self.U @ (d * (self.U.T @ (self.r * f)))) / self.r


def seminorms(A: np.ndarray, pi: np.ndarray, f, s: float) -> SmoothnessNorms:
    """``||f||_pi``, ``||A^{s/2} f||_pi`` and ``||A^{-1} f_0||_pi`` with ``f_0 = f - pi(f)``.

    Powers are restricted to the non-zero spectrum of ``A``.
    """
    from .chain import norm

    f = np.asarray(f, dtype=float)
    op = _SelfAdjoint(A, pi)
    # constants span the kernel of A, so centring first only removes rounding noise
    f0 = f - float(np.sum(f * pi))
    half = op.apply(lambda m: m ** (s / 2.0), f0)
    ainv = op.apply(lambda m: 1.0 / m, f0)
    return SmoothnessNorms(norm(f, pi), norm(half, pi), norm(ainv, pi), norm(f0, pi), float(s))


@dataclass(frozen=True)
class DsaCheck:
    """Both sides of the Cauchy-Schwarz inequality for ``sum_j gamma_j^s <F_j f, f>``.

    ``rhs`` uses ``||A^{s/2} f||``; ``rhs_sum`` the sum
    ``(sum_j gamma_j^{2s} ||F_j f||^2)^{1/2}`` (the two agree at ``s = 1``);
    ``rhs_kappa`` multiplies ``rhs_sum`` by the link condition number, which is
    the form that holds for every non-normal chain.
    """

    lhs: float
    rhs: float
    rhs_sum: float
    rhs_kappa: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1 + 1e-10) + 1e-14

    @property
    def holds_kappa(self) -> bool:
        return self.lhs <= self.rhs_kappa * (1 + 1e-10) + 1e-14


def dsa_check(sys: SpectralSystem, A: np.ndarray, f, s: float, kappa: float | None = None) -> DsaCheck:
    from .chain import inner, norm

    pi = sys.pi
    f = np.asarray(f, dtype=float)
    rates = np.clip(-np.real(sys.eigenvalues), 0.0, None)
    lhs = 0.0 + 0.0j
    acc = 0.0
    for j, g in enumerate(rates):
        if g <= 1e-12:
            continue
        F = np.real(sys.projection(j))
        lhs += g**s * inner(F @ f, f, pi)
        acc += g ** (2 * s) * norm(F @ f, pi) ** 2
    nf = norm(f, pi)
    semi = seminorms(A, pi, f, s).seminorm_s
    if kappa is None:
        kappa = sys.link.kappa if sys.link is not None else float(np.linalg.cond(np.sqrt(pi)[:, None] * sys.basis))
    rs = math.sqrt(acc) * nf
    return DsaCheck(float(abs(lhs)), semi * nf, rs, kappa * rs)


# ----------------------------------------------------------------------------
# simulation
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PathSet:
    """Piecewise-constant paths: ``states[r][i]`` holds on ``[times[r][i], times[r][i+1])``."""

    times: tuple[np.ndarray, ...]
    states: tuple[np.ndarray, ...]
    T: float
    seed: int | None

    @property
    def replicas(self) -> int:
        return len(self.times)


def replica_rngs(seed: int | None, replicas: int) -> list[np.random.Generator]:
    """Independent streams; replica ``r`` depends only on ``(seed, r)``."""
    root = np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in root.spawn(replicas)]


def simulate_paths(L: GeneratorMatrix, start, T: float, replicas: int, seed: int | None = 0) -> PathSet:
    """Exact simulation by exponential holding times and embedded jumps.

    ``start`` is a state index, a distribution, or ``None`` for stationarity.

    Raises
    ------
    NotMarkovian
        If ``L`` has negative off-diagonal rates.
    """
    if not isinstance(L, GeneratorMatrix) or not L.markovian:
        raise NotMarkovian("simulation needs a Markov generator")
    M = L.matrix
    if np.any((M - np.diag(np.diag(M))) < -1e-12):
        raise NotMarkovian("generator has negative off-diagonal rates")
    if replicas < 1 or T <= 0:
        raise ValidationError("need replicas >= 1 and T > 0")
    n = L.size
    if start is None:
        start = L.with_stationary().pi
    if np.ndim(start) == 0:
        init = np.zeros(n)
        init[int(start)] = 1.0
    else:
        init = np.asarray(start, dtype=float)
    rates = -np.diag(M).copy()
    jump = np.zeros((n, n))
    for x in range(n):
        if rates[x] > 0:
            jump[x] = np.clip(M[x], 0.0, None)
            jump[x, x] = 0.0
            jump[x] /= jump[x].sum()
    cum_jump = np.cumsum(jump, axis=1)
    cum_init = np.cumsum(init)
    times, states = [], []
    for rng in replica_rngs(seed, replicas):
        x = int(np.searchsorted(cum_init, rng.random() * cum_init[-1], side="right"))
        t = 0.0
        ts, xs = [0.0], [x]
        while True:
            if rates[x] <= 0:
                break
            t += rng.exponential(1.0 / rates[x])
            if t >= T:
                break
            x = int(np.searchsorted(cum_jump[x], rng.random(), side="right"))
            x = min(x, n - 1)
            ts.append(t)
            xs.append(x)
        times.append(np.array(ts))
        states.append(np.array(xs, dtype=int))
    return PathSet(tuple(times), tuple(states), float(T), seed)


@dataclass(frozen=True)
class EstimateResult:
    gamma: np.ndarray
    gamma_hat: np.ndarray
    rmse: float
    delta: float


def exact_functional(paths: PathSet, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    out = np.empty(paths.replicas)
    for r, (ts, xs) in enumerate(zip(paths.times, paths.states)):
        ends = np.append(ts[1:], paths.T)
        out[r] = np.sum(f[xs] * (ends - ts))
    return out


def riemann_functional(paths: PathSet, f, n: int) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    delta = paths.T / n
    grid = np.arange(n) * delta
    out = np.empty(paths.replicas)
    for r, (ts, xs) in enumerate(zip(paths.times, paths.states)):
        idx = np.searchsorted(ts, grid, side="right") - 1
        out[r] = np.sum(f[xs[idx]]) * delta
    return out


def estimate_functional(paths: PathSet, spec: FunctionalSpec) -> EstimateResult:
    """Exact ``Gamma_T`` and Riemann ``Gamma_hat`` per replica, with their RMSE."""
    if abs(spec.T - paths.T) > 1e-12:
        raise ValidationError("functional horizon does not match the simulated horizon")
    g = exact_functional(paths, spec.f)
    gh = riemann_functional(paths, spec.f, spec.n)
    rmse = float(np.sqrt(np.mean((g - gh) ** 2)))
    return EstimateResult(g, gh, rmse, spec.delta)


def error_bounds(spec: FunctionalSpec, norms: SmoothnessNorms, kind: str = "stationary",
                 C: float = 1.0, density=None) -> float:
    """Right-hand sides of the estimation error bounds with constant ``C``.

    ``kind`` is ``"stationary"``, ``"average"`` (for ``Gamma_hat / T``
    against the space average) or ``"nonstationary"``.

    Raises
    ------
    MissingDensity
        For ``kind="nonstationary"`` without ``density = d eta / d pi``.
    """
    core = math.sqrt(norms.seminorm_s * norms.norm_pi * spec.T * spec.delta ** (1 + spec.s))
    if kind == "stationary":
        return C * core
    if kind == "average":
        return C / math.sqrt(spec.T) * (
            math.sqrt(norms.seminorm_s * norms.norm_pi * spec.delta)
            + math.sqrt(norms.ainv_norm * norms.f0_norm)
        )
    if kind == "nonstationary":
        if density is None:
            raise MissingDensity("non-stationary bound needs d eta / d pi")
        return C * math.sqrt(float(np.max(np.abs(density)))) * core
    raise ValidationError(f"unknown bound kind {kind!r}")


@dataclass(frozen=True)
class RateFit:
    deltas: np.ndarray
    rmse: np.ndarray
    bounds: np.ndarray
    slope: float
    c_hat: np.ndarray
    s: float

    @property
    def target(self) -> float:
        return (1 + self.s) / 2

    @property
    def passes(self) -> bool:
        return bool(self.slope >= self.target - 0.1 and np.all(np.isfinite(self.c_hat)))

    def to_dict(self) -> dict:
        return {"deltas": self.deltas.tolist(), "rmse": self.rmse.tolist(),
                "bounds": self.bounds.tolist(), "slope": self.slope,
                "c_hat": self.c_hat.tolist(), "s": self.s, "target": self.target,
                "passes": self.passes}


def fit_rate(paths: PathSet, f, ns, norms: SmoothnessNorms, kind: str = "stationary", density=None) -> RateFit:
    """Least-squares slope of ``log rmse`` against ``log Delta`` and ``C_hat = rmse / bound``."""
    ns = np.asarray(ns, dtype=int)
    rmse, bounds = [], []
    for n in ns:
        spec = FunctionalSpec(f, paths.T, int(n), norms.s)
        rmse.append(estimate_functional(paths, spec).rmse)
        bounds.append(error_bounds(spec, norms, kind, 1.0, density))
    rmse = np.array(rmse)
    bounds = np.array(bounds)
    deltas = paths.T / ns
    keep = rmse > 0
    slope = float(np.polyfit(np.log(deltas[keep]), np.log(rmse[keep]), 1)[0]) if keep.sum() >= 2 else math.nan
    with np.errstate(divide="ignore", invalid="ignore"):
        c_hat = np.where(bounds > 0, rmse / bounds, np.where(rmse > 0, np.inf, 0.0))
    return RateFit(deltas, rmse, bounds, slope, c_hat, norms.s)
