"""Generalised monotonicity classes and the Siegmund-dual reduction to birth-death chains.

Conditions are stated on the cumulative rows of the time reversal,
``C[x, k] = P_hat(x, {0..k})``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain import (
    StochasticKernel,
    cumulative_rows,
    is_birth_death,
    is_irreducible,
    is_stochastically_monotone,
    time_reversal,
)
from .config import ToleranceConfig
from .errors import HarmonicSolveFailed, InternalCheckFailed, NotInGmc, StateSpaceTooSmall
from .orbit import IntertwiningLink

CONDITION_NAMES = {
    1: "stochastic monotonicity",
    2: "strict stochastic monotonicity (below)",
    3: "strict stochastic monotonicity (above)",
    4: "restricted downward jump",
    5: "restricted upward jump",
    6: "lazy Siegmund dual",
}


@dataclass(frozen=True)
class Violation:
    cond: int
    x: int
    k: int
    lhs: float
    rhs: float

    def to_dict(self) -> dict:
        return {"cond": self.cond, "name": CONDITION_NAMES[self.cond], "x": self.x,
                "k": self.k, "lhs": self.lhs, "rhs": self.rhs}


@dataclass(frozen=True)
class GmcReport:
    """Outcome of :func:`check_gmc`; conditions 1-5 define membership, 6 adds laziness."""

    member: bool
    member_plus: bool
    violations: tuple[Violation, ...] = ()

    def violated_conditions(self) -> set[int]:
        return {v.cond for v in self.violations}

    def to_dict(self) -> dict:
        return {"member": self.member, "member_plus": self.member_plus,
                "violations": [v.to_dict() for v in self.violations]}


def check_gmc(P: StochasticKernel, tol: ToleranceConfig | None = None) -> GmcReport:
    """Evaluate the six cumulative-row conditions on the time reversal of ``P``.

    For ``x`` in ``0..rho-1``, with ``lhs = C[x+1, .]`` and ``rhs = C[x, .]``:

    1. ``C[x+1, x] <= C[x, x]``
    2. ``C[x+1, x-1] < C[x, x-1]`` for ``x != 0``
    3. ``C[x+1, x+1] < C[x, x+1]`` for ``x != rho-1``
    4. ``C[x+1, x-k] == C[x, x-k]`` for ``k`` in ``2..x``
    5. ``C[x+1, x+k] == C[x, x+k]`` for ``k`` in ``2..rho-1-x``
    6. ``C[x, x] - C[x+1, x] >= 1/2``

    Raises
    ------
    StateSpaceTooSmall
        If ``rho < 3``.
    """
    tol = tol or P.tol
    P = P.with_stationary()
    rho = P.rho
    if rho < 3:
        raise StateSpaceTooSmall("the classes are defined for rho >= 3")
    C = cumulative_rows(time_reversal(P).matrix)
    m, eq = tol.strict_margin, tol.gmc_equality
    out: list[Violation] = []

    def rec(cond, x, k, lhs, rhs):
        out.append(Violation(cond, x, k, float(lhs), float(rhs)))

    for x in range(rho):
        lo, hi = C[x + 1], C[x]
        if lo[x] > hi[x] + tol.stochastic:
            rec(1, x, 0, lo[x], hi[x])
        if x != 0 and not lo[x - 1] < hi[x - 1] - m:
            rec(2, x, 1, lo[x - 1], hi[x - 1])
        if x != rho - 1 and not lo[x + 1] < hi[x + 1] - m:
            rec(3, x, 1, lo[x + 1], hi[x + 1])
        for k in range(2, x + 1):
            if abs(lo[x - k] - hi[x - k]) > eq:
                rec(4, x, k, lo[x - k], hi[x - k])
        for k in range(2, rho - x):
            if abs(lo[x + k] - hi[x + k]) > eq:
                rec(5, x, k, lo[x + k], hi[x + k])
        if hi[x] - lo[x] < 0.5 - tol.stochastic:
            rec(6, x, 0, hi[x] - lo[x], 0.5)
    member = not any(v.cond <= 5 for v in out)
    member_plus = member and not any(v.cond == 6 for v in out)
    return GmcReport(member, member_plus, tuple(out))


# ----------------------------------------------------------------------------
# Siegmund duality
# ----------------------------------------------------------------------------


def siegmund_kernel(n: int) -> np.ndarray:
    """``H(x, y) = 1{x <= y}``."""
    return np.triu(np.ones((n, n)))


def siegmund_kernel_inverse(n: int) -> np.ndarray:
    """``H^{-1}(x, y) = 1{x = y} - 1{x = y - 1}``."""
    return np.eye(n) - np.eye(n, k=1)


@dataclass(frozen=True, eq=False)
class SiegmundDual:
    """Dual ``P_tilde`` with ``P_tilde^T = H^{-1} P_hat H``.

    ``not_monotone`` is set when the source is not stochastically monotone, in
    which case entries may be negative.
    """

    matrix: np.ndarray
    absorbing_tail: bool
    not_monotone: bool
    min_entry: float
    max_row_sum: float

    def to_dict(self) -> dict:
        return {"matrix": self.matrix.tolist(), "absorbing_tail": self.absorbing_tail,
                "not_monotone": self.not_monotone, "min_entry": self.min_entry,
                "max_row_sum": self.max_row_sum}


def siegmund_dual(Phat) -> SiegmundDual:
    """Siegmund dual of a kernel: ``P_tilde(y, x) = C[x, y] - C[x+1, y]`` with ``C[rho+1, .] = 0``."""
    M = Phat.matrix if isinstance(Phat, StochasticKernel) else np.asarray(Phat, dtype=float)
    n = M.shape[0]
    Pt = (siegmund_kernel_inverse(n) @ M @ siegmund_kernel(n)).T
    C = cumulative_rows(M)
    direct = (C - np.vstack([C[1:], np.zeros(n)])).T
    if np.max(np.abs(direct - Pt)) > 1e-12:
        raise InternalCheckFailed("Siegmund dual: matrix and cumulative forms disagree")
    Pt = np.where(np.abs(Pt) < 1e-15, 0.0, Pt)
    Pt.setflags(write=False)
    last = np.zeros(n)
    last[-1] = 1.0
    absorbing = bool(np.max(np.abs(Pt[-1] - last)) <= 1e-12)
    return SiegmundDual(
        Pt,
        absorbing,
        not is_stochastically_monotone(M),
        float(Pt.min()),
        float(Pt.sum(axis=1).max()),
    )


@dataclass(frozen=True, eq=False)
class McReduction:
    """Output of :func:`theorem_mc_pipeline`.

    Attributes
    ----------
    Q : ndarray
        ``D_h^{-1} P_bd D_h`` on ``0..rho-1``. Harmonicity of ``h`` on
        ``0..rho-2`` makes those rows stochastic; the last row has mass
        ``1 - row_deficit``.
    Q_perron : StochasticKernel
        ``D_phi^{-1} P_bd D_phi / beta`` with ``(beta, phi)`` the Perron pair of
        ``P_bd``, an irreducible stochastic birth-death kernel.
    link : IntertwiningLink
        ``Lam = (H^T D_pi)^{-1}`` with ``Lam^{-1} P Lam = P_tilde``.
    h : ndarray
        Probability of reaching ``rho-1`` before being killed.
    reduced : ndarray
        ``(Lam^{-1})_R (P Lam)_R`` on ``R = 0..rho-1``.
    """

    Q: np.ndarray
    Q_perron: StochasticKernel
    perron_value: float
    link: IntertwiningLink
    h: np.ndarray
    reduced: np.ndarray
    dual: SiegmundDual
    stochastic: bool
    row_deficit: float
    harmonic_residual: float
    restriction_residual: float
    similarity_residual: float
    spectrum_residual: float
    warnings: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "Q": self.Q.tolist(),
            "Q_perron": self.Q_perron.matrix.tolist(),
            "Q_perron_pi": self.Q_perron.pi.tolist(),
            "perron_value": self.perron_value,
            "link": self.link.matrix.tolist(),
            "h": self.h.tolist(),
            "reduced": self.reduced.tolist(),
            "siegmund_dual": self.dual.matrix.tolist(),
            "stochastic": self.stochastic,
            "row_deficit": self.row_deficit,
            "harmonic_residual": self.harmonic_residual,
            "restriction_residual": self.restriction_residual,
            "similarity_residual": self.similarity_residual,
            "spectrum_residual": self.spectrum_residual,
            "warnings": list(self.warnings),
        }


def theorem_mc_pipeline(P: StochasticKernel, tol: ToleranceConfig | None = None) -> McReduction:
    """Reduce a kernel in the monotonicity class to a birth-death kernel.

    Steps: ``Lam = (H^T D_pi)^{-1}``; Siegmund dual ``P_tilde`` of the time
    reversal; restriction ``P_bd`` to ``0..rho-1``; harmonic transform by
    ``h(x) = P_x(reach rho-1 before killing)``.

    Raises
    ------
    NotInGmc
        If conditions 1-5 fail.
    HarmonicSolveFailed
        If the absorbed linear system is singular.
    """
    tol = tol or P.tol
    P = P.with_stationary()
    report = check_gmc(P, tol)
    if not report.member:
        raise NotInGmc(f"violated conditions {sorted(report.violated_conditions())}")
    n, rho, pi = P.size, P.rho, P.pi
    H = siegmund_kernel(n)
    Lam = np.linalg.inv(H.T * pi[None, :])
    Lam_inv = H.T * pi[None, :]
    dual = siegmund_dual(time_reversal(P).matrix)
    Pt = dual.matrix
    sim_res = float(np.max(np.abs(Lam_inv @ P.matrix @ Lam - Pt)))

    R = slice(0, rho)
    reduced = Lam_inv[R, R] @ (P.matrix @ Lam)[R, R]
    Pbd = np.array(Pt[R, R])
    restr_res = float(np.max(np.abs(reduced - Pbd)))
    M = P.matrix @ Lam
    restr_res = max(restr_res, float(np.max(np.abs(M[R, R] - Lam[R, R] @ Pbd))))
    if not is_birth_death(Pbd, tol=1e-10):
        raise InternalCheckFailed("restricted dual is not tridiagonal")

    m = rho - 1
    A = np.eye(m) - Pbd[:m, :m]
    if np.linalg.cond(A) > 1e12:
        raise HarmonicSolveFailed("absorbed system is singular")
    h = np.ones(rho)
    h[:m] = np.linalg.solve(A, Pbd[:m, m])
    if np.any(h <= 0):
        raise HarmonicSolveFailed("harmonic function is not positive")
    harm = float(np.max(np.abs((Pbd @ h - h)[:m]), initial=0.0))
    Q = Pbd * h[None, :] / h[:, None]
    rows = Q.sum(axis=1)
    deficit = float(1.0 - rows[-1])
    stochastic = bool(np.max(np.abs(rows - 1.0)) <= 1e-10)

    ev, V = np.linalg.eig(Pbd)
    k = int(np.argmax(ev.real))
    beta = float(ev[k].real)
    phi = np.abs(V[:, k].real)
    Qp = Pbd * phi[None, :] / phi[:, None] / beta
    Qp = Qp / Qp.sum(axis=1, keepdims=True)
    Qp = np.where(np.abs(Qp) < 1e-16, 0.0, Qp)
    if not is_irreducible(Qp):
        raise InternalCheckFailed("Perron-normalised kernel is reducible")
    Q_perron = StochasticKernel(Qp, tol=tol).with_stationary()

    spec_P = np.sort(np.linalg.eigvals(P.matrix).real)[:-1]
    spec_bd = np.sort(np.linalg.eigvals(Pbd).real)
    spec_res = float(np.max(np.abs(spec_P - spec_bd)))

    warnings = []
    if not stochastic:
        warnings.append(
            f"harmonic transform leaves row {rho - 1} with mass {rows[-1]:.6g}; "
            "see Q_perron for a stochastic birth-death partner"
        )
    link = IntertwiningLink(Lam, np.full(n, 1.0 / n), pi, tol)
    Q.setflags(write=False)
    return McReduction(Q, Q_perron, beta, link, h, reduced, dual, stochastic, deficit,
                       harm, restr_res, sim_res, spec_res, tuple(warnings))
