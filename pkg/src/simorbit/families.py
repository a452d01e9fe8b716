"""Named chain families used by the cutoff tools and the CLI manifests."""

from __future__ import annotations

import numpy as np

from .chain import GeneratorMatrix, StochasticKernel, stationary_distribution
from .errors import ValidationError
from .l2cutoff import Member
from .orbit import IntertwiningLink
from .purebirth import pure_birth_conjugate


def birth_death_generator(b, d) -> GeneratorMatrix:
    """Generator with birth rates ``b[0..rho-1]`` and death rates ``d[1..rho]``."""
    b = np.asarray(b, dtype=float)
    d = np.asarray(d, dtype=float)
    if b.size != d.size:
        raise ValidationError("need as many birth as death rates")
    G = np.diag(b, 1) + np.diag(d, -1)
    G -= np.diag(G.sum(axis=1))
    return GeneratorMatrix(G).with_stationary()


def constant_rate_generator(rho: int, lam: float = 1.0) -> GeneratorMatrix:
    """Reflecting walk: rates ``lam`` inside, ``2 lam`` out of the two end states."""
    if rho < 2:
        raise ValidationError("constant-rate family needs rho >= 2")
    b = np.full(rho, lam)
    d = np.full(rho, lam)
    b[0] = 2 * lam
    d[-1] = 2 * lam
    return birth_death_generator(b, d)


def constant_rate(rho: int, lam: float = 1.0, variant: str = "reversible") -> Member:
    G = constant_rate_generator(rho, lam)
    if variant == "reversible":
        return Member(G, G, None, label=f"constant_rate[{rho}]")
    if variant == "purebirth":
        conj = pure_birth_conjugate(G)
        link = IntertwiningLink(conj.link.inverse, G.pi, conj.pi_L)
        return Member(conj.L, G, link, label=f"constant_rate_purebirth[{rho}]")
    raise ValidationError(f"unknown variant {variant!r}")


def lazy_birth_death(rho: int, b: float = 0.3, d: float = 0.1) -> StochasticKernel:
    """Kernel with up-probability ``b``, down-probability ``d`` and holding elsewhere."""
    if b + d > 1:
        raise ValidationError("b + d must not exceed 1")
    n = rho + 1
    P = np.zeros((n, n))
    for x in range(n):
        if x < rho:
            P[x, x + 1] = b
        if x > 0:
            P[x, x - 1] = d
        P[x, x] = 1.0 - P[x].sum()
    return StochasticKernel(P, stationary_distribution(P))


def two_state(a: float, b: float) -> StochasticKernel:
    P = np.array([[1 - a, a], [b, 1 - b]])
    return StochasticKernel(P, [b / (a + b), a / (a + b)])


def two_state_generator(a: float, b: float) -> GeneratorMatrix:
    return GeneratorMatrix([[-a, a], [b, -b]], [b / (a + b), a / (a + b)])


KERNEL_RULES = {"lazy_birth_death": lazy_birth_death}
MEMBER_RULES = {"constant_rate": constant_rate}
