"""Numerical tolerances shared by every module.

A single frozen :class:`ToleranceConfig` is threaded through the library.
Defaults can be overridden from a JSON file, either passed explicitly or
named by the ``SIMORBIT_TOL_CONFIG`` environment variable.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

ENV_VAR = "SIMORBIT_TOL_CONFIG"


@dataclass(frozen=True)
class ToleranceConfig:
    # row sums of kernels / generators
    stochastic: float = 1e-12
    # entrywise structural predicates (reversible, normal, tridiagonal, ...)
    structural: float = 1e-10
    # pi P = pi residual when a measure is declared invariant
    invariant: float = 1e-10
    # similarity residual max|P Lam - Lam Q|
    similarity: float = 1e-10
    # imaginary parts below this are treated as zero
    real_imag: float = 1e-10
    # eigenvalues closer than this are coincident
    distinct: float = 1e-9
    # biorthogonality / eigen-equation residuals
    biorthogonal: float = 1e-8
    # margin for the strict inequalities of the GMc conditions
    strict_margin: float = 1e-12
    # equality tolerance for the GMc "restricted jump" conditions
    gmc_equality: float = 1e-10
    # links with condition number above this are rejected
    kappa_max: float = 1e12
    # FSST weights: clamp above -clamp_negative, fail below -hard_negative
    clamp_negative: float = 1e-10
    hard_negative: float = 1e-8
    # interpolation exponent in the L^p lower bound, must lie in [1/2, 1]
    theta_p: float = 0.5
    # relative bisection tolerance for mixing/cutoff times
    bisection_rel: float = 1e-9

    def __post_init__(self):
        if not 0.5 <= self.theta_p <= 1.0:
            raise ValueError(f"theta_p must lie in [1/2, 1], got {self.theta_p}")
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    def updated(self, **changes) -> "ToleranceConfig":
        return replace(self, **changes)

    @classmethod
    def from_dict(cls, data: dict) -> "ToleranceConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown tolerance keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "ToleranceConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


DEFAULT_TOL = ToleranceConfig()


def load_tolerances(path: str | os.PathLike | None = None) -> ToleranceConfig:
    """Return tolerances from ``path``, else from the env var, else defaults."""
    if path is None:
        path = os.environ.get(ENV_VAR)
    if not path:
        return DEFAULT_TOL
    return ToleranceConfig.from_file(path)
