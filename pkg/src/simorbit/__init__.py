"""Spectral analysis of finite Markov chains through similarity orbits of normal chains."""

from .chain import GeneratorMatrix, StochasticKernel, stationary_distribution, time_reversal
from .config import DEFAULT_TOL, ToleranceConfig, load_tolerances
from .errors import NumericalError, SimOrbitError, ValidationError
from .fsst import fsst_distribution, phase_tail, separation_cutoff, separation_distance
from .gmc import check_gmc, siegmund_dual, theorem_mc_pipeline
from .orbit import IntertwiningLink, birth_death_from_spectrum, permutation_orbit, verify_similarity
from .purebirth import pure_birth_conjugate, pure_birth_spectral
from .spectral import convergence_bound, decompose, eigentime_identity, kernel_power_expansion, semigroup_expansion

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TOL",
    "GeneratorMatrix",
    "IntertwiningLink",
    "NumericalError",
    "SimOrbitError",
    "StochasticKernel",
    "ToleranceConfig",
    "ValidationError",
    "birth_death_from_spectrum",
    "check_gmc",
    "convergence_bound",
    "decompose",
    "eigentime_identity",
    "fsst_distribution",
    "kernel_power_expansion",
    "load_tolerances",
    "permutation_orbit",
    "phase_tail",
    "pure_birth_conjugate",
    "pure_birth_spectral",
    "semigroup_expansion",
    "separation_cutoff",
    "separation_distance",
    "siegmund_dual",
    "stationary_distribution",
    "theorem_mc_pipeline",
    "time_reversal",
    "verify_similarity",
]
