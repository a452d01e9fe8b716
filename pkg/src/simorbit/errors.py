"""Exception hierarchy.

Every error carries a machine-readable ``code`` and belongs to one of two
families: :class:`ValidationError` (bad input, CLI exit status 2) and
:class:`NumericalError` (a computation failed or an internal check tripped,
CLI exit status 3).
"""


class SimOrbitError(Exception):
    code = "error"
    exit_status = 1


class ValidationError(SimOrbitError, ValueError):
    code = "validation"
    exit_status = 2


class NumericalError(SimOrbitError, ArithmeticError):
    code = "numeric"
    exit_status = 3


class InvalidChain(ValidationError):
    code = "invalid_chain"


class ReducibleChain(ValidationError):
    code = "reducible_chain"


class MissingInvariant(ValidationError):
    code = "missing_invariant"


class MissingDensity(ValidationError):
    code = "missing_density"


class DimensionMismatch(ValidationError):
    code = "dimension_mismatch"


class StateSpaceTooLarge(ValidationError):
    code = "state_space_too_large"


class StateSpaceTooSmall(ValidationError):
    code = "state_space_too_small"


class FamilyTooSmall(ValidationError):
    code = "family_too_small"


class UnsupportedP(ValidationError):
    code = "unsupported_p"


class NotBirthDeath(ValidationError):
    code = "not_birth_death"


class NotInGmc(ValidationError):
    code = "not_in_gmc"


class NotInGmcPlus(ValidationError):
    code = "not_in_gmc_plus"


class NotMarkovian(ValidationError):
    code = "not_markovian"


class ComplexSpectrum(ValidationError):
    code = "complex_spectrum"


class NoUniqueStationary(NumericalError):
    code = "no_unique_stationary"


class SingularLink(NumericalError):
    code = "singular_link"


class NotDiagonalizable(NumericalError):
    code = "not_diagonalizable"


class SpectrumInfeasible(NumericalError):
    code = "spectrum_infeasible"


class HarmonicSolveFailed(NumericalError):
    code = "harmonic_solve_failed"


class NonMonotoneDistance(NumericalError):
    code = "non_monotone_distance"


class InternalCheckFailed(NumericalError):
    """A cross-check between two independent computations disagreed."""

    code = "internal_check_failed"
