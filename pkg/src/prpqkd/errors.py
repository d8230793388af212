"""Exception hierarchy.

Every failure the library reports derives from :class:`PRPError`, so sweep drivers
can catch one type, flag the cell and keep going.
"""


class PRPError(Exception):
    """Base class for all library errors."""

    #: short machine-readable tag used in the ``flag`` column of CSV output
    flag = "error"


class ValidationError(PRPError, ValueError):
    """A model object was constructed with invariant-violating values."""

    flag = "invalid_input"


class IntegrationFailure(PRPError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    flag = "integration_failure"


class DegenerateDenominator(PRPError, ArithmeticError):
    """All four valid-outcome probabilities vanished, so the error rate is undefined."""

    flag = "no_valid_outcomes"


class Unachievable(PRPError):
    """A threshold solver target cannot be reached inside the search bracket."""

    flag = "unachievable"


class NonMonotoneBracket(PRPError):
    """The pre-scan found the solver's objective to be non-monotone."""

    flag = "non_monotone"


class InvalidIntensity(PRPError, ValueError):
    flag = "invalid_intensity"


class InvalidDecoyPair(PRPError, ValueError):
    flag = "invalid_decoy_pair"


class InvalidGain(PRPError, ValueError):
    flag = "invalid_gain"


class NonpositiveYield(PRPError, ArithmeticError):
    """The single-photon yield lower bound is not positive."""

    flag = "nonpositive_yield"


class ZeroGain(PRPError, ArithmeticError):
    flag = "zero_gain"


class DomainError(PRPError, ValueError):
    flag = "domain_error"


class NoValidOutcomes(PRPError):
    """A Monte Carlo run produced no valid homodyne outcomes."""

    flag = "no_valid_outcomes"
