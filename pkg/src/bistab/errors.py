"""Exception types shared across the package."""


class BistabError(Exception):
    """Base class for all package-specific errors."""


class InvalidParameterError(BistabError, ValueError):
    """Parameter set violates the admissibility rules (see SystemParams.validate)."""


class SingularParameterError(BistabError, ValueError):
    """A closed-form expression hit a pole (vanishing denominator)."""


class DegenerateParameterError(BistabError, ValueError):
    """The fixed-point problem is degenerate: solutions form a continuum.

    Raised for the undriven system (eta1 = eta2 = 0), where every split of
    the population over the two ground levels is a fixed point, and whenever
    the eliminated polynomial collapses to the zero polynomial so that no
    isolated root structure exists.
    """


class MarginalStabilityError(BistabError):
    """Stability is undecidable at the configured thresholds.

    Either more than one eigenvalue sits within the zero band (a fold or
    phase boundary) or the conserved direction could not be identified.
    """

    def __init__(self, msg, eigenvalues=None):
        super().__init__(msg)
        self.eigenvalues = eigenvalues


class StiffnessError(BistabError, RuntimeError):
    """Adaptive step size underflowed; carries the last accepted state."""

    def __init__(self, msg, t=None, state=None):
        super().__init__(msg)
        self.t = t
        self.state = state


class UndefinedNormalizationError(BistabError, ZeroDivisionError):
    """Transmittance normalization eta_i**2 vanishes for the requested mode."""


class ConfigError(BistabError, ValueError):
    """Invalid run configuration; carries the offending key when known."""

    def __init__(self, msg, key=None):
        super().__init__(msg)
        self.key = key
