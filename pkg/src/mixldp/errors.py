"""Exception hierarchy shared by every module of the package."""


class MixLDPError(Exception):
    """Base class for all errors raised by :mod:`mixldp`."""


class UnsupportedLaw(MixLDPError, ValueError):
    """A law kind has no closed form for the requested functional."""


class DivergentMoment(MixLDPError, ValueError):
    """An exponential moment is infinite for the requested exponent."""


class NonConvergence(MixLDPError, RuntimeError):
    """An iterative solver did not meet its tolerance within its budget."""


class UnsupportedCombination(MixLDPError, ValueError):
    """The risk measure cannot be evaluated on the given laws."""


class ConditionUnsupported(MixLDPError, ValueError):
    """No weight-linear constraint form is available for the risk measure."""


class NonDifferentiable(MixLDPError, ValueError):
    """The constraint function has no derivative at the requested point."""


class OutOfInterior(MixLDPError, ValueError):
    """A level lies outside the open interval between the component roots."""


class OutOfSupport(MixLDPError, ValueError):
    """A level lies outside the closed interval between the component roots."""


class DegenerateProblem(MixLDPError, ValueError):
    """All component roots coincide, so the requested quantity is undefined."""


class DegenerateData(MixLDPError, ValueError):
    """A simulated tail probability is zero, so no decay rate can be fitted."""


class LengthMismatch(MixLDPError, ValueError):
    """Two weight vectors that must align have different lengths."""


class EmptySupport(MixLDPError, ValueError):
    """A weight vector has no strictly positive entry."""
