"""Exception hierarchy.

Two families matter to callers: configuration problems (the input cannot
describe a valid run) and numerical failures (a valid run did not converge).
The CLI maps them to exit codes 2 and 3.
"""


class HoneycombError(Exception):
    """Base class for all package errors."""


class ConfigError(HoneycombError, ValueError):
    """Invalid or inconsistent configuration."""


class DegenerateCellError(ConfigError):
    """Rotated beams make the reciprocal basis (nearly) collinear."""


class TwoMinimaLost(ConfigError):
    """The potential no longer has two minima per primitive cell."""


class TriangleInequalityViolated(TwoMinimaLost):
    """Beam strengths violate |s2 - s3| <= s1 <= s2 + s3 (and cyclic)."""


class NonzeroMass(ConfigError):
    """Dirac points requested for a hopping set with on-site imbalance."""


class NotCritical(HoneycombError, ValueError):
    """Point is not a critical point of the potential."""


class NumericalError(HoneycombError, RuntimeError):
    """A well-posed computation failed to converge."""


class EigensolverFailure(NumericalError):
    def __init__(self, k, message="eigensolver failed"):
        self.k = tuple(float(x) for x in k)
        super().__init__(f"{message} at k={self.k}")


class BracketingFailure(NumericalError):
    def __init__(self, message, samples=()):
        self.samples = list(samples)
        super().__init__(message)


class ConvergenceError(NumericalError):
    def __init__(self, message, drift=None):
        self.drift = drift
        super().__init__(message)


class RankDeficientFit(NumericalError):
    """Least-squares design matrix does not have full column rank."""
