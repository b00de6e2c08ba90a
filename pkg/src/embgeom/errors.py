"""Exception hierarchy.

Errors split into two families. ``DomainError`` means an input was outside
the domain of an operation (a point off the manifold, a vector outside a
fiber). ``NumericalError`` means the computation itself broke down (a
singular Gram matrix, a diverging integrator, non-finite values).
"""


class GeometryError(Exception):
    """Base class for all package errors."""


class NumericalError(GeometryError):
    """A computation became ill-conditioned or produced unusable values."""


class DomainError(GeometryError, ValueError):
    """An argument is outside the domain where the operation is defined."""


class ConfigInvalid(GeometryError, ValueError):
    """A run configuration is malformed."""


class NonFinite(NumericalError):
    pass


class AnalyticNumericMismatch(NumericalError):
    def __init__(self, message, analytic=None, numeric=None):
        super().__init__(message)
        self.analytic = analytic
        self.numeric = numeric


class SymmetryViolation(NumericalError):
    pass


class DegeneratePairing(NumericalError):
    pass


class RankDeficientConstraint(NumericalError):
    pass


class SingularGram(NumericalError):
    pass


class RankDeficientFrame(NumericalError):
    pass


class DegenerateTangentPairing(NumericalError):
    pass


class StepDiverged(NumericalError):
    pass


class RankFailure(NumericalError):
    pass


class NearSingular(NumericalError):
    pass


class SamplerStuck(NumericalError):
    pass


class OffManifold(DomainError):
    pass


class OffBundle(DomainError):
    pass


class SectionViolation(DomainError):
    pass


class NotVertical(DomainError):
    pass


class NotHorizontal(DomainError):
    pass


class NotHStarHamiltonian(DomainError):
    pass


class SpecInvalid(DomainError):
    pass
