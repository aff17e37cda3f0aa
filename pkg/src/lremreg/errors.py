"""Exception hierarchy shared by every module of the package."""


class LremError(Exception):
    """Base class for all package errors."""


class SingularPencil(LremError):
    """det(Gamma0 + Gamma1 x) vanishes identically."""


class UnitRoot(LremError):
    """A zero of the pencil lies on (or too close to) the unit circle."""


class ReorderFailure(LremError):
    """Reordering of the generalized Schur form did not succeed."""


class UnstableMatrix(LremError):
    """A matrix required to be stable has spectral radius too close to one."""


class NoSolution(LremError):
    """The model has no covariance-stationary solution."""


class DimensionMismatch(LremError, ValueError):
    """Array shapes are inconsistent with each other."""


class QuadratureNonConvergence(LremError):
    """Panel refinement hit its doubling limit before converging."""


class ModelFileError(LremError, ValueError):
    """A model, weight or solution file could not be parsed."""
