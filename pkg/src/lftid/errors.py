"""Exception and warning types shared across the library.

The identification method rests on a numbered list of standing model
assumptions:

1. regularity: det(sE - A(theta)) is not identically zero;
2. well-posedness: I - P(theta) D_zv is invertible;
3. stability of the plant, with a known settling-time bound;
4. the generator eigenvalues are pairwise distinct with nonnegative
   real part (negative real parts are tolerated with a warning);
5. samples are taken after the settling time, with zero-mean,
   uncorrelated, bounded-covariance measurement noise;
6. the admissible parameter set is bounded and the plant identifiable
   on it;
7. no generator eigenvalue is a generalized eigenvalue of (E, A_xx).

Errors that correspond to a violated assumption carry an ``assumption``
attribute with the number above, so front ends can name the failed
assumption in their diagnostics.
"""


class LftidError(Exception):
    """Base class for all library errors."""

    assumption: int | None = None


class DimensionMismatch(LftidError):
    """Matrix or vector dimensions are inconsistent with the model."""


class WellPosednessViolated(LftidError):
    """I - P(theta) D_zv is numerically singular (well-posedness fails)."""

    assumption = 2


class SingularPencil(LftidError):
    """s E - A is numerically singular at the requested point."""

    assumption = 1


class Assumption7Violated(SingularPencil):
    """An input-generator eigenvalue hits the pencil (E, A_xx)."""

    assumption = 7


class DefectiveGenerator(LftidError):
    """The input generator's transition matrix is not diagonalizable."""

    assumption = 4


class ComponentNotReal(LftidError):
    """A nominally real spectral component has a large imaginary part."""


class SharedEigenvalue(LftidError):
    """Plant and input generator share an eigenvalue; the steady-state
    decomposition (and its Sylvester-type equation) is not solvable."""


class SingularT(LftidError):
    """The eigenvector matrix of the input generator is singular."""


class UnsupportedIndex(LftidError):
    """The pencil has nilpotency index >= 2 (impulsive modes unsupported)."""


class NotPersistentlyExciting(LftidError):
    """The regressor matrix is rank deficient; the Gram matrix cannot be
    inverted."""

    def __init__(self, msg, sigma_min=None):
        super().__init__(msg)
        self.sigma_min = sigma_min


class NotIdentifiableFromData(LftidError):
    """The parametric regressor is column-rank deficient."""

    def __init__(self, msg, sigma_min=None):
        super().__init__(msg)
        self.sigma_min = sigma_min


class ZeroTrueParameter(LftidError):
    """A true parameter is zero; per-parameter relative error undefined."""


class Unstable(LftidError):
    """The plant is unstable; the requested operation needs stability."""

    assumption = 3


class ConfigError(LftidError):
    """A configuration file is missing, unparsable, or inconsistent."""


class NearRepeatedEigenvalues(UserWarning):
    """Two generator eigenvalues are closer than the distinctness
    tolerance (assumption 4)."""


class GeneratorEigenvalueWarning(UserWarning):
    """A generator eigenvalue has negative real part; allowed, but flagged."""


class ParameterBoxWarning(UserWarning):
    """A parameter vector lies outside the admissible box."""
