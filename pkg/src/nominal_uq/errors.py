"""Exception hierarchy.

Three branches matter operationally: parse errors (file/schema problems,
raised by :mod:`nominal_uq.formats`), validation errors (inputs violate a
contract), and numerical errors (inputs are valid but the requested
computation is degenerate).  The CLI maps the branches to distinct exit
codes.
"""


class NominalUQError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(NominalUQError):
    """An input file could not be parsed against its declared schema."""


class ValidationError(NominalUQError, ValueError):
    """An input violates a documented precondition."""


class NumericalError(NominalUQError, ArithmeticError):
    """A computation is degenerate for the given (valid) input."""


# --- validation ---------------------------------------------------------

class NonFiniteError(ValidationError):
    """A value is NaN or infinite where a finite number is required."""


class NegativeProbabilityError(ValidationError):
    """A probability is below 0 beyond tolerance."""


class SumOutOfToleranceError(ValidationError):
    """Probabilities do not sum to 1 within the strict-mode tolerance."""


class DegenerateLengthError(ValidationError):
    """Fewer than two classes; normalized statistics divide by K - 1."""


class ClassIndexError(ValidationError, IndexError):
    """A class index is outside 0..K-1."""


class AlphaOutOfRangeError(ValidationError):
    """The quadratic-entropy order is outside (0, 1]."""


class EmptyInputError(ValidationError):
    """An aggregate was requested over an empty collection."""


class DimensionMismatchError(ValidationError):
    """Array shapes or class counts disagree."""


class MissingSdError(ValidationError):
    """A per-class standard deviation is required but absent."""


class MissingSamplerError(ValidationError):
    """Monte Carlo propagation needs a sampler for every class."""


class EmptyClassError(ValidationError):
    """A class has no training observations."""


class ImproperPriorError(ValidationError):
    """Prior hyperparameters do not define a proper distribution."""


# --- numerical ----------------------------------------------------------

class MultimodalInputError(NumericalError):
    """An operation defined for unimodal PMFs received a multimodal one."""


class DegenerateSdmError(NumericalError):
    """The SDM variance formula divides by zero at the uniform PMF."""


class DegeneratePriorError(NumericalError):
    """A single-class test set makes the expected-score denominators zero."""


class AmbiguousArgmaxError(NumericalError):
    """A prediction row has tied maxima under tie_rule='error'."""


class SingularScatterError(NumericalError):
    """A posterior scatter matrix is not positive definite."""


class SingularCovarianceError(NumericalError):
    """A synthetic-data covariance matrix is not positive definite."""
