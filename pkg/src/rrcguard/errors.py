"""Exception types raised across the package."""


class RrcGuardError(Exception):
    """Base class for all package errors."""


class RejectedInputError(RrcGuardError, ValueError):
    """Input violates an operation's preconditions (shape, labels, ordering)."""


class TrainingDivergedError(RrcGuardError, ArithmeticError):
    """Loss or weights became non-finite; lower the learning rate."""


class InsufficientDataError(RrcGuardError, ValueError):
    pass


class CalibrationError(RrcGuardError, ValueError):
    """No Normal rows are available to fit the feature scaler."""


class DegenerateSamplingError(RrcGuardError, ArithmeticError):
    """A surrogate regression system stayed singular after retrying."""
