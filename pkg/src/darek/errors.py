"""Exception hierarchy.

Validation problems (bad inputs, malformed files) derive from ``ValueError``;
numerical failures (divergence, failed factorizations) derive from
``ArithmeticError``.  The CLI maps the two families to exit codes 2 and 3.
"""


class DarekValidationError(ValueError):
    pass


class DarekNumericalError(ArithmeticError):
    pass


class DuplicateKnotError(DarekValidationError):
    """Two abscissae coincide (within the relative duplicate tolerance)."""


class EmptyInputError(DarekValidationError):
    pass


class InsufficientKnotsError(DarekValidationError):
    """Fewer than ``k + 1`` knots available for an order-``k`` stencil."""


class DegenerateImagesError(DarekValidationError):
    """Knot images collapsed to fewer than ``k + 1`` distinct values."""

    def __init__(self, message, layer=None, unit=None):
        super().__init__(message)
        self.layer = layer
        self.unit = unit


class DivergenceError(DarekNumericalError):
    def __init__(self, epoch, loss):
        super().__init__(f"training diverged at epoch {epoch} (loss={loss})")
        self.epoch = epoch
        self.loss = loss


class ScanFormatError(DarekValidationError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
