"""Exception hierarchy shared by all kdeaqp modules."""


class KdeError(Exception):
    """Base class for data and numeric errors raised by kdeaqp."""


class DataError(KdeError, ValueError):
    pass


class RaggedRowsError(DataError):
    def __init__(self, row, expected, got):
        self.row = row
        super().__init__(f"row {row}: expected {expected} fields, got {got}")


class NonNumericCellError(DataError):
    def __init__(self, row, col, text):
        self.row = row
        self.col = col
        super().__init__(f"row {row}, column {col}: not a finite number: {text!r}")


class EmptyInputError(DataError):
    pass


class DimensionMismatchError(KdeError, ValueError):
    pass


class InsufficientSamplesError(KdeError, ValueError):
    pass


class SingularMatrixError(KdeError, ValueError):
    pass


class SingularCovarianceError(SingularMatrixError):
    pass


class NotPositiveDefiniteError(KdeError, ValueError):
    pass


class LengthMismatchError(KdeError, ValueError):
    pass


class EmptyArrayError(KdeError, ValueError):
    pass


class NotUnivariateError(KdeError, ValueError):
    pass


class DegenerateDataError(KdeError, ValueError):
    pass


class NonPositiveBandwidthError(KdeError, ValueError):
    pass


class NoFeasiblePointError(KdeError, RuntimeError):
    pass


class MemoryBudgetError(KdeError, MemoryError):
    pass


class InvalidRangeError(KdeError, ValueError):
    pass


class EmptyRangeEstimateError(KdeError, ValueError):
    pass
