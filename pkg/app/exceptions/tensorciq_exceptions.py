from app.exceptions.error_code_enums import ErrorCodeEnum


class TensorCiqException(Exception):
    """Base exception class for the application."""

    def __init__(self, message: str, code: ErrorCodeEnum = ErrorCodeEnum.INVALID_INPUT):
        self.message = message
        self.code = code
        super().__init__(f"{self.code}: {self.message}")

    def to_dict(self):
        return {"message": self.message, "code": str(self.code.value)}


class InvalidInputException(TensorCiqException):
    """Raised for bad configuration, malformed files and out-of-range arguments."""

    def __init__(self, message="Invalid input", code: ErrorCodeEnum = ErrorCodeEnum.INVALID_INPUT):
        super().__init__(message, code)


class IndexOutOfRange(InvalidInputException):
    def __init__(self, message="Index out of range"):
        super().__init__(message, ErrorCodeEnum.INDEX_OUT_OF_RANGE)


class MalformedFileException(InvalidInputException):
    def __init__(self, message="Malformed file", line_number: int = None, byte_offset: int = None):
        self.line_number = line_number
        self.byte_offset = byte_offset
        if line_number is not None:
            message = f"line {line_number} (byte offset {byte_offset}): {message}"
        super().__init__(message, ErrorCodeEnum.MALFORMED_FILE)


class ServiceException(TensorCiqException):
    """Base exception for algorithmic failures of the estimation services"""

    def __init__(self, message: str = "Service layer exception",
                 code: ErrorCodeEnum = ErrorCodeEnum.SERVICE_FAILURE):
        super().__init__(message, code)


class InitExhausted(ServiceException):
    def __init__(self, message="Candidate pool exhausted before r factors were picked"):
        super().__init__(message, ErrorCodeEnum.INIT_EXHAUSTED)


class NonFiniteError(ServiceException):
    def __init__(self, message="Loss or gradient is not finite; step size is likely too large"):
        super().__init__(message, ErrorCodeEnum.NON_FINITE)


class EigenNotConverged(ServiceException):
    def __init__(self, message="Eigendecomposition did not converge"):
        super().__init__(message, ErrorCodeEnum.EIGEN_NOT_CONVERGED)


class SingularGram(ServiceException):
    def __init__(self, message="Lifted Gram matrix is numerically singular"):
        super().__init__(message, ErrorCodeEnum.SINGULAR_GRAM)


class InvariantViolation(TensorCiqException):
    def __init__(self, message="Internal invariant violated", code: ErrorCodeEnum = ErrorCodeEnum.INVARIANT_VIOLATION):
        super().__init__(message, code)


class NegativeVariance(InvariantViolation):
    def __init__(self, message="Variance is negative beyond tolerance"):
        super().__init__(message, ErrorCodeEnum.NEGATIVE_VARIANCE)
