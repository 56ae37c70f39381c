from enum import Enum


class ErrorCodeEnum(Enum):
    INVALID_INPUT = "E001"
    INDEX_OUT_OF_RANGE = "E002"
    MALFORMED_FILE = "E003"
    SERVICE_FAILURE = "E100"
    INIT_EXHAUSTED = "E101"
    NON_FINITE = "E102"
    EIGEN_NOT_CONVERGED = "E103"
    SINGULAR_GRAM = "E104"
    NEGATIVE_VARIANCE = "E201"
    INVARIANT_VIOLATION = "E202"

    def __str__(self):
        return self.value
