from enum import Enum


class ErrorCode(str, Enum):
    INVALID_ARGUMENT = "INVALID_ARGUMENT"
    DIMENSION_MISMATCH = "DIMENSION_MISMATCH"
    NON_FINITE_INPUT = "NON_FINITE_INPUT"
    UNKNOWN_CONFIG_KEY = "UNKNOWN_CONFIG_KEY"
    UNSUPPORTED_FORMAT = "UNSUPPORTED_FORMAT"
    HEADER_PARSE_ERROR = "HEADER_PARSE_ERROR"
    TRUNCATED_FILE = "TRUNCATED_FILE"
    NOT_FOUND = "NOT_FOUND"
    IO_ERROR = "IO_ERROR"
    MODEL_FIT_FAILED = "MODEL_FIT_FAILED"
    INTERNAL_ERROR = "INTERNAL_ERROR"


# 2: 사용법/인자 오류, 1: 실행 중 오류
ERROR_CODE_TO_EXIT_CODE: dict[ErrorCode, int] = {
    ErrorCode.INVALID_ARGUMENT: 2,
    ErrorCode.DIMENSION_MISMATCH: 2,
    ErrorCode.NON_FINITE_INPUT: 2,
    ErrorCode.UNKNOWN_CONFIG_KEY: 2,
    ErrorCode.UNSUPPORTED_FORMAT: 1,
    ErrorCode.HEADER_PARSE_ERROR: 1,
    ErrorCode.TRUNCATED_FILE: 1,
    ErrorCode.NOT_FOUND: 1,
    ErrorCode.IO_ERROR: 1,
    ErrorCode.MODEL_FIT_FAILED: 1,
    ErrorCode.INTERNAL_ERROR: 1,
}
