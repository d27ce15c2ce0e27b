from typing import Iterable

from exceptions.error_codes import ERROR_CODE_TO_EXIT_CODE, ErrorCode


class ServiceException(Exception):
    def __init__(
        self,
        error_code: ErrorCode,
        message: str | None = None,
        data: dict | None = None,
    ):
        self.error_code = error_code
        self.message = message or error_code.value
        self.data = data
        super().__init__(f"{error_code.value}: {self.message}")

    @property
    def exit_code(self) -> int:
        return ERROR_CODE_TO_EXIT_CODE.get(self.error_code, 1)

    # ── Factory 메서드 ──

    @staticmethod
    def invalid_argument(message: str) -> "ServiceException":
        return ServiceException(ErrorCode.INVALID_ARGUMENT, message)

    @staticmethod
    def dimension_mismatch(expected, actual, what: str = "vector") -> "ServiceException":
        return ServiceException(
            ErrorCode.DIMENSION_MISMATCH,
            f"{what} 크기가 맞지 않습니다 (expected={expected}, actual={actual})",
            data={"expected": expected, "actual": actual},
        )

    @staticmethod
    def non_finite(what: str) -> "ServiceException":
        return ServiceException(
            ErrorCode.NON_FINITE_INPUT, f"{what}에 NaN 또는 inf 값이 있습니다"
        )

    @staticmethod
    def unknown_config_key(key: str, valid_keys: Iterable[str]) -> "ServiceException":
        valid = sorted(valid_keys)
        return ServiceException(
            ErrorCode.UNKNOWN_CONFIG_KEY,
            f"알 수 없는 설정 키: {key} (사용 가능: {', '.join(valid)})",
            data={"key": key, "valid_keys": valid},
        )

    @staticmethod
    def unsupported_format(message: str) -> "ServiceException":
        return ServiceException(ErrorCode.UNSUPPORTED_FORMAT, message)

    @staticmethod
    def header_parse(message: str) -> "ServiceException":
        return ServiceException(ErrorCode.HEADER_PARSE_ERROR, message)

    @staticmethod
    def truncated_file(message: str) -> "ServiceException":
        return ServiceException(ErrorCode.TRUNCATED_FILE, message)

    @staticmethod
    def not_found(message: str) -> "ServiceException":
        return ServiceException(ErrorCode.NOT_FOUND, message)

    @staticmethod
    def io_error(message: str) -> "ServiceException":
        return ServiceException(ErrorCode.IO_ERROR, message)

    @staticmethod
    def model_fit_failed(iteration: int, message: str) -> "ServiceException":
        return ServiceException(
            ErrorCode.MODEL_FIT_FAILED,
            f"{iteration}번째 반복에서 모델 학습 실패: {message}",
            data={"iteration": iteration},
        )
