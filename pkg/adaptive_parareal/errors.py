from __future__ import annotations

from typing import Any, Optional

EXIT_OK = 0
EXIT_CONFIGURATION = 1
EXIT_NUMERICAL = 2

DEFAULT_ERROR_CODES = {
    EXIT_CONFIGURATION: "CONFIGURATION_ERROR",
    EXIT_NUMERICAL: "NUMERICAL_FAILURE",
}


class PararealError(Exception):
    code = "INTERNAL_ERROR"
    exit_code = EXIT_NUMERICAL

    def __init__(self, message: str, *, details: Optional[Any] = None, code: Optional[str] = None) -> None:
        super().__init__(message)
        self.message = message
        self.details = details
        if code:
            self.code = code

    def to_payload(self) -> dict[str, Any]:
        return build_error_payload(code=self.code, message=self.message, details=self.details)


class ConfigurationError(PararealError):
    code = DEFAULT_ERROR_CODES[EXIT_CONFIGURATION]
    exit_code = EXIT_CONFIGURATION


class NumericalFailureError(PararealError):
    code = DEFAULT_ERROR_CODES[EXIT_NUMERICAL]
    exit_code = EXIT_NUMERICAL


class CalibrationError(NumericalFailureError):
    code = "CALIBRATION_FAILED"


class DivergenceError(NumericalFailureError):
    code = "DIVERGED"


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(key): _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if hasattr(value, "tolist"):
        return value.tolist()
    return value


def build_error_payload(
    *,
    code: str,
    message: str,
    details: Optional[Any] = None,
) -> dict[str, Any]:
    payload: dict[str, Any] = {
        "code": code,
        "message": message,
    }
    if details is not None:
        payload["details"] = _jsonable(details)
    return payload


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, PararealError):
        return exc.exit_code
    return EXIT_NUMERICAL
