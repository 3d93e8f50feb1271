from enum import IntEnum, StrEnum
from typing import Any

from pydantic import BaseModel


class CtSemComErrorCode(StrEnum):
    """
    Error codes of the channel-transfer simulator
    """

    UNKNOWN_CTSEMCOM_ERROR = "UNKNOWN_CTSEMCOM_ERROR"
    ZERO_SYMBOL_NORM = "ZERO_SYMBOL_NORM"
    SHAPE_MISMATCH = "SHAPE_MISMATCH"
    NON_POSITIVE_POWER = "NON_POSITIVE_POWER"
    DEGENERATE_CHANNEL = "DEGENERATE_CHANNEL"
    NON_FINITE_CANDIDATE = "NON_FINITE_CANDIDATE"
    SOLVER_DID_NOT_CONVERGE = "SOLVER_DID_NOT_CONVERGE"
    DEGENERATE_DENOMINATOR = "DEGENERATE_DENOMINATOR"
    BAD_MAGIC = "BAD_MAGIC"
    VERSION_MISMATCH = "VERSION_MISMATCH"
    TRUNCATED_PAYLOAD = "TRUNCATED_PAYLOAD"
    SHAPE_OVERFLOW = "SHAPE_OVERFLOW"
    IO_FAILURE = "IO_FAILURE"
    CONFIG_ERROR = "CONFIG_ERROR"
    INVARIANT_VIOLATION = "INVARIANT_VIOLATION"


class ExitCode(IntEnum):
    SUCCESS = 0
    FAILURE = 1
    USAGE = 2
    IO = 3


_IO_CODES = {
    CtSemComErrorCode.BAD_MAGIC,
    CtSemComErrorCode.VERSION_MISMATCH,
    CtSemComErrorCode.TRUNCATED_PAYLOAD,
    CtSemComErrorCode.SHAPE_OVERFLOW,
    CtSemComErrorCode.IO_FAILURE,
}


class CtSemComError(Exception):
    """Base class for simulator exceptions."""

    message: str
    error_code: CtSemComErrorCode | None
    details: str | None

    def __init__(
        self,
        *,
        message: str,
        error_code: CtSemComErrorCode | None,
        details: str | None = None,
    ):
        super().__init__(message, error_code)
        self.message = message
        self.error_code = error_code
        self.details = details

    @property
    def exit_code(self) -> ExitCode:
        if self.error_code in _IO_CODES:
            return ExitCode.IO
        if self.error_code == CtSemComErrorCode.CONFIG_ERROR:
            return ExitCode.USAGE
        return ExitCode.FAILURE

    def __str__(self) -> str:
        if self.details:
            return f"{self.message}: {self.details}"
        return self.message

    def __repr__(self) -> str:
        class_name = self.__class__.__name__
        return f'{class_name}(message="{self.message}", error_code={self.error_code}, details={self.details})'


class CtSemComErrorResponse(BaseModel):
    """The format of an error report written on standard error"""

    error_code: CtSemComErrorCode | None
    message: str | None = None
    details: str | None = None

    @classmethod
    def from_error(cls, error: CtSemComError) -> "CtSemComErrorResponse":
        return cls(
            error_code=error.error_code
            if error.error_code is not None
            else CtSemComErrorCode.UNKNOWN_CTSEMCOM_ERROR,
            message=error.message,
            details=error.details,
        )


class _CodedError(CtSemComError):
    code: CtSemComErrorCode = CtSemComErrorCode.UNKNOWN_CTSEMCOM_ERROR
    default_message: str = "Simulator error"

    def __init__(self, message: str | None = None, details: str | None = None):
        super().__init__(
            message=message or self.default_message,
            error_code=self.code,
            details=details,
        )


class ZeroSymbolNorm(_CodedError):
    code = CtSemComErrorCode.ZERO_SYMBOL_NORM
    default_message = "Feature symbol has zero norm, normalization is undefined"


class ShapeMismatch(_CodedError):
    code = CtSemComErrorCode.SHAPE_MISMATCH
    default_message = "Tensor shapes do not agree"


class NonPositivePower(_CodedError):
    code = CtSemComErrorCode.NON_POSITIVE_POWER
    default_message = "Power budgets must be strictly positive"


class DegenerateChannel(_CodedError):
    code = CtSemComErrorCode.DEGENERATE_CHANNEL
    default_message = "Channel gain denominator vanished and no fade floor is set"


class NonFiniteCandidate(_CodedError):
    code = CtSemComErrorCode.NON_FINITE_CANDIDATE
    default_message = "Power factor candidates must be finite and positive"


class DegenerateDenominator(_CodedError):
    code = CtSemComErrorCode.DEGENERATE_DENOMINATOR
    default_message = "Power factor update has a zero denominator"


class SolverDidNotConverge(_CodedError):
    code = CtSemComErrorCode.SOLVER_DID_NOT_CONVERGE
    default_message = "QCQP solver did not reach the KKT tolerance"

    def __init__(
        self,
        message: str | None = None,
        details: str | None = None,
        *,
        best_iterate: Any = None,
        residual: float = float("inf"),
    ):
        super().__init__(message, details)
        self.best_iterate = best_iterate
        self.residual = residual


class BadMagic(_CodedError):
    code = CtSemComErrorCode.BAD_MAGIC
    default_message = "Not a CTSF feature file"


class VersionMismatch(_CodedError):
    code = CtSemComErrorCode.VERSION_MISMATCH
    default_message = "Unsupported CTSF version"


class TruncatedPayload(_CodedError):
    code = CtSemComErrorCode.TRUNCATED_PAYLOAD
    default_message = "Feature file payload is shorter than its header declares"


class ShapeOverflow(_CodedError):
    code = CtSemComErrorCode.SHAPE_OVERFLOW
    default_message = "Feature file shape does not fit its payload"


class IoFailure(_CodedError):
    code = CtSemComErrorCode.IO_FAILURE
    default_message = "I/O operation failed"


class ConfigError(_CodedError):
    code = CtSemComErrorCode.CONFIG_ERROR
    default_message = "Invalid run configuration"


class InvariantViolation(_CodedError):
    code = CtSemComErrorCode.INVARIANT_VIOLATION
    default_message = "Invariant check failed"
