import abc
from typing import Any, List, Optional, Union

from sqp.exceptions.error_codes import (
    CACHE_MISMATCH,
    CONFIGURATION_ERROR,
    EMPTY_INPUT,
    FORMAT_ERROR,
    INVALID_INPUT,
    MISSING_PARAMETERS,
    NON_FINITE,
    SHAPE_MISMATCH,
    TRAINING_DIVERGED,
)


class SQPBaseException(Exception, abc.ABC):
    def __init__(
        self,
        *,
        error: str,
        error_description: str,
        log_message: Union[str, None] = None,
        exit_code: int = 1,
    ):
        super().__init__(error_description if log_message is None else log_message)
        self.error = error
        self.error_description = error_description
        self.log_message = log_message
        self.exit_code = exit_code


class InvalidInputException(SQPBaseException):
    def __init__(
        self, *, error_description: str, log_message: Optional[str] = None
    ) -> None:
        super().__init__(
            error=INVALID_INPUT,
            error_description=error_description,
            log_message=log_message,
        )


class NonBinaryElementException(InvalidInputException):
    def __init__(self, *, index: int, value: float) -> None:
        super().__init__(
            error_description=f"Element {index} is {value!r}, expected 0.0 or 1.0"
        )
        self.index = index


class FileFormatException(SQPBaseException):
    def __init__(self, *, path: str, error_description: str) -> None:
        super().__init__(
            error=FORMAT_ERROR,
            error_description=f"{path}: {error_description}",
        )
        self.path = path


class ShapeMismatchException(SQPBaseException):
    def __init__(self, *, expected: Any, actual: Any, what: str = "tensor") -> None:
        super().__init__(
            error=SHAPE_MISMATCH,
            error_description=f"Shape mismatch for {what}: expected {expected}, got {actual}",
        )


class EmptyInputException(SQPBaseException):
    def __init__(self, *, error_description: str) -> None:
        super().__init__(error=EMPTY_INPUT, error_description=error_description)


class NonFiniteGradientException(SQPBaseException):
    def __init__(self, *, parameter_name: str) -> None:
        super().__init__(
            error=NON_FINITE,
            error_description=f"Non-finite gradient for parameter {parameter_name}",
        )
        self.parameter_name = parameter_name


class CacheMismatchException(SQPBaseException):
    def __init__(self, *, error_description: str) -> None:
        super().__init__(error=CACHE_MISMATCH, error_description=error_description)


class MissingQuantParamsException(SQPBaseException):
    def __init__(self, *, layer_names: List[str]) -> None:
        super().__init__(
            error=MISSING_PARAMETERS,
            error_description="Missing quantization parameters for layers: "
            + ", ".join(layer_names),
        )
        self.layer_names = layer_names


class TrainingDivergedException(SQPBaseException):
    def __init__(self, *, epoch: int, history: Any, best_weights: Any) -> None:
        super().__init__(
            error=TRAINING_DIVERGED,
            error_description=f"Validation loss became non-finite at epoch {epoch}",
        )
        self.epoch = epoch
        self.history = history
        self.best_weights = best_weights


class ConfigurationException(SQPBaseException):
    def __init__(self, *, error_description: str) -> None:
        super().__init__(
            error=CONFIGURATION_ERROR, error_description=error_description, exit_code=2
        )
