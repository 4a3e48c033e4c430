import numpy as np

from sqp.exceptions.sqp_exceptions import EmptyInputException, ShapeMismatchException
from sqp.services.model.layers import superspike_deriv

__all__ = ["mse_loss", "mse_grad", "superspike_deriv"]


def _pair(predictions, targets):
    predictions = np.asarray(predictions, dtype=np.float64).reshape(-1)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    if predictions.shape != targets.shape:
        raise ShapeMismatchException(
            expected=targets.shape, actual=predictions.shape, what="predictions"
        )
    if predictions.size == 0:
        raise EmptyInputException(error_description="Empty batch")
    return predictions, targets


def mse_loss(predictions, targets) -> float:
    predictions, targets = _pair(predictions, targets)
    return float(np.mean((predictions - targets) ** 2))


def mse_grad(predictions, targets, count: int) -> np.ndarray:
    """d(mean squared error)/d(predictions) for a slice of a batch of size count."""
    predictions = np.asarray(predictions)
    return (2.0 / count) * (predictions - np.asarray(targets, dtype=predictions.dtype))
