import numpy as np

from sqp.exceptions.sqp_exceptions import InvalidInputException, ShapeMismatchException
from sqp.services.training.losses import mse_loss


def _pair(x, y):
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ShapeMismatchException(expected=x.shape, actual=y.shape, what="metric inputs")
    return x, y


def pcc(x, y) -> float:
    """Pearson correlation. Undefined for fewer than two points or a constant side."""
    x, y = _pair(x, y)
    if x.size < 2:
        raise InvalidInputException(
            error_description=f"PCC needs at least 2 samples, got {x.size}"
        )
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidInputException(error_description="PCC inputs contain non-finite values")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        raise InvalidInputException(error_description="PCC undefined for zero variance")
    return float(np.clip(np.dot(dx, dy) / np.sqrt(sxx * syy), -1.0, 1.0))


def mse(predictions, targets) -> float:
    return mse_loss(predictions, targets)
