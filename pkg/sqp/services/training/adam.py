from typing import Dict, Tuple

import numpy as np

from sqp.exceptions.sqp_exceptions import NonFiniteGradientException, ShapeMismatchException
from sqp.models.model_graph import WeightSet
from sqp.models.training import AdamState


def init_adam(weights: WeightSet) -> AdamState:
    return AdamState(
        first_moment={k: np.zeros_like(v) for k, v in weights.params.items()},
        second_moment={k: np.zeros_like(v) for k, v in weights.params.items()},
    )


def adam_step(
    weights: WeightSet,
    grads: Dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> Tuple[WeightSet, AdamState]:
    """Bias-corrected Adam; returns new weights and state, inputs are untouched."""
    for name, value in weights.params.items():
        grad = grads.get(name)
        if grad is None or grad.shape != value.shape:
            raise ShapeMismatchException(
                expected=value.shape,
                actual=None if grad is None else grad.shape,
                what=f"gradient of {name}",
            )
        if not np.all(np.isfinite(grad)):
            raise NonFiniteGradientException(parameter_name=name)

    step = state.step + 1
    correction1 = 1.0 - beta1**step
    correction2 = 1.0 - beta2**step
    params, first, second = {}, {}, {}
    for name, value in weights.params.items():
        grad = grads[name]
        first[name] = beta1 * state.first_moment[name] + (1.0 - beta1) * grad
        second[name] = beta2 * state.second_moment[name] + (1.0 - beta2) * grad * grad
        update = (first[name] / correction1) / (np.sqrt(second[name] / correction2) + eps)
        params[name] = (value - lr * update).astype(value.dtype)
    return (
        WeightSet(params=params),
        AdamState(first_moment=first, second_moment=second, step=step),
    )
