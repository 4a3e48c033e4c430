import numpy as np
import pytest

from sqp.exceptions.sqp_exceptions import NonFiniteGradientException, ShapeMismatchException
from sqp.models.model_graph import WeightSet
from sqp.services.training.adam import adam_step, init_adam


@pytest.fixture
def weights():
    return WeightSet(
        params={"w": np.array([1.0, -2.0, 0.5], dtype=np.float32), "b": np.zeros(2, np.float32)}
    )


def test_first_step_moves_by_lr_against_the_gradient(weights):
    grads = {"w": np.array([0.3, -4.0, 0.0], np.float32), "b": np.array([1e-3, -1e-3], np.float32)}
    updated, state = adam_step(weights, grads, init_adam(weights), lr=0.01)
    np.testing.assert_allclose(updated["w"], [0.99, -1.99, 0.5], atol=1e-6)
    np.testing.assert_allclose(updated["b"], [-0.01, 0.01], atol=1e-4)
    assert state.step == 1
    np.testing.assert_array_equal(weights["w"], [1.0, -2.0, 0.5])
    assert updated["w"].dtype == np.float32


def test_moments_follow_the_recurrence(weights):
    state = init_adam(weights)
    grads = {"w": np.ones(3, np.float32), "b": np.ones(2, np.float32)}
    for _ in range(3):
        weights, state = adam_step(weights, grads, state, lr=0.1, beta1=0.5, beta2=0.75)
    np.testing.assert_allclose(state.first_moment["w"], 1 - 0.5**3)
    np.testing.assert_allclose(state.second_moment["w"], 1 - 0.75**3)
    np.testing.assert_allclose(weights["w"], [0.7, -2.3, 0.2], atol=1e-5)


def test_non_finite_gradient_leaves_weights_alone(weights):
    grads = {"w": np.array([0.0, np.nan, 0.0], np.float32), "b": np.zeros(2, np.float32)}
    with pytest.raises(NonFiniteGradientException) as info:
        adam_step(weights, grads, init_adam(weights), lr=0.1)
    assert info.value.parameter_name == "w"


def test_missing_or_misshaped_gradient(weights):
    state = init_adam(weights)
    with pytest.raises(ShapeMismatchException):
        adam_step(weights, {"w": np.zeros(3, np.float32)}, state, lr=0.1)
    with pytest.raises(ShapeMismatchException):
        adam_step(weights, {"w": np.zeros(4, np.float32), "b": np.zeros(2)}, state, lr=0.1)


def test_zero_gradient_keeps_weights(weights):
    state = init_adam(weights)
    grads = {"w": np.zeros(3, np.float32), "b": np.zeros(2, np.float32)}
    updated = weights
    for _ in range(5):
        updated, state = adam_step(updated, grads, state, lr=0.1)
    for name in weights.names():
        np.testing.assert_array_equal(updated[name], weights[name])
    assert state.step == 5


def test_loss_falls_monotonically_on_a_quadratic_bowl():
    target = np.array([2.0, -1.0, 0.5])
    curvature = np.array([1.0, 4.0, 0.25])
    bowl = WeightSet(params={"w": np.array([-3.0, 4.0, 5.5])})
    state = init_adam(bowl)
    losses = []
    for _ in range(100):
        offset = bowl["w"] - target
        losses.append(float(np.sum(curvature * offset**2)))
        bowl, state = adam_step(bowl, {"w": 2.0 * curvature * offset}, state, lr=0.01)
    assert all(later < earlier for earlier, later in zip(losses, losses[1:]))
    assert losses[-1] < losses[0]
