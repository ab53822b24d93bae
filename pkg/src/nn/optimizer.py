# Path: /src/nn/optimizer.py
# Adaptive moment estimation updating network parameters in place.
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

DEFAULT_LEARNING_RATE = 2e-4
DEFAULT_BETAS = (0.5, 0.999)
DEFAULT_EPSILON = 1e-8


@dataclass
class OptimizerState:
    learning_rate: float = DEFAULT_LEARNING_RATE
    betas: Tuple[float, float] = DEFAULT_BETAS
    epsilon: float = DEFAULT_EPSILON
    step_count: int = 0
    first_moments: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moments: Dict[str, np.ndarray] = field(default_factory=dict)


class Adam:
    def __init__(self, params: Dict[str, np.ndarray], learning_rate=DEFAULT_LEARNING_RATE,
                 betas=DEFAULT_BETAS, epsilon=DEFAULT_EPSILON):
        self.params = params
        self.state = OptimizerState(learning_rate=learning_rate, betas=tuple(betas), epsilon=epsilon)
        for key, value in params.items():
            self.state.first_moments[key] = np.zeros_like(value)
            self.state.second_moments[key] = np.zeros_like(value)

    def step(self, grads: Dict[str, np.ndarray]):
        state = self.state
        if set(grads) != set(self.params):
            raise ValueError(f"Gradient keys {sorted(set(grads) ^ set(self.params))} do not match the parameters")
        state.step_count += 1
        beta1, beta2 = state.betas
        correction1 = 1.0 - beta1 ** state.step_count
        correction2 = 1.0 - beta2 ** state.step_count
        for key, param in self.params.items():
            grad = grads[key]
            if grad.shape != param.shape:
                raise ValueError(f"Gradient for '{key}' has shape {grad.shape}, parameter has {param.shape}")
            m = state.first_moments[key]
            v = state.second_moments[key]
            m *= beta1
            m += (1.0 - beta1) * grad
            v *= beta2
            v += (1.0 - beta2) * grad * grad
            param -= state.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + state.epsilon)
        return state
