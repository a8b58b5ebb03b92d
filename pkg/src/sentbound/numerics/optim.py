"""RMSProp with a per-parameter squared-gradient moving average."""

import numpy as np

from ..errors import ContractError


class RmsPropState:
    """Accumulators r plus the fixed run constants (gamma, eta, epsilon).

    r_t = gamma * r_{t-1} + (1 - gamma) * g^2
    theta_{t+1} = theta_t - eta * g / (sqrt(r_t) + epsilon)
    """

    def __init__(self, params, gamma=0.9, eta=0.001, epsilon=1e-8):
        if not 0.0 < gamma < 1.0:
            raise ContractError(f"gamma must be in (0, 1), got {gamma}")
        if eta <= 0.0 or epsilon <= 0.0:
            raise ContractError("eta and epsilon must be positive")
        self.gamma = gamma
        self.eta = eta
        self.epsilon = epsilon
        self.r = {name: np.zeros_like(value) for name, value in params.items()}


def rmsprop_step(params, grads, state):
    """Update params in place from grads; returns params for convenience."""
    g, eta, eps = state.gamma, state.eta, state.epsilon
    for name, p in params.items():
        grad = grads[name]
        r = state.r[name]
        r *= g
        r += (1.0 - g) * grad * grad
        p -= eta * grad / (np.sqrt(r) + eps)
    return params
