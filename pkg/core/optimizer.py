from __future__ import annotations

import numpy as np

from core.parameters import ParameterSet
from errors import MissingGradientError


class Adam:
    """
    Adaptive-moment update with bias correction.

    Moments live on each ``Parameter`` (``m``, ``v``, ``step``) so a
    parameter set can be handed between optimizer instances.
    """

    def __init__(self, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    def step(self, params: ParameterSet, lr: float) -> ParameterSet:
        if not lr > 0:
            raise ValueError(f"learning rate must be positive, got {lr}")
        for p in params:
            if p.grad is None:
                raise MissingGradientError(p.name)

        for p in params:
            g = p.grad
            p.step += 1
            p.m = self.beta1 * p.m + (1.0 - self.beta1) * g
            p.v = self.beta2 * p.v + (1.0 - self.beta2) * g * g
            m_hat = p.m / (1.0 - self.beta1 ** p.step)
            v_hat = p.v / (1.0 - self.beta2 ** p.step)
            update = lr * m_hat / (np.sqrt(v_hat) + self.eps)
            p.value = (p.value - update).astype(p.value.dtype, copy=False)
        params.zero_grad()
        return params


def optimizer_step(params: ParameterSet, lr: float) -> ParameterSet:
    """One Adam step with the default decay rates."""
    return Adam().step(params, lr)
