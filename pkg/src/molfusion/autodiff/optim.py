"""Adam optimizer with bias correction."""

from __future__ import annotations

import numpy as np

from .params import ParameterStore


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: dict,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[dict[str, np.ndarray], dict]:
    """One bias-corrected Adam update; pure function of its inputs.

    ``state`` holds {"t": int, "m": {name: array}, "v": {name: array}} and is
    initialized lazily to zeros at t=0.
    """
    if not state:
        state = {"t": 0, "m": {}, "v": {}}
    t = state["t"] + 1
    m_state, v_state = state["m"], state["v"]
    new_params = {}
    for name, p in params.items():
        g = grads[name]
        m = m_state.get(name, np.zeros_like(p))
        v = v_state.get(name, np.zeros_like(p))
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        new_params[name] = p - lr * m_hat / (np.sqrt(v_hat) + eps)
        m_state[name] = m
        v_state[name] = v
    state["t"] = t
    return new_params, state


class Adam:
    """In-place Adam over a ParameterStore, consuming accumulated ``.grad``."""

    def __init__(self, store: ParameterStore, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.store = store
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state: dict = {}

    def step(self) -> None:
        params = {}
        grads = {}
        for p in self.store:
            params[p.name] = p.tensor.data
            grads[p.name] = p.grad if p.grad is not None else np.zeros_like(p.tensor.data)
        new_params, self.state = adam_step(
            params, grads, self.state, self.lr, self.beta1, self.beta2, self.eps
        )
        for p in self.store:
            p.tensor.data = new_params[p.name]

    def zero_grad(self) -> None:
        self.store.zero_grad()
