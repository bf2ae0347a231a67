from __future__ import annotations

from typing import Callable

import numpy as np

from .base import Parametric


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


def glorot(rng: np.random.Generator, fan_out: int, fan_in: int, scale: float = 1.0) -> np.ndarray:
    """Normal init with variance 2 / (fan_in + fan_out), times `scale`."""
    return scale * rng.normal(0.0, np.sqrt(2.0 / (fan_in + fan_out)), size=(fan_out, fan_in))


def finite_difference_grads(module: Parametric, loss: Callable[[], float], step: float = 1e-4) -> dict[str, np.ndarray]:
    """Central finite-difference gradient of `loss` with respect to every parameter of `module`.

    Args:
        module (Parametric): Module whose parameters are perturbed in place (and restored).
        loss (Callable[[], float]): Re-evaluates the scalar loss from the current parameters.
        step (float): Perturbation size. Defaults to 1e-4.

    Returns:
        dict[str, np.ndarray]: Numerical gradients keyed like `module.params`.
    """
    numerical: dict[str, np.ndarray] = {}
    for name, value in module.params.items():
        grad = np.zeros_like(value)
        flat = value.reshape(-1)
        grad_flat = grad.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + step
            up = loss()
            flat[i] = original - step
            down = loss()
            flat[i] = original
            grad_flat[i] = (up - down) / (2 * step)
        numerical[name] = grad
    return numerical


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-3) -> float:
    """Largest coordinate-wise |a - b| / max(|a|, |b|, floor); coordinates below `floor` compare absolutely."""
    denominator = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denominator)) if a.size else 0.0
