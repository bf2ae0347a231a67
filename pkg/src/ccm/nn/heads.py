from __future__ import annotations

import math
from typing import Union

import numpy as np

from ._utils import log_softmax, softmax
from .base import Parametric
from .const import LOG_STD_MAX, LOG_STD_MIN

__all__ = ("CategoricalHead", "DiagonalGaussianHead", "PolicyHead")

_LOG_2PI = math.log(2.0 * math.pi)


class CategoricalHead:
    """Softmax distribution over the rows of a logits array; no parameters of its own."""

    def probs(self, logits: np.ndarray) -> np.ndarray:
        return softmax(np.asarray(logits, dtype=float))

    def sample(self, logits: np.ndarray, rng: np.random.Generator, deterministic: bool = False) -> tuple[int, float]:
        logp = log_softmax(np.asarray(logits, dtype=float))
        if deterministic:
            action = int(np.argmax(logp))
        else:
            action = int(rng.choice(len(logp), p=np.exp(logp)))
        return action, float(logp[action])

    def log_prob(self, logits: np.ndarray, actions: Union[int, np.ndarray]) -> np.ndarray:
        logp = log_softmax(np.atleast_2d(np.asarray(logits, dtype=float)))
        actions = np.atleast_1d(np.asarray(actions, dtype=int))
        return logp[np.arange(len(actions)), actions]

    def entropy(self, logits: np.ndarray) -> np.ndarray:
        logp = log_softmax(np.atleast_2d(np.asarray(logits, dtype=float)))
        return -(np.exp(logp) * logp).sum(axis=-1)

    def grad_log_prob(self, logits: np.ndarray, actions: Union[int, np.ndarray]) -> np.ndarray:
        """d log pi(a) / d logits, one row per sample."""
        p = softmax(np.atleast_2d(np.asarray(logits, dtype=float)))
        actions = np.atleast_1d(np.asarray(actions, dtype=int))
        grad = -p
        grad[np.arange(len(actions)), actions] += 1.0
        return grad

    def grad_entropy(self, logits: np.ndarray) -> np.ndarray:
        logp = log_softmax(np.atleast_2d(np.asarray(logits, dtype=float)))
        p = np.exp(logp)
        h = -(p * logp).sum(axis=-1, keepdims=True)
        return -p * (logp + h)


class DiagonalGaussianHead(Parametric):
    """Gaussian with a state-dependent mean (from the network) and a learned, state-independent log-std.

    The log-std is kept inside [LOG_STD_MIN, LOG_STD_MAX]; `clamp` is applied after every update.
    """

    def __init__(self, dim: int, init_log_std: float = -0.5) -> None:
        super().__init__()
        self.dim = int(dim)
        self._register("log_std", np.full(self.dim, float(np.clip(init_log_std, LOG_STD_MIN, LOG_STD_MAX))))

    @property
    def log_std(self) -> np.ndarray:
        return self.params["log_std"]

    @property
    def std(self) -> np.ndarray:
        return np.exp(self.params["log_std"])

    def clamp(self) -> None:
        np.clip(self.params["log_std"], LOG_STD_MIN, LOG_STD_MAX, out=self.params["log_std"])

    def sample(self, mean: np.ndarray, rng: np.random.Generator, deterministic: bool = False) -> tuple[np.ndarray, float]:
        mean = np.asarray(mean, dtype=float)
        action = mean.copy() if deterministic else mean + self.std * rng.standard_normal(mean.shape)
        return action, float(self.log_prob(mean, action)[0])

    def log_prob(self, mean: np.ndarray, actions: np.ndarray) -> np.ndarray:
        mean = np.atleast_2d(np.asarray(mean, dtype=float))
        actions = np.atleast_2d(np.asarray(actions, dtype=float))
        z = (actions - mean) / self.std
        return (-0.5 * z**2 - self.log_std - 0.5 * _LOG_2PI).sum(axis=-1)

    def entropy(self, mean: np.ndarray) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(mean, dtype=float)).shape[0]
        return np.full(rows, float((self.log_std + 0.5 * (1.0 + _LOG_2PI)).sum()))

    def grad_log_prob(self, mean: np.ndarray, actions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """d log pi(a) with respect to the mean (per sample) and to the log-std (per sample)."""
        mean = np.atleast_2d(np.asarray(mean, dtype=float))
        actions = np.atleast_2d(np.asarray(actions, dtype=float))
        var = self.std**2
        diff = actions - mean
        return diff / var, diff**2 / var - 1.0


PolicyHead = Union[CategoricalHead, DiagonalGaussianHead]
