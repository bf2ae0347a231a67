from __future__ import annotations

from typing import Union

import numpy as np

from ._utils import finite_difference_grads, relative_error, sigmoid, softmax
from .a2c import A2cOptimizers, A2cResult, Trajectory, a2c_update, discounted_returns
from .base import Parametric
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .exceptions import CheckpointError, NumericsError, ShapeError
from .heads import CategoricalHead, DiagonalGaussianHead, PolicyHead
from .nets import FeedforwardNet, RecurrentCell
from .optim import PendingStep, RunningMeanStd, SgdMomentum

__all__ = (
    "A2cOptimizers",
    "A2cResult",
    "CategoricalHead",
    "Checkpoint",
    "CheckpointError",
    "DiagonalGaussianHead",
    "FeedforwardNet",
    "NumericsError",
    "Parametric",
    "PendingStep",
    "PolicyHead",
    "RecurrentCell",
    "RunningMeanStd",
    "SgdMomentum",
    "ShapeError",
    "Trajectory",
    "a2c_update",
    "backward",
    "discounted_returns",
    "finite_difference_grads",
    "forward",
    "load_checkpoint",
    "relative_error",
    "sample",
    "save_checkpoint",
    "sigmoid",
    "softmax",
)


def forward(net: FeedforwardNet, x: np.ndarray) -> np.ndarray:
    return net.forward(x)


def backward(net: FeedforwardNet, dy: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of `<dy, net(x)>` for the last forward input, as fresh copies."""
    net.zero_grad()
    net.backward(dy)
    return {name: grad.copy() for name, grad in net.grads.items()}


def sample(
    head: PolicyHead, out: np.ndarray, rng: np.random.Generator, deterministic: bool = False
) -> tuple[Union[int, np.ndarray], float]:
    return head.sample(out, rng, deterministic)


