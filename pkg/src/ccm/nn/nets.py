from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ._utils import glorot, sigmoid
from .base import Parametric
from .const import DEFAULT_RECURRENT_HIDDEN
from .exceptions import ShapeError

__all__ = ("FeedforwardNet", "RecurrentCell")


class FeedforwardNet(Parametric):
    """Multi-layer perceptron with tanh hidden layers and a linear output layer.

    Inputs are a vector `(in,)` or a batch `(batch, in)`; the output has the matching rank.
    `backward` differentiates the last `forward` call and adds into `grads`.
    """

    def __init__(
        self,
        sizes: Sequence[int],
        rng: Optional[np.random.Generator] = None,
        output_scale: float = 1.0,
    ) -> None:
        super().__init__()
        if len(sizes) < 2 or any(int(size) < 1 for size in sizes):
            raise ShapeError(f"layer sizes must be >= 1 and at least two of them, got {list(sizes)}")
        self.sizes = tuple(int(size) for size in sizes)
        rng = rng or np.random.default_rng(0)
        n_layers = len(self.sizes) - 1
        for i, (fan_in, fan_out) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            scale = output_scale if i == n_layers - 1 else 1.0
            self._register(f"W{i}", glorot(rng, fan_out, fan_in, scale))
            self._register(f"b{i}", np.zeros(fan_out))
        self._cache: Optional[list[np.ndarray]] = None
        self._batched = True

    @property
    def n_layers(self) -> int:
        return len(self.sizes) - 1

    @property
    def in_dim(self) -> int:
        return self.sizes[0]

    @property
    def out_dim(self) -> int:
        return self.sizes[-1]

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim not in (1, 2) or x.shape[-1] != self.in_dim:
            raise ShapeError(f"expected input with last dimension {self.in_dim}, got shape {x.shape}")
        self._batched = x.ndim == 2
        a = np.atleast_2d(x)
        activations = [a]
        for i in range(self.n_layers):
            z = a @ self.params[f"W{i}"].T + self.params[f"b{i}"]
            a = z if i == self.n_layers - 1 else np.tanh(z)
            activations.append(a)
        self._cache = activations
        return a if self._batched else a[0]

    __call__ = forward

    def backward(self, dy: np.ndarray) -> np.ndarray:
        """Accumulate parameter gradients for output gradient `dy` and return the input gradient."""
        if self._cache is None:
            raise RuntimeError("backward called before forward")
        dy = np.atleast_2d(np.asarray(dy, dtype=float))
        activations = self._cache
        if dy.shape != activations[-1].shape:
            raise ShapeError(f"expected output gradient of shape {activations[-1].shape}, got {dy.shape}")
        delta = dy
        for i in reversed(range(self.n_layers)):
            a_prev = activations[i]
            self.grads[f"W{i}"] += delta.T @ a_prev
            self.grads[f"b{i}"] += delta.sum(axis=0)
            delta = delta @ self.params[f"W{i}"]
            if i > 0:
                delta = delta * (1.0 - a_prev**2)
        return delta if self._batched else delta[0]


class RecurrentCell(Parametric):
    """Elman cell: h_t = tanh(Wx x_t + Wh h_{t-1} + bh), y_t = sigmoid(Wy h_t + by).

    `step` runs online with the stored hidden state; `forward_sequence` / `backward_sequence`
    run a window with backpropagation through time.
    """

    def __init__(
        self,
        input_size: int,
        hidden_size: int = DEFAULT_RECURRENT_HIDDEN,
        output_size: int = 1,
        rng: Optional[np.random.Generator] = None,
    ) -> None:
        super().__init__()
        if min(input_size, hidden_size, output_size) < 1:
            raise ShapeError(f"sizes must be >= 1, got ({input_size}, {hidden_size}, {output_size})")
        self.input_size, self.hidden_size, self.output_size = int(input_size), int(hidden_size), int(output_size)
        rng = rng or np.random.default_rng(0)
        self._register("Wx", glorot(rng, hidden_size, input_size))
        self._register("Wh", glorot(rng, hidden_size, hidden_size))
        self._register("bh", np.zeros(hidden_size))
        self._register("Wy", glorot(rng, output_size, hidden_size))
        self._register("by", np.zeros(output_size))
        self.h = np.zeros(hidden_size)
        self._cache: Optional[tuple[np.ndarray, np.ndarray, np.ndarray]] = None

    def reset(self) -> None:
        self.h = np.zeros(self.hidden_size)

    @property
    def last_hidden(self) -> np.ndarray:
        """Final hidden state of the last `forward_sequence` window."""
        if self._cache is None:
            return np.zeros(self.hidden_size)
        return self._cache[1][-1].copy()

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.input_size:
            raise ShapeError(f"expected input of size {self.input_size}, got shape {x.shape}")
        return x

    def _readout(self, h: np.ndarray) -> np.ndarray:
        return sigmoid(h @ self.params["Wy"].T + self.params["by"])

    def step(self, x: np.ndarray) -> np.ndarray:
        """One online step; advances the stored hidden state."""
        x = self._check(x)
        self.h = np.tanh(self.params["Wx"] @ x + self.params["Wh"] @ self.h + self.params["bh"])
        return self._readout(self.h)

    def forward_sequence(self, xs: np.ndarray, h0: Optional[np.ndarray] = None) -> np.ndarray:
        """Run a `(T, input_size)` window from `h0` (zeros by default) and return `(T, output_size)` outputs."""
        xs = self._check(xs)
        if xs.ndim != 2:
            raise ShapeError(f"expected a (T, {self.input_size}) window, got shape {xs.shape}")
        h_prev = np.zeros(self.hidden_size) if h0 is None else np.asarray(h0, dtype=float)
        hs = np.empty((len(xs) + 1, self.hidden_size))
        hs[0] = h_prev
        for t, x in enumerate(xs):
            hs[t + 1] = np.tanh(self.params["Wx"] @ x + self.params["Wh"] @ hs[t] + self.params["bh"])
        ys = self._readout(hs[1:])
        self._cache = (xs, hs, ys)
        return ys

    def backward_sequence(self, dys: np.ndarray, wrt_logits: bool = False) -> None:
        """Accumulate gradients for the last window.

        Args:
            dys (np.ndarray): Gradient with respect to the sigmoid outputs, or to the pre-sigmoid
                logits when `wrt_logits` is True.
            wrt_logits (bool): See `dys`. Defaults to False.
        """
        if self._cache is None:
            raise RuntimeError("backward_sequence called before forward_sequence")
        xs, hs, ys = self._cache
        dys = np.asarray(dys, dtype=float).reshape(ys.shape)
        dz_y = dys if wrt_logits else dys * ys * (1.0 - ys)
        self.grads["Wy"] += dz_y.T @ hs[1:]
        self.grads["by"] += dz_y.sum(axis=0)
        dh_next = np.zeros(self.hidden_size)
        for t in reversed(range(len(xs))):
            dh = dz_y[t] @ self.params["Wy"] + dh_next
            dz = dh * (1.0 - hs[t + 1] ** 2)
            self.grads["Wx"] += np.outer(dz, xs[t])
            self.grads["Wh"] += np.outer(dz, hs[t])
            self.grads["bh"] += dz
            dh_next = dz @ self.params["Wh"]
