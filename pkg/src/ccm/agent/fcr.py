"""Forward coupled reasoning: reconstruct the values of a cut's companion variables from its first one.

A graph split at a multi-vertex cut loses the coupling between the cut variables. One recurrent cell
per cut learns, from realized rollouts, how the companion variables follow the first variable and
their own past, all in min-max normalized units.
"""

from __future__ import annotations

import logging
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from ccm.graph import DomainError
from ccm.nn import NumericsError, RecurrentCell, SgdMomentum

from ._enums import FcrLossKind
from .const import DEFAULT_FCR_LR, DEFAULT_FCR_WINDOW, FCR_CLAMP_MARGIN, FCR_DOMAIN_ERROR_MSG

logger = logging.getLogger(__name__)

__all__ = ("RunningRange", "FcrModule", "fcr_predict", "fcr_loss", "fcr_loss_grad")


class RunningRange:
    """Per-variable running min/max used to squash values into (0, 1)."""

    def __init__(self, size: int) -> None:
        self.lo = np.full(size, np.inf)
        self.hi = np.full(size, -np.inf)

    def update(self, values: Any) -> None:
        values = np.atleast_2d(np.asarray(values, dtype=float))
        np.minimum(self.lo, values.min(axis=0), out=self.lo)
        np.maximum(self.hi, values.max(axis=0), out=self.hi)

    def _span(self, index: Any) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.lo[index], self.hi[index]
        known = np.isfinite(lo) & np.isfinite(hi) & (hi > lo)
        return np.where(known, lo, 0.0), np.where(known, hi - lo, 0.0)

    def normalize(self, values: Any, index: Any = slice(None)) -> np.ndarray:
        """Values mapped into [margin, 1 - margin]; a variable with no spread yet maps to 0.5."""
        lo, span = self._span(index)
        values = np.asarray(values, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            unit = np.where(span > 0, (values - lo) / np.where(span > 0, span, 1.0), 0.5)
        return np.clip(unit, FCR_CLAMP_MARGIN, 1.0 - FCR_CLAMP_MARGIN)

    def denormalize(self, unit: Any, index: Any = slice(None), fallback: Any = None) -> np.ndarray:
        """Inverse of `normalize`; variables with no spread yet return `fallback` (or 0)."""
        lo, span = self._span(index)
        unit = np.asarray(unit, dtype=float)
        out = lo + unit * span
        if fallback is not None:
            out = np.where(span > 0, out, fallback)
        return out

    def state_dict(self) -> dict[str, np.ndarray]:
        return {"lo": self.lo.copy(), "hi": self.hi.copy()}

    def load_state_dict(self, state: Mapping[str, np.ndarray]) -> None:
        self.lo[...] = state["lo"]
        self.hi[...] = state["hi"]


def _window_inputs(first: np.ndarray, companions: np.ndarray) -> np.ndarray:
    """Rows `[v0_t, v_{t-1}]`, centered on 0.5 so the midpoint of every range sits at the origin."""
    k = companions.shape[1]
    previous = np.vstack([np.full((1, k), 0.5), companions[:-1]])
    return np.column_stack([first, previous[: len(first)]]) - 0.5


def fcr_predict(cell: Optional[RecurrentCell], first_history: Sequence[float], companion_history: Any) -> np.ndarray:
    """Reconstruct the current values of every cut variable.

    Args:
        cell (Optional[RecurrentCell]): The cut's cell; None for a single-variable cut.
        first_history (Sequence[float]): Normalized first-variable values up to now, the last entry
            being the value just proposed.
        companion_history (Any): `(len(first_history) - 1, k)` normalized companion values up to the
            previous step.

    Returns:
        np.ndarray: `[v0, v1, ..., vk]` in normalized units, `v0` passed through unchanged.
    """
    first = np.asarray(first_history, dtype=float).reshape(-1)
    if cell is None:
        return first[-1:].copy()
    k = cell.output_size
    companions = np.asarray(companion_history, dtype=float).reshape(-1, k)
    if len(companions) != len(first) - 1:
        raise ValueError(f"expected {len(first) - 1} companion rows, got {len(companions)}")
    padded = np.vstack([companions, np.full((1, k), 0.5)])
    outputs = cell.forward_sequence(_window_inputs(first, padded))
    return np.concatenate([first[-1:], outputs[-1]])


def _check_domain(*arrays: np.ndarray) -> None:
    for array in arrays:
        if not np.all(np.isfinite(array)) or np.any(array < 0.0) or np.any(array > 1.0):
            raise DomainError(FCR_DOMAIN_ERROR_MSG)


def fcr_loss(predicted: Any, truth: Any, kind: FcrLossKind = FcrLossKind.bce) -> float:
    """Mean reconstruction loss over all elements.

    `bce` is the standard binary cross-entropy, `literal` keeps `(truth - 1) * ln(1 - predicted)` as
    the second term, `mse` is the squared error. Predictions are clamped into [1e-6, 1 - 1e-6].

    Raises:
        DomainError: If a value lies outside [0, 1] or is not finite.
    """
    v = np.asarray(predicted, dtype=float)
    t = np.asarray(truth, dtype=float)
    _check_domain(v, t)
    v = np.clip(v, FCR_CLAMP_MARGIN, 1.0 - FCR_CLAMP_MARGIN)
    kind = FcrLossKind(kind)
    if kind is FcrLossKind.mse:
        return float(((v - t) ** 2).mean())
    second = (t - 1.0) if kind is FcrLossKind.literal else (1.0 - t)
    return float(-(t * np.log(v) + second * np.log(1.0 - v)).mean())


def fcr_loss_grad(predicted: np.ndarray, truth: np.ndarray, kind: FcrLossKind = FcrLossKind.bce) -> tuple[np.ndarray, bool]:
    """Gradient of `fcr_loss`, and whether it is taken with respect to the pre-sigmoid logits."""
    v = np.clip(np.asarray(predicted, dtype=float), FCR_CLAMP_MARGIN, 1.0 - FCR_CLAMP_MARGIN)
    t = np.asarray(truth, dtype=float)
    size = v.size
    kind = FcrLossKind(kind)
    if kind is FcrLossKind.bce:
        return (v - t) / size, True
    if kind is FcrLossKind.mse:
        return 2.0 * (v - t) / size, False
    return (-t / v + (t - 1.0) / (1.0 - v)) / size, False


class FcrModule:
    """Reconstruction cell and optimizer for one cut of two or more variables."""

    def __init__(
        self,
        index: np.ndarray,
        hidden: int,
        rng: np.random.Generator,
        lr: float = DEFAULT_FCR_LR,
        window: int = DEFAULT_FCR_WINDOW,
        kind: FcrLossKind = FcrLossKind.bce,
        max_grad_norm: Optional[float] = None,
    ) -> None:
        self.index = np.asarray(index, dtype=int)
        if len(self.index) < 2:
            raise ValueError("reconstruction needs a cut of at least two variables")
        k = len(self.index) - 1
        self.cell = RecurrentCell(input_size=k + 1, hidden_size=hidden, output_size=k, rng=rng)
        self.optimizer = SgdMomentum(self.cell, lr=lr, max_grad_norm=max_grad_norm)
        self.window = int(window)
        self.kind = FcrLossKind(kind)

    def predict(self, first: float, history: np.ndarray, ranges: RunningRange) -> np.ndarray:
        """Companion values (in node units) expected when the first variable takes `first`.

        Args:
            first (float): Proposed first-variable value in node units.
            history (np.ndarray): `(steps, n)` realized states preceding the proposal.
            ranges (RunningRange): Per-node normalizer.
        """
        context = np.asarray(history, dtype=float)[-(self.window - 1) :] if self.window > 1 else np.zeros((0, 0))
        if len(context):
            unit = ranges.normalize(context[:, self.index], self.index)
            first_history = np.concatenate([unit[:, 0], ranges.normalize([first], self.index[:1])])
            companions = unit[:, 1:]
        else:
            first_history = ranges.normalize([first], self.index[:1])
            companions = np.zeros((0, len(self.index) - 1))
        values = fcr_predict(self.cell, first_history, companions)
        midpoint = (np.where(np.isfinite(ranges.lo), ranges.lo, 0.0) + np.where(np.isfinite(ranges.hi), ranges.hi, 0.0)) / 2
        return ranges.denormalize(values[1:], self.index[1:], fallback=midpoint[self.index[1:]])

    def fit(self, states: np.ndarray, ranges: RunningRange) -> float:
        """One pass of truncated backpropagation through time over an episode of realized states.

        Returns:
            float: Mean loss over the windows (NaN for fewer than two states).
        """
        states = np.asarray(states, dtype=float)
        if len(states) < 2:
            return float("nan")
        unit = ranges.normalize(states[:, self.index], self.index)
        inputs = _window_inputs(unit[:, 0], unit[:, 1:])
        targets = unit[:, 1:]
        h = np.zeros(self.cell.hidden_size)
        losses = []
        for start in range(0, len(states), self.window):
            xs, ys = inputs[start : start + self.window], targets[start : start + self.window]
            self.optimizer.zero_grad()
            outputs = self.cell.forward_sequence(xs, h0=h)
            h = self.cell.last_hidden
            losses.append(fcr_loss(outputs, ys, self.kind))
            grad, wrt_logits = fcr_loss_grad(outputs, ys, self.kind)
            self.cell.backward_sequence(grad, wrt_logits=wrt_logits)
            try:
                self.optimizer.step()
            except NumericsError as e:
                logger.warning(f"Skipping reconstruction update: {e}")
        return float(np.mean(losses))

    def evaluate(self, states: np.ndarray, ranges: RunningRange) -> float:
        """Mean absolute normalized error of one-step reconstructions along a rollout."""
        states = np.asarray(states, dtype=float)
        unit = ranges.normalize(states[:, self.index], self.index)
        outputs = self.cell.forward_sequence(_window_inputs(unit[:, 0], unit[:, 1:]))
        return float(np.abs(outputs - unit[:, 1:]).mean())

    def state_dict(self) -> dict[str, np.ndarray]:
        return self.cell.state_dict()

    def load_state_dict(self, state: Mapping[str, np.ndarray]) -> None:
        self.cell.load_state_dict(state)
