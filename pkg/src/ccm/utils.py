from __future__ import annotations

import hashlib
import json
import signal
from contextlib import ContextDecorator
from typing import Any, Optional

import numpy as np

__all__ = ("deadline", "DeadlineExceeded", "canonical_json", "sha256_hex", "spawn_rngs")


class DeadlineExceeded(TimeoutError):
    """Raised when a block guarded by `deadline` runs past its budget."""

    pass


class deadline(ContextDecorator):
    """Abort the guarded block with `DeadlineExceeded` after `seconds` of wall time.

    Relies on `SIGALRM`, so it only works in the main thread of a POSIX process.
    A falsy `seconds` disables the guard.
    """

    def __init__(self, seconds: Optional[float] = None) -> None:
        self._seconds = seconds
        self._previous_handler: Any = None

    def _on_alarm(self, signum: int, frame: Any) -> None:
        raise DeadlineExceeded(f"block exceeded its {self._seconds}s budget")

    def __enter__(self) -> "deadline":
        if self._seconds:
            self._previous_handler = signal.signal(signal.SIGALRM, self._on_alarm)
            signal.setitimer(signal.ITIMER_REAL, self._seconds)
        return self

    def __exit__(self, exc_type: Optional[type], exc_value: Optional[BaseException], traceback: Optional[Any]) -> None:
        if self._seconds:
            signal.setitimer(signal.ITIMER_REAL, 0)
            signal.signal(signal.SIGALRM, self._previous_handler)


def canonical_json(obj: Any) -> str:
    """Serialize `obj` with sorted keys and no whitespace so equal values hash equally."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_hex(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def spawn_rngs(seed: int, count: int) -> list[np.random.Generator]:
    """Independent generators derived from one integer seed.

    Args:
        seed (int): Root seed.
        count (int): Number of independent streams.

    Returns:
        list[np.random.Generator]: One generator per stream, stable for a given `(seed, count)`.
    """
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]
