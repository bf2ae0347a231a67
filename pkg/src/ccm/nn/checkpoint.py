from __future__ import annotations

import json
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

import numpy as np

from .const import CHECKPOINT_META_KEY, CHECKPOINT_VERSION
from .exceptions import CheckpointError, ShapeError

__all__ = ("Checkpoint", "save_checkpoint", "load_checkpoint")

FilePath = Union[str, Path]


@dataclass
class Checkpoint:
    """Flat `group/name/param -> array` mapping plus JSON metadata."""

    arrays: dict[str, np.ndarray] = field(default_factory=dict)
    meta: dict[str, Any] = field(default_factory=dict)

    def add(self, group: str, name: str, obj: Any) -> None:
        for key, value in obj.state_dict().items():
            self.arrays[f"{group}/{name}/{key}"] = np.asarray(value)

    def state_of(self, group: str, name: str) -> dict[str, np.ndarray]:
        prefix = f"{group}/{name}/"
        state = {key[len(prefix) :]: value for key, value in self.arrays.items() if key.startswith(prefix)}
        if not state:
            raise CheckpointError(f"checkpoint has no entry for {group}/{name}")
        return state

    def restore(self, group: str, name: str, obj: Any) -> None:
        try:
            obj.load_state_dict(self.state_of(group, name))
        except (KeyError, ShapeError, ValueError) as e:
            raise CheckpointError(f"{group}/{name} does not fit: {e}") from e

    def names(self, group: str) -> list[str]:
        return sorted({key.split("/")[1] for key in self.arrays if key.startswith(f"{group}/")})


def save_checkpoint(file_path: FilePath, checkpoint: Checkpoint) -> None:
    """Write a versioned `.npz` holding every array and the metadata as a JSON string."""
    meta = dict(checkpoint.meta, version=CHECKPOINT_VERSION)
    payload = dict(checkpoint.arrays)
    payload[CHECKPOINT_META_KEY] = np.array(json.dumps(meta, sort_keys=True))
    with open(file_path, "wb") as f:
        np.savez(f, **payload)


def load_checkpoint(file_path: FilePath) -> Checkpoint:
    """Read a checkpoint written by `save_checkpoint`.

    Raises:
        CheckpointError: If the file is unreadable, lacks metadata or has another version.
    """
    try:
        with np.load(file_path, allow_pickle=False) as data:
            arrays = {key: data[key] for key in data.files}
    except (OSError, ValueError, zipfile.BadZipFile) as e:
        raise CheckpointError(f"cannot read checkpoint {file_path}: {e}") from e
    if CHECKPOINT_META_KEY not in arrays:
        raise CheckpointError(f"{file_path} has no metadata")
    meta = json.loads(str(arrays.pop(CHECKPOINT_META_KEY)))
    if meta.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{file_path}: checkpoint version {meta.get('version')} is not {CHECKPOINT_VERSION}")
    return Checkpoint(arrays=arrays, meta=meta)
