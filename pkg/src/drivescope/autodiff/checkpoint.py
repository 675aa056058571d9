"""Named-tensor checkpoint files.

Single .npz holding float64 little-endian arrays plus reserved entries:
__version__ (format version) and __meta__ (JSON metadata blob).
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1


def save_checkpoint_file(path, tensors: dict, meta: dict = None):
    arrays = {}
    for name, arr in tensors.items():
        if name.startswith("__"):
            raise ValueError(f"tensor name {name!r} collides with reserved entries")
        arrays[name] = np.ascontiguousarray(np.asarray(arr, dtype="<f8"))
    arrays["__version__"] = np.array([FORMAT_VERSION], dtype=np.int64)
    arrays["__meta__"] = np.frombuffer(
        json.dumps(meta or {}, sort_keys=True).encode(), dtype=np.uint8)
    np.savez(path, **arrays)


def load_checkpoint_file(path):
    """Returns (tensors dict, meta dict)."""
    if not Path(path).exists():
        raise FileNotFoundError(path)
    with np.load(path) as z:
        if "__version__" not in z:
            raise ValueError(f"{path}: missing checkpoint version field")
        version = int(z["__version__"][0])
        if version != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        meta = json.loads(bytes(z["__meta__"].tobytes()).decode()) if "__meta__" in z else {}
        tensors = {k: np.asarray(z[k], dtype=np.float64)
                   for k in z.files if not k.startswith("__")}
    return tensors, meta
