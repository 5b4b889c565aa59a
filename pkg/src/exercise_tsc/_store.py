"""Deterministic, versioned array archives and atomic file writes.

Archives are ordinary ``.npz`` zips readable by :func:`numpy.load`, written
with fixed timestamps and sorted member order so identical content gives
identical bytes. JSON metadata rides along as a ``__meta__`` byte array.
"""

from __future__ import annotations

import io
import json
import os
import tempfile
import zipfile
from pathlib import Path

import numpy as np

_EPOCH = (1980, 1, 1, 0, 0, 0)
_META = "__meta__"


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def dumps_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def save_archive(path, arrays: dict, meta: dict) -> None:
    buf = io.BytesIO()
    members = dict(arrays)
    members[_META] = np.frombuffer(dumps_json(meta).encode("utf-8"), dtype=np.uint8)
    with zipfile.ZipFile(buf, "w", compression=zipfile.ZIP_STORED) as zf:
        for name in sorted(members):
            arr = np.asarray(members[name])
            if arr.dtype == object:
                raise TypeError(f"archive member {name!r} has object dtype")
            payload = io.BytesIO()
            np.lib.format.write_array(payload, np.ascontiguousarray(arr), allow_pickle=False)
            info = zipfile.ZipInfo(name + ".npy", date_time=_EPOCH)
            info.external_attr = 0o644 << 16
            zf.writestr(info, payload.getvalue())
    atomic_write_bytes(path, buf.getvalue())


def load_archive(path) -> tuple:
    """Return ``(arrays, meta)`` from an archive written by :func:`save_archive`."""
    with np.load(path, allow_pickle=False) as npz:
        arrays = {k: npz[k] for k in npz.files}
    raw = arrays.pop(_META, None)
    if raw is None:
        raise ValueError(f"{path}: not an exercise_tsc archive (no metadata)")
    return arrays, json.loads(raw.tobytes().decode("utf-8"))
