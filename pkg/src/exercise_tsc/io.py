"""Reading and writing recordings.

On-disk layout under a data root::

    <root>/<exercise>/imu/<participant>_<label>_<device>.csv
    <root>/<exercise>/video/<participant>_<label>.jsonl

IMU CSVs have the header ``timestamp,acc_x,acc_y,acc_z,gyro_x,gyro_y,gyro_z,
mag_x,mag_y,mag_z`` with timestamps in seconds. Keypoint files hold one JSON
object per line, ``{"frame": i, "keypoints": [[x, y, confidence], ...]}``
with 25 entries in BODY-25 order. Participant ids must not contain ``_``.

Channel order is a fixed contract: IMU channels are device-major in
``DEVICES`` order then ``acc/gyro/mag`` x ``x/y/z``; keypoint channels are
keypoint-major with ``x`` before ``y``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._store import atomic_write_text, load_archive, save_archive
from .errors import FrameCountZeroError, MalformedInputError, ValidationError
from .series import IMU, VIDEO, Dataset, LabeledSample, MultivariateSeries, repair_gaps

log = logging.getLogger(__name__)

DATA_ROOT_ENV = "EXERCISE_TSC_DATA_ROOT"

DEVICES = ("LW", "RW", "LA", "RA", "Back")
IMU_AXES = ("acc_x", "acc_y", "acc_z", "gyro_x", "gyro_y", "gyro_z", "mag_x", "mag_y", "mag_z")
IMU_HEADER = ("timestamp",) + IMU_AXES
IMU_RATE_HZ = 51.2
VIDEO_FPS = 30.0

BODY25 = (
    "Nose", "Neck", "RShoulder", "RElbow", "RWrist", "LShoulder", "LElbow", "LWrist",
    "MidHip", "RHip", "RKnee", "RAnkle", "LHip", "LKnee", "LAnkle", "REye", "LEye",
    "REar", "LEar", "LBigToe", "LSmallToe", "LHeel", "RBigToe", "RSmallToe", "RHeel",
)
UPPER_BODY_8 = ("Nose", "Neck", "RShoulder", "RElbow", "RWrist", "LShoulder", "LElbow", "LWrist")


@dataclass(frozen=True)
class RawRecording:
    participant_id: str
    exercise: str
    label: str
    modality: str
    source: str
    series: MultivariateSeries

    @property
    def key(self) -> tuple:
        return (self.participant_id, self.label)


def data_root(explicit=None) -> Path:
    """``explicit`` if given, else ``$EXERCISE_TSC_DATA_ROOT``, else ``./data``."""
    if explicit:
        return Path(explicit)
    return Path(os.environ.get(DATA_ROOT_ENV, "data"))


def imu_channel_names(devices=DEVICES) -> tuple:
    return tuple(f"{d}_{a}" for d in devices for a in IMU_AXES)


def keypoint_channel_names(keypoints=BODY25) -> tuple:
    return tuple(f"{k}_{c}" for k in keypoints for c in ("x", "y"))


# --------------------------------------------------------------------------
# IMU


def _parse_float(text, path, line):
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise MalformedInputError(path, line, f"non-numeric field {text!r}") from None
    if not math.isfinite(v):
        raise MalformedInputError(path, line, f"non-finite field {text!r}")
    return v


def read_imu_csv(path):
    """``(timestamps, values)`` with values shaped ``(9, T)``."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != IMU_HEADER:
            raise MalformedInputError(path, 1, f"expected header {','.join(IMU_HEADER)}")
        rows = []
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(IMU_HEADER):
                raise MalformedInputError(path, line, f"expected {len(IMU_HEADER)} fields, got {len(row)}")
            rows.append([_parse_float(v, path, line) for v in row])
    if len(rows) < 2:
        raise MalformedInputError(path, len(rows) + 1, "fewer than 2 data rows")
    arr = np.asarray(rows)
    return arr[:, 0], arr[:, 1:].T


def write_imu_csv(path, timestamps, values) -> None:
    values = np.asarray(values, dtype=np.float64)
    if values.shape[0] != len(IMU_AXES):
        raise ValidationError("IMU values must have 9 rows")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(IMU_HEADER)
    for t, col in zip(timestamps, values.T):
        w.writerow([repr(float(t))] + [repr(float(v)) for v in col])
    atomic_write_text(path, buf.getvalue())


def _split_name(stem: str, parts: int):
    pieces = stem.rsplit("_", parts - 1)
    if len(pieces) != parts or not all(pieces):
        return None
    return pieces


def ingest_imu(path, exercise: str = "military_press", devices=DEVICES) -> list:
    """One :class:`RawRecording` per (participant, class) with all requested devices.

    Recordings missing a requested device are skipped with a warning. Devices
    of one recording are truncated to their common length.
    """
    path = Path(path)
    unknown = set(devices) - set(DEVICES)
    if unknown:
        raise ValidationError(f"unknown IMU devices {sorted(unknown)}")
    devices = [d for d in DEVICES if d in devices]
    groups = {}
    for f in sorted(path.glob("*.csv")):
        parts = _split_name(f.stem, 3)
        if parts is None or parts[2] not in DEVICES:
            log.warning("ignoring IMU file with unexpected name: %s", f.name)
            continue
        participant, label, device = parts
        groups.setdefault((participant, label), {})[device] = f
    recordings = []
    for (participant, label), files in sorted(groups.items()):
        missing = [d for d in devices if d not in files]
        if missing:
            log.warning("participant %s class %s: missing IMU device(s) %s; skipped",
                        participant, label, ",".join(missing))
            continue
        blocks, stamps = [], []
        for d in devices:
            t, v = read_imu_csv(files[d])
            blocks.append(v)
            stamps.append(t)
        n = min(b.shape[1] for b in blocks)
        values = np.vstack([b[:, :n] for b in blocks])
        dt = np.diff(stamps[0][:n])
        rate = 1.0 / float(np.median(dt)) if np.all(dt > 0) else IMU_RATE_HZ
        series = MultivariateSeries(imu_channel_names(devices), values, rate)
        recordings.append(RawRecording(participant, exercise, label, IMU,
                                       ";".join(str(files[d]) for d in devices), series))
    return recordings


# --------------------------------------------------------------------------
# keypoints


def read_keypoints_jsonl(path):
    """``(frames, keypoints)`` with keypoints shaped ``(T, 25, 3)``."""
    path = Path(path)
    frames, points = [], []
    with open(path) as fh:
        for line, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            try:
                rec = json.loads(text)
                frame = int(rec["frame"])
                kp = np.asarray(rec["keypoints"], dtype=np.float64)
            except (ValueError, KeyError, TypeError) as exc:
                raise MalformedInputError(path, line, f"bad record: {exc}") from None
            if kp.shape != (len(BODY25), 3):
                raise MalformedInputError(path, line, f"expected 25 [x, y, confidence] triples, got shape {kp.shape}")
            if not np.all(np.isfinite(kp)):
                raise MalformedInputError(path, line, "non-finite keypoint value")
            frames.append(frame)
            points.append(kp)
    if not frames:
        raise FrameCountZeroError(f"{path}: no frames")
    order = np.argsort(frames, kind="stable")
    return np.asarray(frames)[order], np.stack(points)[order]


def write_keypoints_jsonl(path, keypoints) -> None:
    kp = np.asarray(keypoints, dtype=np.float64)
    lines = []
    for i, frame in enumerate(kp):
        triples = [[float(v) for v in row] for row in frame]
        lines.append(json.dumps({"frame": i, "keypoints": triples}, separators=(",", ":")))
    atomic_write_text(path, "\n".join(lines) + "\n")


def keypoints_to_series(keypoints, keypoint_names=UPPER_BODY_8, fps: float = VIDEO_FPS) -> MultivariateSeries:
    """Select keypoints and repair zero-confidence detections by interpolation."""
    kp = np.asarray(keypoints, dtype=np.float64)
    idx = [BODY25.index(k) for k in keypoint_names]
    rows, valid = [], []
    for i in idx:
        ok = kp[:, i, 2] > 0
        rows.extend([kp[:, i, 0], kp[:, i, 1]])
        valid.extend([ok, ok])
    values = repair_gaps(np.stack(rows), np.stack(valid))
    return MultivariateSeries(keypoint_channel_names(keypoint_names), values, fps)


def ingest_keypoints(path, exercise: str = "military_press", keypoint_names=BODY25,
                     fps: float = VIDEO_FPS) -> list:
    """One :class:`RawRecording` per keypoint file; ``2 * len(keypoint_names)`` channels."""
    path = Path(path)
    unknown = set(keypoint_names) - set(BODY25)
    if unknown:
        raise ValidationError(f"unknown keypoints {sorted(unknown)}")
    recordings = []
    for f in sorted(path.glob("*.jsonl")):
        parts = _split_name(f.stem, 2)
        if parts is None:
            log.warning("ignoring keypoint file with unexpected name: %s", f.name)
            continue
        participant, label = parts
        _, kp = read_keypoints_jsonl(f)
        if kp.shape[0] < 2:
            raise FrameCountZeroError(f"{f}: fewer than 2 frames")
        series = keypoints_to_series(kp, keypoint_names, fps)
        recordings.append(RawRecording(participant, exercise, label, VIDEO, str(f), series))
    return recordings


# --------------------------------------------------------------------------
# intermediate archives


def save_recordings(path, recordings) -> None:
    arrays, items = {}, []
    for i, r in enumerate(recordings):
        arrays[f"series_{i:06d}"] = r.series.values
        items.append({"participant_id": r.participant_id, "exercise": r.exercise,
                      "label": r.label, "modality": r.modality, "source": r.source,
                      "channels": list(r.series.channel_names),
                      "sample_rate_hz": r.series.sample_rate_hz})
    save_archive(path, arrays, {"format": "exercise_tsc.recordings", "version": 1,
                                "recordings": items})


def load_recordings(path) -> list:
    arrays, meta = load_archive(path)
    if meta.get("format") != "exercise_tsc.recordings":
        raise ValidationError(f"{path}: not a recordings archive")
    out = []
    for i, m in enumerate(meta["recordings"]):
        s = MultivariateSeries(tuple(m["channels"]), arrays[f"series_{i:06d}"], m["sample_rate_hz"])
        out.append(RawRecording(m["participant_id"], m["exercise"], m["label"], m["modality"],
                                m["source"], s))
    return out


def save_dataset(path, dataset: Dataset) -> None:
    """Store a prepared (equal-length) dataset."""
    samples = dataset.samples
    meta = {
        "format": "exercise_tsc.dataset", "version": 1,
        "exercise": dataset.exercise, "target_length": dataset.target_length,
        "channels": list(dataset.channel_names),
        "labels": [s.label for s in samples],
        "participants": [s.participant_id for s in samples],
        "modalities": [s.modality for s in samples],
        "repetitions": [s.repetition_index for s in samples],
        "sample_rates": [s.series.sample_rate_hz for s in samples],
    }
    save_archive(path, {"X": dataset.to_array()}, meta)


def load_dataset(path) -> Dataset:
    arrays, meta = load_archive(path)
    if meta.get("format") != "exercise_tsc.dataset":
        raise ValidationError(f"{path}: not a dataset archive")
    X = arrays["X"]
    chans = tuple(meta["channels"])
    samples = [
        LabeledSample(MultivariateSeries(chans, X[i], meta["sample_rates"][i]),
                      meta["labels"][i], meta["participants"][i], meta["modalities"][i],
                      meta["repetitions"][i])
        for i in range(X.shape[0])
    ]
    return Dataset(samples, meta["exercise"], meta["target_length"])
