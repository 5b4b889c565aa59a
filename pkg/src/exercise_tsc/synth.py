"""Synthetic exercise recordings in both on-disk formats, with known ground truth.

Each (participant, class) recording is a chain of repetitions with a
continuous phase ``phi`` running from 0 to ``reps``; repetition ``r``
occupies ``phi`` in ``[r, r + 1)`` and its duration varies per repetition.
Every channel mixes a fundamental and a class-dependent harmonic::

    gain * (A_class * sin(2 pi phi + a) + B * sin(2 pi h_class phi + b)) + offset + noise

with ``B = 1.5`` on gyroscope channels and on elbow keypoints (so the
harmonic dominates there) and ``B = 0.5`` elsewhere. Gains, phases and
offsets are drawn per participant. The segmentation anchors (right-arm
magnetometer Y, left-wrist image Y) carry only ``-cos(2 pi phi)``, so each
repetition has exactly one anchor peak, at its middle.

IMU and video class parameters are set independently, which lets tests
build modalities that each see only part of the class structure.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ._store import atomic_write_text, dumps_json
from .io import (BODY25, DEVICES, IMU_AXES, IMU_RATE_HZ, VIDEO_FPS, write_imu_csv,
                 write_keypoints_jsonl)
from .series import EXERCISE_CLASSES, MILITARY_PRESS

# rough frontal-view BODY-25 layout at 720p, pixels
_SKELETON = {
    "Nose": (640, 160), "Neck": (640, 240), "RShoulder": (560, 245), "RElbow": (520, 330),
    "RWrist": (540, 410), "LShoulder": (720, 245), "LElbow": (760, 330), "LWrist": (740, 410),
    "MidHip": (640, 460), "RHip": (600, 460), "RKnee": (600, 580), "RAnkle": (600, 690),
    "LHip": (680, 460), "LKnee": (680, 580), "LAnkle": (680, 690), "REye": (625, 145),
    "LEye": (655, 145), "REar": (610, 155), "LEar": (670, 155), "LBigToe": (700, 710),
    "LSmallToe": (710, 708), "LHeel": (675, 705), "RBigToe": (580, 710),
    "RSmallToe": (570, 708), "RHeel": (605, 705),
}
# motion amplitude in pixels: arms move most, legs barely
_MOTION = {"RWrist": 90, "LWrist": 90, "RElbow": 60, "LElbow": 60, "RShoulder": 15,
           "LShoulder": 15, "Nose": 10, "Neck": 8, "REye": 10, "LEye": 10, "REar": 10,
           "LEar": 10}
_IMU_OFFSETS = {"acc_z": 1.0, "mag_x": 0.3, "mag_y": 0.1, "mag_z": -0.4}


@dataclass
class SynthSpec:
    exercise: str = MILITARY_PRESS
    participants: int = 40
    reps: int = 10
    noise: float = 0.05
    devices: tuple = DEVICES
    imu_rate_hz: float = IMU_RATE_HZ
    video_fps: float = VIDEO_FPS
    rep_seconds: tuple = (2.0, 3.0)
    dropout_rate: float = 0.01
    imu_harmonics: Optional[dict] = None
    imu_amplitudes: Optional[dict] = None
    video_harmonics: Optional[dict] = None
    video_amplitudes: Optional[dict] = None
    write_imu: bool = True
    write_video: bool = True
    classes: tuple = field(init=False)

    def __post_init__(self):
        self.classes = EXERCISE_CLASSES[self.exercise]
        self.devices = tuple(self.devices)
        self.rep_seconds = tuple(self.rep_seconds)
        default_h = {c: 2 + i for i, c in enumerate(self.classes)}
        default_a = {c: (1.0 if i % 2 == 0 else 0.6) for i, c in enumerate(self.classes)}
        self.imu_harmonics = dict(self.imu_harmonics or default_h)
        self.imu_amplitudes = dict(self.imu_amplitudes or default_a)
        self.video_harmonics = dict(self.video_harmonics or self.imu_harmonics)
        self.video_amplitudes = dict(self.video_amplitudes or self.imu_amplitudes)

    def participant_ids(self) -> list:
        return [f"P{i + 1:03d}" for i in range(self.participants)]


def _rng(seed, *key) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def _phase(rng, spec: SynthSpec, tempo: float, rate: float) -> np.ndarray:
    """Continuous repetition phase sampled at ``rate``, running 0 -> reps."""
    lo, hi = spec.rep_seconds
    durations = tempo * rng.uniform(lo, hi, spec.reps)
    edges = np.concatenate([[0.0], np.cumsum(durations)])
    t = np.arange(0.0, edges[-1], 1.0 / rate)
    return np.interp(t, edges, np.arange(spec.reps + 1.0)), t


def _mix(phi, amp, harm, gain, b, ph1, ph2):
    return gain * (amp * np.sin(2 * np.pi * phi + ph1) + b * np.sin(2 * np.pi * harm * phi + ph2))


def imu_recording(spec: SynthSpec, seed: int, p: int, c: int):
    """``(timestamps, {device: (9, T)})`` for participant index ``p``, class index ``c``."""
    label = spec.classes[c]
    prng = _rng(seed, 0, p)
    tempo = prng.uniform(0.85, 1.15)
    gains = prng.uniform(0.8, 1.2, (len(DEVICES), len(IMU_AXES)))
    phases = prng.uniform(0, 2 * np.pi, (2, len(DEVICES), len(IMU_AXES)))
    rng = _rng(seed, 1, p, c)
    phi, t = _phase(rng, spec, tempo, spec.imu_rate_hz)
    out = {}
    for di, dev in enumerate(DEVICES):
        rows = []
        for ai, axis in enumerate(IMU_AXES):
            if dev == "RA" and axis == "mag_y":
                v = gains[di, ai] * -np.cos(2 * np.pi * phi)
            else:
                b = 1.5 if axis.startswith("gyro") else 0.5
                v = _mix(phi, spec.imu_amplitudes[label], spec.imu_harmonics[label],
                         gains[di, ai], b, phases[0, di, ai], phases[1, di, ai])
            v = v + _IMU_OFFSETS.get(axis, 0.0) + spec.noise * rng.standard_normal(phi.size)
            rows.append(v)
        if dev in spec.devices:
            out[dev] = np.stack(rows)
    return t, out


def video_recording(spec: SynthSpec, seed: int, p: int, c: int) -> np.ndarray:
    """``(T, 25, 3)`` keypoints with occasional zero-confidence dropouts."""
    label = spec.classes[c]
    prng = _rng(seed, 2, p)
    tempo = prng.uniform(0.85, 1.15)
    gains = prng.uniform(0.8, 1.2, (len(BODY25), 2))
    phases = prng.uniform(0, 2 * np.pi, (2, len(BODY25), 2))
    shift = prng.normal(0, 20, 2)
    rng = _rng(seed, 3, p, c)
    phi, _ = _phase(rng, spec, tempo, spec.video_fps)
    kp = np.zeros((phi.size, len(BODY25), 3))
    for k, name in enumerate(BODY25):
        base = np.asarray(_SKELETON[name], dtype=np.float64) + shift
        motion = _MOTION.get(name, 0.0)
        for ax in range(2):
            if name == "LWrist" and ax == 1:
                v = motion * gains[k, ax] * -np.cos(2 * np.pi * phi)
            elif motion:
                b = 1.5 if name.endswith("Elbow") else 0.5
                v = motion * _mix(phi, spec.video_amplitudes[label], spec.video_harmonics[label],
                                  gains[k, ax], b, phases[0, k, ax], phases[1, k, ax])
            else:
                v = np.zeros(phi.size)
            scale = motion if motion else 5.0
            kp[:, k, ax] = base[ax] + v + spec.noise * scale * rng.standard_normal(phi.size)
        kp[:, k, 2] = rng.uniform(0.5, 0.95, phi.size)
    drop = rng.random((phi.size, len(BODY25))) < spec.dropout_rate
    kp[drop] = 0.0
    return kp


def synth_dataset(spec: SynthSpec, seed: int, out_dir) -> dict:
    """Write IMU CSVs and keypoint files under ``out_dir/<exercise>/``; return a summary."""
    out = Path(out_dir) / spec.exercise
    n_files = 0
    for p, pid in enumerate(spec.participant_ids()):
        for c, label in enumerate(spec.classes):
            if spec.write_imu:
                t, devices = imu_recording(spec, seed, p, c)
                for dev, values in devices.items():
                    write_imu_csv(out / "imu" / f"{pid}_{label}_{dev}.csv", t, values)
                    n_files += 1
            if spec.write_video:
                kp = video_recording(spec, seed, p, c)
                write_keypoints_jsonl(out / "video" / f"{pid}_{label}.jsonl", kp)
                n_files += 1
    meta = {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(spec).items()}
    summary = {"seed": seed, "spec": meta, "files": n_files,
               "recordings": spec.participants * len(spec.classes),
               "repetitions": spec.participants * len(spec.classes) * spec.reps}
    atomic_write_text(out / "synth_meta.json", dumps_json(summary))
    return summary
