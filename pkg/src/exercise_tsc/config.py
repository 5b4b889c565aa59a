"""Pipeline configuration.

A config file is JSON; every key is optional and falls back to the defaults
below. Command-line flags override file values.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from .classify import DEFAULT_C, RIDGE_ALPHAS
from .errors import ValidationError
from .io import BODY25, DEVICES, UPPER_BODY_8, VIDEO_FPS
from .rocket import DEFAULT_NUM_KERNELS
from .segmentation import IMU_ANCHOR, VIDEO_ANCHOR, SegmentationConfig
from .series import DEFAULT_TARGET_LENGTH, EXERCISE_CLASSES, IMU, MILITARY_PRESS, MODALITIES

RAW_ROCKET = "raw_rocket"
HANDCRAFTED = "handcrafted"
AUTO = "auto"
STRATEGIES = (RAW_ROCKET, HANDCRAFTED, AUTO)

KEYPOINT_SETS = {"upper8": UPPER_BODY_8, "all25": BODY25}


@dataclass(frozen=True)
class ClassifierConfig:
    # None: ridge for raw_rocket, logistic for tabular strategies
    kind: Optional[str] = None
    alphas: tuple = RIDGE_ALPHAS
    C: float = DEFAULT_C
    penalty: str = "l2"
    l1_select: bool = True
    l1_C: float = DEFAULT_C
    max_iter: int = 10_000


@dataclass(frozen=True)
class PipelineConfig:
    exercise: str = MILITARY_PRESS
    modalities: tuple = (IMU,)
    imu_locations: tuple = DEVICES
    video_keypoints: tuple = UPPER_BODY_8
    strategy: str = RAW_ROCKET
    normalize: dict = field(default_factory=lambda: {"imu": True, "video": False})
    target_length: int = DEFAULT_TARGET_LENGTH
    expected_reps: int = 10
    min_separation_fraction: float = 0.5
    prominence_fraction: float = 0.25
    smoothing_window: int = 11
    imu_anchor: str = IMU_ANCHOR
    video_anchor: str = VIDEO_ANCHOR
    video_fps: float = VIDEO_FPS
    num_kernels: int = DEFAULT_NUM_KERNELS
    classifier: ClassifierConfig = ClassifierConfig()
    split_seed: int = 0
    kernel_seed: int = 0
    data_root: Optional[str] = None
    out_dir: str = "runs/latest"

    def __post_init__(self):
        if self.exercise not in EXERCISE_CLASSES:
            raise ValidationError(f"unknown exercise {self.exercise!r}")
        mods = tuple(self.modalities)
        if not mods:
            raise ValidationError("at least one modality is required")
        bad = set(mods) - set(MODALITIES)
        if bad:
            raise ValidationError(f"unknown modalities {sorted(bad)}")
        object.__setattr__(self, "modalities", tuple(m for m in MODALITIES if m in mods))
        locs = tuple(self.imu_locations)
        if IMU in mods and not locs:
            raise ValidationError("imu_locations must be non-empty when IMU is active")
        if set(locs) - set(DEVICES):
            raise ValidationError(f"unknown IMU locations {sorted(set(locs) - set(DEVICES))}")
        object.__setattr__(self, "imu_locations", tuple(d for d in DEVICES if d in locs))
        kps = self.video_keypoints
        if isinstance(kps, str):
            if kps not in KEYPOINT_SETS:
                raise ValidationError(f"unknown keypoint set {kps!r}")
            kps = KEYPOINT_SETS[kps]
        if set(kps) - set(BODY25):
            raise ValidationError(f"unknown keypoints {sorted(set(kps) - set(BODY25))}")
        object.__setattr__(self, "video_keypoints", tuple(k for k in BODY25 if k in kps))
        if self.strategy not in STRATEGIES:
            raise ValidationError(f"unknown strategy {self.strategy!r}")
        norm = {"imu": True, "video": False}
        norm.update(self.normalize or {})
        object.__setattr__(self, "normalize", norm)
        if isinstance(self.classifier, dict):
            object.__setattr__(self, "classifier", ClassifierConfig(**_tuplify(self.classifier)))
        self.segmentation(IMU)  # validates the shared segmentation fields

    def segmentation(self, modality: str) -> SegmentationConfig:
        return SegmentationConfig(
            anchor_channel=self.imu_anchor if modality == IMU else self.video_anchor,
            expected_reps=self.expected_reps,
            min_separation_fraction=self.min_separation_fraction,
            prominence_fraction=self.prominence_fraction,
            smoothing_window=self.smoothing_window,
        )

    def classifier_kind(self) -> str:
        if self.classifier.kind:
            return self.classifier.kind
        return "ridge" if self.strategy == RAW_ROCKET else "logistic"

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("data_root")
        d.pop("out_dir")
        return _listify(d)

    def with_overrides(self, **kwargs) -> "PipelineConfig":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


def _tuplify(d: dict) -> dict:
    return {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}


def _listify(obj):
    if isinstance(obj, dict):
        return {k: _listify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_listify(v) for v in obj]
    return obj


def load_config(path=None, **overrides) -> PipelineConfig:
    data = {}
    if path:
        data = json.loads(Path(path).read_text())
        known = {f.name for f in fields(PipelineConfig)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    data = _tuplify(data)
    data.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineConfig(**data)
