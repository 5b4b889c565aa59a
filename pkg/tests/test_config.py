import json

import pytest

from exercise_tsc.config import PipelineConfig, load_config
from exercise_tsc.errors import ValidationError
from exercise_tsc.io import UPPER_BODY_8


def test_defaults():
    cfg = PipelineConfig()
    assert cfg.modalities == ("imu",)
    assert cfg.normalize == {"imu": True, "video": False}
    assert cfg.video_keypoints == UPPER_BODY_8
    assert cfg.target_length == 161 and cfg.num_kernels == 10_000
    assert cfg.classifier_kind() == "ridge"
    assert PipelineConfig(strategy="auto").classifier_kind() == "logistic"


def test_canonical_order():
    cfg = PipelineConfig(modalities=("video", "imu"), imu_locations=("Back", "LW"))
    assert cfg.modalities == ("imu", "video")
    assert cfg.imu_locations == ("LW", "Back")


@pytest.mark.parametrize("kwargs", [
    {"modalities": ()}, {"modalities": ("eeg",)}, {"imu_locations": ()},
    {"imu_locations": ("Head",)}, {"strategy": "deep"}, {"exercise": "squat"},
    {"video_keypoints": "upper9"}, {"smoothing_window": 10},
])
def test_invalid(kwargs):
    with pytest.raises(ValidationError):
        PipelineConfig(**kwargs)


def test_video_only_allows_empty_locations():
    PipelineConfig(modalities=("video",), imu_locations=())


def test_file_and_overrides(tmp_path):
    f = tmp_path / "c.json"
    f.write_text(json.dumps({"exercise": "rowing", "imu_locations": ["RA"], "num_kernels": 50,
                             "classifier": {"C": 0.1}, "video_keypoints": "all25"}))
    cfg = load_config(f, num_kernels=70)
    assert cfg.exercise == "rowing" and cfg.imu_locations == ("RA",)
    assert cfg.num_kernels == 70 and cfg.classifier.C == 0.1
    assert len(cfg.video_keypoints) == 25


def test_unknown_key(tmp_path):
    f = tmp_path / "c.json"
    f.write_text(json.dumps({"nmu_kernels": 5}))
    with pytest.raises(ValidationError):
        load_config(f)


def test_to_dict_has_no_paths():
    d = PipelineConfig(data_root="/x", out_dir="/y").to_dict()
    assert "data_root" not in d and "out_dir" not in d
    json.dumps(d)
