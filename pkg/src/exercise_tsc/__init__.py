"""Exercise-form classification from wearable IMU and pose-keypoint time series."""

from .classify import LinearModel, fit_logistic, fit_ridge, select_features_l1
from .config import PipelineConfig, load_config
from .errors import ExerciseTSCError
from .evaluation import EvaluationReport, ensemble_predict, make_splits
from .features import featurize_dataset, featurize_series
from .io import ingest_imu, ingest_keypoints
from .pipeline import run_pipeline
from .rocket import KernelSet, apply_kernel, generate_kernels, transform
from .segmentation import SegmentationConfig, segment_repetitions
from .series import Dataset, LabeledSample, MultivariateSeries, resample_linear, znormalize
from .synth import SynthSpec, synth_dataset

__version__ = "0.1.0"
