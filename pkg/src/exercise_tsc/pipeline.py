"""End-to-end orchestration: ingest, segment, featurise, fit, predict, fuse, evaluate.

Every stage reads and writes files under ``config.out_dir`` so the CLI can
run stages one at a time; :func:`run_pipeline` runs them all in one process
and writes the same artifacts::

    config.json                  effective configuration
    recordings_<modality>.npz    ingested full recordings
    dataset_<modality>.npz       segmented, resampled repetitions
    splits.json                  participant-grouped split plan
    kernels_<modality>.npz       ROCKET kernels (raw_rocket only)
    models/<modality>_split<i>.npz
    predictions/<modality>_split<i>.npz
    report_<modality>.json/.txt  per-modality evaluation
    report_ensemble.json/.txt    probability-averaged fusion (two modalities)
    report.json/.txt             the headline result
"""

from __future__ import annotations

import logging
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io as dio
from ._store import atomic_write_text, dumps_json, load_archive, save_archive
from .classify import LOGISTIC, RIDGE, LinearModel, fit_logistic, fit_ridge, select_features_l1, select_ridge_alpha
from .config import RAW_ROCKET, PipelineConfig
from .errors import EmptyIntersectionError, ExerciseTSCError, RepCountMismatchError, StageError, ValidationError
from .evaluation import (EvaluationReport, SplitPlan, class_counts, ensemble_predict, evaluate,
                         make_splits)
from .features import featurize_dataset
from .rocket import KernelSet, generate_kernels, transform
from .segmentation import segment_repetitions
from .series import IMU, VIDEO, Dataset, LabeledSample, resample_linear, znormalize

log = logging.getLogger(__name__)


@contextmanager
def stage(name: str):
    try:
        yield
    except StageError:
        raise
    except (ExerciseTSCError, ValueError, KeyError, OSError) as exc:
        raise StageError(name, exc) from exc


def _out(cfg: PipelineConfig) -> Path:
    return Path(cfg.out_dir)


# --------------------------------------------------------------------------
# ingest / segment


def ingest(cfg: PipelineConfig, modality: str) -> list:
    root = dio.data_root(cfg.data_root) / cfg.exercise / modality
    with stage(f"ingest:{modality}"):
        if not root.is_dir():
            raise FileNotFoundError(f"data directory {root} does not exist")
        if modality == IMU:
            # the segmentation anchor's device is read even if not a selected location
            anchor_dev = cfg.imu_anchor.split("_", 1)[0]
            recs = dio.ingest_imu(root, cfg.exercise,
                                  set(cfg.imu_locations) | ({anchor_dev} & set(dio.DEVICES)))
        else:
            recs = dio.ingest_keypoints(root, cfg.exercise, dio.BODY25, cfg.video_fps)
        if not recs:
            raise ValidationError(f"no {modality} recordings found under {root}")
    return recs


def _channels(cfg: PipelineConfig, modality: str) -> tuple:
    if modality == IMU:
        return dio.imu_channel_names(cfg.imu_locations)
    return dio.keypoint_channel_names(cfg.video_keypoints)


def prepare(recordings, cfg: PipelineConfig, modality: str):
    """Segment, select channels and resample. Returns ``(Dataset, skipped)``.

    Segmentation runs on the full recording (the anchor need not be among the
    selected channels). Recordings with an implausible repetition count are
    skipped and listed in ``skipped``.
    """
    seg_cfg = cfg.segmentation(modality)
    keep = _channels(cfg, modality)
    samples, skipped = [], []
    with stage(f"segment:{modality}"):
        for rec in recordings:
            try:
                _, pieces = segment_repetitions(rec.series, seg_cfg)
            except RepCountMismatchError as exc:
                log.warning("skipping %s/%s (%s): %s", rec.participant_id, rec.label,
                            modality, exc)
                skipped.append({"participant": rec.participant_id, "label": rec.label,
                                "reason": str(exc)})
                continue
            for r, piece in enumerate(pieces):
                s = resample_linear(piece.select(keep), cfg.target_length)
                samples.append(LabeledSample(s, rec.label, rec.participant_id, modality, r))
        if not samples:
            raise ValidationError(f"no {modality} repetitions survived segmentation")
    return Dataset(samples, cfg.exercise, cfg.target_length), skipped


# --------------------------------------------------------------------------
# features / models


def featurize(dataset: Dataset, cfg: PipelineConfig, modality: str, kernels: KernelSet = None):
    """``(F, kernels)``; kernels are generated when needed and not given."""
    normalize = cfg.normalize[modality]
    with stage(f"features:{modality}"):
        if cfg.strategy == RAW_ROCKET:
            ds = dataset.map_series(znormalize) if normalize else dataset
            if kernels is None:
                kernels = generate_kernels(cfg.num_kernels, len(ds.channel_names),
                                           cfg.target_length, cfg.kernel_seed)
            return transform(ds, kernels), kernels
        F, _ = featurize_dataset(dataset, cfg.strategy, normalize=normalize)
        return F, None


def _rows(dataset: Dataset, participants) -> np.ndarray:
    wanted = set(participants)
    return np.array([i for i, s in enumerate(dataset.samples) if s.participant_id in wanted],
                    dtype=np.int64)


def fit_split(F, dataset: Dataset, split, cfg: PipelineConfig) -> LinearModel:
    labels = dataset.labels
    classes = dataset.classes
    fit_rows = _rows(dataset, split.fit_participants)
    kind = cfg.classifier_kind()
    cc = cfg.classifier
    if kind == RIDGE:
        tr, va = _rows(dataset, split.train), _rows(dataset, split.validation)
        if tr.size and va.size:
            alpha, _ = select_ridge_alpha(F[tr], labels[tr], F[va], labels[va], cc.alphas, classes)
        else:
            alpha = 1.0
        return fit_ridge(F[fit_rows], labels[fit_rows], alpha, classes, seed=split.seed)
    if kind == LOGISTIC:
        mask = None
        if cc.l1_select:
            mask = select_features_l1(F[fit_rows], labels[fit_rows], cc.l1_C, classes,
                                      max_iter=cc.max_iter)
        return fit_logistic(F[fit_rows], labels[fit_rows], cc.C, cc.penalty, classes,
                            feature_mask=mask, max_iter=cc.max_iter, seed=split.seed)
    raise ValidationError(f"unknown classifier kind {kind!r}")


@dataclass
class SplitPrediction:
    keys: list            # (participant, label, repetition)
    truth: np.ndarray
    proba: np.ndarray
    classes: tuple
    train_counts: dict

    def save(self, path) -> None:
        meta = {"format": "exercise_tsc.predictions", "version": 1,
                "classes": list(self.classes), "keys": [list(k) for k in self.keys],
                "train_counts": self.train_counts}
        save_archive(path, {"proba": self.proba}, meta)

    @classmethod
    def load(cls, path) -> "SplitPrediction":
        arrays, meta = load_archive(path)
        keys = [tuple(k) for k in meta["keys"]]
        return cls(keys, np.array([k[1] for k in keys], dtype=object), arrays["proba"],
                   tuple(meta["classes"]), meta["train_counts"])


def predict_split(model: LinearModel, F, dataset: Dataset, split) -> SplitPrediction:
    rows = _rows(dataset, split.test)
    fit_rows = _rows(dataset, split.fit_participants)
    keys = [dataset.samples[i].key for i in rows]
    proba = model.predict_proba(F[rows]) if rows.size else np.zeros((0, len(model.classes)))
    return SplitPrediction(keys, dataset.labels[rows], proba, model.classes,
                           class_counts(dataset.labels[fit_rows], model.classes))


def report_from_predictions(name: str, preds, cfg: PipelineConfig, details=None) -> EvaluationReport:
    splits = []
    for p in preds:
        pred_labels = np.asarray(p.classes, dtype=object)[np.argmax(p.proba, axis=1)]
        m = evaluate(pred_labels, p.truth, p.classes)
        m.train_counts = dict(p.train_counts)
        splits.append(m)
    config = cfg.to_dict()
    if details:
        config = dict(config, details=details)
    return EvaluationReport(name, preds[0].classes, splits, config)


def fuse_predictions(per_modality: dict) -> SplitPrediction:
    """Average probabilities over test repetitions present in every modality."""
    mods = sorted(per_modality)
    first = per_modality[mods[0]]
    for m in mods[1:]:
        if tuple(per_modality[m].classes) != tuple(first.classes):
            raise ValidationError("modalities disagree on class order")
    index = {m: {k: i for i, k in enumerate(per_modality[m].keys)} for m in mods}
    common = sorted(set.intersection(*(set(ix) for ix in index.values())),
                    key=lambda k: (str(k[0]), str(k[1]), int(k[2])))
    dropped = sum(len(ix) for ix in index.values()) - len(mods) * len(common)
    if dropped:
        log.warning("ensemble: dropped %d unmatched test repetitions", dropped)
    if not common:
        raise EmptyIntersectionError("no test repetition is present in every modality")
    mats = [per_modality[m].proba[[index[m][k] for k in common]] for m in mods]
    avg, _ = ensemble_predict(mats)
    counts = {c: min(per_modality[m].train_counts.get(c, 0) for m in mods) for c in first.classes}
    return SplitPrediction(common, np.array([k[1] for k in common], dtype=object), avg,
                           first.classes, counts)


# --------------------------------------------------------------------------
# artifact helpers


def write_report(out: Path, stem: str, report: EvaluationReport) -> None:
    atomic_write_text(out / f"{stem}.json", report.to_json())
    atomic_write_text(out / f"{stem}.txt", report.to_text() + "\n")


def write_splits(out: Path, plan: SplitPlan) -> None:
    atomic_write_text(out / "splits.json", dumps_json(plan.to_dict()))


def read_splits(out: Path) -> SplitPlan:
    import json
    return SplitPlan.from_dict(json.loads((out / "splits.json").read_text()))


def model_path(out: Path, modality: str, i: int) -> Path:
    return out / "models" / f"{modality}_split{i + 1}.npz"


def prediction_path(out: Path, modality: str, i: int) -> Path:
    return out / "predictions" / f"{modality}_split{i + 1}.npz"


# --------------------------------------------------------------------------
# staged entry points (used by the CLI)


def stage_ingest(cfg: PipelineConfig) -> dict:
    out = _out(cfg)
    counts = {}
    for m in cfg.modalities:
        recs = ingest(cfg, m)
        dio.save_recordings(out / f"recordings_{m}.npz", recs)
        counts[m] = len(recs)
    return counts


def stage_segment(cfg: PipelineConfig) -> dict:
    out = _out(cfg)
    counts = {}
    for m in cfg.modalities:
        recs = dio.load_recordings(out / f"recordings_{m}.npz")
        ds, skipped = prepare(recs, cfg, m)
        dio.save_dataset(out / f"dataset_{m}.npz", ds)
        atomic_write_text(out / f"skipped_{m}.json", dumps_json(skipped))
        counts[m] = len(ds)
    return counts


def _load_datasets(cfg):
    with stage("load"):
        return {m: dio.load_dataset(_out(cfg) / f"dataset_{m}.npz") for m in cfg.modalities}


def _read_plan(out):
    with stage("load"):
        return read_splits(out)


def _plan(cfg, datasets) -> SplitPlan:
    participants = set()
    for ds in datasets.values():
        participants.update(ds.participants.tolist())
    with stage("split"):
        return make_splits(participants, cfg.split_seed)


def stage_train(cfg: PipelineConfig) -> SplitPlan:
    out = _out(cfg)
    datasets = _load_datasets(cfg)
    plan = _plan(cfg, datasets)
    write_splits(out, plan)
    for m, ds in datasets.items():
        F, kernels = featurize(ds, cfg, m)
        if kernels is not None:
            kernels.save(out / f"kernels_{m}.npz")
        with stage(f"train:{m}"):
            for i, split in enumerate(plan.splits):
                fit_split(F, ds, split, cfg).save(model_path(out, m, i))
    return plan


def stage_predict(cfg: PipelineConfig) -> None:
    out = _out(cfg)
    datasets = _load_datasets(cfg)
    plan = _read_plan(out)
    for m, ds in datasets.items():
        with stage(f"load:{m}"):
            kernels = KernelSet.load(out / f"kernels_{m}.npz") if cfg.strategy == RAW_ROCKET else None
        F, _ = featurize(ds, cfg, m, kernels)
        with stage(f"predict:{m}"):
            for i, split in enumerate(plan.splits):
                model = LinearModel.load(model_path(out, m, i))
                predict_split(model, F, ds, split).save(prediction_path(out, m, i))


def _load_predictions(out, modality, n):
    return [SplitPrediction.load(prediction_path(out, modality, i)) for i in range(n)]


def stage_evaluate(cfg: PipelineConfig) -> dict:
    out = _out(cfg)
    plan = _read_plan(out)
    reports = {}
    with stage("evaluate"):
        for m in cfg.modalities:
            preds = _load_predictions(out, m, len(plan.splits))
            rep = report_from_predictions(f"{cfg.exercise} / {m} / {cfg.strategy}", preds, cfg)
            write_report(out, f"report_{m}", rep)
            reports[m] = rep
        if len(cfg.modalities) == 1:
            write_report(out, "report", reports[cfg.modalities[0]])
    return reports


def stage_ensemble(cfg: PipelineConfig) -> EvaluationReport:
    out = _out(cfg)
    if len(cfg.modalities) < 2:
        raise StageError("ensemble", ValidationError("ensembling needs two modalities"))
    plan = _read_plan(out)
    with stage("ensemble"):
        fused = []
        for i in range(len(plan.splits)):
            per = {m: SplitPrediction.load(prediction_path(out, m, i)) for m in cfg.modalities}
            fused.append(fuse_predictions(per))
        rep = report_from_predictions(
            f"{cfg.exercise} / ensemble({'+'.join(cfg.modalities)}) / {cfg.strategy}", fused, cfg)
        write_report(out, "report_ensemble", rep)
        write_report(out, "report", rep)
    return rep


# --------------------------------------------------------------------------
# all in one


def run_pipeline(cfg: PipelineConfig) -> EvaluationReport:
    """Run every stage over all three splits and return the headline report.

    With two modalities the headline is the probability-averaged ensemble;
    per-modality reports are written alongside.
    """
    out = _out(cfg)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / "config.json", dumps_json(cfg.to_dict()))
    datasets, skipped = {}, {}
    for m in cfg.modalities:
        recs = ingest(cfg, m)
        dio.save_recordings(out / f"recordings_{m}.npz", recs)
        datasets[m], skipped[m] = prepare(recs, cfg, m)
        dio.save_dataset(out / f"dataset_{m}.npz", datasets[m])
        atomic_write_text(out / f"skipped_{m}.json", dumps_json(skipped[m]))
    plan = _plan(cfg, datasets)
    write_splits(out, plan)

    preds = {}
    for m, ds in datasets.items():
        F, kernels = featurize(ds, cfg, m)
        if kernels is not None:
            kernels.save(out / f"kernels_{m}.npz")
        preds[m] = []
        with stage(f"train:{m}"):
            for i, split in enumerate(plan.splits):
                model = fit_split(F, ds, split, cfg)
                model.save(model_path(out, m, i))
                p = predict_split(model, F, ds, split)
                p.save(prediction_path(out, m, i))
                preds[m].append(p)

    reports = {}
    with stage("evaluate"):
        for m in cfg.modalities:
            details = {"samples": len(datasets[m]), "skipped_recordings": len(skipped[m])}
            reports[m] = report_from_predictions(
                f"{cfg.exercise} / {m} / {cfg.strategy}", preds[m], cfg, details)
            write_report(out, f"report_{m}", reports[m])
    if len(cfg.modalities) == 1:
        headline = reports[cfg.modalities[0]]
    else:
        with stage("ensemble"):
            fused = [fuse_predictions({m: preds[m][i] for m in cfg.modalities})
                     for i in range(len(plan.splits))]
            headline = report_from_predictions(
                f"{cfg.exercise} / ensemble({'+'.join(cfg.modalities)}) / {cfg.strategy}",
                fused, cfg)
            write_report(out, "report_ensemble", headline)
    write_report(out, "report", headline)
    return headline


def single_modality_reports(cfg: PipelineConfig) -> dict:
    """Reload the per-modality reports written by the last run."""
    import json
    out = _out(cfg)
    return {m: EvaluationReport.from_dict(json.loads((out / f"report_{m}.json").read_text()))
            for m in cfg.modalities}
