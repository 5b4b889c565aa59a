"""Command-line interface: ``exercise-tsc <command> [options]``.

Stages communicate through files in ``--workdir`` so they can be run one at
a time (``ingest``, ``segment``, ``train``, ``predict``, ``evaluate``,
``ensemble``) or all together with ``run``. ``synth`` writes a synthetic
dataset and ``report`` prints the last report.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline
from .config import STRATEGIES, load_config
from .errors import ExerciseTSCError, StageError
from .evaluation import EvaluationReport
from .io import DATA_ROOT_ENV, DEVICES
from .series import EXERCISE_CLASSES, MODALITIES
from .synth import SynthSpec, synth_dataset

log = logging.getLogger("exercise_tsc")


def _csv(text: str) -> tuple:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--workdir", "--out", dest="workdir", help="artifact directory")
    p.add_argument("--data-root", help=f"dataset root (default ${DATA_ROOT_ENV} or ./data)")
    p.add_argument("--exercise", choices=sorted(EXERCISE_CLASSES))
    p.add_argument("--modality", type=_csv, help=f"comma list of {','.join(MODALITIES)}")
    p.add_argument("--imu-locations", type=_csv, help=f"comma list of {','.join(DEVICES)}")
    p.add_argument("--keypoints", help="upper8 or all25")
    p.add_argument("--strategy", choices=STRATEGIES)
    p.add_argument("--num-kernels", type=int)
    p.add_argument("--seed", type=int, help="split and kernel seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="exercise-tsc",
                                     description="Exercise-form classification from IMU and video series.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("ingest", "parse raw files into a recordings archive"),
        ("segment", "split recordings into resampled repetitions"),
        ("train", "draw splits, build features and fit one model per split"),
        ("predict", "predict the test participants of every split"),
        ("evaluate", "score per-modality predictions"),
        ("ensemble", "average probabilities across modalities and score"),
        ("run", "all of the above in one go"),
    ]:
        _common(sub.add_parser(name, help=text))
    rp = sub.add_parser("report", help="print the last report")
    rp.add_argument("--workdir", "--out", dest="workdir", default="runs/latest")
    rp.add_argument("--name", default="report", help="report stem, e.g. report_imu")
    rp.add_argument("--json", action="store_true", help="print JSON instead of text")
    sp = sub.add_parser("synth", help="write a synthetic dataset")
    sp.add_argument("--out", "--data-root", dest="out", required=True)
    sp.add_argument("--exercise", choices=sorted(EXERCISE_CLASSES), default="military_press")
    sp.add_argument("--participants", type=int, default=40)
    sp.add_argument("--reps", type=int, default=10)
    sp.add_argument("--noise", type=float, default=0.05)
    sp.add_argument("--modality", type=_csv, default=MODALITIES)
    sp.add_argument("--seed", type=int, default=0)
    return parser


def config_from_args(args):
    overrides = {
        "exercise": args.exercise,
        "modalities": args.modality,
        "imu_locations": args.imu_locations,
        "video_keypoints": args.keypoints,
        "strategy": args.strategy,
        "num_kernels": args.num_kernels,
        "data_root": args.data_root,
        "out_dir": args.workdir,
    }
    if args.seed is not None:
        overrides["split_seed"] = overrides["kernel_seed"] = args.seed
    return load_config(args.config, **overrides)


def _run(args) -> str:
    if args.command == "synth":
        spec = SynthSpec(exercise=args.exercise, participants=args.participants, reps=args.reps,
                         noise=args.noise, write_imu="imu" in args.modality,
                         write_video="video" in args.modality)
        summary = synth_dataset(spec, args.seed, args.out)
        return f"wrote {summary['files']} files ({summary['recordings']} recordings) to {args.out}"
    if args.command == "report":
        path = Path(args.workdir) / f"{args.name}.json"
        try:
            rep = EvaluationReport.from_dict(json.loads(path.read_text()))
        except (OSError, ValueError, KeyError) as exc:
            raise StageError("report", exc) from exc
        return rep.to_json().rstrip("\n") if args.json else rep.to_text()

    try:
        cfg = config_from_args(args)
    except (ExerciseTSCError, ValueError, TypeError, OSError) as exc:
        raise StageError("config", exc) from exc
    Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
    if args.command == "run":
        return pipeline.run_pipeline(cfg).to_text()
    if args.command == "ingest":
        counts = pipeline.stage_ingest(cfg)
        return "\n".join(f"{m}: {n} recordings" for m, n in counts.items())
    if args.command == "segment":
        counts = pipeline.stage_segment(cfg)
        return "\n".join(f"{m}: {n} repetitions" for m, n in counts.items())
    if args.command == "train":
        plan = pipeline.stage_train(cfg)
        return f"trained {len(plan.splits)} splits x {len(cfg.modalities)} modalities"
    if args.command == "predict":
        pipeline.stage_predict(cfg)
        return "predictions written"
    if args.command == "evaluate":
        reports = pipeline.stage_evaluate(cfg)
        return "\n".join(f"{m}: mean accuracy {r.mean_accuracy:.4f}" for m, r in reports.items())
    if args.command == "ensemble":
        return pipeline.stage_ensemble(cfg).to_text()
    raise AssertionError(args.command)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        print(_run(args))
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ExerciseTSCError as exc:
        print(f"error: [{args.command}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
