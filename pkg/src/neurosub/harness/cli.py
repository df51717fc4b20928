"""Command-line entry points: run | generate-dataset | train | convert |
replay | serve."""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path

from ..errors import NeurosubError
from .config import DEFAULT_SEED, Config, setup_logging

logger = logging.getLogger(__name__)


def _load_config(args) -> Config:
    """--config points at either a run-config ({"scenario": ...}) or a plain
    scenario file."""
    path = Path(args.config)
    if not path.exists():
        raise NeurosubError(f"config file not found: {path}")
    data = json.loads(path.read_text())
    if "scenario" in data:
        base = path.parent
        return Config(
            scenario_path=base / data["scenario"],
            out_dir=args.out or data.get("out_dir"),
            seed=args.seed if args.seed is not None else data.get("seed"),
            overrides=data.get("overrides", {}),
            detector_checkpoint=(
                base / data["detector_checkpoint"] if data.get("detector_checkpoint") else None
            ),
            pose_checkpoint=(
                base / data["pose_checkpoint"] if data.get("pose_checkpoint") else None
            ),
        )
    return Config(scenario_path=path, out_dir=args.out, seed=args.seed)


def cmd_run(args) -> int:
    from ..sim.scenario import run_scenario

    config = _load_config(args)
    scenario = config.load_scenario()
    result = run_scenario(scenario, out_dir=config.out_dir)
    logger.info("scenario %s: %d ticks, %d events", scenario.name, len(result.rows), len(result.events))
    if result.csv_path:
        print(result.csv_path)
    return 0


def cmd_replay(args) -> int:
    from ..sim.scenario import run_scenario

    config = _load_config(args)
    scenario = config.load_scenario()
    reference = Path(args.log).read_bytes()
    result = run_scenario(scenario)
    if result.csv_bytes() == reference:
        print("replay identical")
        return 0
    print("replay DIVERGED from logged run", file=sys.stderr)
    return 1


def cmd_generate_dataset(args) -> int:
    from ..posenet.dataset import generate_pose_dataset

    out = Path(args.out or "dataset")
    seed = args.seed if args.seed is not None else DEFAULT_SEED
    generate_pose_dataset(out, args.count, seed=seed)
    print(out)
    return 0


def cmd_train(args) -> int:
    seed = args.seed if args.seed is not None else DEFAULT_SEED
    out = Path(args.out or f"checkpoint_{args.target}")
    if args.target == "pose":
        from ..posenet.dataset import load_pose_dataset
        from ..posenet.training import TrainConfig, save_checkpoint, train_pose_net

        dataset = load_pose_dataset(args.dataset)
        cfg = TrainConfig(epochs=args.epochs, seed=seed)
        result = train_pose_net(dataset, cfg)
        save_checkpoint(result, out, seed)
        print(
            f"{out} val_rmse={result.val_translation_rmse:.4f} "
            f"val_angle_deg={result.val_orientation_error_deg:.2f}"
        )
        return 0
    # detector: renders its own labelled frames via the simulator
    import numpy as np

    from ..perception.detector import SnnDetector
    from ..perception.haze import HazeParams
    from ..posenet.dataset import POSE_CAMERA, POSE_TARGET
    from ..sim.camera import render_frame
    from ..sim.vehicle import VehicleState

    rng = np.random.default_rng(seed)
    frames, boxes = [], []
    while len(frames) < args.count:
        pos = np.array([rng.uniform(0.0, 1.0), rng.uniform(-0.3, 0.3), rng.uniform(-0.15, 0.15)])
        frame, box, _ = render_frame(
            VehicleState(position=pos), POSE_CAMERA, POSE_TARGET, HazeParams(beta=0.0, airlight=0.7)
        )
        if box is None or box.w < 8:
            continue
        frames.append(frame.pixels)
        boxes.append(box)
    detector = SnnDetector(width=POSE_CAMERA.width, height=POSE_CAMERA.height, steps=8)
    losses = detector.train(frames, boxes, epochs=args.epochs, seed=seed)
    detector.save(out, seed=seed)
    print(f"{out} final_loss={losses[-1]:.5f}")
    return 0


def cmd_convert(args) -> int:
    from ..perception.conversion import (
        ann_to_snn_convert,
        calibrate_channel_max,
        load_relu_net,
        save_signed_net,
    )
    from ..perception.frame import read_pgm

    seed = args.seed if args.seed is not None else DEFAULT_SEED
    ann = load_relu_net(args.ann)
    frame_paths = sorted(Path(args.calibration).glob("*.pgm"))
    if not frame_paths:
        raise NeurosubError(f"no PGM calibration frames in {args.calibration}")
    frames = [read_pgm(p) for p in frame_paths]
    stats = calibrate_channel_max(ann, frames)
    snn = ann_to_snn_convert(ann, stats)
    out = Path(args.out or "checkpoint_snn")
    save_signed_net(snn, out, seed=seed)
    stats.to_json(out / "calibration.json")
    print(out)
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    config = _load_config(args)
    scenario = config.load_scenario()
    try:
        asyncio.run(
            serve(
                scenario,
                host=args.host,
                port=args.port,
                real_time_factor=args.rtf,
                out_dir=config.out_dir,
            )
        )
    except KeyboardInterrupt:
        pass
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neurosub",
        description="Neuromorphic underwater teleoperation sandbox",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        if config_required:
            p.add_argument("--config", required=True, help="scenario or run-config JSON")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")

    p_run = sub.add_parser("run", help="headless scenario execution")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_replay = sub.add_parser("replay", help="re-run and compare against a logged CSV")
    common(p_replay)
    p_replay.add_argument("--log", required=True, help="CSV log from a prior run")
    p_replay.set_defaults(func=cmd_replay)

    p_gen = sub.add_parser("generate-dataset", help="render a pose-training dataset")
    common(p_gen, config_required=False)
    p_gen.add_argument("--count", type=int, default=2000)
    p_gen.set_defaults(func=cmd_generate_dataset)

    p_train = sub.add_parser("train", help="train the pose net or the detector")
    common(p_train, config_required=False)
    p_train.add_argument("--target", choices=("pose", "detector"), required=True)
    p_train.add_argument("--dataset", help="dataset directory (pose target)")
    p_train.add_argument("--epochs", type=int, default=40)
    p_train.add_argument("--count", type=int, default=220, help="detector training frames")
    p_train.set_defaults(func=cmd_train)

    p_conv = sub.add_parser("convert", help="ANN -> SNN conversion")
    common(p_conv, config_required=False)
    p_conv.add_argument("--ann", required=True, help="relu_conv checkpoint directory")
    p_conv.add_argument("--calibration", required=True, help="directory of PGM frames")
    p_conv.set_defaults(func=cmd_convert)

    p_serve = sub.add_parser("serve", help="telemetry/command WebSocket service")
    common(p_serve)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8765)
    p_serve.add_argument("--rtf", type=float, default=1.0, help="real-time factor")
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NeurosubError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
