"""Pose-regression datasets: rendered frames + IMU windows + ground truth.

On disk: a directory of PGM frames plus a JSON-lines file with the per-frame
IMU window and pose label, and a meta.json recording the generation config.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DomainError
from ..geometry import quat_from_euler
from ..perception.frame import Frame, read_pgm, write_pgm
from ..perception.haze import HazeParams
from ..sim.camera import CameraModel, TargetModel, render_frame
from ..sim.imu import ImuNoise, hover_imu
from ..sim.vehicle import VehicleState


@dataclass(frozen=True)
class WorkspaceSpec:
    """Sampling box for vehicle poses (marker frame, radians).

    The yaw range is kept narrow: lateral offset and yaw shift the marker in
    the image almost identically at this resolution, and gravity carries no
    yaw information, so a wide yaw prior leaks directly into lateral error.
    """

    x: tuple[float, float] = (0.0, 1.5)
    y: tuple[float, float] = (-0.3, 0.3)
    z: tuple[float, float] = (-0.15, 0.15)
    roll: tuple[float, float] = (-0.26, 0.26)
    pitch: tuple[float, float] = (-0.15, 0.15)
    yaw: tuple[float, float] = (-0.03, 0.03)

    def to_dict(self) -> dict:
        return {k: list(getattr(self, k)) for k in ("x", "y", "z", "roll", "pitch", "yaw")}


# 45-degree horizontal FOV: the marker spans 20-35 px of the 64-px frame,
# leaving usable sub-pixel size and position cues at this resolution.
POSE_CAMERA = CameraModel(fx=77.25, fy=77.25, cx=32.0, cy=24.0, width=64, height=48)
POSE_TARGET = TargetModel(
    position=np.array([3.0, 0.0, 0.0]), side=0.8, albedo=0.9, pattern="coded"
)


@dataclass
class PoseDataset:
    frames: np.ndarray  # [N, H, W]
    imu: np.ndarray  # [N, window, 6]
    translations: np.ndarray  # [N, 3]
    quats: np.ndarray  # [N, 4]
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.frames.shape[0]

    def workspace_span(self) -> float:
        """Euclidean diagonal of the sampled translation box."""
        extent = self.translations.max(axis=0) - self.translations.min(axis=0)
        return float(np.linalg.norm(extent))


def generate_pose_dataset(
    out_dir: str | Path,
    n_samples: int,
    seed: int = 42,
    *,
    workspace: WorkspaceSpec | None = None,
    camera: CameraModel = POSE_CAMERA,
    target: TargetModel = POSE_TARGET,
    haze: HazeParams = HazeParams(beta=0.0, airlight=0.7),
    imu_window: int = 10,
    imu_noise: ImuNoise | None = None,
) -> Path:
    """Sample visible vehicle poses, render frames and synthesize hover IMU
    windows; deterministic for a given seed."""
    if n_samples < 1:
        raise DomainError("need at least one sample")
    workspace = workspace or WorkspaceSpec()
    out_dir = Path(out_dir)
    frame_dir = out_dir / "frames"
    frame_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    if imu_noise is None:
        # Constant per-dataset bias drawn once from the stream.
        imu_noise = ImuNoise(
            sigma_a=0.2,
            sigma_g=0.01,
            bias_a=rng.normal(0.0, 0.05, 3),
            bias_g=rng.normal(0.0, 0.002, 3),
        )

    lines = []
    produced = 0
    attempts = 0
    while produced < n_samples:
        attempts += 1
        if attempts > 50 * n_samples:
            raise DomainError("workspace sampling keeps leaving the field of view")
        pos = np.array(
            [rng.uniform(*workspace.x), rng.uniform(*workspace.y), rng.uniform(*workspace.z)]
        )
        rpy = (
            rng.uniform(*workspace.roll),
            rng.uniform(*workspace.pitch),
            rng.uniform(*workspace.yaw),
        )
        quat = quat_from_euler(*rpy)
        state = VehicleState(position=pos, quat=quat)
        frame, box, _depth = render_frame(state, camera, target, haze)
        if box is None or not _fully_visible(box, camera):
            continue
        name = f"{produced:06d}.pgm"
        write_pgm(frame, frame_dir / name)
        window = np.stack(
            [
                hover_imu(state, imu_noise, rng).as_array()
                for _ in range(imu_window)
            ]
        )
        lines.append(
            json.dumps(
                {
                    "index": produced,
                    "frame": f"frames/{name}",
                    "imu": window.tolist(),
                    "pose": {"t": pos.tolist(), "q": quat.tolist()},
                }
            )
        )
        produced += 1

    (out_dir / "samples.jsonl").write_text("\n".join(lines) + "\n")
    meta = {
        "n_samples": n_samples,
        "seed": seed,
        "imu_window": imu_window,
        "workspace": workspace.to_dict(),
        "camera": {
            "fx": camera.fx,
            "fy": camera.fy,
            "cx": camera.cx,
            "cy": camera.cy,
            "width": camera.width,
            "height": camera.height,
        },
        "target": {
            "position": target.position.tolist(),
            "side": target.side,
            "albedo": target.albedo,
            "pattern": target.pattern,
        },
        "haze": {"beta": haze.beta, "airlight": haze.airlight},
        "rejected_samples": attempts - n_samples,
    }
    (out_dir / "meta.json").write_text(json.dumps(meta, indent=2))
    return out_dir


def _fully_visible(box, camera: CameraModel) -> bool:
    return (
        box.cx - box.w / 2 > 0.5
        and box.cx + box.w / 2 < camera.width - 0.5
        and box.cy - box.h / 2 > 0.5
        and box.cy + box.h / 2 < camera.height - 0.5
    )


def load_pose_dataset(directory: str | Path) -> PoseDataset:
    directory = Path(directory)
    meta = json.loads((directory / "meta.json").read_text())
    frames, imu, ts, qs = [], [], [], []
    with open(directory / "samples.jsonl") as fh:
        for line in fh:
            rec = json.loads(line)
            frames.append(read_pgm(directory / rec["frame"]).pixels)
            imu.append(np.asarray(rec["imu"], dtype=float))
            ts.append(rec["pose"]["t"])
            qs.append(rec["pose"]["q"])
    return PoseDataset(
        frames=np.stack(frames),
        imu=np.stack(imu),
        translations=np.asarray(ts, dtype=float),
        quats=np.asarray(qs, dtype=float),
        meta=meta,
    )
