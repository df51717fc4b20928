"""Pinhole rendering of a planar target marker through underwater haze.

The scene is a wall plane carrying a square marker: every camera ray is
intersected with the plane, shaded by the marker/background albedo, and
attenuated by the haze model at the per-pixel ray range. The ground-truth
bounding box comes from the projected marker corners.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError
from ..geometry import quat_to_matrix
from ..perception.detector import BoundingBox
from ..perception.frame import Frame
from ..perception.haze import HazeParams
from .vehicle import VehicleState

BACKGROUND_ALBEDO = 0.1
WATER_ALBEDO = 0.02
WATER_RANGE = 20.0  # m, rays that miss the wall
MIN_RANGE = 0.05


@dataclass(frozen=True)
class CameraModel:
    """Intrinsics; the optical axis is the vehicle body x axis, image x maps
    to body y and image y to body z. x_c of the lateral-error law is cx."""

    fx: float = 277.1
    fy: float = 277.1
    cx: float = 160.0
    cy: float = 120.0
    width: int = 320
    height: int = 240

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise DomainError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise DomainError("principal point must lie inside the frame")


@dataclass(frozen=True)
class TargetModel:
    """Planar square marker: world pose, side length (m), base albedo and an
    optional coded pattern (dark quadrant patch for orientation cues)."""

    position: np.ndarray = field(default_factory=lambda: np.array([3.0, 0.0, 0.0]))
    quat: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    side: float = 0.5
    albedo: float = 0.9
    pattern: str = "uniform"  # "uniform" | "coded"

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "quat", np.asarray(self.quat, dtype=float))
        if self.side <= 0:
            raise DomainError("marker side must be positive")
        if not 0.0 < self.albedo <= 1.0:
            raise DomainError("albedo must lie in (0, 1]")
        if self.pattern not in ("uniform", "coded"):
            raise DomainError(f"unknown marker pattern {self.pattern!r}")

    def corners_world(self) -> np.ndarray:
        rot = quat_to_matrix(self.quat)
        half = self.side / 2.0
        local = np.array(
            [[0, -half, -half], [0, half, -half], [0, half, half], [0, -half, half]]
        )
        return self.position + local @ rot.T


def render_frame(
    state: VehicleState,
    camera: CameraModel,
    target: TargetModel,
    haze: HazeParams,
    timestamp: float = 0.0,
) -> tuple[Frame, BoundingBox | None, float]:
    """Returns (hazy frame, ground-truth box or None, range to marker centre)."""
    cam_pos = state.position
    rot_wb = state.rotation()

    # Per-pixel rays, pixel centres at (c + 0.5, r + 0.5).
    cols = (np.arange(camera.width) + 0.5 - camera.cx) / camera.fx
    rows = (np.arange(camera.height) + 0.5 - camera.cy) / camera.fy
    xc, yc = np.meshgrid(cols, rows)
    dirs_body = np.stack([np.ones_like(xc), xc, yc], axis=-1)
    dirs_world = dirs_body @ rot_wb.T

    rot_t = quat_to_matrix(target.quat)
    normal = rot_t[:, 0]
    axis_a = rot_t[:, 1]  # marker-local horizontal
    axis_b = rot_t[:, 2]  # marker-local vertical

    denom = dirs_world @ normal
    offset = float((target.position - cam_pos) @ normal)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_hit = offset / denom
    hit = np.isfinite(t_hit) & (t_hit > MIN_RANGE)

    points = cam_pos + dirs_world * t_hit[..., None]
    rel = points - target.position
    a = rel @ axis_a
    b = rel @ axis_b
    half = target.side / 2.0
    on_marker = hit & (np.abs(a) <= half) & (np.abs(b) <= half)

    albedo = np.full((camera.height, camera.width), WATER_ALBEDO)
    albedo[hit] = BACKGROUND_ALBEDO
    marker_albedo = np.full_like(albedo, target.albedo)
    if target.pattern == "coded":
        patch = (a < 0) & (b < 0) & (np.abs(a) <= half) & (np.abs(b) <= half)
        marker_albedo[patch] = target.albedo * 0.35
    albedo[on_marker] = marker_albedo[on_marker]

    ray_range = np.full_like(albedo, WATER_RANGE)
    ray_norm = np.linalg.norm(dirs_world, axis=-1)
    ray_range[hit] = (t_hit * ray_norm)[hit]

    airlight = haze.airlight if haze.airlight is not None else 0.7
    trans = np.exp(-haze.beta * ray_range)
    intensity = albedo * trans + airlight * (1.0 - trans)
    frame = Frame(pixels=np.clip(intensity, 0.0, 1.0), timestamp=timestamp)

    gt_box = _project_box(target.corners_world(), cam_pos, rot_wb, camera)
    depth = float(np.linalg.norm(target.position - cam_pos))
    return frame, gt_box, depth


def _project_box(
    corners: np.ndarray, cam_pos: np.ndarray, rot_wb: np.ndarray, camera: CameraModel
) -> BoundingBox | None:
    body = (corners - cam_pos) @ rot_wb
    if np.any(body[:, 0] < MIN_RANGE):
        return None  # marker (partly) behind the camera
    u = camera.cx + camera.fx * body[:, 1] / body[:, 0]
    v = camera.cy + camera.fy * body[:, 2] / body[:, 0]
    u_min, u_max = u.min(), u.max()
    v_min, v_max = v.min(), v.max()
    if u_max <= 0 or u_min >= camera.width or v_max <= 0 or v_min >= camera.height:
        return None
    u_min, u_max = max(u_min, 0.0), min(u_max, float(camera.width))
    v_min, v_max = max(v_min, 0.0), min(v_max, float(camera.height))
    if u_max - u_min <= 0 or v_max - v_min <= 0:
        return None
    return BoundingBox(
        cx=(u_min + u_max) / 2.0,
        cy=(v_min + v_max) / 2.0,
        w=u_max - u_min,
        h=v_max - v_min,
    )
