"""Position-based visual servoing and the conditional shared controller.

The pose error stacks the translation error with the axis-angle orientation
error; the velocity screw is -lambda * L^-1 * e using the closed-form inverse
of the unit-triangular interaction matrix. When the lateral error leaves the
allowable visual range, the gated joystick torque is injected into the
command through a configured linear map.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError
from .geometry import quat_to_axis_angle, skew

# Torque (N*m) entering the velocity screw: sway and yaw, the two axes tied
# to lateral joystick motion.
DEFAULT_TORQUE_MAP = np.array([0.0, 0.6, 0.0, 0.0, 0.0, 0.12])
DEFAULT_VELOCITY_LIMITS = np.array([0.5, 0.5, 0.5, 0.5, 0.5, 0.5])


@dataclass
class PoseError:
    """6-vector (translation error m; axis-angle rad)."""

    vector: np.ndarray

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=float)
        if self.vector.shape != (6,):
            raise DimensionError("pose error must be a 6-vector")
        if not np.all(np.isfinite(self.vector)):
            raise DomainError("pose error must be finite")
        if np.linalg.norm(self.vector[3:]) > np.pi + 1e-9:
            raise DomainError("rotation part exceeds pi")

    @property
    def translation(self) -> np.ndarray:
        return self.vector[:3]

    @property
    def rotation(self) -> np.ndarray:
        return self.vector[3:]


@dataclass
class ControlCommand:
    v: np.ndarray
    mode: str  # "pbvs" | "pbvs+haptic"


def pose_error(actual_translation, actual_quat, target_translation) -> PoseError:
    """Eq.-style pose error: the target orientation block is zero by
    convention, so the rotation part is the actual orientation itself."""
    t = np.asarray(actual_translation, dtype=float) - np.asarray(
        target_translation, dtype=float
    )
    theta_u = quat_to_axis_angle(np.asarray(actual_quat, dtype=float))
    return PoseError(np.concatenate([t, theta_u]))


def interaction_matrix(p: np.ndarray) -> np.ndarray:
    """[[I3, -[p]x], [0, I3]] for the actual translation p."""
    p = np.asarray(p, dtype=float)
    top = np.hstack([np.eye(3), -skew(p)])
    bottom = np.hstack([np.zeros((3, 3)), np.eye(3)])
    return np.vstack([top, bottom])


def interaction_matrix_inverse(p: np.ndarray) -> np.ndarray:
    """Closed form: unit-triangular blocks invert by flipping the sign of
    the off-diagonal block."""
    p = np.asarray(p, dtype=float)
    top = np.hstack([np.eye(3), skew(p)])
    bottom = np.hstack([np.zeros((3, 3)), np.eye(3)])
    return np.vstack([top, bottom])


def pbvs_law(error: PoseError, p: np.ndarray, lam: float) -> np.ndarray:
    """v = -lambda * L^-1 * e (the pseudo-inverse of an invertible square
    matrix is its inverse)."""
    if lam <= 0:
        raise DomainError("lambda must be positive")
    return -lam * interaction_matrix_inverse(p) @ error.vector


@dataclass
class HysteresisGate:
    """Engage at |e_l| >= e_th, release below e_th - band (anti-chatter)."""

    e_th: float
    band: float = 5.0
    engaged: bool = field(default=False)

    def update(self, e_l: float) -> bool:
        mag = abs(e_l)
        if self.engaged:
            if mag < self.e_th - self.band:
                self.engaged = False
        elif mag >= self.e_th:
            self.engaged = True
        return self.engaged


def final_control(
    v_pbvs: np.ndarray,
    tau_final: float,
    gate_engaged: bool,
    torque_map: np.ndarray = DEFAULT_TORQUE_MAP,
    limits: np.ndarray = DEFAULT_VELOCITY_LIMITS,
) -> ControlCommand:
    """Conditional combination: gate open adds the mapped torque, gate closed
    passes v_pbvs through untouched (bit-identical)."""
    v_pbvs = np.asarray(v_pbvs, dtype=float)
    if v_pbvs.shape != (6,):
        raise DimensionError("v_pbvs must be a 6-vector")
    v_base = np.clip(v_pbvs, -limits, limits)
    if gate_engaged:
        v = np.clip(v_base + np.asarray(torque_map, dtype=float) * tau_final, -limits, limits)
        return ControlCommand(v=v, mode="pbvs+haptic")
    return ControlCommand(v=v_base, mode="pbvs")
