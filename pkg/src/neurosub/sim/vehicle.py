"""First-order vehicle plant on the rigid-body group.

World frame is x forward, y right, z down; body axes coincide at identity
attitude. The 6-vector body velocity nu is (surge, sway, heave, roll rate,
pitch rate, yaw rate).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError
from ..geometry import integrate_quat, normalize_quat, quat_to_matrix

DEFAULT_TIME_CONSTANT = 0.5  # s, velocity-response lag


@dataclass
class VehicleState:
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    quat: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    nu: np.ndarray = field(default_factory=lambda: np.zeros(6))

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.quat = normalize_quat(np.asarray(self.quat, dtype=float))
        self.nu = np.asarray(self.nu, dtype=float)
        if self.position.shape != (3,) or self.nu.shape != (6,):
            raise DomainError("position must be 3-vector, nu 6-vector")

    def rotation(self) -> np.ndarray:
        return quat_to_matrix(self.quat)

    def copy(self) -> "VehicleState":
        return VehicleState(self.position.copy(), self.quat.copy(), self.nu.copy())


def step_dynamics(
    state: VehicleState,
    v_cmd: np.ndarray,
    current_world: np.ndarray,
    dt: float,
    time_constant: float = DEFAULT_TIME_CONSTANT,
) -> VehicleState:
    """nu' = (v_cmd + current - nu) / T_v, then pose integration with the
    updated velocity (semi-implicit); quaternion renormalized every step."""
    if dt <= 0:
        raise DomainError("dt must be positive")
    v_cmd = np.asarray(v_cmd, dtype=float)
    if v_cmd.shape != (6,):
        raise DomainError("v_cmd must be a 6-vector")
    rot = state.rotation()
    current_body = np.zeros(6)
    current_body[:3] = rot.T @ np.asarray(current_world, dtype=float)
    nu = state.nu + (dt / time_constant) * (v_cmd + current_body - state.nu)
    position = state.position + rot @ nu[:3] * dt
    quat = integrate_quat(state.quat, nu[3:], dt)
    return VehicleState(position=position, quat=quat, nu=nu)
