import numpy as np
import pytest

from neurosub.errors import DomainError
from neurosub.haptics import (
    ErrorRateFilter,
    HapticGains,
    JoystickState,
    OperatorModel,
    desired_displacement,
    gate_torque,
    joystick_torque,
    lateral_error,
    operator_step,
)


def test_lateral_error_examples():
    assert lateral_error(160.0, 160.0) == 0.0
    assert lateral_error(160.0, 200.0) == -40.0


def test_lateral_error_antisymmetric_under_mirroring():
    x_c = 160.0
    for x_l in (10.0, 100.0, 250.0):
        mirrored = 2 * x_c - x_l
        assert lateral_error(x_c, x_l) == -lateral_error(x_c, mirrored)


def test_error_rate_single_sample_is_zero():
    f = ErrorRateFilter()
    assert f.update(12.0, 0.05) == 0.0
    assert not f.primed


def test_error_rate_constant_error_is_zero():
    f = ErrorRateFilter()
    for _ in range(100):
        rate = f.update(25.0, 0.01)
    assert rate == pytest.approx(0.0, abs=1e-12)


def test_error_rate_ramp_converges_to_slope():
    # Filter step-response oracle: first-order lag settles within 2% in 5*tau_f.
    c = 7.5
    dt = 0.01
    f = ErrorRateFilter(tau_f=0.1)
    t = 0.0
    while t <= 5 * 0.1 + 1e-9:
        rate = f.update(c * t, dt)
        t += dt
    assert rate == pytest.approx(c, rel=0.02)


def test_error_rate_rejects_bad_dt():
    with pytest.raises(DomainError):
        ErrorRateFilter().update(1.0, 0.0)


def test_desired_displacement_zero_error():
    gains = HapticGains()
    assert desired_displacement(0.0, 0.0, gains) == 0.0


def test_desired_displacement_arithmetic():
    gains = HapticGains(a=1.0, k_p=0.01, k_v=0.0)
    assert desired_displacement(50.0, 0.0, gains) == pytest.approx(-0.5)


def test_desired_displacement_sign_convention():
    gains = HapticGains()
    assert desired_displacement(30.0, 10.0, gains) < 0.0


def test_joystick_torque_equilibrium():
    gains = HapticGains()
    state = JoystickState(theta_x=0.2, theta_x_dot=0.0)
    assert joystick_torque(state, 0.2, gains) == 0.0


def test_joystick_torque_spring_term():
    gains = HapticGains(A=2.0, B=0.5)
    state = JoystickState(theta_x=0.1, theta_x_dot=0.0)
    assert joystick_torque(state, 0.0, gains) == pytest.approx(-0.2)


def test_joystick_torque_damping_term():
    gains = HapticGains(A=2.0, B=0.5)
    state = JoystickState(theta_x=0.3, theta_x_dot=1.0)
    assert joystick_torque(state, 0.3, gains) == pytest.approx(-0.5)


def test_gate_boundary_inclusive():
    # e_l(t) >= e_th passes the torque through, including equality.
    assert gate_torque(1.25, 40.0, 40.0) == 1.25
    assert gate_torque(1.25, -40.0, 40.0) == 1.25


def test_gate_below_threshold_blocks():
    assert gate_torque(1.25, 39.0, 40.0) == 0.0
    assert gate_torque(1.25, -39.0, 40.0) == 0.0


def test_gate_idempotent():
    for e in (10.0, 39.9, 40.0, 55.0):
        once = gate_torque(0.8, e, 40.0)
        assert gate_torque(once, e, 40.0) == once


def test_gate_zero_below_threshold_across_sweep():
    for e in np.linspace(-39.999, 39.999, 101):
        assert gate_torque(3.3, e, 40.0) == 0.0


def test_operator_passive_zero_torque_fixed_point():
    model = OperatorModel(profile="passive")
    state = JoystickState()
    out = operator_step(state, 0.0, model, 0.01)
    assert out.theta_x == 0.0 and out.theta_x_dot == 0.0


def test_operator_passive_constant_torque_rate_settles():
    # First-order ODE oracle: theta_dot -> tau/b within 2% after 5*J/b.
    model = OperatorModel(inertia=0.02, friction=0.1, profile="passive", theta_max=1e9)
    state = JoystickState()
    tau = 0.05
    dt = 0.001
    steps = int(5 * model.inertia / model.friction / dt)
    for _ in range(steps):
        state = operator_step(state, tau, model, dt)
    assert state.theta_x_dot == pytest.approx(tau / model.friction, rel=0.02)


def test_operator_stubborn_ignores_torque():
    model = OperatorModel(profile="stubborn")
    state = JoystickState(theta_x=0.12, theta_x_dot=0.0)
    for _ in range(100):
        state = operator_step(state, 5.0, model, 0.01)
    assert state.theta_x == 0.12


def test_operator_clamps_at_limit():
    model = OperatorModel(profile="passive", theta_max=0.5)
    state = JoystickState()
    for _ in range(2000):
        state = operator_step(state, 1.0, model, 0.01)
    assert state.theta_x == 0.5


def test_gains_validation():
    with pytest.raises(DomainError):
        HapticGains(A=-1.0)
    with pytest.raises(DomainError):
        HapticGains(e_th=0.0)
    with pytest.raises(DomainError):
        OperatorModel(profile="angry")
