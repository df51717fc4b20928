import numpy as np
import pytest

from neurosub.errors import ConfigurationError
from neurosub.perception import (
    BoundingBox,
    DetectionTracker,
    Frame,
    SnnDetector,
    centroid,
    classical_detect,
)
from neurosub.perception.haze import HazeParams
from neurosub.sim import CameraModel, TargetModel, VehicleState, render_frame

CLEAR = HazeParams(beta=0.0, airlight=0.7)
SMALL_CAMERA = CameraModel(fx=55.43, fy=55.43, cx=32.0, cy=24.0, width=64, height=48)


def brute_force_box(pixels, threshold=0.45):
    """Oracle: plain pixel scan for the thresholded extent."""
    rows, cols = np.nonzero(pixels >= threshold)
    return (
        (cols.min() + cols.max() + 1) / 2.0,
        (rows.min() + rows.max() + 1) / 2.0,
        cols.max() - cols.min() + 1.0,
        rows.max() - rows.min() + 1.0,
    )


def test_centroid_is_box_center():
    c = centroid(BoundingBox(160.0, 120.0, 40.0, 40.0))
    assert (c.x_l, c.y_l) == (160.0, 120.0)


def test_centroid_clamped_to_frame():
    c = centroid(BoundingBox(330.0, -5.0, 10.0, 10.0), width=320, height=240)
    assert c.x_l == 319.0
    assert c.y_l == 0.0


def test_classical_matches_ground_truth_within_pixel():
    state = VehicleState(position=np.array([0.6, 0.15, -0.05]))
    target = TargetModel(position=np.array([3.0, 0.0, 0.0]), side=0.5, albedo=0.9)
    frame, gt, _ = render_frame(state, CameraModel(), target, CLEAR)
    box = classical_detect(frame)
    assert box is not None
    assert box.cx == pytest.approx(gt.cx, abs=1.0)
    assert box.cy == pytest.approx(gt.cy, abs=1.0)
    assert box.w == pytest.approx(gt.w, abs=1.0)
    assert box.h == pytest.approx(gt.h, abs=1.0)


def test_classical_matches_brute_force_scan():
    state = VehicleState(position=np.array([0.4, -0.2, 0.1]))
    target = TargetModel(position=np.array([3.0, 0.0, 0.0]), side=0.5, albedo=0.9)
    frame, _, _ = render_frame(state, CameraModel(), target, CLEAR)
    box = classical_detect(frame)
    cx, cy, w, h = brute_force_box(frame.pixels)
    assert (box.cx, box.cy, box.w, box.h) == (cx, cy, w, h)


def test_classical_centroid_matches_marker_pixel_mean():
    # Pixel-mean oracle for the centroid-from-box-centre policy.
    state = VehicleState(position=np.array([0.5, 0.1, 0.0]))
    target = TargetModel(position=np.array([3.0, 0.0, 0.0]), side=0.5, albedo=0.9)
    frame, _, _ = render_frame(state, CameraModel(), target, CLEAR)
    box = classical_detect(frame)
    c = centroid(box)
    rows, cols = np.nonzero(frame.pixels > 0.5)
    assert c.x_l == pytest.approx(cols.mean() + 0.5, abs=1.0)
    assert c.y_l == pytest.approx(rows.mean() + 0.5, abs=1.0)


def test_classical_blank_frame_returns_none():
    assert classical_detect(Frame(pixels=np.full((48, 64), 0.1))) is None


def test_tracker_holds_box_then_reports_lost():
    tracker = DetectionTracker(max_stale=3)
    box = BoundingBox(10, 10, 4, 4)
    first = tracker.update(box)
    assert not first.stale and not first.lost
    for i in range(3):
        held = tracker.update(None)
        assert held.stale and not held.lost
        assert held.box is box
    lost = tracker.update(None)
    assert lost.lost and lost.box is None


def test_snn_detector_requires_network():
    det = SnnDetector()
    with pytest.raises(ConfigurationError):
        det.detect(Frame(pixels=np.zeros((48, 64))))


def render_dataset(n, seed):
    rng = np.random.default_rng(seed)
    target = TargetModel(position=np.array([3.0, 0.0, 0.0]), side=0.8, albedo=0.9)
    frames, boxes = [], []
    while len(frames) < n:
        pos = np.array(
            [rng.uniform(0.0, 1.0), rng.uniform(-0.3, 0.3), rng.uniform(-0.18, 0.18)]
        )
        frame, box, _ = render_frame(
            VehicleState(position=pos), SMALL_CAMERA, target, CLEAR
        )
        if box is None or box.w < 8:
            continue
        frames.append(frame.pixels)
        boxes.append(box)
    return frames, boxes


@pytest.mark.slow
def test_snn_detector_toy_training_centers_marker():
    # Oracle: the renderer's ground-truth projection of a centred marker.
    frames, boxes = render_dataset(220, seed=3)
    det = SnnDetector(width=64, height=48, steps=8)
    losses = det.train(frames, boxes, epochs=50, seed=2, lr=1e-3)
    assert losses[-1] < losses[0]

    centered, gt, _ = render_frame(
        VehicleState(position=np.array([0.5, 0.0, 0.0])),
        SMALL_CAMERA,
        TargetModel(position=np.array([3.0, 0.0, 0.0]), side=0.8, albedo=0.9),
        CLEAR,
    )
    box = det.detect(centered)
    assert box.cx == pytest.approx(SMALL_CAMERA.cx, abs=3.0)
    assert box.cy == pytest.approx(SMALL_CAMERA.cy, abs=3.0)


@pytest.mark.slow
def test_snn_detector_checkpoint_round_trip(tmp_path):
    frames, boxes = render_dataset(40, seed=5)
    det = SnnDetector(width=64, height=48, steps=4)
    det.train(frames, boxes, epochs=2, seed=1)
    det.save(tmp_path / "det", seed=1)
    loaded = SnnDetector.from_checkpoint(tmp_path / "det")
    frame = Frame(pixels=frames[0])
    a = det.detect(frame)
    b = loaded.detect(frame)
    assert (a.cx, a.cy, a.w, a.h) == (b.cx, b.cy, b.w, b.h)
