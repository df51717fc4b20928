"""Visibility enhancement, target detection and ANN->SNN conversion."""

from .conversion import (
    CalibrationStats,
    ReluConvNet,
    SignedSpikingNet,
    ann_to_snn_convert,
    calibrate_channel_max,
    normalized_activations,
)
from .detector import (
    BoundingBox,
    Centroid,
    DetectionTracker,
    SnnDetector,
    TrackedDetection,
    build_detector_net,
    centroid,
    classical_detect,
)
from .frame import Frame, read_pgm, write_pgm
from .haze import HazeParams, apply_haze, enhance, estimate_airlight

__all__ = [
    "CalibrationStats",
    "ReluConvNet",
    "SignedSpikingNet",
    "ann_to_snn_convert",
    "calibrate_channel_max",
    "normalized_activations",
    "BoundingBox",
    "Centroid",
    "DetectionTracker",
    "SnnDetector",
    "TrackedDetection",
    "build_detector_net",
    "centroid",
    "classical_detect",
    "Frame",
    "read_pgm",
    "write_pgm",
    "HazeParams",
    "apply_haze",
    "enhance",
    "estimate_airlight",
]
