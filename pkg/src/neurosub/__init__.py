"""neurosub: hybrid-neuromorphic underwater teleoperation sandbox.

Spiking perception and pose estimation feed a position-based visual-servoing
controller with conditionally gated haptic shared control, all runnable
headless against a deterministic simulated world or interactively through a
WebSocket teleoperation console.
"""

__version__ = "0.1.0"
