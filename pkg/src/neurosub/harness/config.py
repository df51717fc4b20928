"""Run configuration: scenario file plus CLI-level overrides."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigurationError
from ..sim.scenario import Scenario

DEFAULT_SEED = 42
LOG_ENV_VAR = "NEUROSUB_LOG_LEVEL"


def setup_logging() -> None:
    level = os.environ.get(LOG_ENV_VAR, "INFO").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


@dataclass
class Config:
    scenario_path: Path | None = None
    out_dir: Path | None = None
    seed: int | None = None
    overrides: dict = field(default_factory=dict)
    detector_checkpoint: Path | None = None
    pose_checkpoint: Path | None = None

    def __post_init__(self):
        for attr in ("scenario_path", "detector_checkpoint", "pose_checkpoint"):
            value = getattr(self, attr)
            if value is not None:
                path = Path(value)
                if not path.exists():
                    raise ConfigurationError(f"{attr.replace('_', ' ')} not found: {path}")
                setattr(self, attr, path)
        if self.out_dir is not None:
            self.out_dir = Path(self.out_dir)

    def load_scenario(self) -> Scenario:
        if self.scenario_path is None:
            raise ConfigurationError("no scenario file configured")
        data = json.loads(self.scenario_path.read_text())
        data.update(self.overrides)
        scenario = Scenario.from_dict(data)
        if self.seed is not None:
            scenario.seed = self.seed
        elif "seed" not in data:
            scenario.seed = DEFAULT_SEED
        if self.detector_checkpoint is not None:
            scenario.detector = str(self.detector_checkpoint)
        if self.pose_checkpoint is not None:
            scenario.pose_source = str(self.pose_checkpoint)
        return scenario
