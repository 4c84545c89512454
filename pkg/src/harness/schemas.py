"""
Experiment configuration models
"""

from enum import Enum
from pathlib import Path
from typing import Optional, Union
import os

import yaml
from pydantic import BaseModel, Field, ValidationError, model_validator

from src.crossbar.crossbar import Architecture
from src.harness.presets import HIDDEN_LAYERS, dataset_preset
from src.models.scheduling import PhaseMode
from src.utils.exceptions import ConfigError

VARIATION_LEVELS = (0.0, 0.02, 0.05, 0.10, 0.20)
DP_1T1R_VARIATION = 0.10


class Scenario(str, Enum):
    RV = "rv"
    DP_1T1R = "dp-1t1r"
    DP_1R = "dp-1r"
    ST_1T1R = "st-1t1r"
    ST_1R = "st-1r"

    @property
    def arch(self) -> Optional[Architecture]:
        if self is Scenario.RV:
            return None
        return Architecture.ONE_R if self.value.endswith("-1r") else Architecture.ONE_T_ONE_R

    @property
    def is_deterministic(self) -> bool:
        return self in (Scenario.DP_1T1R, Scenario.DP_1R)

    @property
    def is_insitu(self) -> bool:
        return self in (Scenario.ST_1T1R, Scenario.ST_1R)


class ScaleSource(str, Enum):
    RV = "rv"
    FAN_IN = "fan_in"


class SweepAxis(str, Enum):
    VARIATION = "variation"
    PHASES = "phases"


class ExperimentConfig(BaseModel):
    """One scenario on one dataset and network shape, averaged over replicates"""
    scenario: Scenario
    dataset: str
    shape: str
    phase_mode: PhaseMode = PhaseMode.TWO_PHASE
    variation: Optional[float] = None
    seed: int = Field(0, ge=0, lt=2 ** 64)
    epochs: Optional[int] = Field(None, ge=0)
    eta: Optional[float] = Field(None, ge=0.0, le=1.0)
    replicates: int = Field(1, ge=1)
    train_subset: Optional[int] = Field(None, ge=1)
    scale_source: ScaleSource = ScaleSource.RV
    split_seed: int = Field(0, ge=0)
    n_jobs: int = 1
    out_dir: str = Field(default_factory=lambda: os.getenv("MTJ_RESULTS_DIR", "results"))
    name: Optional[str] = None

    @model_validator(mode="after")
    def _check_combination(self) -> "ExperimentConfig":
        preset = dataset_preset(self.dataset)
        if self.shape not in HIDDEN_LAYERS:
            raise ValueError(f"unknown shape '{self.shape}'")
        if self.shape not in preset.shapes:
            raise ValueError(f"shape {self.shape} is not a preset for {self.dataset} ({', '.join(preset.shapes)})")
        if self.phase_mode is PhaseMode.FOUR_PHASE and self.scenario is not Scenario.ST_1R:
            raise ValueError("four-phase writes only apply to in-situ training on 1R crossbars")
        if self.variation is not None:
            if not any(abs(self.variation - v) < 1e-12 for v in VARIATION_LEVELS):
                raise ValueError(f"variation must be one of {VARIATION_LEVELS}")
            if self.scenario is Scenario.RV and self.variation > 0:
                raise ValueError("the real-valued baseline has no devices to vary")
        return self

    @property
    def effective_variation(self) -> float:
        if self.variation is not None:
            return self.variation
        return DP_1T1R_VARIATION if self.scenario is Scenario.DP_1T1R else 0.0

    @property
    def effective_epochs(self) -> int:
        return self.epochs if self.epochs is not None else dataset_preset(self.dataset).epochs

    @property
    def effective_eta(self) -> float:
        return self.eta if self.eta is not None else dataset_preset(self.dataset).eta

    @property
    def run_name(self) -> str:
        if self.name:
            return self.name
        return (f"{self.dataset}_{self.scenario.value}_{self.shape}_p{int(self.phase_mode)}"
                f"_v{self.effective_variation:.2f}_s{self.seed}")

    def echo(self) -> dict:
        """Every field plus the resolved defaults, for provenance"""
        return {
            **self.model_dump(mode="json"),
            "resolved": {
                "variation": self.effective_variation,
                "epochs": self.effective_epochs,
                "eta": self.effective_eta,
            },
        }

    @classmethod
    def from_yaml(cls, path: Union[str, Path], **overrides) -> "ExperimentConfig":
        with open(path, "r") as f:
            doc = yaml.safe_load(f) or {}
        doc.update({k: v for k, v in overrides.items() if v is not None})
        return build_config(**doc)


def build_config(**fields) -> ExperimentConfig:
    """Validate fields into an ExperimentConfig, reporting problems as ConfigError"""
    try:
        return ExperimentConfig(**fields)
    except ValidationError as e:
        raise ConfigError(str(e))
