import os
import sys
from enum import Enum

from dotenv import load_dotenv
from loguru import logger
from pydantic import BaseModel, Field


class Settings(BaseModel):
    """Runtime defaults. Overridable through ``GRADSIGHT_*`` env vars or a ``.env`` file."""
    pad_margin: int = Field(4, ge=0, description="Zero padding added around a Laplacian before the spectral solve.")
    pr_levels: int = Field(256, ge=2, description="Threshold levels of the PR curve.")
    beta_squared: float = Field(0.3, gt=0.0, description="Weight of precision in the F-measure.")
    ce_epsilon: float = Field(1e-7, gt=0.0, lt=0.5, description="Clamp applied to S before the logarithms of CE.")
    log_level: str = "WARNING"
    workers: int = Field(4, ge=1, description="Thread pool size for directory-level work.")

    @classmethod
    def from_env(cls) -> "Settings":
        load_dotenv()
        values = {}
        for name in cls.model_fields:
            raw = os.getenv(f"GRADSIGHT_{name.upper()}")
            if raw is not None:
                values[name] = raw
        return cls.model_validate(values)


class EvaluationPresetName(str, Enum):
    STANDARD = "standard"
    FAST = "fast"
    LITERAL = "literal"


class EvaluationPreset(BaseModel):
    name: EvaluationPresetName
    levels: int
    beta_squared: float
    description: str = ""


EVALUATION_PRESETS = {
    EvaluationPresetName.STANDARD: EvaluationPreset(
        name=EvaluationPresetName.STANDARD,
        levels=256,
        beta_squared=0.3,
        description="256 uniform thresholds, benchmark beta^2 = 0.3",
    ),
    # 学習中のバリデーション用（閾値を減らして高速化）
    EvaluationPresetName.FAST: EvaluationPreset(
        name=EvaluationPresetName.FAST,
        levels=51,
        beta_squared=0.3,
        description="51 uniform thresholds for quick validation passes",
    ),
    # beta = 0.3 をそのまま二乗した読み方
    EvaluationPresetName.LITERAL: EvaluationPreset(
        name=EvaluationPresetName.LITERAL,
        levels=256,
        beta_squared=0.09,
        description="256 thresholds with beta^2 = 0.09",
    ),
}


def get_preset(name: str | EvaluationPresetName) -> EvaluationPreset:
    try:
        return EVALUATION_PRESETS[EvaluationPresetName(name)]
    except ValueError:
        choices = ", ".join(p.value for p in EvaluationPresetName)
        raise ValueError(f"Unknown evaluation preset '{name}' (choose from: {choices})") from None


def configure_logging(level: str = "WARNING") -> None:
    """Replace loguru's default sink with a single stderr sink."""
    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format="<level>{level: <8}</level> | {message}")
