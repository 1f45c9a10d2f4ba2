"""
gradsight.models
~~~~~~~~~~~~~~~~
Pydantic models for the grids, tensors and reports exchanged between modules.
Array-backed models are frozen and hold read-only float64 copies, so they can
be shared across threads.
"""

from enum import Enum
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import DimensionMismatchError, FieldValidationError


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _first_message(err: ValidationError) -> str:
    errors = err.errors()
    if not errors:
        return str(err)
    return str(errors[0]["msg"]).removeprefix("Value error, ")


class ScalarField(BaseModel):
    """2-D real grid (image, Laplacian or saliency map), row-major (height, width)."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _check_values(cls, v):
        arr = np.array(v, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"ScalarField expects a 2-D grid, got {arr.ndim} dimension(s)")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"ScalarField must be at least 1x1, got {arr.shape[0]}x{arr.shape[1]}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("ScalarField contains NaN or Inf")
        return _readonly(arr)

    @classmethod
    def from_array(cls, values) -> "ScalarField":
        try:
            return cls(values=values)
        except ValidationError as e:
            raise FieldValidationError(_first_message(e)) from e

    @classmethod
    def zeros(cls, height: int, width: int) -> "ScalarField":
        return cls.from_array(np.zeros((height, width)))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


class VectorField(BaseModel):
    """Paired grids (ex, ey): x runs along columns, y along rows."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    ex: ScalarField
    ey: ScalarField

    @model_validator(mode="after")
    def _check_dims(self) -> "VectorField":
        if self.ex.shape != self.ey.shape:
            raise ValueError(
                f"ex and ey differ in size: {self.ex.height}x{self.ex.width} vs {self.ey.height}x{self.ey.width}"
            )
        return self

    @classmethod
    def from_arrays(cls, ex, ey) -> "VectorField":
        fx = ScalarField.from_array(ex)
        fy = ScalarField.from_array(ey)
        if fx.shape != fy.shape:
            raise DimensionMismatchError(
                f"ex and ey differ in size: {fx.height}x{fx.width} vs {fy.height}x{fy.width}"
            )
        return cls(ex=fx, ey=fy)

    @property
    def shape(self) -> tuple[int, int]:
        return self.ex.shape


class FeatureBatch(BaseModel):
    """N x C x H x W real tensor."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _check_values(cls, v):
        arr = np.array(v, dtype=np.float64)
        if arr.ndim != 4:
            raise ValueError(f"FeatureBatch expects N x C x H x W, got {arr.ndim} dimension(s)")
        if min(arr.shape) < 1:
            raise ValueError(f"FeatureBatch has an empty axis: {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("FeatureBatch contains NaN or Inf")
        return _readonly(arr)

    @classmethod
    def from_array(cls, values) -> "FeatureBatch":
        try:
            return cls(values=values)
        except ValidationError as e:
            raise FieldValidationError(_first_message(e)) from e

    @property
    def n_items(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[2]

    @property
    def width(self) -> int:
        return self.values.shape[3]


class ValidMask(BaseModel):
    """Per-pixel flags: True pixels are counted by the metrics, False pixels are ignored."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    flags: np.ndarray

    @field_validator("flags", mode="before")
    @classmethod
    def _check_flags(cls, v):
        arr = np.asarray(v)
        if arr.ndim != 2 or min(arr.shape) < 1:
            raise ValueError(f"ValidMask expects a non-empty 2-D grid, got shape {arr.shape}")
        if arr.dtype != np.bool_:
            if not np.all((arr == 0) | (arr == 1)):
                raise ValueError("ValidMask flags must be 0 or 1")
        return _readonly(np.array(arr, dtype=np.bool_))

    @classmethod
    def from_array(cls, flags) -> "ValidMask":
        try:
            return cls(flags=flags)
        except ValidationError as e:
            raise FieldValidationError(_first_message(e)) from e

    @classmethod
    def full(cls, height: int, width: int) -> "ValidMask":
        return cls.from_array(np.ones((height, width), dtype=np.bool_))

    @property
    def shape(self) -> tuple[int, int]:
        return self.flags.shape

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.flags))


class GroundTruth(BaseModel):
    """Binary ground-truth mask G (1 = salient)."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mask: np.ndarray

    @field_validator("mask", mode="before")
    @classmethod
    def _check_mask(cls, v):
        arr = np.asarray(v)
        if arr.ndim != 2 or min(arr.shape) < 1:
            raise ValueError(f"GroundTruth expects a non-empty 2-D grid, got shape {arr.shape}")
        if arr.dtype != np.bool_:
            if not np.all((arr == 0) | (arr == 1)):
                raise ValueError("GroundTruth values must be 0 or 1")
        return _readonly(np.array(arr, dtype=np.bool_))

    @classmethod
    def from_array(cls, mask) -> "GroundTruth":
        try:
            return cls(mask=mask)
        except ValidationError as e:
            raise FieldValidationError(_first_message(e)) from e

    @classmethod
    def from_field(cls, field: ScalarField, binarize: bool = False) -> "GroundTruth":
        """With ``binarize`` the field is thresholded at 0.5 (anti-aliased masks)."""
        if binarize:
            return cls.from_array(field.values >= 0.5)
        return cls.from_array(field.values)

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape


class ChannelLayout(str, Enum):
    GROUPED = "grouped"          # [0..n)=S, [n..2n)=Ex, [2n..3n)=Ey
    INTERLEAVED = "interleaved"  # 3k, 3k+1, 3k+2


class GisConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    channel_layout: ChannelLayout = ChannelLayout.GROUPED


class NoiseSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    fraction: float = Field(..., ge=0.0, le=1.0, description="Portion of pixel positions corrupted.")
    seed: int = Field(0, ge=0, lt=2**64, description="Seed of the PCG64 stream.")


class PRCurve(BaseModel):
    """Per-threshold precision, recall and false-positive rate, thresholds ascending."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    thresholds: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    false_positive_rate: np.ndarray
    predicted: np.ndarray = Field(..., description="|M| at each threshold.")

    @model_validator(mode="after")
    def _check_lengths(self) -> "PRCurve":
        n = len(self.thresholds)
        for name in ("precision", "recall", "false_positive_rate", "predicted"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"PRCurve.{name} has {len(getattr(self, name))} samples, expected {n}")
        return self

    @property
    def levels(self) -> int:
        return len(self.thresholds)

    def rows(self) -> List[Dict[str, float]]:
        return [
            {"threshold": float(t), "P": float(p), "R": float(r), "notR": float(f)}
            for t, p, r, f in zip(self.thresholds, self.precision, self.recall, self.false_positive_rate)
        ]


class MetricReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: Optional[str] = None
    f_measure: float
    max_precision: float
    mean_pr: float
    auc: float
    mae: float
    rmse: float
    cross_entropy: float
    beta_squared: float = 0.3

    def as_row(self) -> Dict[str, object]:
        return {
            "name": self.name or "",
            "Fm": self.f_measure,
            "Pmax": self.max_precision,
            "meanPR": self.mean_pr,
            "AUC": self.auc,
            "MAE": self.mae,
            "RMSE": self.rmse,
            "CE": self.cross_entropy,
        }


class TimingReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    height: int
    width: int
    batch: int
    repeats: int
    solves_per_run: int
    cold_seconds: float = Field(..., description="First run on an empty operator cache.")
    warm_mean_seconds: float
    warm_std_seconds: float

    @property
    def per_solve_seconds(self) -> float:
        return self.warm_mean_seconds / self.solves_per_run
