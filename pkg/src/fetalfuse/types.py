"""Core record types shared across the pipeline."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: Radiomic feature vector length (canonical feature set).
NUM_FEATURES = 97

#: Deep embedding width exported by the image backbone.
EMBED_DIM = 512

#: Plausibility bound on gestational-age labels, in days (~47 weeks).
GA_MAX_DAYS = 330.0


class ValidationError(ValueError):
    """Raised when an input record violates a structural invariant."""


@dataclass(frozen=True)
class MaskedImage:
    """8-bit grayscale image with a binary ROI mask and physical calibration."""

    id: str
    pixels: np.ndarray  # uint8, (n_h, n_w)
    mask: np.ndarray  # {0,1}, same shape
    pixel_size_mm: float

    def __post_init__(self):
        if self.pixels.shape != self.mask.shape:
            raise ValidationError(
                f"{self.id}: pixels {self.pixels.shape} and mask "
                f"{self.mask.shape} have different dimensions")
        if self.pixel_size_mm <= 0:
            raise ValidationError(f"{self.id}: pixel_size_mm must be positive")
        bad = set(np.unique(self.mask)) - {0, 1}
        if bad:
            raise ValidationError(f"{self.id}: mask values outside {{0,1}}: {bad}")

    @property
    def roi_pixel_count(self) -> int:
        return int(self.mask.sum())

    def require_roi(self):
        if self.roi_pixel_count == 0:
            raise ValidationError(f"{self.id}: empty mask")


@dataclass(frozen=True)
class RadiomicVector:
    """Ordered, named radiomic feature vector."""

    values: np.ndarray
    feature_names: tuple[str, ...]
    standardized: bool = False

    def __post_init__(self):
        if len(self.values) != len(self.feature_names):
            raise ValidationError(
                f"value count {len(self.values)} != name count "
                f"{len(self.feature_names)}")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("radiomic vector contains non-finite values")


@dataclass(frozen=True)
class DeepEmbedding:
    """512-d deep representation for one (possibly augmented) image id."""

    id: str
    values: np.ndarray

    def __post_init__(self):
        if len(self.values) != EMBED_DIM:
            raise ValidationError(
                f"{self.id}: embedding length {len(self.values)} != {EMBED_DIM}")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError(f"{self.id}: embedding contains non-finite values")


@dataclass(frozen=True)
class Sample:
    """One fusion-model training/evaluation record."""

    id: str
    radiomics: RadiomicVector
    embedding: DeepEmbedding
    ga_days: float

    def __post_init__(self):
        if not self.radiomics.standardized:
            raise ValidationError(f"{self.id}: radiomics must be standardized")
        if not (0 < self.ga_days <= GA_MAX_DAYS):
            raise ValidationError(
                f"{self.id}: ga_days {self.ga_days} outside (0, {GA_MAX_DAYS}]")


@dataclass(frozen=True)
class ManifestRow:
    id: str
    image_path: str
    mask_path: str
    pixel_size_mm: float | None = None
    hc_mm: float | None = None

    def __post_init__(self):
        if self.pixel_size_mm is None and self.hc_mm is None:
            raise ValidationError(f"{self.id}: neither pixel_size_mm nor hc_mm given")
        if self.pixel_size_mm is not None and self.pixel_size_mm <= 0:
            raise ValidationError(f"{self.id}: non-positive pixel_size_mm")
        if self.hc_mm is not None and self.hc_mm <= 0:
            raise ValidationError(f"{self.id}: non-positive hc_mm")


@dataclass(frozen=True)
class Manifest:
    rows: tuple[ManifestRow, ...] = field(default_factory=tuple)

    def __post_init__(self):
        ids = [r.id for r in self.rows]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValidationError(f"duplicate manifest ids: {dupes}")

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)
