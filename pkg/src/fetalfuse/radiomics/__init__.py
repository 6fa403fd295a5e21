"""From-scratch 2D radiomic feature extraction and the train-set standardizer.

The canonical feature vector concatenates shape2d (9) + firstorder (18) +
glcm (24) + glrlm (16) + glszm (16) + gldm (14) = 97 class-prefixed features.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ..types import MaskedImage, RadiomicVector, ValidationError
from .discretize import DiscretizedRoi, discretize
from .firstorder import FIRSTORDER_FEATURE_NAMES, firstorder_features
from .matrices import TextureMatrix, MatrixKind, glcm, gldm, glrlm, glszm
from .shape2d import SHAPE2D_FEATURE_NAMES, marching_squares, shape2d_features
from .texture_features import (
    GLCM_FEATURE_NAMES,
    GLDM_FEATURE_NAMES,
    GLRLM_FEATURE_NAMES,
    GLSZM_FEATURE_NAMES,
    glcm_features,
    gldm_features,
    glrlm_features,
    glszm_features,
)

__all__ = [
    "DiscretizedRoi", "TextureMatrix", "MatrixKind", "discretize",
    "glcm", "glrlm", "glszm", "gldm",
    "glcm_features", "glrlm_features", "glszm_features", "gldm_features",
    "firstorder_features", "shape2d_features", "marching_squares",
    "canonical_feature_names", "extract_all",
    "RadiomicsExtractor", "FeatureStandardizer", "StandardizerStats",
]

_CLASS_NAMES = (
    ("shape2d", SHAPE2D_FEATURE_NAMES),
    ("firstorder", FIRSTORDER_FEATURE_NAMES),
    ("glcm", GLCM_FEATURE_NAMES),
    ("glrlm", GLRLM_FEATURE_NAMES),
    ("glszm", GLSZM_FEATURE_NAMES),
    ("gldm", GLDM_FEATURE_NAMES),
)


def canonical_feature_names(disabled: tuple[str, ...] = ()) -> tuple[str, ...]:
    """The documented fixed feature ordering, minus any disabled names."""
    names = tuple(f"{cls}.{n}" for cls, members in _CLASS_NAMES for n in members)
    unknown = set(disabled) - set(names)
    if unknown:
        raise ValidationError(f"unknown feature names: {sorted(unknown)}")
    return tuple(n for n in names if n not in disabled)


def extract_all(img: MaskedImage, bin_width: float = 25.0,
                disabled: tuple[str, ...] = ()) -> RadiomicVector:
    """Full radiomic vector in canonical order."""
    img.require_roi()
    d = discretize(img, bin_width=bin_width)
    n_px = img.roi_pixel_count

    feats = {}
    for name, val in shape2d_features(img.mask, img.pixel_size_mm).items():
        feats[f"shape2d.{name}"] = val
    for name, val in firstorder_features(img, d).items():
        feats[f"firstorder.{name}"] = val
    glcm_mats = glcm(d)
    if glcm_mats:
        glcm_vals = glcm_features(glcm_mats)
    else:  # single-pixel ROI: no pairs at all, use degenerate conventions
        glcm_vals = _degenerate_glcm()
    for name, val in glcm_vals.items():
        feats[f"glcm.{name}"] = val
    for name, val in glrlm_features(glrlm(d), n_px).items():
        feats[f"glrlm.{name}"] = val
    for name, val in glszm_features(glszm(d), n_px).items():
        feats[f"glszm.{name}"] = val
    for name, val in gldm_features(gldm(d)).items():
        feats[f"gldm.{name}"] = val

    names = canonical_feature_names(disabled)
    values = np.array([feats[n] for n in names], dtype=np.float64)
    if not np.all(np.isfinite(values)):
        bad = [n for n, v in zip(names, values) if not np.isfinite(v)]
        raise ValidationError(f"{img.id}: non-finite features {bad}")
    return RadiomicVector(values=values, feature_names=names)


def _degenerate_glcm() -> dict:
    """Single-pixel ROI: treat as the constant 1x1 matrix conventions."""
    vals = {n: 0.0 for n in GLCM_FEATURE_NAMES}
    vals.update({"Correlation": 1.0, "MaximumProbability": 1.0, "MCC": 1.0,
                 "JointEnergy": 1.0, "JointAverage": 1.0, "Autocorrelation": 1.0,
                 "SumAverage": 2.0, "Idm": 1.0, "Idmn": 1.0, "Id": 1.0,
                 "Idn": 1.0})
    return vals


@dataclass(frozen=True)
class StandardizerStats:
    """Per-feature mean/std fitted on the training split; std floored at eps."""

    mean: np.ndarray
    std: np.ndarray

    EPSILON = 1e-12

    def __post_init__(self):
        if np.any(self.std <= 0):
            raise ValidationError("standardizer std must be strictly positive")


class FeatureStandardizer(BaseEstimator, TransformerMixin):
    """Zero-mean unit-variance transform (population std convention)."""

    def __init__(self, eps: float = StandardizerStats.EPSILON):
        self.eps = eps

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValidationError("standardizer needs a non-empty 2D matrix")
        self.stats_ = StandardizerStats(
            mean=X.mean(axis=0),
            std=np.maximum(X.std(axis=0), self.eps),
        )
        return self

    def transform(self, X):
        X = np.asarray(X, dtype=np.float64)
        return (X - self.stats_.mean) / self.stats_.std


def fit_standardizer(train: list[RadiomicVector]) -> StandardizerStats:
    if not train:
        raise ValidationError("cannot fit standardizer on an empty set")
    X = np.stack([v.values for v in train])
    return FeatureStandardizer().fit(X).stats_


def apply_standardizer(stats: StandardizerStats, v: RadiomicVector) -> RadiomicVector:
    vals = (v.values - stats.mean) / stats.std
    return RadiomicVector(values=vals, feature_names=v.feature_names,
                          standardized=True)


class RadiomicsExtractor(BaseEstimator, TransformerMixin):
    """Stateless transformer: list of MaskedImage -> (n, F) feature matrix."""

    def __init__(self, bin_width: float = 25.0, disabled: tuple[str, ...] = ()):
        self.bin_width = bin_width
        self.disabled = disabled

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        vecs = [extract_all(img, bin_width=self.bin_width,
                            disabled=tuple(self.disabled)) for img in X]
        return np.stack([v.values for v in vecs])

    def get_feature_names_out(self, input_features=None):
        return np.array(canonical_feature_names(tuple(self.disabled)))
