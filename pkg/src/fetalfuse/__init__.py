"""Gestational-age estimation from fetal-head ultrasound: radiomics,
cross-attention feature fusion, biometry labeling, classical baselines."""

from .types import (
    DeepEmbedding,
    EMBED_DIM,
    Manifest,
    ManifestRow,
    MaskedImage,
    NUM_FEATURES,
    RadiomicVector,
    Sample,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "DeepEmbedding", "EMBED_DIM", "Manifest", "ManifestRow", "MaskedImage",
    "NUM_FEATURES", "RadiomicVector", "Sample", "ValidationError",
    "__version__",
]
