"""Fixed-bin-width gray-level discretization of the ROI."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..types import MaskedImage, ValidationError


@dataclass(frozen=True)
class DiscretizedRoi:
    """Integer gray levels inside the mask; 0 marks background."""

    levels: np.ndarray  # int array, 0 outside mask
    n_levels: int
    roi_coords: np.ndarray  # (n, 2) foreground (row, col)


def discretize(img: MaskedImage, bin_width: float = 25.0) -> DiscretizedRoi:
    """level(p) = floor((I(p) - min_ROI) / bin_width) + 1 for foreground p."""
    if bin_width <= 0:
        raise ValidationError(f"non-positive bin_width {bin_width}")
    img.require_roi()
    fg = img.mask.astype(bool)
    vals = img.pixels[fg].astype(np.float64)
    lo = vals.min()
    levels = np.zeros(img.pixels.shape, dtype=np.int64)
    levels[fg] = np.floor((img.pixels[fg].astype(np.float64) - lo) / bin_width).astype(np.int64) + 1
    coords = np.argwhere(fg)
    return DiscretizedRoi(levels=levels, n_levels=int(levels.max()),
                          roi_coords=coords)
