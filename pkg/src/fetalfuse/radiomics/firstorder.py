"""First-order intensity statistics over the ROI."""
from __future__ import annotations

import numpy as np

from ..types import MaskedImage
from .discretize import DiscretizedRoi

FIRSTORDER_FEATURE_NAMES = (
    "Energy", "TotalEnergy", "Entropy", "Minimum", "10Percentile",
    "90Percentile", "Maximum", "Mean", "Median", "InterquartileRange",
    "Range", "MeanAbsoluteDeviation", "RobustMeanAbsoluteDeviation",
    "RootMeanSquared", "Skewness", "Kurtosis", "Variance", "Uniformity",
)

EPS = 1e-12


def firstorder_features(img: MaskedImage, d: DiscretizedRoi) -> dict:
    """Population (biased) moment conventions; Entropy/Uniformity use the
    discretized histogram; degenerate constant ROI yields Skewness=Kurtosis=0."""
    img.require_roi()
    x = img.pixels[img.mask.astype(bool)].astype(np.float64)
    n = len(x)
    area = img.pixel_size_mm ** 2

    hist = np.bincount(d.levels[img.mask.astype(bool)])[1:].astype(np.float64)
    p = hist[hist > 0] / n

    mean = float(x.mean())
    var = float(((x - mean) ** 2).mean())
    p10, p25, p75, p90 = np.percentile(x, [10, 25, 75, 90])
    robust = x[(x >= p10) & (x <= p90)]

    f = {}
    f["Energy"] = float((x ** 2).sum())
    f["TotalEnergy"] = area * f["Energy"]
    f["Entropy"] = float(-(p * np.log2(p + EPS)).sum())
    f["Minimum"] = float(x.min())
    f["10Percentile"] = float(p10)
    f["90Percentile"] = float(p90)
    f["Maximum"] = float(x.max())
    f["Mean"] = mean
    f["Median"] = float(np.median(x))
    f["InterquartileRange"] = float(p75 - p25)
    f["Range"] = float(x.max() - x.min())
    f["MeanAbsoluteDeviation"] = float(np.abs(x - mean).mean())
    f["RobustMeanAbsoluteDeviation"] = (
        float(np.abs(robust - robust.mean()).mean()) if len(robust) else 0.0)
    f["RootMeanSquared"] = float(np.sqrt((x ** 2).mean()))
    if var > EPS:
        m3 = float(((x - mean) ** 3).mean())
        m4 = float(((x - mean) ** 4).mean())
        f["Skewness"] = m3 / var ** 1.5
        f["Kurtosis"] = m4 / var ** 2  # not excess kurtosis
    else:
        f["Skewness"] = 0.0
        f["Kurtosis"] = 0.0
    f["Variance"] = var
    f["Uniformity"] = float((p ** 2).sum())
    return f
