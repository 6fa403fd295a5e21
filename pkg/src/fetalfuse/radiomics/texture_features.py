"""Named features over the four texture matrices.

Conventions: entropies in log base 2, eps = 1e-12 guarding logs and divisions,
per-angle features averaged (GLCM, GLRLM). Zero-variance degenerate cases take
the documented conventions (GLCM Correlation = 1, MCC = 1).
"""
from __future__ import annotations

import numpy as np

from ..types import ValidationError
from .matrices import TextureMatrix

EPS = 1e-12

GLCM_FEATURE_NAMES = (
    "Autocorrelation", "JointAverage", "ClusterProminence", "ClusterShade",
    "ClusterTendency", "Contrast", "Correlation", "DifferenceAverage",
    "DifferenceEntropy", "DifferenceVariance", "JointEnergy", "JointEntropy",
    "Imc1", "Imc2", "Idm", "Idmn", "Id", "Idn", "InverseVariance",
    "MaximumProbability", "SumAverage", "SumEntropy", "SumSquares", "MCC",
)

GLRLM_FEATURE_NAMES = (
    "ShortRunEmphasis", "LongRunEmphasis", "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized", "RunLengthNonUniformity",
    "RunLengthNonUniformityNormalized", "RunPercentage", "GrayLevelVariance",
    "RunVariance", "RunEntropy", "LowGrayLevelRunEmphasis",
    "HighGrayLevelRunEmphasis", "ShortRunLowGrayLevelEmphasis",
    "ShortRunHighGrayLevelEmphasis", "LongRunLowGrayLevelEmphasis",
    "LongRunHighGrayLevelEmphasis",
)

GLSZM_FEATURE_NAMES = (
    "SmallAreaEmphasis", "LargeAreaEmphasis", "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized", "SizeZoneNonUniformity",
    "SizeZoneNonUniformityNormalized", "ZonePercentage", "GrayLevelVariance",
    "ZoneVariance", "ZoneEntropy", "LowGrayLevelZoneEmphasis",
    "HighGrayLevelZoneEmphasis", "SmallAreaLowGrayLevelEmphasis",
    "SmallAreaHighGrayLevelEmphasis", "LargeAreaLowGrayLevelEmphasis",
    "LargeAreaHighGrayLevelEmphasis",
)

GLDM_FEATURE_NAMES = (
    "SmallDependenceEmphasis", "LargeDependenceEmphasis",
    "GrayLevelNonUniformity", "DependenceNonUniformity",
    "DependenceNonUniformityNormalized", "GrayLevelVariance",
    "DependenceVariance", "DependenceEntropy", "LowGrayLevelEmphasis",
    "HighGrayLevelEmphasis", "SmallDependenceLowGrayLevelEmphasis",
    "SmallDependenceHighGrayLevelEmphasis",
    "LargeDependenceLowGrayLevelEmphasis",
    "LargeDependenceHighGrayLevelEmphasis",
)


def _log2(x):
    return np.log2(x + EPS)


def _glcm_features_single(p_counts: np.ndarray) -> dict:
    p = p_counts.astype(np.float64)
    p = p / p.sum()
    ng = p.shape[0]
    i = np.arange(1, ng + 1, dtype=np.float64)
    ii, jj = np.meshgrid(i, i, indexing="ij")
    px = p.sum(axis=1)
    py = p.sum(axis=0)
    ux = float((p * ii).sum())
    uy = float((p * jj).sum())
    sx = float(np.sqrt((p * (ii - ux) ** 2).sum()))
    sy = float(np.sqrt((p * (jj - uy) ** 2).sum()))

    # diagonal (difference) and cross-diagonal (sum) distributions
    kd = np.arange(0, ng)  # |i-j|
    pxmy = np.array([p[np.abs(ii - jj) == k].sum() for k in kd])
    ks = np.arange(2, 2 * ng + 1)  # i+j
    pxpy = np.array([p[(ii + jj) == k].sum() for k in ks])

    f = {}
    f["Autocorrelation"] = (p * ii * jj).sum()
    f["JointAverage"] = ux
    f["ClusterProminence"] = (p * (ii + jj - ux - uy) ** 4).sum()
    f["ClusterShade"] = (p * (ii + jj - ux - uy) ** 3).sum()
    f["ClusterTendency"] = (p * (ii + jj - ux - uy) ** 2).sum()
    f["Contrast"] = (p * (ii - jj) ** 2).sum()
    if sx * sy > EPS:
        f["Correlation"] = ((p * ii * jj).sum() - ux * uy) / (sx * sy)
    else:
        f["Correlation"] = 1.0
    da = (kd * pxmy).sum()
    f["DifferenceAverage"] = da
    f["DifferenceEntropy"] = -(pxmy * _log2(pxmy)).sum()
    f["DifferenceVariance"] = ((kd - da) ** 2 * pxmy).sum()
    f["JointEnergy"] = (p ** 2).sum()
    hxy = -(p * _log2(p)).sum()
    f["JointEntropy"] = hxy
    hx = -(px * _log2(px)).sum()
    hy = -(py * _log2(py)).sum()
    pxy = np.outer(px, py)
    hxy1 = -(p * _log2(pxy)).sum()
    hxy2 = -(pxy * _log2(pxy)).sum()
    denom = max(hx, hy)
    f["Imc1"] = (hxy - hxy1) / denom if denom > EPS else 0.0
    f["Imc2"] = 0.0 if hxy2 < hxy else float(np.sqrt(1 - np.exp(-2 * (hxy2 - hxy))))
    f["Idm"] = (p / (1 + (ii - jj) ** 2)).sum()
    f["Idmn"] = (p / (1 + ((ii - jj) ** 2) / ng ** 2)).sum()
    f["Id"] = (p / (1 + np.abs(ii - jj))).sum()
    f["Idn"] = (p / (1 + np.abs(ii - jj) / ng)).sum()
    off = ii != jj
    f["InverseVariance"] = (p[off] / (ii[off] - jj[off]) ** 2).sum() if off.any() else 0.0
    f["MaximumProbability"] = p.max()
    f["SumAverage"] = (ks * pxpy).sum()
    f["SumEntropy"] = -(pxpy * _log2(pxpy)).sum()
    f["SumSquares"] = (p * (ii - ux) ** 2).sum()
    f["MCC"] = _mcc(p, px, py)
    return f


def _mcc(p, px, py):
    ng = p.shape[0]
    if ng == 1:
        return 1.0
    denom = np.outer(px, py)  # q[i,j] = sum_k p[i,k] p[j,k] / (px[i] py[k])
    q = np.zeros((ng, ng))
    for i_ in range(ng):
        for j_ in range(ng):
            acc = 0.0
            for k_ in range(ng):
                d = px[i_] * py[k_]
                if d > EPS:
                    acc += p[i_, k_] * p[j_, k_] / d
            q[i_, j_] = acc
    eig = np.linalg.eigvals(q)
    eig = np.sort(np.real(eig))
    second = eig[-2] if len(eig) > 1 else eig[-1]
    return float(np.sqrt(max(second, 0.0)))


def glcm_features(mats: list[TextureMatrix]) -> dict:
    if not mats:
        raise ValidationError("degenerate ROI for GLCM: all angles dropped")
    per_angle = [_glcm_features_single(m.data) for m in mats]
    return {k: float(np.mean([f[k] for f in per_angle]))
            for k in GLCM_FEATURE_NAMES}


# ---------------------------------------------------------------------------

def _glrlm_features_single(p_counts: np.ndarray, n_pixels: int) -> dict:
    p = p_counts.astype(np.float64)
    nr = p.sum()
    ng, max_run = p.shape
    i = np.arange(1, ng + 1, dtype=np.float64)[:, None]
    j = np.arange(1, max_run + 1, dtype=np.float64)[None, :]
    pn = p / nr
    f = {}
    f["ShortRunEmphasis"] = (p / j ** 2).sum() / nr
    f["LongRunEmphasis"] = (p * j ** 2).sum() / nr
    f["GrayLevelNonUniformity"] = (p.sum(axis=1) ** 2).sum() / nr
    f["GrayLevelNonUniformityNormalized"] = (p.sum(axis=1) ** 2).sum() / nr ** 2
    f["RunLengthNonUniformity"] = (p.sum(axis=0) ** 2).sum() / nr
    f["RunLengthNonUniformityNormalized"] = (p.sum(axis=0) ** 2).sum() / nr ** 2
    f["RunPercentage"] = nr / n_pixels
    mu_i = (pn * i).sum()
    mu_j = (pn * j).sum()
    f["GrayLevelVariance"] = (pn * (i - mu_i) ** 2).sum()
    f["RunVariance"] = (pn * (j - mu_j) ** 2).sum()
    f["RunEntropy"] = -(pn * _log2(pn)).sum()
    f["LowGrayLevelRunEmphasis"] = (p / i ** 2).sum() / nr
    f["HighGrayLevelRunEmphasis"] = (p * i ** 2).sum() / nr
    f["ShortRunLowGrayLevelEmphasis"] = (p / (i ** 2 * j ** 2)).sum() / nr
    f["ShortRunHighGrayLevelEmphasis"] = (p * i ** 2 / j ** 2).sum() / nr
    f["LongRunLowGrayLevelEmphasis"] = (p * j ** 2 / i ** 2).sum() / nr
    f["LongRunHighGrayLevelEmphasis"] = (p * i ** 2 * j ** 2).sum() / nr
    return f


def glrlm_features(mats: list[TextureMatrix], n_pixels: int) -> dict:
    per_angle = [_glrlm_features_single(m.data, n_pixels) for m in mats
                 if m.data.sum() > 0]
    if not per_angle:
        raise ValidationError("degenerate ROI for GLRLM")
    return {k: float(np.mean([f[k] for f in per_angle]))
            for k in GLRLM_FEATURE_NAMES}


def glszm_features(mat: TextureMatrix, n_pixels: int) -> dict:
    p = mat.data.astype(np.float64)
    nz = p.sum()
    ng, max_size = p.shape
    i = np.arange(1, ng + 1, dtype=np.float64)[:, None]
    j = np.arange(1, max_size + 1, dtype=np.float64)[None, :]
    pn = p / nz
    f = {}
    f["SmallAreaEmphasis"] = (p / j ** 2).sum() / nz
    f["LargeAreaEmphasis"] = (p * j ** 2).sum() / nz
    f["GrayLevelNonUniformity"] = (p.sum(axis=1) ** 2).sum() / nz
    f["GrayLevelNonUniformityNormalized"] = (p.sum(axis=1) ** 2).sum() / nz ** 2
    f["SizeZoneNonUniformity"] = (p.sum(axis=0) ** 2).sum() / nz
    f["SizeZoneNonUniformityNormalized"] = (p.sum(axis=0) ** 2).sum() / nz ** 2
    f["ZonePercentage"] = nz / n_pixels
    mu_i = (pn * i).sum()
    mu_j = (pn * j).sum()
    f["GrayLevelVariance"] = (pn * (i - mu_i) ** 2).sum()
    f["ZoneVariance"] = (pn * (j - mu_j) ** 2).sum()
    f["ZoneEntropy"] = -(pn * _log2(pn)).sum()
    f["LowGrayLevelZoneEmphasis"] = (p / i ** 2).sum() / nz
    f["HighGrayLevelZoneEmphasis"] = (p * i ** 2).sum() / nz
    f["SmallAreaLowGrayLevelEmphasis"] = (p / (i ** 2 * j ** 2)).sum() / nz
    f["SmallAreaHighGrayLevelEmphasis"] = (p * i ** 2 / j ** 2).sum() / nz
    f["LargeAreaLowGrayLevelEmphasis"] = (p * j ** 2 / i ** 2).sum() / nz
    f["LargeAreaHighGrayLevelEmphasis"] = (p * i ** 2 * j ** 2).sum() / nz
    return {k: float(f[k]) for k in GLSZM_FEATURE_NAMES}


def gldm_features(mat: TextureMatrix) -> dict:
    p = mat.data.astype(np.float64)
    nz = p.sum()
    ng, max_dep = p.shape
    i = np.arange(1, ng + 1, dtype=np.float64)[:, None]
    # dependence size counts the center pixel itself, so columns start at 1
    j = np.arange(1, max_dep + 1, dtype=np.float64)[None, :]
    pn = p / nz
    f = {}
    f["SmallDependenceEmphasis"] = (p / j ** 2).sum() / nz
    f["LargeDependenceEmphasis"] = (p * j ** 2).sum() / nz
    f["GrayLevelNonUniformity"] = (p.sum(axis=1) ** 2).sum() / nz
    f["DependenceNonUniformity"] = (p.sum(axis=0) ** 2).sum() / nz
    f["DependenceNonUniformityNormalized"] = (p.sum(axis=0) ** 2).sum() / nz ** 2
    mu_i = (pn * i).sum()
    mu_j = (pn * j).sum()
    f["GrayLevelVariance"] = (pn * (i - mu_i) ** 2).sum()
    f["DependenceVariance"] = (pn * (j - mu_j) ** 2).sum()
    f["DependenceEntropy"] = -(pn * _log2(pn)).sum()
    f["LowGrayLevelEmphasis"] = (p / i ** 2).sum() / nz
    f["HighGrayLevelEmphasis"] = (p * i ** 2).sum() / nz
    f["SmallDependenceLowGrayLevelEmphasis"] = (p / (i ** 2 * j ** 2)).sum() / nz
    f["SmallDependenceHighGrayLevelEmphasis"] = (p * i ** 2 / j ** 2).sum() / nz
    f["LargeDependenceLowGrayLevelEmphasis"] = (p * j ** 2 / i ** 2).sum() / nz
    f["LargeDependenceHighGrayLevelEmphasis"] = (p * i ** 2 * j ** 2).sum() / nz
    return {k: float(f[k]) for k in GLDM_FEATURE_NAMES}
