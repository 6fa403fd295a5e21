"""Texture matrix construction: GLCM, GLRLM, GLSZM, GLDM.

All matrices are accumulated as integer counts; normalization happens in the
feature computations. Angle conventions (row offset, col offset):
0 deg -> (0,1), 45 deg -> (-1,1), 90 deg -> (-1,0), 135 deg -> (-1,-1).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .discretize import DiscretizedRoi

ANGLES_2D = ((0, 1), (-1, 1), (-1, 0), (-1, -1))


class MatrixKind(Enum):
    GLCM = "glcm"
    GLRLM = "glrlm"
    GLSZM = "glszm"
    GLDM = "gldm"


@dataclass(frozen=True)
class TextureMatrix:
    kind: MatrixKind
    data: np.ndarray  # integer counts
    meta: dict = field(default_factory=dict)


def glcm(d: DiscretizedRoi, distance: int = 1) -> list[TextureMatrix]:
    """Symmetric co-occurrence counts per angle; zero-pair angles are dropped."""
    ng = d.n_levels
    lv = d.levels
    h, w = lv.shape
    out = []
    for dr, dc in ANGLES_2D:
        p = np.zeros((ng, ng), dtype=np.int64)
        rr, cc = dr * distance, dc * distance
        r0, r1 = max(0, -rr), min(h, h - rr)
        c0, c1 = max(0, -cc), min(w, w - cc)
        a = lv[r0:r1, c0:c1]
        b = lv[r0 + rr:r1 + rr, c0 + cc:c1 + cc]
        ok = (a > 0) & (b > 0)
        if ok.any():
            np.add.at(p, (a[ok] - 1, b[ok] - 1), 1)
            p = p + p.T  # symmetrize
            out.append(TextureMatrix(MatrixKind.GLCM, p,
                                     {"angle": (dr, dc), "distance": distance}))
    return out


def glrlm(d: DiscretizedRoi) -> list[TextureMatrix]:
    """Run-length counts per angle: maximal same-level in-mask runs."""
    ng = d.n_levels
    lv = d.levels
    h, w = lv.shape
    max_run = max(h, w)
    out = []
    for dr, dc in ANGLES_2D:
        p = np.zeros((ng, max_run), dtype=np.int64)
        starts = _line_starts(h, w, dr, dc)
        for r, c in starts:
            run_level, run_len = 0, 0
            while 0 <= r < h and 0 <= c < w:
                v = lv[r, c]
                if v == run_level and v > 0:
                    run_len += 1
                else:
                    if run_level > 0:
                        p[run_level - 1, run_len - 1] += 1
                    run_level, run_len = v, (1 if v > 0 else 0)
                r += dr
                c += dc
            if run_level > 0:
                p[run_level - 1, run_len - 1] += 1
        # trim trailing all-zero run-length columns
        used = np.nonzero(p.any(axis=0))[0]
        p = p[:, :used[-1] + 1] if len(used) else p[:, :1]
        out.append(TextureMatrix(MatrixKind.GLRLM, p, {"angle": (dr, dc)}))
    return out


def _line_starts(h, w, dr, dc):
    """Starting pixels of all scan lines for a direction."""
    if (dr, dc) == (0, 1):
        return [(r, 0) for r in range(h)]
    if (dr, dc) == (-1, 0):
        return [(h - 1, c) for c in range(w)]
    if (dr, dc) == (-1, 1):  # up-right: start on bottom row and left column
        return [(h - 1, c) for c in range(w)] + [(r, 0) for r in range(h - 1)]
    if (dr, dc) == (-1, -1):  # up-left: bottom row and right column
        return [(h - 1, c) for c in range(w)] + [(r, w - 1) for r in range(h - 1)]
    raise ValueError(f"unsupported direction {(dr, dc)}")


def glszm(d: DiscretizedRoi) -> TextureMatrix:
    """Zone-size counts: 8-connected same-level regions."""
    ng = d.n_levels
    lv = d.levels
    h, w = lv.shape
    seen = np.zeros_like(lv, dtype=bool)
    zones = []  # (level, size)
    neigh = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
    for r0, c0 in d.roi_coords:
        if seen[r0, c0]:
            continue
        level = lv[r0, c0]
        stack = [(int(r0), int(c0))]
        seen[r0, c0] = True
        size = 0
        while stack:
            r, c = stack.pop()
            size += 1
            for dr, dc in neigh:
                rr, cc = r + dr, c + dc
                if 0 <= rr < h and 0 <= cc < w and not seen[rr, cc] \
                        and lv[rr, cc] == level:
                    seen[rr, cc] = True
                    stack.append((rr, cc))
        zones.append((int(level), size))
    max_size = max(s for _, s in zones)
    p = np.zeros((ng, max_size), dtype=np.int64)
    for level, size in zones:
        p[level - 1, size - 1] += 1
    return TextureMatrix(MatrixKind.GLSZM, p, {})


def gldm(d: DiscretizedRoi, alpha: int = 0, distance: int = 1) -> TextureMatrix:
    """Dependence counts: per pixel, neighbors within Chebyshev distance whose
    level differs by at most alpha. Column j holds pixels with j dependents."""
    ng = d.n_levels
    lv = d.levels
    h, w = lv.shape
    offsets = [(dr, dc)
               for dr in range(-distance, distance + 1)
               for dc in range(-distance, distance + 1)
               if (dr, dc) != (0, 0)]
    counts = []
    for r, c in d.roi_coords:
        level = lv[r, c]
        dep = 0
        for dr, dc in offsets:
            rr, cc = r + dr, c + dc
            if 0 <= rr < h and 0 <= cc < w and lv[rr, cc] > 0 \
                    and abs(int(lv[rr, cc]) - int(level)) <= alpha:
                dep += 1
        counts.append((int(level), dep))
    max_dep = max(dep for _, dep in counts)
    p = np.zeros((ng, max_dep + 1), dtype=np.int64)
    for level, dep in counts:
        p[level - 1, dep] += 1
    return TextureMatrix(MatrixKind.GLDM, p, {"alpha": alpha, "distance": distance})
