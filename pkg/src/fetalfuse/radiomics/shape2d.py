"""2D shape descriptors from a sub-pixel marching-squares contour."""
from __future__ import annotations

import warnings

import numpy as np

from ..types import ValidationError

SHAPE2D_FEATURE_NAMES = (
    "MeshSurface", "PixelSurface", "Perimeter", "PerimeterSurfaceRatio",
    "Sphericity", "MaximumDiameter", "MajorAxisLength", "MinorAxisLength",
    "Elongation",
)

EPS = 1e-12


def marching_squares(mask: np.ndarray):
    """Directed 0.5-level contour segments of a binary mask.

    Segments run between cell-edge midpoints with foreground on the left, so
    shoelace contributions of outer boundaries and holes carry opposite signs.
    Saddle cells are resolved by keeping the diagonal foreground corners
    disconnected (4-connected foreground convention).

    Returns an (n, 2, 2) array of segments in (x=col, y=row) coordinates.
    """
    m = np.pad(mask.astype(np.uint8), 1)
    h, w = m.shape
    segs = []
    for r in range(h - 1):
        for c in range(w - 1):
            tl, tr = m[r, c], m[r, c + 1]
            bl, br = m[r + 1, c], m[r + 1, c + 1]
            corners = {"tl": (c, r), "tr": (c + 1, r),
                       "bl": (c, r + 1), "br": (c + 1, r + 1)}
            vals = {"tl": tl, "tr": tr, "bl": bl, "br": br}
            s = tl + tr + bl + br
            if s in (0, 4):
                continue
            mid = {"T": (c + 0.5, r), "R": (c + 1, r + 0.5),
                   "B": (c + 0.5, r + 1), "L": (c, r + 0.5)}
            # which cell edges are crossed
            edges = []
            if tl != tr:
                edges.append("T")
            if tr != br:
                edges.append("R")
            if bl != br:
                edges.append("B")
            if tl != bl:
                edges.append("L")
            if len(edges) == 2:
                pairs = [(edges[0], edges[1])]
                anchors = [[k for k, v in vals.items() if v]]
            else:  # saddle: isolate the diagonal foreground corners
                if tl and br:
                    pairs = [("L", "T"), ("R", "B")]
                    anchors = [["tl"], ["br"]]
                else:
                    pairs = [("T", "R"), ("B", "L")]
                    anchors = [["tr"], ["bl"]]
            for (e1, e2), anc in zip(pairs, anchors):
                p, q = np.array(mid[e1]), np.array(mid[e2])
                ref = np.mean([corners[a] for a in anc], axis=0)
                v = q - p
                n_ = np.array([-v[1], v[0]])
                if np.dot(n_, ref - (p + q) / 2) < 0:
                    p, q = q, p
                segs.append((p, q))
    return np.array(segs, dtype=np.float64)


def _largest_component(mask: np.ndarray) -> np.ndarray:
    h, w = mask.shape
    seen = np.zeros_like(mask, dtype=bool)
    best = None
    neigh = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
    n_comp = 0
    for r0, c0 in np.argwhere(mask > 0):
        if seen[r0, c0]:
            continue
        n_comp += 1
        comp = []
        stack = [(int(r0), int(c0))]
        seen[r0, c0] = True
        while stack:
            r, c = stack.pop()
            comp.append((r, c))
            for dr, dc in neigh:
                rr, cc = r + dr, c + dc
                if 0 <= rr < h and 0 <= cc < w and not seen[rr, cc] \
                        and mask[rr, cc] > 0:
                    seen[rr, cc] = True
                    stack.append((rr, cc))
        if best is None or len(comp) > len(best):
            best = comp
    if n_comp > 1:
        warnings.warn(f"mask has {n_comp} components; using largest for shape")
        out = np.zeros_like(mask)
        rr, cc = zip(*best)
        out[list(rr), list(cc)] = 1
        return out
    return mask


def shape2d_features(mask: np.ndarray, pixel_size_mm: float) -> dict:
    """All lengths in mm, areas in mm^2."""
    if mask.sum() == 0:
        raise ValidationError("empty mask")
    mask = _largest_component(mask)
    s = pixel_size_mm
    segs = marching_squares(mask)
    # shoelace over directed segments; loops are consistently oriented
    x1, y1 = segs[:, 0, 0], segs[:, 0, 1]
    x2, y2 = segs[:, 1, 0], segs[:, 1, 1]
    mesh = abs(float((x1 * y2 - x2 * y1).sum()) / 2.0) * s * s
    perim = float(np.hypot(x2 - x1, y2 - y1).sum()) * s

    verts = np.unique(segs.reshape(-1, 2), axis=0) * s
    diffs = verts[:, None, :] - verts[None, :, :]
    max_diam = float(np.sqrt((diffs ** 2).sum(-1)).max())

    coords = np.argwhere(mask > 0).astype(np.float64) * s
    if len(coords) > 1:
        lam = np.sort(np.linalg.eigvalsh(np.cov(coords.T)))
        lam = np.clip(lam, 0.0, None)
    else:
        lam = np.array([0.0, 0.0])
    major = 4.0 * float(np.sqrt(lam[1]))
    minor = 4.0 * float(np.sqrt(lam[0]))
    elong = float(np.sqrt(lam[0] / lam[1])) if lam[1] > EPS else 1.0

    f = {}
    f["MeshSurface"] = mesh
    f["PixelSurface"] = float(mask.sum()) * s * s
    f["Perimeter"] = perim
    f["PerimeterSurfaceRatio"] = perim / max(mesh, EPS)
    f["Sphericity"] = 2.0 * np.sqrt(np.pi * mesh) / max(perim, EPS)
    f["MaximumDiameter"] = max_diam
    f["MajorAxisLength"] = major
    f["MinorAxisLength"] = minor
    f["Elongation"] = elong
    return f
