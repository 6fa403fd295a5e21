"""File interchange: manifests, PNG image pairs, feature/embedding CSVs and
the binary model checkpoint."""
from __future__ import annotations

import csv
import os
import struct
import warnings
from pathlib import Path

import numpy as np
from PIL import Image

from .types import (
    DeepEmbedding,
    EMBED_DIM,
    Manifest,
    ManifestRow,
    MaskedImage,
    RadiomicVector,
    ValidationError,
)

TARGET_SIZE = 256  # working resolution for image and mask

MANIFEST_HEADER = ["id", "image", "mask", "pixel_size_mm", "hc_mm"]


def load_manifest(path) -> Manifest:
    """Parse a manifest CSV; relative paths resolve against the CSV's directory."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"manifest not found: {path}")
    base = path.parent
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != MANIFEST_HEADER:
            raise ValidationError(
                f"bad manifest header {header}, expected {MANIFEST_HEADER}")
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != 5:
                raise ValidationError(f"{path}:{lineno}: expected 5 columns")
            rid, image, mask, psz, hc = (c.strip() for c in rec)
            rows.append(ManifestRow(
                id=rid,
                image_path=str(base / image),
                mask_path=str(base / mask),
                pixel_size_mm=float(psz) if psz else None,
                hc_mm=float(hc) if hc else None,
            ))
    return Manifest(rows=tuple(rows))


def _read_gray_png(path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("L"), dtype=np.uint8)
    except FileNotFoundError:
        raise
    except OSError as exc:
        raise ValidationError(f"unreadable image {path}: {exc}") from exc


def load_masked_image(image_path, mask_path, pixel_size_mm: float,
                      id: str | None = None) -> MaskedImage:
    """Load an image/mask PNG pair and resize both to the working resolution.

    Image is resampled bilinearly; the mask nearest-neighbor and re-binarized.
    pixel_size_mm is rescaled by original_width / TARGET_SIZE so physical
    measurements stay consistent.
    """
    pixels = _read_gray_png(image_path)
    mask = _read_gray_png(mask_path)
    if pixels.shape != mask.shape:
        raise ValidationError(
            f"image {pixels.shape} and mask {mask.shape} dimensions differ "
            f"({image_path} / {mask_path})")
    h, w = pixels.shape
    if h != w:
        warnings.warn(
            f"{image_path}: non-square input {w}x{h}; pixel size rescaled by "
            "width only, calibration is approximate")
    if (h, w) != (TARGET_SIZE, TARGET_SIZE):
        pixels = np.asarray(
            Image.fromarray(pixels).resize((TARGET_SIZE, TARGET_SIZE),
                                           Image.BILINEAR), dtype=np.uint8)
        mask = np.asarray(
            Image.fromarray(mask).resize((TARGET_SIZE, TARGET_SIZE),
                                         Image.NEAREST), dtype=np.uint8)
        pixel_size_mm = pixel_size_mm * (w / TARGET_SIZE)
    mask = (mask > 0).astype(np.uint8)
    if mask.sum() == 0:
        raise ValidationError(f"empty mask after resize: {mask_path}")
    return MaskedImage(id=id or str(image_path), pixels=pixels, mask=mask,
                       pixel_size_mm=float(pixel_size_mm))


# ---------------------------------------------------------------------------
# features.csv

def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def write_features_csv(vectors, path):
    """Write (id, RadiomicVector) pairs; all vectors must share one ordering."""
    vectors = list(vectors)
    names = None
    for _, vec in vectors:
        if names is None:
            names = vec.feature_names
        elif vec.feature_names != names:
            raise ValidationError("feature ordering mismatch across vectors")
        if not np.all(np.isfinite(vec.values)):
            raise ValidationError("refusing to write non-finite feature value")
    if names is None:
        from .radiomics import canonical_feature_names
        names = canonical_feature_names()
    with atomic_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", *names])
        for rid, vec in vectors:
            writer.writerow([rid, *(_fmt(v) for v in vec.values)])


def read_features_csv(path, standardized: bool = False):
    """Inverse of write_features_csv (up to serialized precision)."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "id":
            raise ValidationError(f"bad features header in {path}")
        names = tuple(header[1:])
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(names) + 1:
                raise ValidationError(f"{path}:{lineno}: wrong column count")
            vals = np.array([float(v) for v in rec[1:]], dtype=np.float64)
            out.append((rec[0], RadiomicVector(values=vals, feature_names=names,
                                               standardized=standardized)))
    return out


def read_embeddings_csv(path):
    """Read `id,e0..e511` rows into DeepEmbedding records."""
    expected = ["id"] + [f"e{i}" for i in range(EMBED_DIM)]
    out = []
    seen = set()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != expected:
            got = len(header) if header else 0
            raise ValidationError(
                f"bad embeddings header in {path}: {got} columns, "
                f"expected {len(expected)}")
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != EMBED_DIM + 1:
                raise ValidationError(f"{path}:{lineno}: wrong column count")
            rid = rec[0]
            if rid in seen:
                raise ValidationError(f"{path}:{lineno}: duplicate id {rid}")
            seen.add(rid)
            vals = np.array([float(v) for v in rec[1:]], dtype=np.float64)
            out.append(DeepEmbedding(id=rid, values=vals))
    return out


def write_embeddings_csv(embeddings, path):
    with atomic_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id"] + [f"e{i}" for i in range(EMBED_DIM)])
        for emb in embeddings:
            writer.writerow([emb.id, *(_fmt(v) for v in emb.values)])


# ---------------------------------------------------------------------------
# binary checkpoint (magic FUS1)

_MAGIC = b"FUS1"
_VERSION = 1


def save_checkpoint(tensors: dict, path):
    """Write named float tensors. Format: magic, u32 version, u32 count, then
    per tensor u16 name_len, name, u8 rank, u32 dims, f32 LE row-major data."""
    with atomic_write(path, binary=True) as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _VERSION, len(tensors)))
        for name, arr in tensors.items():
            arr = np.ascontiguousarray(arr, dtype=np.float32)
            nb = name.encode("utf-8")
            fh.write(struct.pack("<H", len(nb)))
            fh.write(nb)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def load_checkpoint(path) -> dict:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _MAGIC:
        raise ValidationError(f"{path}: bad magic {data[:4]!r}")
    off = 4
    try:
        version, count = struct.unpack_from("<II", data, off)
        off += 8
        if version != _VERSION:
            raise ValidationError(f"{path}: unknown checkpoint version {version}")
        tensors = {}
        for _ in range(count):
            (nlen,) = struct.unpack_from("<H", data, off)
            off += 2
            name = data[off:off + nlen].decode("utf-8")
            off += nlen
            (rank,) = struct.unpack_from("<B", data, off)
            off += 1
            dims = struct.unpack_from(f"<{rank}I", data, off)
            off += 4 * rank
            n = int(np.prod(dims)) if rank else 1
            if off + 4 * n > len(data):
                raise ValidationError(f"{path}: truncated tensor {name}")
            arr = np.frombuffer(data, dtype="<f4", count=n, offset=off)
            off += 4 * n
            tensors[name] = arr.reshape(dims).astype(np.float32)
        return tensors
    except struct.error as exc:
        raise ValidationError(f"{path}: truncated checkpoint") from exc


# ---------------------------------------------------------------------------
# atomic writes

class atomic_write:
    """Write to path via a temp file + rename so failures leave no partial file."""

    def __init__(self, path, binary=False):
        self.path = Path(path)
        self.tmp = self.path.with_name(self.path.name + ".tmp")
        self.mode = "wb" if binary else "w"

    def __enter__(self):
        self.fh = open(self.tmp, self.mode, newline="" if self.mode == "w" else None)
        return self.fh

    def __exit__(self, exc_type, exc, tb):
        self.fh.close()
        if exc_type is None:
            os.replace(self.tmp, self.path)
        else:
            try:
                os.unlink(self.tmp)
            except OSError:
                pass
        return False
