"""Frozen-backbone embedding export.

Loads a ConvNeXt-class backbone, runs each manifest image through it in
inference mode, applies ReLU followed by a fixed seeded linear projection to
512 dims, and writes the rows to the pipeline's embeddings.csv format
(`id,e0..e511`). The backbone is never trained here; it acts as a fixed
feature extractor.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image

EMBED_DIM = 512
TARGET_SIZE = 256

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

MANIFEST_HEADER = ["id", "image", "mask", "pixel_size_mm", "hc_mm"]

# Mixed into the projection seed so the projection stream is independent of
# the augmentation stream even for equal user seeds.
_PROJECTION_SALT = 0x5EED_51D

_BACKBONES = {
    "convnext_tiny": 768,
    "convnext_small": 768,
    "convnext_base": 1024,
}


class ExportError(ValueError):
    """Raised for invalid configuration or malformed inputs."""


@dataclass
class ExportConfig:
    manifest: str
    out: str
    model: str = "convnext_tiny"
    weights: str = "pretrained"  # "pretrained" | "random"
    augment: int = 0
    rotation_deg: float = 15.0
    hflip_prob: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.model not in _BACKBONES:
            raise ExportError(
                f"unknown model {self.model!r}; choose from "
                f"{sorted(_BACKBONES)}")
        if self.weights not in ("pretrained", "random"):
            raise ExportError(f"unknown weights mode {self.weights!r}")
        if self.augment < 0:
            raise ExportError("augment count must be >= 0")
        if not (0 <= self.hflip_prob <= 1) or self.rotation_deg < 0:
            raise ExportError("invalid augmentation parameters")


def _read_manifest(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"manifest not found: {path}")
    base = path.parent
    rows = []
    seen = set()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != MANIFEST_HEADER:
            raise ExportError(
                f"bad manifest header {header}, expected {MANIFEST_HEADER}")
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != 5:
                raise ExportError(f"{path}:{lineno}: expected 5 columns")
            rid = rec[0].strip()
            if rid in seen:
                raise ExportError(f"{path}:{lineno}: duplicate id {rid}")
            seen.add(rid)
            rows.append((rid, str(base / rec[1].strip())))
    return rows


def _build_backbone(model: str, weights: str, seed: int):
    import torchvision.models as tvm

    ctor = getattr(tvm, model)
    if weights == "pretrained":
        try:
            net = ctor(weights="IMAGENET1K_V1")
        except Exception as exc:
            raise ExportError(
                f"pretrained weights for {model} unavailable ({exc}); "
                "pass --weights random for a seeded untrained backbone") \
                from exc
    else:
        torch.manual_seed(seed)
        net = ctor(weights=None)
    net.eval()
    for p in net.parameters():
        p.requires_grad_(False)
    return net


def _pooled_features(net, batch: torch.Tensor) -> torch.Tensor:
    x = net.features(batch)
    x = net.avgpool(x)
    return torch.flatten(x, 1)


def _projection(in_dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed + _PROJECTION_SALT)
    return rng.normal(0.0, 1.0 / np.sqrt(in_dim),
                      (in_dim, EMBED_DIM)).astype(np.float32)


def _load_rgb(path) -> Image.Image:
    with Image.open(path) as im:
        return im.convert("RGB")


def _to_tensor(im: Image.Image) -> torch.Tensor:
    im = im.resize((TARGET_SIZE, TARGET_SIZE), Image.BILINEAR)
    arr = np.asarray(im, dtype=np.float32) / 255.0
    arr = ((arr - IMAGENET_MEAN) / IMAGENET_STD).astype(np.float32)
    return torch.from_numpy(arr.transpose(2, 0, 1).copy()).unsqueeze(0)


def _augmented(im: Image.Image, rng: np.random.Generator,
               cfg: ExportConfig) -> Image.Image:
    angle = float(rng.uniform(-cfg.rotation_deg, cfg.rotation_deg))
    out = im.rotate(angle, resample=Image.BILINEAR)
    if rng.random() < cfg.hflip_prob:
        out = out.transpose(Image.FLIP_LEFT_RIGHT)
    return out


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def export_embeddings(cfg: ExportConfig) -> int:
    """Write one row per image (plus one per augmentation, keyed `id#k`).

    Deterministic for a fixed seed: the augmentation stream is drawn from a
    per-image generator seeded by (cfg.seed, manifest position).
    """
    rows = _read_manifest(cfg.manifest)
    net = _build_backbone(cfg.model, cfg.weights, cfg.seed)
    proj = _projection(_BACKBONES[cfg.model], cfg.seed)

    out_path = Path(cfg.out)
    tmp = out_path.with_name(out_path.name + ".tmp")
    n_written = 0
    try:
        with open(tmp, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["id"] + [f"e{i}" for i in range(EMBED_DIM)])
            with torch.inference_mode():
                for pos, (rid, image_path) in enumerate(rows):
                    im = _load_rgb(image_path)
                    rng = np.random.default_rng([cfg.seed, pos])
                    variants = [(rid, im)]
                    variants += [(f"{rid}#{k}", _augmented(im, rng, cfg))
                                 for k in range(1, cfg.augment + 1)]
                    for key, variant in variants:
                        feats = _pooled_features(net, _to_tensor(variant))
                        pooled = torch.relu(feats)[0].numpy()
                        emb = pooled @ proj
                        if not np.all(np.isfinite(emb)):
                            raise ExportError(
                                f"{key}: non-finite embedding values")
                        writer.writerow([key, *(_fmt(v) for v in emb)])
                        n_written += 1
        os.replace(tmp, out_path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise
    return n_written
