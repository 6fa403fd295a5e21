"""Synthetic dataset generator: elliptical speckle-textured heads, so the full
pipeline is testable without real ultrasound data or the image backbone."""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .io import write_embeddings_csv
from .types import DeepEmbedding, EMBED_DIM


def make_ellipse_mask(size: int, a: float, b: float, angle_deg: float = 0.0,
                      center=None) -> np.ndarray:
    """Filled rasterized ellipse with semi-axes a, b (pixels)."""
    cy, cx = center or (size / 2.0, size / 2.0)
    yy, xx = np.mgrid[0:size, 0:size]
    t = np.deg2rad(angle_deg)
    u = (xx - cx) * np.cos(t) + (yy - cy) * np.sin(t)
    v = -(xx - cx) * np.sin(t) + (yy - cy) * np.cos(t)
    return ((u / a) ** 2 + (v / b) ** 2 <= 1.0).astype(np.uint8)


def make_speckle_image(mask: np.ndarray, rng) -> np.ndarray:
    """Bright speckled interior on a dark noisy background."""
    size = mask.shape[0]
    noise = rng.normal(0, 12, (size, size))
    img = np.where(mask > 0, 150 + noise + 30 * rng.random((size, size)),
                   30 + noise)
    return np.clip(img, 0, 255).astype(np.uint8)


def embedding_from_image(img: np.ndarray, mask: np.ndarray,
                         projection: np.ndarray) -> np.ndarray:
    """Fixed random projection of simple image statistics to EMBED_DIM."""
    fg = img[mask > 0].astype(np.float64)
    hist, _ = np.histogram(img, bins=32, range=(0, 256), density=True)
    stats = np.concatenate([
        hist,
        [fg.mean() / 255.0, fg.std() / 255.0, mask.mean(),
         img.mean() / 255.0, img.std() / 255.0],
    ])
    return np.tanh(projection @ stats)


def make_projection(seed: int, n_stats: int = 37) -> np.ndarray:
    rng = np.random.default_rng(seed + 982_451_653)  # decoupled from sampling
    return rng.normal(0, 1.0, (EMBED_DIM, n_stats))


def generate_dataset(out_dir, n_images: int = 30, size: int = 256,
                     pixel_size_mm: float = 0.2, seed: int = 0) -> Path:
    """Write images/, masks/, manifest.csv and embeddings.csv; returns the
    manifest path."""
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    (out_dir / "masks").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    projection = make_projection(seed)
    rows = []
    embeddings = []
    for i in range(n_images):
        rid = f"synth{i:03d}"
        a = rng.uniform(0.15, 0.42) * size
        b = a * rng.uniform(0.7, 1.0)
        angle = rng.uniform(0, 180)
        mask = make_ellipse_mask(size, a, b, angle)
        img = make_speckle_image(mask, rng)
        Image.fromarray(img).save(out_dir / "images" / f"{rid}.png")
        Image.fromarray(mask * 255).save(out_dir / "masks" / f"{rid}.png")
        rows.append((rid, f"images/{rid}.png", f"masks/{rid}.png",
                     pixel_size_mm, ""))
        embeddings.append(DeepEmbedding(
            id=rid, values=embedding_from_image(img, mask, projection)))
    manifest_path = out_dir / "manifest.csv"
    with open(manifest_path, "w", newline="") as fh:
        fh.write("id,image,mask,pixel_size_mm,hc_mm\n")
        for r in rows:
            fh.write(",".join(str(c) for c in r) + "\n")
    write_embeddings_csv(embeddings, out_dir / "embeddings.csv")
    return manifest_path
