"""Synthetic shapes dataset: one colored shape per image on a noise background.

Shapes are placed uniformly over the whole frame (borders included), so a
strong center crop frequently removes them; that makes the set a genuine
target for zoom attacks instead of a trivially invariant one.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

CLASSES = ("circle", "cross", "square", "triangle")


def _shape_mask(cls: str, size: int, cx: int, cy: int, r: int) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size]
    dx, dy = xx - cx, yy - cy
    if cls == "square":
        return (np.abs(dx) <= r) & (np.abs(dy) <= r)
    if cls == "circle":
        return dx * dx + dy * dy <= r * r
    if cls == "triangle":
        # upward triangle: width grows linearly from apex to base
        inside_rows = (dy >= -r) & (dy <= r)
        return inside_rows & (np.abs(dx) <= (dy + r) / 2)
    if cls == "cross":
        bar = max(1, r // 3)
        return ((np.abs(dx) <= bar) & (np.abs(dy) <= r)) | ((np.abs(dy) <= bar) & (np.abs(dx) <= r))
    raise ValueError(f"unknown shape class {cls!r}")


def render_shape(rng: np.random.Generator, cls: str, size: int = 64):
    """One sample: (HxWx3 uint8 image, inclusive bounding box (x0, y0, x1, y1))."""
    img = rng.integers(0, 128, (size, size, 3), dtype=np.uint8)
    r = int(rng.integers(6, 11))
    cx = int(rng.integers(r, size - r))
    cy = int(rng.integers(r, size - r))
    color = rng.integers(160, 256, 3, dtype=np.uint8)
    mask = _shape_mask(cls, size, cx, cy, r)
    img[mask] = color
    ys, xs = np.nonzero(mask)
    bbox = (int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max()))
    return img, bbox


def generate_dataset(out_dir: str | Path, per_class: int, seed: int, size: int = 64):
    """Write `per_class` PNGs per shape class; returns (relpath, label, bbox) records."""
    out_dir = Path(out_dir)
    rng = np.random.default_rng(seed)
    records = []
    for cls in CLASSES:
        (out_dir / cls).mkdir(parents=True, exist_ok=True)
        for i in range(per_class):
            img, bbox = render_shape(rng, cls, size)
            rel = f"{cls}/{cls}_{i:03d}.png"
            Image.fromarray(img, mode="RGB").save(out_dir / rel, format="PNG")
            records.append({"path": rel, "label": cls, "bbox": list(bbox)})
    return records
