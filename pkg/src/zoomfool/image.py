"""Raster images as channels-last uint8 numpy arrays, plus deterministic resampling.

An image is an (H, W, C) uint8 array with C in {1, 3} and H, W >= 8. Pixel
values live in the 8-bit integer domain at rest; only oracle preprocessing
maps them to [0, 1] reals.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np
from PIL import Image

MIN_SIDE = 8


def validate_image(img: np.ndarray) -> np.ndarray:
    """Check the image contract and return the array unchanged."""
    if not isinstance(img, np.ndarray):
        raise ValueError(f"image must be a numpy array, got {type(img).__name__}")
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise ValueError(f"image must be (H, W, C) with C in {{1, 3}}, got shape {img.shape}")
    if img.dtype != np.uint8:
        raise ValueError(f"image dtype must be uint8, got {img.dtype}")
    h, w = img.shape[:2]
    if h < MIN_SIDE or w < MIN_SIDE:
        raise ValueError(f"image sides must be >= {MIN_SIDE}, got {h}x{w}")
    return img


def read_png(path: str | Path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB") if im.mode in ("RGBA", "P", "CMYK", "YCbCr") else im.convert("L")
        arr = np.asarray(im, dtype=np.uint8)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return validate_image(arr)


def write_png(img: np.ndarray, path: str | Path) -> None:
    validate_image(img)
    mode = "L" if img.shape[2] == 1 else "RGB"
    data = img[:, :, 0] if mode == "L" else img
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(data, mode=mode).save(path, format="PNG")


def image_key(img: np.ndarray) -> str:
    """Stable content hash used to key mock-oracle tables."""
    h, w, c = img.shape
    digest = hashlib.sha256()
    digest.update(f"{h}x{w}x{c}:".encode())
    digest.update(np.ascontiguousarray(img).tobytes())
    return digest.hexdigest()


def _sample_grid(src: int, dst: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Half-pixel source coordinates for a 1-D resize: floor index, +1 index, fraction."""
    scale = src / dst
    coords = (np.arange(dst, dtype=np.float64) + 0.5) * scale - 0.5
    coords = np.clip(coords, 0.0, src - 1.0)
    lo = np.floor(coords).astype(np.int64)
    hi = np.minimum(lo + 1, src - 1)
    return lo, hi, coords - lo


def resize_bilinear_float(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of an (H, W, C) or (H, W) float array, no rounding."""
    squeeze = img.ndim == 2
    if squeeze:
        img = img[:, :, None]
    src_h, src_w = img.shape[:2]
    y0, y1, fy = _sample_grid(src_h, out_h)
    x0, x1, fx = _sample_grid(src_w, out_w)
    plane = img.astype(np.float64, copy=False)
    top = plane[y0][:, x0] * (1 - fx)[None, :, None] + plane[y0][:, x1] * fx[None, :, None]
    bot = plane[y1][:, x0] * (1 - fx)[None, :, None] + plane[y1][:, x1] * fx[None, :, None]
    out = top * (1 - fy)[:, None, None] + bot * fy[:, None, None]
    return out[:, :, 0] if squeeze else out


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of a uint8 image, rounding half away from zero.

    Accepts any positive-sized (H, W, C) uint8 array (crop windows may be
    smaller than a full image). Same-size resize is bit-exact identity: the
    half-pixel mapping lands on integer source coordinates, so every output
    pixel copies its source.
    """
    if img.ndim != 3 or img.dtype != np.uint8 or 0 in img.shape:
        raise ValueError(f"need a non-empty (H, W, C) uint8 array, got {img.dtype} {img.shape}")
    out = resize_bilinear_float(img.astype(np.float64), out_h, out_w)
    # values are nonnegative, so half-away-from-zero == floor(v + 0.5)
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)
