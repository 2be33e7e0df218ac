"""Digital zoom-in (center crop + bilinear upscale) and the crop<->focal-factor conversion.

A digital zoom level is the total number of border pixels N removed per
dimension. A physical zoom level is the camera focal multiple T, quantized to
one decimal place. The two are linked by T = N / rho, where rho is a per-camera
calibration constant (crop pixels per 1.0x of zoom); the division keeps one
decimal place with the second decimal rounded half away from zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import resize_bilinear, validate_image

T_MIN = 0.5
T_MAX = 5.4


@dataclass(frozen=True)
class ConversionParams:
    """Calibration constant rho for T = N / rho."""

    rho: int

    def __post_init__(self):
        if not isinstance(self.rho, int) or self.rho <= 0:
            raise ValueError(f"rho must be a positive integer, got {self.rho!r}")


@dataclass(frozen=True, order=True)
class ZoomLevel:
    """Either a digital crop amount (kind 'n') or a physical focal factor (kind 't')."""

    kind: str
    value: float

    @classmethod
    def digital(cls, n: int) -> "ZoomLevel":
        if n < 0:
            raise ValueError(f"crop amount must be >= 0, got {n}")
        return cls("n", int(n))

    @classmethod
    def physical(cls, t: float) -> "ZoomLevel":
        tenths = _as_tenths(t)
        if not (T_MIN * 10 <= tenths <= T_MAX * 10):
            raise ValueError(f"focal factor must be in [{T_MIN}, {T_MAX}], got {t}")
        return cls("t", tenths / 10)

    @property
    def n(self) -> int:
        if self.kind != "n":
            raise ValueError("not a digital crop level")
        return int(self.value)

    @property
    def t(self) -> float:
        if self.kind != "t":
            raise ValueError("not a physical focal factor")
        return self.value

    def to_json(self) -> dict:
        return {"kind": self.kind, self.kind: self.value}

    @classmethod
    def from_json(cls, obj: dict) -> "ZoomLevel":
        kind = obj["kind"]
        if kind == "n":
            return cls.digital(int(obj["n"]))
        return cls.physical(float(obj["t"]))


def _as_tenths(t: float) -> int:
    """Exact tenths of a one-decimal-quantized factor; rejects anything finer."""
    if t < 0:
        raise ValueError(f"focal factor must be >= 0, got {t}")
    tenths = round(t * 10)
    if abs(t * 10 - tenths) > 1e-6:
        raise ValueError(f"focal factor must carry exactly one decimal place, got {t}")
    return int(tenths)


def crop_window(height: int, width: int, n: int) -> tuple[int, int, int, int]:
    """Centered crop bounds (top, left, bottom, right), end-exclusive.

    n is the total pixels removed per dimension: floor(n/2) from the
    left/top edge and ceil(n/2) from the right/bottom edge.
    """
    if n < 0:
        raise ValueError(f"crop amount must be >= 0, got {n}")
    if n >= min(height, width):
        raise ValueError(f"crop amount {n} leaves no pixels in a {height}x{width} image")
    lead = n // 2
    trail = n - lead
    return lead, lead, height - trail, width - trail


def zoom_in(img: np.ndarray, n: int) -> np.ndarray:
    """Digitally magnify: crop the central window of size (H-n)x(W-n), then
    upscale back to HxW with bilinear interpolation.

    Deterministic; n=0 returns a copy that is bit-identical to the input.
    """
    validate_image(img)
    h, w = img.shape[:2]
    top, left, bottom, right = crop_window(h, w, int(n))
    if n == 0:
        return img.copy()
    return resize_bilinear(img[top:bottom, left:right], h, w)


def conv_n_to_t(n: int, params: ConversionParams) -> float:
    """T = N / rho kept to one decimal, second decimal rounded half away from zero.

    Computed in exact integer arithmetic; monotone nondecreasing in n.
    """
    if n < 0:
        raise ValueError(f"crop amount must be >= 0, got {n}")
    rho = params.rho
    tenths = (20 * int(n) + rho) // (2 * rho)
    return tenths / 10


def conv_t_to_n(t: float, params: ConversionParams) -> int:
    """Inverse mapping N = round(T * rho), half away from zero.

    Round-trips through conv_n_to_t for every one-decimal t when rho >= 10.
    """
    tenths = _as_tenths(t)
    return (tenths * params.rho + 5) // 10
