"""Builder for zoomed-in augmentation datasets.

Takes a directory of label-named subdirectories, samples k images per
class, and writes every image at each configured crop level (plus the
clean copy as level 0), with a JSON manifest for downstream training.
Output is deterministic in (spec, seed), byte for byte.
"""

from __future__ import annotations

import json
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .image import validate_image, write_png
from .zoom import zoom_in

log = logging.getLogger(__name__)

DEFAULT_LEVELS = tuple(range(6, 61, 6))
IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}


@dataclass
class ZiSpec:
    source_dir: str
    out_dir: str
    n_levels: tuple[int, ...] = DEFAULT_LEVELS
    per_class_samples: int = 50
    seed: int = 0

    def validate(self) -> "ZiSpec":
        if not self.n_levels:
            raise ValueError("n_levels must be non-empty")
        if any(n <= 0 for n in self.n_levels):
            raise ValueError("crop levels must be positive")
        if list(self.n_levels) != sorted(set(self.n_levels)):
            raise ValueError("n_levels must be strictly increasing")
        if self.per_class_samples < 1:
            raise ValueError("per_class_samples must be >= 1")
        return self

    def to_json(self) -> dict:
        return {
            "source_dir": str(self.source_dir),
            "out_dir": str(self.out_dir),
            "n_levels": list(self.n_levels),
            "per_class_samples": self.per_class_samples,
        }


@dataclass
class ZiRecord:
    source: str  # relative to source_dir
    label: str
    n: int
    out: str  # relative to out_dir

    def to_json(self) -> dict:
        return {"source": self.source, "label": self.label, "n": self.n, "out": self.out}


@dataclass
class ZiManifest:
    spec: ZiSpec
    seed: int
    records: list[ZiRecord] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)
    short_classes: list[str] = field(default_factory=list)  # had < per_class_samples images

    @property
    def totals(self) -> dict:
        clean = sum(1 for r in self.records if r.n == 0)
        return {
            "clean": clean,
            "variants": len(self.records) - clean,
            "skipped": len(self.skipped),
        }

    def to_json(self) -> dict:
        return {
            "spec": self.spec.to_json(),
            "seed": self.seed,
            "records": [r.to_json() for r in self.records],
            "skipped": self.skipped,
            "short_classes": self.short_classes,
            "totals": self.totals,
        }

    def write(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")


def _class_dirs(source_dir: Path) -> list[Path]:
    dirs = sorted(p for p in source_dir.iterdir() if p.is_dir())
    if not dirs:
        raise ValueError(f"no class directories under {source_dir}")
    return dirs


def _class_images(class_dir: Path) -> list[str]:
    names = sorted(p.name for p in class_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not names:
        raise ValueError(f"class directory {class_dir} holds no images")
    return names


def sample_per_class(source_dir: str | Path, k: int, seed: int) -> list[str]:
    """Pick k images per class, uniformly without replacement, seeded.

    A class with fewer than k images contributes all of them. Returned ids
    are `label/filename` strings, sorted within each class.
    """
    ids: list[str] = []
    for class_dir in _class_dirs(Path(source_dir)):
        names = _class_images(class_dir)
        if len(names) <= k:
            if len(names) < k:
                log.warning("class %s has %d < %d images; taking all", class_dir.name, len(names), k)
            chosen = names
        else:
            rng = random.Random(f"{seed}:{class_dir.name}")
            chosen = sorted(rng.sample(names, k))
        ids.extend(f"{class_dir.name}/{name}" for name in chosen)
    return ids


def _load_image(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        arr = np.asarray(im, dtype=np.uint8)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return validate_image(arr)


def build_zi(spec: ZiSpec, jobs: int = 1) -> ZiManifest:
    """Write clean copies (level 0) and all zoomed variants, plus the manifest.

    Unreadable sources are skipped and logged; a level that would crop an
    image away entirely is skipped and flagged. Re-running overwrites the
    same bytes. The manifest is also written to out_dir/manifest.json.
    """
    spec.validate()
    source_dir = Path(spec.source_dir)
    out_dir = Path(spec.out_dir)
    manifest = ZiManifest(spec=spec, seed=spec.seed)

    counts = {d.name: len(_class_images(d)) for d in _class_dirs(source_dir)}
    manifest.short_classes = sorted(
        name for name, count in counts.items() if count < spec.per_class_samples
    )
    ids = sample_per_class(source_dir, spec.per_class_samples, spec.seed)

    def build_one(image_id: str):
        label, name = image_id.split("/", 1)
        stem = Path(name).stem
        records: list[ZiRecord] = []
        skipped: list[dict] = []
        try:
            img = _load_image(source_dir / image_id)
        except (OSError, UnidentifiedImageError, ValueError) as exc:
            log.warning("skipping unreadable image %s: %s", image_id, exc)
            return [], [{"source": image_id, "n": None, "reason": f"unreadable: {exc}"}]
        for n in (0, *spec.n_levels):
            if n >= min(img.shape[:2]):
                skipped.append({"source": image_id, "n": n, "reason": "crop exceeds image size"})
                continue
            rel_out = f"{label}/{stem}_n{n}.png"
            write_png(zoom_in(img, n), out_dir / rel_out)
            records.append(ZiRecord(source=image_id, label=label, n=n, out=rel_out))
        return records, skipped

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(build_one, ids))
    else:
        results = [build_one(image_id) for image_id in ids]
    for records, skipped in results:
        manifest.records.extend(records)
        manifest.skipped.extend(skipped)

    manifest.write(out_dir / "manifest.json")
    return manifest
