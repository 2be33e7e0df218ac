#!/usr/bin/env python3
"""Full-scale ASR reproduction against pretrained ImageNet models (non-CI).

Needs torch + torchvision with downloadable weights and a local ImageNet-style
directory (subdirectories named by class index 0..999, or by category name).
Published reference ASR values, reproduced here with a +/- 10 point band:

    densenet 36.0 | resnet50 33.7 | vgg19 40.5
    googlenet 40.6 | mobilenet_v2 41.7 | alexnet 51.0

Example:
    python scripts/run_imagenet_asr.py --data ~/imagenet_val --arch resnet50 \
        --n 1000 --out /tmp/imagenet_asr
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from PIL import Image

from zoomfool.analysis import compute_asr, render_asr_table
from zoomfool.attack import AttackConfig
from zoomfool.image import validate_image
from zoomfool.oracle import Backend, LabelSpace

REFERENCE_ASR = {
    "densenet121": 36.0,
    "resnet50": 33.7,
    "vgg19": 40.5,
    "googlenet": 40.6,
    "mobilenet_v2": 41.7,
    "alexnet": 51.0,
}


class TorchvisionBackend(Backend):
    """Query-only wrapper over a pretrained torchvision classifier."""

    def __init__(self, arch: str):
        import torch
        import torchvision.models as models

        weights = models.get_model_weights(arch).DEFAULT
        self._categories = list(weights.meta["categories"])
        super().__init__(LabelSpace(tuple(self._categories)))
        self.model_id = arch
        self._torch = torch
        self._model = models.get_model(arch, weights=weights).eval()
        self._transform = weights.transforms()

    def _classify_probs(self, img: np.ndarray) -> np.ndarray:
        torch = self._torch
        if img.shape[2] == 1:
            img = np.repeat(img, 3, axis=2)
        x = torch.from_numpy(img.astype(np.float32) / 255.0).permute(2, 0, 1)
        with torch.no_grad():
            logits = self._model(self._transform(x)[None, ...])
            return torch.softmax(logits[0], dim=0).numpy().astype(np.float64)


def _load_image(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return validate_image(arr)


def load_items(data_dir: Path, backend: TorchvisionBackend, limit: int):
    items, ids = [], []
    for class_dir in sorted(p for p in data_dir.iterdir() if p.is_dir()):
        name = class_dir.name
        if name.isdigit():
            label = int(name)
        else:
            label = backend.labels.index(name)
        for path in sorted(class_dir.iterdir()):
            if path.suffix.lower() in (".png", ".jpg", ".jpeg"):
                items.append((_load_image(path), label))
                ids.append(f"{name}/{path.name}")
                if len(items) >= limit:
                    return items, ids
    return items, ids


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", required=True, help="ImageNet-style directory")
    parser.add_argument("--arch", default="resnet50", choices=sorted(REFERENCE_ASR))
    parser.add_argument("--n", type=int, default=1000, help="max images to evaluate")
    parser.add_argument("--omega", type=int, default=60)
    parser.add_argument("--step", type=int, default=6)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)

    backend = TorchvisionBackend(args.arch)
    items, ids = load_items(Path(args.data), backend, args.n)
    if not items:
        print("no images found", file=sys.stderr)
        return 2
    cfg = AttackConfig(omega=args.omega, n_step=args.step)
    report = compute_asr(items, backend, cfg, ids=ids, jobs=args.jobs)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
    (out / "summary.md").write_text(render_asr_table({args.arch: report}))

    reference = REFERENCE_ASR[args.arch]
    delta = abs(report.asr * 100 - reference)
    print(
        f"{args.arch}: ASR {report.asr * 100:.1f}% over {report.total} images "
        f"(reference {reference}%, |delta| {delta:.1f}, band 10.0)"
    )
    return 0 if delta <= 10.0 else 1


if __name__ == "__main__":
    sys.exit(main())
