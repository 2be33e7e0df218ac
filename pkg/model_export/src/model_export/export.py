"""Train the tiny classifier and export model.onnx + sidecar.json + manifest.json.

The sidecar follows the attack toolkit's oracle schema, and manifest
predictions are produced by querying the exported artifact through that
toolkit's ONNX backend, never the in-framework torch model, so oracle
parity holds by construction.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from . import onnx_write as ow
from .net import TinyGapNet, train
from .shapes import generate_dataset

INPUT_SIZE = 64
EXPECTED_OPS = (
    "Conv",
    "Relu",
    "MaxPool",
    "GlobalAveragePool",
    "Flatten",
    "Gemm",
    "Softmax",
    "Identity",
)


def load_labeled_dir(dataset_dir: str | Path):
    dataset_dir = Path(dataset_dir)
    class_names = sorted(p.name for p in dataset_dir.iterdir() if p.is_dir())
    if len(class_names) < 2:
        raise ValueError(f"need >= 2 class directories under {dataset_dir}")
    images, labels, paths = [], [], []
    for label, cls in enumerate(class_names):
        for path in sorted((dataset_dir / cls).glob("*.png")):
            with Image.open(path) as im:
                images.append(np.asarray(im.convert("RGB"), dtype=np.uint8))
            labels.append(label)
            paths.append(f"{cls}/{path.name}")
    return np.stack(images), np.asarray(labels), class_names, paths


def export_onnx(model: TinyGapNet, path: str | Path) -> bytes:
    state = {k: v.detach().numpy() for k, v in model.state_dict().items()}
    num_classes = state["fc.weight"].shape[0]
    width = state["conv1.weight"].shape[0]
    conv_attrs = {"kernel_shape": [3, 3], "pads": [1, 1, 1, 1], "strides": [1, 1]}
    pool_attrs = {"kernel_shape": [2, 2], "strides": [2, 2]}
    nodes = [
        ow.node("Conv", ["input", "conv1.weight", "conv1.bias"], ["c1"], **conv_attrs),
        ow.node("Relu", ["c1"], ["r1"]),
        ow.node("MaxPool", ["r1"], ["p1"], **pool_attrs),
        ow.node("Conv", ["p1", "conv2.weight", "conv2.bias"], ["c2"], **conv_attrs),
        ow.node("Relu", ["c2"], ["r2"]),
        ow.node("MaxPool", ["r2"], ["p2"], **pool_attrs),
        ow.node("Conv", ["p2", "conv3.weight", "conv3.bias"], ["c3"], **conv_attrs),
        ow.node("Relu", ["c3"], ["features"]),
        ow.node("GlobalAveragePool", ["features"], ["gap"]),
        ow.node("Flatten", ["gap"], ["flat"], axis=1),
        ow.node("Gemm", ["flat", "fc.weight", "fc.bias"], ["logits"], alpha=1.0, beta=1.0, transB=1),
        ow.node("Softmax", ["logits"], ["probs"], axis=1),
        ow.node("Identity", ["fc.weight"], ["class_weights"]),
    ]
    initializers = [ow.tensor(name, arr) for name, arr in state.items()]
    feat_hw = INPUT_SIZE // 4
    graph = ow.graph(
        "tiny_gap_net",
        nodes,
        inputs=[ow.value_info("input", (1, 3, INPUT_SIZE, INPUT_SIZE))],
        outputs=[
            ow.value_info("probs", (1, num_classes)),
            ow.value_info("features", (1, width * 4, feat_hw, feat_hw)),
            ow.value_info("class_weights", (num_classes, width * 4)),
        ],
        initializers=initializers,
    )
    blob = ow.model(graph)
    ow.check_model(blob, expected_ops=EXPECTED_OPS)
    Path(path).write_bytes(blob)
    return blob


def write_sidecar(path: str | Path, labels) -> dict:
    sidecar = {
        "input_size": [INPUT_SIZE, INPUT_SIZE],
        "mean": [0.0, 0.0, 0.0],
        "std": [1.0, 1.0, 1.0],
        "applies_softmax": False,  # the graph already ends in Softmax
        "labels": list(labels),
        "feature_output": "features",
        "class_weights_output": "class_weights",
    }
    Path(path).write_text(json.dumps(sidecar, indent=2) + "\n")
    return sidecar


def train_and_export(dataset_dir: str | Path, out_dir: str | Path, epochs: int = 40,
                     seed: int = 0, eval_per_class: int = 10) -> dict:
    """Returns the manifest dict; writes model.onnx, sidecar.json, manifest.json, eval/."""
    from zoomfool.oracle import OnnxBackend  # the attack toolkit's ONNX+sidecar interface

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    images, labels, class_names, _ = load_labeled_dir(dataset_dir)

    model = TinyGapNet(num_classes=len(class_names))
    framework_accuracy = train(model, images, labels, epochs=epochs, seed=seed)
    if framework_accuracy < 0.5:
        raise RuntimeError(f"training diverged (train accuracy {framework_accuracy:.2f}, seed {seed})")

    model_path = out_dir / "model.onnx"
    export_onnx(model, model_path)
    write_sidecar(out_dir / "sidecar.json", class_names)
    backend = OnnxBackend(model_path, out_dir / "sidecar.json", runtime="auto")

    # exported-artifact accuracy on the training set
    hits = sum(
        backend.classify(img).top1 == int(label) for img, label in zip(images, labels)
    )
    accuracy = hits / len(images)

    # held-out split, recorded through the exported artifact
    eval_records = generate_dataset(out_dir / "eval", per_class=eval_per_class, seed=seed + 1)
    records = []
    for rec in eval_records:
        with Image.open(out_dir / "eval" / rec["path"]) as im:
            img = np.asarray(im.convert("RGB"), dtype=np.uint8)
        records.append(
            {
                "path": f"eval/{rec['path']}",
                "label": rec["label"],
                "top1": int(backend.classify(img).top1),
                "bbox": rec["bbox"],
            }
        )

    manifest = {
        "model": "model.onnx",
        "sidecar": "sidecar.json",
        "labels": class_names,
        "input_size": [INPUT_SIZE, INPUT_SIZE],
        "mean": [0.0, 0.0, 0.0],
        "std": [1.0, 1.0, 1.0],
        "feature_output": "features",
        "class_weights_output": "class_weights",
        "channels": model.fc.in_features,
        "seed": seed,
        "epochs": epochs,
        "train_accuracy": accuracy,
        "records": records,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest
