#!/usr/bin/env python3
"""Regenerate the checked-in test fixtures under tests/fixtures/.

Everything here is deterministic, so re-running reproduces identical bytes:

* golden_sweep.svg        — frozen sweep-curve render
* asr_fixture/            — 4-image dataset + complete mock table; expected
                            ASR is recomputed by brute-force enumeration
* tiny.onnx + tiny_onnx_expected.json — small random-weight network written
                            with the model-export encoder; expected outputs
                            come from torch, independent of the built-in
                            ONNX interpreter under test

Needs the model_export package (and torch) installed for the ONNX part.
"""

import json
from pathlib import Path

import numpy as np

from zoomfool import image_key, write_png, zoom_in
from zoomfool.analysis import sweep_curve
from zoomfool.attack import SweepEntry, SweepTrace
from zoomfool.zoom import ZoomLevel

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

OMEGA, STEP = 12, 6
LABELS = ["alpha", "beta"]


def make_golden_svg():
    entries = [
        SweepEntry(ZoomLevel.digital(n), top1, conf)
        for n, top1, conf in [(0, 0, 0.9), (6, 0, 0.62), (12, 1, 0.31), (18, 1, 0.05)]
    ]
    svg = sweep_curve(SweepTrace(entries, ground_truth=0))
    (FIXTURES / "golden_sweep.svg").write_text(svg)
    print("golden_sweep.svg written")


def _confidence(profile, n):
    kind, *params = profile
    if kind == "down":  # strictly decreasing
        (slope,) = params
        return round(0.9 - slope * n, 4)
    if kind == "vee":  # interior minimum at n = 6
        return round(0.8 - 0.1 * n, 4) if n <= 6 else round(0.2 + 0.05 * (n - 6), 4)
    raise ValueError(kind)


# (image name, class, profile); gt confidence drives probs [c, 1-c] for alpha
# and [1-c, c] for beta, so top1 flips exactly when confidence < 0.5
ASR_IMAGES = [
    ("a0", "alpha", ("down", 0.05)),  # min 0.30 at n=12 -> flip -> success
    ("a1", "alpha", ("vee",)),        # min 0.20 at n=6  -> flip -> success
    ("a2", "alpha", ("down", 0.03)),  # min 0.54, never flips -> failure
    ("b0", "beta", ("down", 0.03)),   # min 0.54, never flips -> failure
]


def make_asr_fixture():
    root = FIXTURES / "asr_fixture"
    rng = np.random.default_rng(424242)
    entries = {}
    brute_force = {"successes": 0, "total": 0}
    for name, cls, profile in ASR_IMAGES:
        gt = LABELS.index(cls)
        img = rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)
        write_png(img, root / "dataset" / cls / f"{name}.png")
        # complete table over every crop the attack (sweep or probe) can reach
        confs = {}
        for n in range(0, OMEGA + 1):
            conf = _confidence(profile, n)
            probs = [conf, round(1 - conf, 4)] if gt == 0 else [round(1 - conf, 4), conf]
            entries[image_key(zoom_in(img, n))] = probs
            confs[n] = conf
        # independent expectation: enumerate the exact reachable set (sweep
        # grid, then +/- 2..10 pixel probes around the grid argmin)
        grid = range(0, OMEGA + 1, STEP)
        best = min(grid, key=lambda n: (confs[n], n))
        probes = [best + s * k * 2 for k in range(1, 6) for s in (1, -1) if 0 <= best + s * k * 2 <= OMEGA]
        final_conf = min([confs[best]] + [confs[n] for n in probes])
        brute_force["total"] += 1
        brute_force["successes"] += int(final_conf < 0.5)
    brute_force["asr"] = brute_force["successes"] / brute_force["total"]
    (root / "mock.json").write_text(
        json.dumps({"labels": LABELS, "entries": entries}, indent=2, sort_keys=True) + "\n"
    )
    (root / "expected.json").write_text(json.dumps(brute_force, indent=2, sort_keys=True) + "\n")
    print(f"asr_fixture written (expected {brute_force})")


def make_tiny_onnx():
    import torch
    import torch.nn.functional as F

    from model_export import onnx_write as ow

    torch.manual_seed(42)
    w1, b1 = torch.randn(4, 3, 3, 3) * 0.5, torch.randn(4) * 0.1
    w2, b2 = torch.randn(6, 4, 3, 3) * 0.5, torch.randn(6) * 0.1
    fw, fb = torch.randn(3, 6) * 0.5, torch.randn(3) * 0.1

    conv_attrs = {"kernel_shape": [3, 3], "pads": [1, 1, 1, 1], "strides": [1, 1]}
    nodes = [
        ow.node("Conv", ["input", "w1", "b1"], ["c1"], **conv_attrs),
        ow.node("Relu", ["c1"], ["r1"]),
        ow.node("MaxPool", ["r1"], ["p1"], kernel_shape=[2, 2], strides=[2, 2]),
        ow.node("Conv", ["p1", "w2", "b2"], ["c2"], **conv_attrs),
        ow.node("Relu", ["c2"], ["features"]),
        ow.node("GlobalAveragePool", ["features"], ["gap"]),
        ow.node("Flatten", ["gap"], ["flat"], axis=1),
        ow.node("Gemm", ["flat", "fw", "fb"], ["logits"], alpha=1.0, beta=1.0, transB=1),
        ow.node("Softmax", ["logits"], ["probs"], axis=1),
        ow.node("Identity", ["fw"], ["class_weights"]),
    ]
    weights = {"w1": w1, "b1": b1, "w2": w2, "b2": b2, "fw": fw, "fb": fb}
    graph = ow.graph(
        "tiny_fixture",
        nodes,
        inputs=[ow.value_info("input", (1, 3, 16, 16))],
        outputs=[
            ow.value_info("probs", (1, 3)),
            ow.value_info("features", (1, 6, 8, 8)),
            ow.value_info("class_weights", (3, 6)),
        ],
        initializers=[ow.tensor(k, v.numpy()) for k, v in weights.items()],
    )
    blob = ow.model(graph)
    ow.check_model(blob)
    (FIXTURES / "tiny.onnx").write_bytes(blob)

    x = torch.rand(1, 3, 16, 16)
    with torch.no_grad():
        r1 = F.relu(F.conv2d(x, w1, b1, padding=1))
        p1 = F.max_pool2d(r1, 2)
        features = F.relu(F.conv2d(p1, w2, b2, padding=1))
        logits = F.linear(features.mean(dim=(2, 3)), fw, fb)
        probs = torch.softmax(logits, dim=1)
    expected = {
        "input_name": "input",
        "input": x.numpy().tolist(),
        "outputs": {
            "probs": probs.numpy().tolist(),
            "features": features.numpy().tolist(),
            "class_weights": fw.numpy().tolist(),
        },
    }
    (FIXTURES / "tiny_onnx_expected.json").write_text(json.dumps(expected) + "\n")
    print(f"tiny.onnx written ({len(blob)} bytes)")


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    make_golden_svg()
    make_asr_fixture()
    make_tiny_onnx()


if __name__ == "__main__":
    main()
