"""Acceptance: the exported classifier drives the attack toolkit end to end.

Run with `pytest tests/test_acceptance.py -v -s`.
"""

import time

import numpy as np
from PIL import Image

from zoomfool.analysis import compute_asr, compute_cam
from zoomfool.attack import AttackConfig, attack, select_adversarial, sweep
from zoomfool.attack import adjust as attack_adjust
from zoomfool.oracle import OnnxBackend
from zoomfool.zoom import zoom_in

from model_export.shapes import generate_dataset


def _ok(name):
    print(f"ACCEPTANCE PASS: {name}")


def _load(path):
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def test_oracle_parity_with_manifest(workspace):
    backend = OnnxBackend(workspace["out"] / "model.onnx", workspace["out"] / "sidecar.json")
    manifest = workspace["manifest"]
    for rec in manifest["records"]:
        pred = backend.classify(_load(workspace["out"] / rec["path"]))
        assert pred.top1 == rec["top1"], rec["path"]
    _ok(f"oracle parity on all {len(manifest['records'])} manifest records")


def test_desk_scale_attack_efficacy(workspace, tmp_path):
    start = time.perf_counter()
    backend = OnnxBackend(workspace["out"] / "model.onnx", workspace["out"] / "sidecar.json")
    labels = workspace["manifest"]["labels"]

    # fresh images, filtered to the correctly-classified ones
    pool = generate_dataset(tmp_path / "attack_pool", per_class=16, seed=777)
    correct = []
    for rec in pool:
        img = _load(tmp_path / "attack_pool" / rec["path"])
        gt = labels.index(rec["label"])
        if backend.classify(img).top1 == gt:
            correct.append((img, gt))
        if len(correct) == 50:
            break
    assert len(correct) == 50, f"only {len(correct)} correctly-classified images available"

    omega = int(0.6 * 64)  # 60% of the image dimension
    cfg = AttackConfig(omega=omega, n_step=max(1, omega // 10))
    report = compute_asr(correct, backend, cfg)
    elapsed = time.perf_counter() - start
    assert report.total == 50
    assert report.excluded == []
    assert report.asr >= 0.3, f"ASR {report.asr:.2f} below the 30% bar"
    assert elapsed < 300.0, f"attack run took {elapsed:.0f}s"
    _ok(f"desk-scale zoom attack: ASR {report.asr:.2f} >= 0.3 on 50 images in {elapsed:.0f}s")


def test_feature_channels_match_manifest(workspace):
    backend = OnnxBackend(workspace["out"] / "model.onnx", workspace["out"] / "sidecar.json")
    rec = workspace["manifest"]["records"][0]
    bundle = backend.extract_features(_load(workspace["out"] / rec["path"]))
    assert bundle.feature_maps.shape[0] == workspace["manifest"]["channels"]
    assert bundle.class_weights.shape == (4, workspace["manifest"]["channels"])


def test_sweep_adjust_and_query_accounting_against_exported_model(workspace, tmp_path):
    backend = OnnxBackend(workspace["out"] / "model.onnx", workspace["out"] / "sidecar.json")
    labels = workspace["manifest"]["labels"]
    pool = generate_dataset(tmp_path / "pool", per_class=4, seed=31)
    cfg = AttackConfig(omega=38, n_step=4)
    cardinality = len(range(0, cfg.omega + 1, cfg.digital_step))
    checked = 0
    for rec in pool:
        img = _load(tmp_path / "pool" / rec["path"])
        gt = labels.index(rec["label"])
        if backend.classify(img).top1 != gt:
            continue
        before = backend.query_count
        trace = sweep(img, gt, backend, cfg)
        assert len(trace.entries) == cardinality
        assert all(0.0 <= e.gt_confidence <= 1.0 for e in trace.entries)
        assert backend.query_count - before == cardinality

        incumbent = select_adversarial(trace, [zoom_in(img, e.zoom.n) for e in trace.entries])
        adjusted = attack_adjust(incumbent, backend, cfg)
        assert adjusted.adv_gt_confidence <= incumbent.adv_gt_confidence

        before = backend.query_count
        result = attack(img, gt, backend, cfg)
        assert result.queries_used == backend.query_count - before
        assert result.queries_used == cardinality + len(result.adjust_probes)
        checked += 1
        if checked == 10:
            break
    assert checked == 10
    _ok("exported-model sweep cardinality, adjust monotonicity, query accounting (10 images)")


def test_cam_peaks_inside_object_boxes(workspace):
    backend = OnnxBackend(workspace["out"] / "model.onnx", workspace["out"] / "sidecar.json")
    manifest = workspace["manifest"]
    labels = manifest["labels"]
    inside = 0
    for rec in manifest["records"]:
        img = _load(workspace["out"] / rec["path"])
        heat = compute_cam(backend, img, labels.index(rec["label"]))
        y, x = np.unravel_index(int(np.argmax(heat.values)), heat.values.shape)
        x0, y0, x1, y1 = rec["bbox"]
        inside += int(x0 <= x <= x1 and y0 <= y <= y1)
    fraction = inside / len(manifest["records"])
    assert fraction >= 0.7, f"CAM peak localization {fraction:.2f} below 70%"
    _ok(f"CAM attention localizes the object for {fraction:.0%} of manifest images")
