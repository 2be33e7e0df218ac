import json
import subprocess
import sys

import numpy as np
import pytest

from zoomfool import image_key, read_png, write_png, zoom_in

from conftest import FIXTURES, rand_image


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "zoomfool.cli", *args], capture_output=True, text=True
    )


def write_mock(path, image, profile, labels=("gt", "other"), default=(0.6, 0.4)):
    entries = {image_key(zoom_in(image, n)): probs for n, probs in profile.items()}
    path.write_text(json.dumps({"labels": list(labels), "entries": entries, "default": list(default)}))
    return path


@pytest.fixture
def flip_setup(tmp_path, rng):
    img = rand_image(rng, 32, 32)
    write_png(img, tmp_path / "x.png")
    profile = {0: [0.9, 0.1], 6: [0.5, 0.5], 12: [0.2, 0.8]}
    mock = write_mock(tmp_path / "mock.json", img, profile)
    return tmp_path, img, mock


def test_attack_writes_artifacts_and_succeeds(flip_setup):
    tmp, img, mock = flip_setup
    out = tmp / "out"
    proc = run_cli(
        "attack", "--image", str(tmp / "x.png"), "--label", "0",
        "--mock", str(mock), "--omega", "12", "--step", "6", "--out", str(out),
    )
    assert proc.returncode == 0, proc.stderr
    result = json.loads((out / "result.json").read_text())
    assert result["success"] is True
    assert result["chosen_zoom"] == {"kind": "n", "n": 12}
    assert result["config"]["omega"] == 12
    assert (out / "sweep.svg").read_text().startswith("<svg")
    adversarial = read_png(out / "adversarial.png")
    assert np.array_equal(adversarial, zoom_in(img, 12))


def test_attack_accepts_label_names(flip_setup):
    tmp, _, mock = flip_setup
    proc = run_cli(
        "attack", "--image", str(tmp / "x.png"), "--label", "gt",
        "--mock", str(mock), "--omega", "12", "--step", "6", "--out", str(tmp / "out"),
    )
    assert proc.returncode == 0, proc.stderr


def test_attack_failure_exits_1(tmp_path, rng):
    img = rand_image(rng, 32, 32)
    write_png(img, tmp_path / "x.png")
    mock = write_mock(tmp_path / "mock.json", img, {0: [0.9, 0.1]}, default=(0.8, 0.2))
    proc = run_cli(
        "attack", "--image", str(tmp_path / "x.png"), "--label", "0",
        "--mock", str(mock), "--omega", "12", "--step", "6", "--out", str(tmp_path / "out"),
    )
    assert proc.returncode == 1
    result = json.loads((tmp_path / "out" / "result.json").read_text())
    assert result["success"] is False


def test_clean_misclassified_exits_1(tmp_path, rng):
    img = rand_image(rng, 32, 32)
    write_png(img, tmp_path / "x.png")
    mock = write_mock(tmp_path / "mock.json", img, {}, default=(0.2, 0.8))
    proc = run_cli(
        "attack", "--image", str(tmp_path / "x.png"), "--label", "0",
        "--mock", str(mock), "--omega", "12", "--out", str(tmp_path / "out"),
    )
    assert proc.returncode == 1
    assert "not applicable" in proc.stderr


def test_missing_backend_is_usage_error(tmp_path):
    proc = run_cli("attack", "--image", "x.png", "--label", "0", "--out", str(tmp_path))
    assert proc.returncode == 2
    assert "usage" in proc.stderr.lower()


def test_unknown_label_name_is_config_error(flip_setup):
    tmp, _, mock = flip_setup
    proc = run_cli(
        "attack", "--image", str(tmp / "x.png"), "--label", "nope",
        "--mock", str(mock), "--out", str(tmp / "out"),
    )
    assert proc.returncode == 2
    assert "unknown label" in proc.stderr


def test_missing_model_file_is_oracle_error(tmp_path, rng):
    write_png(rand_image(rng, 32, 32), tmp_path / "x.png")
    proc = run_cli(
        "attack", "--image", str(tmp_path / "x.png"), "--label", "0",
        "--model", str(tmp_path / "missing.onnx"), "--out", str(tmp_path / "out"),
    )
    assert proc.returncode == 3


def test_sweep_writes_trace_and_svg(flip_setup):
    tmp, _, mock = flip_setup
    out = tmp / "sweep_out"
    proc = run_cli(
        "sweep", "--image", str(tmp / "x.png"), "--label", "0",
        "--mock", str(mock), "--omega", "12", "--step", "6", "--out", str(out),
    )
    assert proc.returncode == 0, proc.stderr
    trace = json.loads((out / "trace.json").read_text())
    assert [e["zoom"]["n"] for e in trace["entries"]] == [0, 6, 12]
    assert (out / "sweep.svg").exists()


def test_config_file_overridden_by_flags(flip_setup):
    tmp, img, mock = flip_setup
    (tmp / "cfg.json").write_text(json.dumps({"omega": 6, "n_step": 6}))
    out = tmp / "cfg_out"
    proc = run_cli(
        "sweep", "--image", str(tmp / "x.png"), "--label", "0", "--mock", str(mock),
        "--config", str(tmp / "cfg.json"), "--omega", "12", "--out", str(out),
    )
    assert proc.returncode == 0, proc.stderr
    trace = json.loads((out / "trace.json").read_text())
    # omega comes from the flag, step from the config file
    assert [e["zoom"]["n"] for e in trace["entries"]] == [0, 6, 12]


def test_asr_fixture_matches_brute_force_and_is_reproducible(tmp_path):
    dataset = FIXTURES / "asr_fixture" / "dataset"
    mock = FIXTURES / "asr_fixture" / "mock.json"
    expected = json.loads((FIXTURES / "asr_fixture" / "expected.json").read_text())
    reports = []
    for name in ("one", "two"):
        out = tmp_path / name
        proc = run_cli(
            "asr", "--dataset", str(dataset), "--mock", str(mock),
            "--omega", "12", "--step", "6", "--jobs", "2", "--out", str(out),
        )
        assert proc.returncode == 0, proc.stderr
        reports.append((out / "report.json").read_bytes())
        summary = (out / "summary.md").read_text()
        assert "ASR(%)" in summary and "50.0" in summary
    assert reports[0] == reports[1]
    report = json.loads(reports[0])
    assert report["asr"] == expected["asr"] == 0.5
    assert report["successes"] == expected["successes"]
    assert report["total"] == expected["total"]
    assert [p["id"] for p in report["per_image"]] == [
        "alpha/a0.png", "alpha/a1.png", "alpha/a2.png", "beta/b0.png",
    ]


def test_build_zi_cli(tmp_path, rng):
    src = tmp_path / "src"
    for cls in ("oak", "pine"):
        for i in range(2):
            write_png(rand_image(rng, 72, 72), src / cls / f"i{i}.png")
    out = tmp_path / "zi"
    proc = run_cli("build-zi", "--dataset", str(src), "--out", str(out), "--seed", "5")
    assert proc.returncode == 0, proc.stderr
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["totals"] == {"clean": 4, "variants": 40, "skipped": 0}
    assert manifest["seed"] == 5


def test_cam_cli_with_mock_features(tmp_path, rng):
    img = rand_image(rng, 16, 16)
    write_png(img, tmp_path / "x.png")
    maps = np.zeros((1, 4, 4))
    maps[0, 1, 2] = 3.0
    table = {
        "labels": ["a", "b"],
        "default": [0.5, 0.5],
        "entries": {},
        "features": {"feature_maps": maps.tolist(), "class_weights": [[1.0], [0.5]]},
    }
    (tmp_path / "mock.json").write_text(json.dumps(table))
    out = tmp_path / "cam"
    proc = run_cli(
        "cam", "--image", str(tmp_path / "x.png"), "--label", "0",
        "--mock", str(tmp_path / "mock.json"), "--out", str(out),
    )
    assert proc.returncode == 0, proc.stderr
    assert read_png(out / "cam_overlay.png").shape == (16, 16, 3)
    meta = json.loads((out / "cam.json").read_text())
    assert meta["class_index"] == 0 and meta["max"] == 1.0


def test_cam_without_features_is_oracle_error(tmp_path, rng):
    img = rand_image(rng, 16, 16)
    write_png(img, tmp_path / "x.png")
    write_mock(tmp_path / "mock.json", img, {}, default=(0.5, 0.5))
    proc = run_cli(
        "cam", "--image", str(tmp_path / "x.png"), "--label", "0",
        "--mock", str(tmp_path / "mock.json"), "--out", str(tmp_path / "cam"),
    )
    assert proc.returncode == 3
