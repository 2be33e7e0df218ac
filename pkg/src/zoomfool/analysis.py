"""Evaluation metrics and phenomenon detectors for zoom attacks.

Covers batch attack-success-rate reports, detection of discontinuous
misclassification along a sweep, class-activation heatmaps, and an SVG
confidence curve per trace.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .attack import AttackConfig, AttackResult, SweepTrace, attack
from .errors import CleanMisclassificationError, ConfigError, OracleError
from .image import resize_bilinear_float, validate_image
from .oracle import Backend
from .zoom import ZoomLevel


@dataclass
class PerImageOutcome:
    image_id: str
    success: bool
    chosen_zoom: ZoomLevel
    clean_top1: int
    adv_top1: int
    queries_used: int

    def to_json(self) -> dict:
        return {
            "id": self.image_id,
            "success": self.success,
            "chosen_zoom": self.chosen_zoom.to_json(),
            "clean_top1": self.clean_top1,
            "adv_top1": self.adv_top1,
            "queries_used": self.queries_used,
        }


@dataclass
class AsrReport:
    model_id: str
    total: int
    successes: int
    asr: float
    per_image: list[PerImageOutcome] = field(default_factory=list)
    excluded: list[str] = field(default_factory=list)  # failed the clean-correctness gate
    errors: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "model_id": self.model_id,
            "total": self.total,
            "successes": self.successes,
            "asr": self.asr,
            "per_image": [p.to_json() for p in self.per_image],
            "excluded": self.excluded,
            "errors": self.errors,
        }


def compute_asr(dataset, backend: Backend, cfg: AttackConfig, ids=None, jobs: int = 1) -> AsrReport:
    """Attack every (image, label) pair; ASR is over the clean-correct subset.

    Images the model already misclassifies are excluded and listed
    separately; oracle failures are recorded per image without aborting the
    batch. per_image keeps the input order regardless of worker scheduling.
    """
    dataset = list(dataset)
    if not dataset:
        raise ValueError("dataset is empty")
    if ids is None:
        ids = [str(i) for i in range(len(dataset))]

    def run_one(item):
        image, label = item
        return attack(image, label, backend, cfg)

    per_image_errors = (CleanMisclassificationError, OracleError, ConfigError)
    outcomes: list = [None] * len(dataset)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {i: pool.submit(run_one, item) for i, item in enumerate(dataset)}
            for i, fut in futures.items():
                try:
                    outcomes[i] = fut.result()
                except per_image_errors as exc:
                    outcomes[i] = exc
    else:
        for i, item in enumerate(dataset):
            try:
                outcomes[i] = run_one(item)
            except per_image_errors as exc:
                outcomes[i] = exc

    report = AsrReport(model_id=backend.model_id, total=0, successes=0, asr=0.0)
    for image_id, outcome in zip(ids, outcomes):
        if isinstance(outcome, CleanMisclassificationError):
            report.excluded.append(image_id)
        elif isinstance(outcome, (OracleError, ConfigError)):
            report.errors.append({"id": image_id, "error": str(outcome)})
        else:
            result: AttackResult = outcome
            report.total += 1
            report.successes += int(result.success)
            report.per_image.append(
                PerImageOutcome(
                    image_id=image_id,
                    success=result.success,
                    chosen_zoom=result.chosen_zoom,
                    clean_top1=result.clean_top1,
                    adv_top1=result.adv_top1,
                    queries_used=result.queries_used,
                )
            )
    report.asr = report.successes / report.total if report.total else 0.0
    return report


def render_asr_table(reports: dict[str, AsrReport]) -> str:
    """Markdown table, models as columns, one ASR(%) row."""
    names = list(reports)
    head = "| f | " + " | ".join(names) + " |"
    rule = "| --- |" + " --- |" * len(names)
    row = "| ASR(%) | " + " | ".join(f"{reports[n].asr * 100:.1f}" for n in names) + " |"
    return "\n".join([head, rule, row]) + "\n"


@dataclass
class DiscontinuityReport:
    misclassified_runs: list[tuple[int, int]]  # inclusive entry-index intervals
    discontinuous: bool
    distinct_wrong_labels: int

    def to_json(self) -> dict:
        return {
            "misclassified_runs": [list(r) for r in self.misclassified_runs],
            "discontinuous": self.discontinuous,
            "distinct_wrong_labels": self.distinct_wrong_labels,
        }


def detect_discontinuity(trace: SweepTrace) -> DiscontinuityReport:
    """Maximal runs of misclassified entries along the sweep.

    Discontinuous means at least two runs separated by at least one
    correctly classified entry. Skipped (unevaluated) levels are not
    evidence either way, so they neither join nor break runs.
    """
    evaluated = trace.evaluated()
    if not evaluated:
        raise ValueError("trace has no evaluated entries")
    runs: list[tuple[int, int]] = []
    wrong_labels: set[int] = set()
    current: list[int] = []
    for idx, entry in evaluated:
        if entry.top1 != trace.ground_truth:
            current.append(idx)
            wrong_labels.add(entry.top1)
        elif current:
            runs.append((current[0], current[-1]))
            current = []
    if current:
        runs.append((current[0], current[-1]))
    return DiscontinuityReport(
        misclassified_runs=runs,
        discontinuous=len(runs) >= 2,
        distinct_wrong_labels=len(wrong_labels),
    )


@dataclass
class CamHeatmap:
    values: np.ndarray  # (H, W) in [0, 1], image-sized
    class_index: int
    overlay: np.ndarray  # (H, W, 3) uint8

    def to_json(self) -> dict:
        return {
            "class_index": self.class_index,
            "height": int(self.values.shape[0]),
            "width": int(self.values.shape[1]),
            "max": float(self.values.max()),
        }


def _heat_rgb(values: np.ndarray) -> np.ndarray:
    v = values[..., None]
    ramp = np.concatenate([1.5 - np.abs(4 * v - 3), 1.5 - np.abs(4 * v - 2), 1.5 - np.abs(4 * v - 1)], axis=2)
    return np.clip(ramp, 0.0, 1.0)


def compute_cam(backend: Backend, image: np.ndarray, class_index: int) -> CamHeatmap:
    """Class activation map: classifier-weighted sum of final feature maps.

    Negative evidence is clamped to zero before upsampling; the map is then
    max-normalized, so any positive activation yields a peak of exactly 1
    and the all-nonpositive case yields an all-zero map.
    """
    validate_image(image)
    bundle = backend.extract_features(image)
    if not 0 <= class_index < bundle.class_weights.shape[0]:
        raise ValueError(f"class index {class_index} out of range")
    weights = bundle.class_weights[class_index]
    raw = np.tensordot(weights, bundle.feature_maps.astype(np.float64), axes=1)
    raw = np.maximum(raw, 0.0)
    h, w = image.shape[:2]
    up = resize_bilinear_float(raw, h, w)
    peak = up.max()
    values = up / peak if peak > 0 else np.zeros_like(up)

    rgb = image if image.shape[2] == 3 else np.repeat(image, 3, axis=2)
    heat = _heat_rgb(values) * 255.0
    overlay = np.clip(np.floor(0.5 * rgb.astype(np.float64) + 0.5 * heat + 0.5), 0, 255).astype(np.uint8)
    return CamHeatmap(values=values, class_index=class_index, overlay=overlay)


_SVG_W, _SVG_H = 640, 400
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64, 24, 32, 48


def sweep_curve(trace: SweepTrace) -> str:
    """SVG of ground-truth confidence vs zoom; misclassified points in red.

    Pure function of the trace: identical traces give byte-identical SVG.
    """
    evaluated = trace.evaluated()
    if not evaluated:
        raise ValueError("trace has no evaluated entries")
    xs = [float(e.zoom.value) for _, e in evaluated]
    lo, hi = min(xs), max(xs)
    span = hi - lo
    plot_w = _SVG_W - _MARGIN_L - _MARGIN_R
    plot_h = _SVG_H - _MARGIN_T - _MARGIN_B

    def px(x: float) -> float:
        frac = 0.5 if span == 0 else (x - lo) / span
        return _MARGIN_L + frac * plot_w

    def py(conf: float) -> float:
        return _MARGIN_T + (1.0 - conf) * plot_h

    kind = evaluated[0][1].zoom.kind
    axis_label = "crop pixels N" if kind == "n" else "focal factor T"
    points = " ".join(f"{px(x):.3f},{py(e.gt_confidence):.3f}" for x, (_, e) in zip(xs, evaluated))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" height="{_SVG_H}" '
        f'viewBox="0 0 {_SVG_W} {_SVG_H}">',
        f'<rect width="{_SVG_W}" height="{_SVG_H}" fill="white"/>',
        f'<line x1="{_MARGIN_L}" y1="{_MARGIN_T}" x2="{_MARGIN_L}" '
        f'y2="{_SVG_H - _MARGIN_B}" stroke="black"/>',
        f'<line x1="{_MARGIN_L}" y1="{_SVG_H - _MARGIN_B}" x2="{_SVG_W - _MARGIN_R}" '
        f'y2="{_SVG_H - _MARGIN_B}" stroke="black"/>',
        f'<text x="{_MARGIN_L}" y="20" font-size="14">ground-truth confidence vs zoom</text>',
        f'<text x="{_SVG_W // 2}" y="{_SVG_H - 12}" font-size="12" '
        f'text-anchor="middle">{axis_label}</text>',
        f'<text x="{_MARGIN_L - 8}" y="{py(1.0):.3f}" font-size="12" text-anchor="end">1.0</text>',
        f'<text x="{_MARGIN_L - 8}" y="{py(0.0):.3f}" font-size="12" text-anchor="end">0.0</text>',
        f'<text x="{px(lo):.3f}" y="{_SVG_H - _MARGIN_B + 16}" font-size="12" '
        f'text-anchor="middle">{lo:g}</text>',
        f'<text x="{px(hi):.3f}" y="{_SVG_H - _MARGIN_B + 16}" font-size="12" '
        f'text-anchor="middle">{hi:g}</text>',
        f'<polyline fill="none" stroke="#3465a4" stroke-width="1.5" points="{points}"/>',
    ]
    for x, (_, entry) in zip(xs, evaluated):
        color = "#2a7d46" if entry.top1 == trace.ground_truth else "#cc2222"
        parts.append(
            f'<circle cx="{px(x):.3f}" cy="{py(entry.gt_confidence):.3f}" r="4" fill="{color}"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_report(report: AsrReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
