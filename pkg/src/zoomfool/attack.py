"""Zoom-
sweep attack: try every zoom level, keep the sample the classifier is
least confident about on the true label, then refine the crop amount.

Two sweep modes:

* digital — crop amounts N in {0, step, ..., omega}; N=0 (the clean image)
  doubles as the clean-correctness precondition check, so queries used equal
  evaluated entries plus refinement probes exactly.
* physical — focal factors T from gamma_min to gamma_max in t_step
  increments. T > 1.0 is simulated digitally through the crop conversion;
  T < 1.0 (optical zoom-out) cannot be synthesized, so those levels are
  evaluated only when a pre-captured frame `t<T>.png` exists in
  `frames_dir`, and are otherwise recorded as skipped. T = 1.0 is the input
  image itself unless a frame overrides it.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    CleanMisclassificationError,
    ConfigError,
    OracleError,
    SweepAbortedError,
)
from .image import read_png, validate_image
from .oracle import Backend
from .zoom import ConversionParams, ZoomLevel, conv_t_to_n, zoom_in

DIGITAL = "digital"
PHYSICAL = "physical"


@dataclass
class AttackConfig:
    gamma_min: float = 0.5
    gamma_max: float = 5.4
    t_step: float = 0.1
    omega: int = 60
    rho: int | None = None
    n_step: int | None = None
    adjust_delta: int = 2
    adjust_max_tries: int = 5
    mode: str = DIGITAL
    frames_dir: str | None = None

    def validate(self) -> "AttackConfig":
        if self.mode not in (DIGITAL, PHYSICAL):
            raise ConfigError(f"mode must be '{DIGITAL}' or '{PHYSICAL}', got {self.mode!r}")
        if not (0.5 <= self.gamma_min < self.gamma_max <= 5.4):
            raise ConfigError(
                f"need 0.5 <= gamma_min < gamma_max <= 5.4, got [{self.gamma_min}, {self.gamma_max}]"
            )
        step_tenths = round(self.t_step * 10)
        if self.t_step <= 0 or step_tenths < 1 or abs(self.t_step * 10 - step_tenths) > 1e-6:
            raise ConfigError(f"t_step must be a positive multiple of 0.1, got {self.t_step}")
        if self.omega <= 0:
            raise ConfigError(f"omega must be positive, got {self.omega}")
        if self.adjust_delta < 1:
            raise ConfigError(f"adjust_delta must be >= 1, got {self.adjust_delta}")
        if self.adjust_max_tries < 0:
            raise ConfigError(f"adjust_max_tries must be >= 0, got {self.adjust_max_tries}")
        if self.rho is not None and self.rho <= 0:
            raise ConfigError(f"rho must be positive, got {self.rho}")
        if self.mode == PHYSICAL and self.rho is None:
            raise ConfigError("physical mode needs rho (crop pixels per 1.0x of zoom)")
        if self.n_step is not None and self.n_step < 1:
            raise ConfigError(f"n_step must be >= 1, got {self.n_step}")
        return self

    @property
    def digital_step(self) -> int:
        if self.n_step is not None:
            return self.n_step
        base = self.rho if self.rho is not None else self.omega
        return max(1, base // 10)

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class SweepEntry:
    zoom: ZoomLevel
    top1: int | None
    gt_confidence: float | None
    skipped: bool = False
    skip_reason: str | None = None

    def to_json(self) -> dict:
        obj = {"zoom": self.zoom.to_json(), "top1": self.top1, "gt_confidence": self.gt_confidence}
        if self.skipped:
            obj["skipped"] = True
            obj["skip_reason"] = self.skip_reason
        return obj


@dataclass
class SweepTrace:
    entries: list[SweepEntry]
    ground_truth: int

    def evaluated(self) -> list[tuple[int, SweepEntry]]:
        return [(i, e) for i, e in enumerate(self.entries) if not e.skipped]

    def to_json(self) -> dict:
        return {
            "ground_truth": self.ground_truth,
            "entries": [e.to_json() for e in self.entries],
        }


@dataclass
class AttackResult:
    adversarial: np.ndarray
    chosen_zoom: ZoomLevel
    trace: SweepTrace
    success: bool
    clean_top1: int
    adv_top1: int
    queries_used: int
    adv_gt_confidence: float
    source: np.ndarray | None = None
    adjust_probes: list[SweepEntry] = field(default_factory=list)

    def to_json(self, cfg: AttackConfig | None = None) -> dict:
        obj = {
            "success": self.success,
            "chosen_zoom": self.chosen_zoom.to_json(),
            "clean_top1": self.clean_top1,
            "adv_top1": self.adv_top1,
            "adv_gt_confidence": self.adv_gt_confidence,
            "queries_used": self.queries_used,
            "trace": self.trace.to_json(),
            "adjust_probes": [p.to_json() for p in self.adjust_probes],
        }
        if cfg is not None:
            obj["config"] = cfg.to_json()
        return obj


def _digital_levels(cfg: AttackConfig, min_side: int) -> list[int]:
    if cfg.omega >= min_side:
        raise ConfigError(
            f"omega={cfg.omega} cannot be swept on a {min_side}px-min-side image"
        )
    return list(range(0, cfg.omega + 1, cfg.digital_step))


def _physical_tenths(cfg: AttackConfig) -> list[int]:
    step = round(cfg.t_step * 10)
    return list(range(round(cfg.gamma_min * 10), round(cfg.gamma_max * 10) + 1, step))


def _frame_path(frames_dir: str | None, t: float) -> Path | None:
    if frames_dir is None:
        return None
    path = Path(frames_dir) / f"t{t:.1f}.png"
    return path if path.exists() else None


def _variants(image: np.ndarray, cfg: AttackConfig):
    """Yield (zoom, variant image or None, is_identity, skip_reason) per grid level."""
    min_side = min(image.shape[:2])
    if cfg.mode == DIGITAL:
        for n in _digital_levels(cfg, min_side):
            yield ZoomLevel.digital(n), zoom_in(image, n), n == 0, None
        return
    params = ConversionParams(cfg.rho)
    for tenths in _physical_tenths(cfg):
        t = tenths / 10
        zoom = ZoomLevel.physical(t)
        frame = _frame_path(cfg.frames_dir, t)
        if frame is not None:
            yield zoom, read_png(frame), False, None
        elif tenths == 10:
            yield zoom, image.copy(), True, None
        elif tenths < 10:
            yield zoom, None, False, "zoom-out requires a pre-captured frame"
        else:
            n = conv_t_to_n(t, params)
            if n >= min_side:
                yield zoom, None, False, f"crop {n} exceeds image size"
            else:
                yield zoom, zoom_in(image, n), False, None


def _sweep_with_images(image, gt: int, backend: Backend, cfg: AttackConfig):
    cfg.validate()
    validate_image(image)
    clean_pred = backend.classify(image)
    if clean_pred.top1 != gt:
        raise CleanMisclassificationError(gt, clean_pred.top1)
    queries = 1
    entries: list[SweepEntry] = []
    images: list[np.ndarray | None] = []
    for zoom, variant, is_identity, skip_reason in _variants(image, cfg):
        if skip_reason is not None:
            entries.append(SweepEntry(zoom, None, None, skipped=True, skip_reason=skip_reason))
            images.append(None)
            continue
        if is_identity:
            pred = clean_pred  # the precondition query doubles as this entry
        else:
            try:
                pred = backend.classify(variant)
            except OracleError as exc:
                raise SweepAbortedError(str(exc), SweepTrace(entries, gt)) from exc
            queries += 1
        entries.append(SweepEntry(zoom, pred.top1, float(pred.probs[gt])))
        images.append(variant)
    return SweepTrace(entries, gt), images, queries


def sweep(image, gt: int, backend: Backend, cfg: AttackConfig) -> SweepTrace:
    """Classify every zoom level in the configured grid, in increasing order.

    Raises CleanMisclassificationError when the clean sample is already
    wrong. One classify query per evaluated entry; the clean check reuses
    the identity entry's query whenever the grid contains it.
    """
    trace, _, _ = _sweep_with_images(image, gt, backend, cfg)
    return trace


def select_adversarial(trace: SweepTrace, images) -> AttackResult:
    """Pick the entry with minimum ground-truth confidence (ties: smaller zoom)."""
    if len(images) != len(trace.entries):
        raise ValueError(f"{len(images)} images for {len(trace.entries)} trace entries")
    evaluated = trace.evaluated()
    if not evaluated:
        raise ValueError("trace has no evaluated entries")
    best_i, best = evaluated[0]
    for i, entry in evaluated[1:]:
        if entry.gt_confidence < best.gt_confidence:
            best_i, best = i, entry
    source = None
    for i, entry in evaluated:
        z = entry.zoom
        if (z.kind == "n" and z.n == 0) or (z.kind == "t" and z.t == 1.0):
            source = images[i]
            break
    return AttackResult(
        adversarial=images[best_i],
        chosen_zoom=best.zoom,
        trace=trace,
        success=best.top1 != trace.ground_truth,
        clean_top1=trace.ground_truth,
        adv_top1=best.top1,
        queries_used=len(evaluated),
        adv_gt_confidence=best.gt_confidence,
        source=source,
    )


def _probe_values(base: int, cfg: AttackConfig, min_side: int) -> list[int]:
    upper = min_side - 1
    if cfg.mode == DIGITAL:
        upper = min(upper, cfg.omega)
    values = []
    for k in range(1, cfg.adjust_max_tries + 1):
        for candidate in (base + k * cfg.adjust_delta, base - k * cfg.adjust_delta):
            if 0 <= candidate <= upper:
                values.append(candidate)
    return values


def adjust(result: AttackResult, backend: Backend, cfg: AttackConfig) -> AttackResult:
    """Probe crop amounts near the chosen one and keep the best improvement.

    Never returns a result with higher ground-truth confidence than its
    input. Frame-based incumbents (pre-captured zoom-out shots) are
    returned unchanged: their crop amount is not ours to perturb.
    """
    cfg.validate()
    zoom = result.chosen_zoom
    if zoom.kind == "n":
        base = zoom.n
    elif _frame_path(cfg.frames_dir, zoom.t) is not None or zoom.t < 1.0:
        return result  # frame-based incumbent, nothing digital to perturb
    elif zoom.t == 1.0:
        base = 0
    elif cfg.rho is not None:
        base = conv_t_to_n(zoom.t, ConversionParams(cfg.rho))
    else:
        return result
    if result.source is None:
        return result

    probes: list[SweepEntry] = []
    best = None  # (gt_confidence, entry, image)
    for n in _probe_values(base, cfg, min(result.source.shape[:2])):
        variant = zoom_in(result.source, n)
        pred = backend.classify(variant)
        entry = SweepEntry(ZoomLevel.digital(n), pred.top1, float(pred.probs[result.trace.ground_truth]))
        probes.append(entry)
        if best is None or entry.gt_confidence < best[0]:
            best = (entry.gt_confidence, entry, variant)
    spent = len(probes)  # one classify per probe; a shared counter would interleave across threads

    if best is not None and best[0] < result.adv_gt_confidence:
        _, entry, variant = best
        return dataclasses.replace(
            result,
            adversarial=variant,
            chosen_zoom=entry.zoom,
            success=entry.top1 != result.trace.ground_truth,
            adv_top1=entry.top1,
            adv_gt_confidence=entry.gt_confidence,
            queries_used=result.queries_used + spent,
            adjust_probes=result.adjust_probes + probes,
        )
    return dataclasses.replace(
        result,
        queries_used=result.queries_used + spent,
        adjust_probes=result.adjust_probes + probes,
    )


def attack(image, gt: int, backend: Backend, cfg: AttackConfig) -> AttackResult:
    """Full pipeline: sweep, select the confidence minimum, refine, report."""
    trace, images, sweep_queries = _sweep_with_images(image, gt, backend, cfg)
    result = select_adversarial(trace, images)
    result.queries_used = sweep_queries
    return adjust(result, backend, cfg)


def write_result(result: AttackResult, cfg: AttackConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(result.to_json(cfg), indent=2, sort_keys=True) + "\n")
