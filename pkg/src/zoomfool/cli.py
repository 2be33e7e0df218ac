"""Command-line surface: attack | sweep | asr | build-zi | cam.

Exit status: 0 success, 1 attack ran but found no adversarial sample,
2 configuration/usage error, 3 oracle or transport failure. Artifacts go
under --out; diagnostics go to stderr (level via ZOOMFOOL_LOG).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .analysis import compute_asr, compute_cam, render_asr_table, sweep_curve
from .attack import AttackConfig, attack, sweep
from .errors import CleanMisclassificationError, ConfigError, OracleError
from .image import read_png, write_png
from .oracle import Backend, HttpBackend, MockTableBackend, OnnxBackend
from .zidataset import ZiSpec, build_zi

log = logging.getLogger("zoomfool")

_CFG_KEYS = (
    "gamma_min",
    "gamma_max",
    "t_step",
    "omega",
    "rho",
    "n_step",
    "adjust_delta",
    "adjust_max_tries",
    "mode",
    "frames_dir",
)


def _setup_logging() -> None:
    level = os.environ.get("ZOOMFOOL_LOG", "WARNING").upper()
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, level, logging.WARNING))


def _add_backend_flags(sub: argparse.ArgumentParser) -> None:
    group = sub.add_mutually_exclusive_group(required=True)
    group.add_argument("--model", help="ONNX model file (JSON sidecar alongside)")
    group.add_argument("--url", help="base URL of a v1 classify service")
    group.add_argument("--mock", help="mock table JSON file")


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--out", required=True, help="output directory for artifacts")
    sub.add_argument("--config", help="JSON config file (flags override it)")
    sub.add_argument("--gamma-min", type=float, dest="gamma_min")
    sub.add_argument("--gamma-max", type=float, dest="gamma_max")
    sub.add_argument("--omega", type=int, help="max crop pixels for digital sweeps")
    sub.add_argument("--rho", type=int, help="crop pixels per 1.0x of optical zoom")
    sub.add_argument("--step", type=int, help="digital sweep step in pixels")
    sub.add_argument("--jobs", type=int, default=None, help="parallel workers (default: cores)")
    sub.add_argument("--seed", type=int, default=None)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zoomfool", description=__doc__)
    subs = parser.add_subparsers(dest="subcommand", required=True)

    p_attack = subs.add_parser("attack", help="attack one image end to end")
    p_attack.add_argument("--image", required=True)
    p_attack.add_argument("--label", required=True, help="ground-truth label index or name")
    _add_backend_flags(p_attack)
    _add_common_flags(p_attack)

    p_sweep = subs.add_parser("sweep", help="record the confidence trace only")
    p_sweep.add_argument("--image", required=True)
    p_sweep.add_argument("--label", required=True)
    _add_backend_flags(p_sweep)
    _add_common_flags(p_sweep)

    p_asr = subs.add_parser("asr", help="attack a labeled dataset and report ASR")
    p_asr.add_argument("--dataset", required=True, help="directory of label-named subdirs")
    _add_backend_flags(p_asr)
    _add_common_flags(p_asr)

    p_zi = subs.add_parser("build-zi", help="build a zoomed-in augmentation dataset")
    p_zi.add_argument("--dataset", required=True, help="source directory of label-named subdirs")
    _add_common_flags(p_zi)

    p_cam = subs.add_parser("cam", help="render a class-activation overlay")
    p_cam.add_argument("--image", required=True)
    p_cam.add_argument("--label", default=None, help="class index or name (default: top-1)")
    _add_backend_flags(p_cam)
    _add_common_flags(p_cam)
    return parser


def _load_file_config(args) -> dict:
    if not getattr(args, "config", None):
        return {}
    try:
        obj = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("config file must hold a JSON object")
    return obj


def _attack_config(args, file_cfg: dict) -> AttackConfig:
    cfg = AttackConfig()
    for key in _CFG_KEYS:
        if key in file_cfg:
            setattr(cfg, key, file_cfg[key])
    for key in ("gamma_min", "gamma_max", "omega", "rho"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    if getattr(args, "step", None) is not None:
        cfg.n_step = args.step
    return cfg.validate()


def _backend(args, file_cfg: dict) -> Backend:
    if args.mock:
        return MockTableBackend.from_json(args.mock)
    if args.model:
        return OnnxBackend(args.model)
    return HttpBackend(args.url, labels=file_cfg.get("labels"))


def _resolve_label(value: str, backend: Backend) -> int:
    try:
        return int(value)
    except ValueError:
        pass
    if backend.labels is None:
        raise ConfigError(f"label {value!r} needs a backend that declares label names")
    try:
        return backend.labels.index(value)
    except ValueError:
        raise ConfigError(f"unknown label {value!r}") from None


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _cmd_attack(args, file_cfg: dict) -> int:
    cfg = _attack_config(args, file_cfg)
    backend = _backend(args, file_cfg)
    image = read_png(args.image)
    gt = _resolve_label(args.label, backend)
    out = _out_dir(args)
    result = attack(image, gt, backend, cfg)
    _write_json(out / "result.json", result.to_json(cfg))
    write_png(result.adversarial, out / "adversarial.png")
    (out / "sweep.svg").write_text(sweep_curve(result.trace))
    log.info("attack %s: success=%s queries=%d", args.image, result.success, result.queries_used)
    return 0 if result.success else 1


def _cmd_sweep(args, file_cfg: dict) -> int:
    cfg = _attack_config(args, file_cfg)
    backend = _backend(args, file_cfg)
    image = read_png(args.image)
    gt = _resolve_label(args.label, backend)
    out = _out_dir(args)
    trace = sweep(image, gt, backend, cfg)
    _write_json(out / "trace.json", trace.to_json())
    (out / "sweep.svg").write_text(sweep_curve(trace))
    return 0


def _load_dataset(root: Path, backend: Backend):
    if backend.labels is None:
        raise ConfigError("asr needs a backend with a label space (or 'labels' in --config)")
    if not root.is_dir():
        raise ConfigError(f"dataset directory {root} does not exist")
    items, ids = [], []
    for class_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        try:
            label = backend.labels.index(class_dir.name)
        except ValueError:
            raise ConfigError(f"dataset class {class_dir.name!r} is not a model label") from None
        for path in sorted(class_dir.iterdir()):
            if path.suffix.lower() == ".png":
                items.append((read_png(path), label))
                ids.append(f"{class_dir.name}/{path.name}")
    if not items:
        raise ConfigError(f"no PNG images found under {root}")
    return items, ids


def _cmd_asr(args, file_cfg: dict) -> int:
    cfg = _attack_config(args, file_cfg)
    backend = _backend(args, file_cfg)
    items, ids = _load_dataset(Path(args.dataset), backend)
    out = _out_dir(args)
    jobs = args.jobs if args.jobs else (os.cpu_count() or 1)
    report = compute_asr(items, backend, cfg, ids=ids, jobs=jobs)
    _write_json(out / "report.json", report.to_json())
    (out / "summary.md").write_text(render_asr_table({report.model_id: report}))
    log.info("asr=%.4f over %d images (%d excluded)", report.asr, report.total, len(report.excluded))
    return 0


def _cmd_build_zi(args, file_cfg: dict) -> int:
    step = args.step if args.step is not None else file_cfg.get("n_step", 6)
    omega = args.omega if args.omega is not None else file_cfg.get("omega", 60)
    levels = tuple(file_cfg.get("n_levels", range(step, omega + 1, step)))
    spec = ZiSpec(
        source_dir=args.dataset,
        out_dir=args.out,
        n_levels=levels,
        per_class_samples=file_cfg.get("per_class_samples", 50),
        seed=args.seed if args.seed is not None else file_cfg.get("seed", 0),
    )
    try:
        manifest = build_zi(spec, jobs=args.jobs if args.jobs else (os.cpu_count() or 1))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    log.info("build-zi totals: %s", manifest.totals)
    return 0


def _cmd_cam(args, file_cfg: dict) -> int:
    backend = _backend(args, file_cfg)
    image = read_png(args.image)
    if args.label is None:
        class_index = backend.classify(image).top1
    else:
        class_index = _resolve_label(args.label, backend)
    out = _out_dir(args)
    try:
        heatmap = compute_cam(backend, image, class_index)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    write_png(heatmap.overlay, out / "cam_overlay.png")
    _write_json(out / "cam.json", heatmap.to_json())
    return 0


_COMMANDS = {
    "attack": _cmd_attack,
    "sweep": _cmd_sweep,
    "asr": _cmd_asr,
    "build-zi": _cmd_build_zi,
    "cam": _cmd_cam,
}


def main(argv=None) -> int:
    _setup_logging()
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        file_cfg = _load_file_config(args)
        return _COMMANDS[args.subcommand](args, file_cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CleanMisclassificationError as exc:
        print(f"attack not applicable: {exc}", file=sys.stderr)
        return 1
    except OracleError as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
