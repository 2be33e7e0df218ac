"""Query-only classifier backends.

Everything the rest of the toolkit knows about a model goes through this
module: `classify` returns a probability distribution and advances a query
counter; `extract_features` (optional capability) exposes the final
convolutional maps plus classifier weights for attention mapping. No other
module reads model internals.
"""

from __future__ import annotations

import base64
import io
import json
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import requests
from PIL import Image

from .errors import CapabilityMissingError, ModelLoadError, OracleError, TransportError
from .image import image_key, resize_bilinear, validate_image

PROB_TOL = 1e-5


@dataclass(frozen=True)
class LabelSpace:
    names: tuple[str, ...]

    def __post_init__(self):
        if len(self.names) < 2:
            raise ValueError("label space needs at least 2 classes")
        if len(set(self.names)) != len(self.names):
            raise ValueError("label names must be unique")

    def __len__(self) -> int:
        return len(self.names)

    def __getitem__(self, idx: int) -> str:
        return self.names[idx]

    def index(self, name: str) -> int:
        return self.names.index(name)


@dataclass(frozen=True)
class Prediction:
    probs: np.ndarray
    top1: int
    query_cost: int = 1


@dataclass(frozen=True)
class FeatureBundle:
    feature_maps: np.ndarray  # (K, h, w)
    class_weights: np.ndarray  # (num_classes, K)

    def __post_init__(self):
        if self.feature_maps.ndim != 3:
            raise ValueError(f"feature maps must be (K, h, w), got {self.feature_maps.shape}")
        if self.class_weights.ndim != 2:
            raise ValueError(f"class weights must be (C, K), got {self.class_weights.shape}")
        if self.feature_maps.shape[0] != self.class_weights.shape[1]:
            raise ValueError(
                f"K mismatch: {self.feature_maps.shape[0]} maps vs "
                f"{self.class_weights.shape[1]} weight columns"
            )


def _as_prediction(probs) -> Prediction:
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 1:
        raise OracleError(f"probability vector must be 1-D, got shape {probs.shape}")
    if (probs < 0).any() or abs(float(probs.sum()) - 1.0) > PROB_TOL:
        raise OracleError(f"probabilities must be nonnegative and sum to 1, got sum={probs.sum()}")
    # argmax breaks ties toward the lowest index, which keeps traces reproducible
    return Prediction(probs=probs, top1=int(np.argmax(probs)))


class Backend:
    """Base class: query accounting plus the capability contract."""

    capabilities: frozenset = frozenset({"classify"})
    model_id: str = "backend"

    def __init__(self, labels: LabelSpace | None):
        self._labels = labels
        self._queries = 0
        self._lock = threading.Lock()

    @property
    def labels(self) -> LabelSpace | None:
        return self._labels

    @property
    def query_count(self) -> int:
        return self._queries

    def classify(self, img: np.ndarray) -> Prediction:
        validate_image(img)
        probs = self._classify_probs(img)
        with self._lock:
            self._queries += 1
        return _as_prediction(probs)

    def extract_features(self, img: np.ndarray) -> FeatureBundle:
        if "features" not in self.capabilities:
            raise CapabilityMissingError(
                f"{type(self).__name__} does not expose feature maps"
            )
        validate_image(img)
        return self._extract_features(img)

    def _classify_probs(self, img: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _extract_features(self, img: np.ndarray) -> FeatureBundle:
        raise NotImplementedError


class MockTableBackend(Backend):
    """Deterministic lookup table keyed by image content hash.

    Unknown images fall back to `default` probs when given, else raise.
    Immutable after construction. Optionally carries one synthetic feature
    bundle, returned verbatim for every image.
    """

    def __init__(self, labels, entries: dict[str, np.ndarray], default=None, features=None,
                 model_id: str = "mock"):
        super().__init__(LabelSpace(tuple(labels)))
        self._entries = {k: np.asarray(v, dtype=np.float64) for k, v in entries.items()}
        self._default = None if default is None else np.asarray(default, dtype=np.float64)
        self._features = features
        self.model_id = model_id
        if features is not None:
            self.capabilities = frozenset({"classify", "features"})

    @classmethod
    def from_json(cls, path: str | Path) -> "MockTableBackend":
        try:
            obj = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ModelLoadError(f"cannot load mock table: {exc}") from exc
        features = None
        if "features" in obj:
            features = FeatureBundle(
                feature_maps=np.asarray(obj["features"]["feature_maps"], dtype=np.float64),
                class_weights=np.asarray(obj["features"]["class_weights"], dtype=np.float64),
            )
        return cls(
            labels=obj["labels"],
            entries=obj.get("entries", {}),
            default=obj.get("default"),
            features=features,
            model_id=f"mock:{Path(path).name}",
        )

    def _classify_probs(self, img: np.ndarray) -> np.ndarray:
        key = image_key(img)
        if key in self._entries:
            return self._entries[key]
        if self._default is not None:
            return self._default
        raise OracleError(f"mock table has no entry for image {key[:12]}… and no default")

    def _extract_features(self, img: np.ndarray) -> FeatureBundle:
        return self._features


class OnnxBackend(Backend):
    """Runs an ONNX classifier described by its JSON sidecar.

    Sidecar schema: {"input_size": [h, w], "mean": [...], "std": [...],
    "applies_softmax": bool, "labels": [...], "feature_output": name?,
    "class_weights_output": name?}. `applies_softmax` means the model emits
    logits and this backend applies the softmax. Uses onnxruntime when
    importable, else the built-in interpreter; `runtime` pins one explicitly.
    """

    def __init__(self, model_path: str | Path, sidecar_path: str | Path | None = None,
                 runtime: str = "auto"):
        model_path = Path(model_path)
        sidecar = self._load_sidecar(model_path, sidecar_path)
        super().__init__(LabelSpace(tuple(sidecar["labels"])))
        self.model_id = model_path.name
        self._input_h, self._input_w = (int(v) for v in sidecar["input_size"])
        self._mean = np.asarray(sidecar.get("mean", [0.0]), dtype=np.float32)
        self._std = np.asarray(sidecar.get("std", [1.0]), dtype=np.float32)
        self._apply_softmax = bool(sidecar.get("applies_softmax", False))
        self._feature_output = sidecar.get("feature_output")
        self._weights_output = sidecar.get("class_weights_output", "class_weights")
        if self._feature_output:
            self.capabilities = frozenset({"classify", "features"})
        self._session, self._input_name, self._outputs, self._channels = self._open(
            model_path, runtime
        )
        self._run_lock = threading.Lock()

    @staticmethod
    def _load_sidecar(model_path: Path, sidecar_path) -> dict:
        if sidecar_path is None:
            candidates = [model_path.with_suffix(".json"), model_path.parent / "sidecar.json"]
            sidecar_path = next((c for c in candidates if c.exists()), candidates[0])
        try:
            obj = json.loads(Path(sidecar_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ModelLoadError(f"cannot load model sidecar: {exc}") from exc
        for key in ("input_size", "labels"):
            if key not in obj:
                raise ModelLoadError(f"sidecar is missing required key {key!r}")
        return obj

    @staticmethod
    def _open(model_path: Path, runtime: str):
        if runtime not in ("auto", "onnxruntime", "builtin"):
            raise ModelLoadError(f"unknown runtime {runtime!r}")
        session = None
        if runtime in ("auto", "onnxruntime"):
            try:
                import onnxruntime  # optional dependency

                session = onnxruntime.InferenceSession(
                    str(model_path), providers=["CPUExecutionProvider"]
                )
            except ImportError:
                if runtime == "onnxruntime":
                    raise ModelLoadError("onnxruntime is not installed")
            except Exception as exc:
                raise ModelLoadError(f"onnxruntime failed to load model: {exc}") from exc
        if session is not None:
            input_meta = session.get_inputs()[0]
            outputs = [o.name for o in session.get_outputs()]
            channels = int(input_meta.shape[1])

            def run(feeds, wanted):
                return session.run(wanted, feeds)

            return run, input_meta.name, outputs, channels

        from . import onnxlite

        model = onnxlite.OnnxModel.load(model_path)
        if not model.input_names:
            raise ModelLoadError("model declares no inputs")
        name = model.input_names[0]
        channels = 3
        for node in model.nodes:
            if node.op_type == "Conv":
                channels = int(model.initializers[node.inputs[1]].shape[1])
                break

        def run(feeds, wanted):
            return model.run(feeds, wanted)

        return run, name, model.output_names, channels

    def _preprocess(self, img: np.ndarray) -> np.ndarray:
        if img.shape[2] == 1 and self._channels == 3:
            img = np.repeat(img, 3, axis=2)
        elif img.shape[2] != self._channels:
            raise OracleError(
                f"model expects {self._channels} channel(s), image has {img.shape[2]}"
            )
        resized = resize_bilinear(img, self._input_h, self._input_w)
        x = resized.astype(np.float32) / 255.0
        x = (x - self._mean.reshape(1, 1, -1)) / self._std.reshape(1, 1, -1)
        return x.transpose(2, 0, 1)[None, ...].astype(np.float32)

    def _run(self, img: np.ndarray, wanted: list[str]):
        feeds = {self._input_name: self._preprocess(img)}
        with self._run_lock:
            return self._session(feeds, wanted)

    def _classify_probs(self, img: np.ndarray) -> np.ndarray:
        scores = np.asarray(self._run(img, [self._outputs[0]])[0], dtype=np.float64).reshape(-1)
        if self._apply_softmax:
            shifted = scores - scores.max()
            exp = np.exp(shifted)
            scores = exp / exp.sum()
        return scores

    def _extract_features(self, img: np.ndarray) -> FeatureBundle:
        for name in (self._feature_output, self._weights_output):
            if name not in self._outputs:
                raise CapabilityMissingError(f"model has no output named {name!r}")
        maps, weights = self._run(img, [self._feature_output, self._weights_output])
        maps = np.asarray(maps, dtype=np.float64)
        if maps.ndim == 4:
            maps = maps[0]
        return FeatureBundle(feature_maps=maps, class_weights=np.asarray(weights, dtype=np.float64))


class HttpBackend(Backend):
    """Remote classifier speaking the v1 JSON-over-HTTP protocol.

    POST {base_url}/v1/classify with {"image_png_base64": ...}; expects 200
    and {"probs": [...], "labels": [...]}. Classification only; no feature
    endpoint exists in v1.
    """

    def __init__(self, base_url: str, labels=None, timeout: float = 30.0):
        super().__init__(None if labels is None else LabelSpace(tuple(labels)))
        self.base_url = base_url.rstrip("/")
        self.model_id = self.base_url
        self._timeout = timeout
        self._session = requests.Session()

    def _classify_probs(self, img: np.ndarray) -> np.ndarray:
        buf = io.BytesIO()
        mode = "L" if img.shape[2] == 1 else "RGB"
        data = img[:, :, 0] if mode == "L" else img
        Image.fromarray(data, mode=mode).save(buf, format="PNG")
        payload = {"image_png_base64": base64.b64encode(buf.getvalue()).decode()}
        try:
            resp = self._session.post(
                f"{self.base_url}/v1/classify", json=payload, timeout=self._timeout
            )
        except requests.RequestException as exc:
            raise TransportError(f"classify request failed: {exc}") from exc
        if resp.status_code != 200:
            raise TransportError(f"classify returned HTTP {resp.status_code}")
        try:
            body = resp.json()
            probs = body["probs"]
            labels = body["labels"]
        except (ValueError, KeyError, TypeError) as exc:
            raise TransportError(f"malformed classify response: {exc}") from exc
        if self._labels is None:
            self._labels = LabelSpace(tuple(labels))
        elif tuple(labels) != self._labels.names:
            raise TransportError("service label space changed between calls")
        return np.asarray(probs, dtype=np.float64)
