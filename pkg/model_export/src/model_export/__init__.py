"""Tiny GAP-CNN trainer and ONNX exporter for the zoom-attack toolkit's tests."""

from .export import export_onnx, load_labeled_dir, train_and_export, write_sidecar
from .net import TinyGapNet, train
from .shapes import CLASSES, generate_dataset, render_shape

__version__ = "0.1.0"
