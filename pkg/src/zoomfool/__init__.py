"""Black-box adversarial attacks on image classifiers via digital zoom."""

from .attack import AttackConfig, AttackResult, SweepEntry, SweepTrace, adjust, attack, select_adversarial, sweep
from .analysis import (
    AsrReport,
    CamHeatmap,
    DiscontinuityReport,
    compute_asr,
    compute_cam,
    detect_discontinuity,
    render_asr_table,
    sweep_curve,
)
from .image import image_key, read_png, resize_bilinear, write_png
from .oracle import FeatureBundle, HttpBackend, LabelSpace, MockTableBackend, OnnxBackend, Prediction
from .zidataset import ZiManifest, ZiSpec, build_zi, sample_per_class
from .zoom import ConversionParams, ZoomLevel, conv_n_to_t, conv_t_to_n, crop_window, zoom_in

__version__ = "0.1.0"
