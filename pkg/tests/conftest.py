from pathlib import Path

import numpy as np
import pytest

from zoomfool import MockTableBackend, ZoomLevel, image_key, zoom_in
from zoomfool.attack import SweepEntry, SweepTrace

FIXTURES = Path(__file__).parent / "fixtures"

# Published street-sign label sequences along the focal sweep, by
# (distance, angle) column. 919 is the ground-truth digital label.
GT_STREET_SIGN = 919
TABLE2_LEVELS = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9, 2.0, 2.5]
TABLE2 = {
    "6m_0": [975, 975, 975, 975, 919, 919, 919, 919, 919, 919, 919, 919, 919, 919, 919, 919, 919],
    "6m_30": [975, 975, 975, 621, 522, 919, 919, 919, 919, 919, 919, 919, 919, 919, 919, 919, 919],
    "6m_45": [970, 975, 975, 975, 920, 919, 919, 919, 919, 919, 919, 919, 919, 919, 919, 919, 919],
    "9m_0": [975, 975, 671, 172, 417, 522, 574, 919, 919, 919, 919, 919, 919, 919, 919, 919, 919],
    "9m_30": [975, 975, 621, 733, 920, 660, 863, 970, 919, 919, 919, 919, 919, 919, 919, 919, 919],
    "9m_45": [975, 574, 621, 574, 919, 621, 621, 919, 919, 919, 919, 919, 919, 919, 919, 919, 919],
    "12m_0": [703, 703, 975, 703, 703, 703, 843, 975, 975, 621, 919, 975, 919, 919, 919, 919, 919],
    "12m_30": [975, 975, 975, 621, 920, 920, 920, 920, 919, 919, 919, 919, 919, 919, 919, 919, 919],
    "12m_45": [825, 825, 621, 880, 975, 621, 621, 621, 621, 621, 919, 919, 919, 919, 621, 919, 919],
}


def rand_image(rng, h=16, w=16, c=3):
    return rng.integers(0, 256, (h, w, c), dtype=np.uint8)


def label_trace(levels, labels, gt, confidence=0.5):
    """Trace with the given top-1 labels along physical zoom levels."""
    entries = [
        SweepEntry(ZoomLevel.physical(t), top1, confidence) for t, top1 in zip(levels, labels)
    ]
    return SweepTrace(entries, gt)


def digital_trace(values, gt):
    """Trace from (n, top1, gt_confidence) triples."""
    entries = [SweepEntry(ZoomLevel.digital(n), top1, conf) for n, top1, conf in values]
    return SweepTrace(entries, gt)


def mock_from_profile(image, profile, labels=("gt", "other"), default=None, features=None):
    """Mock oracle scripted over the zoomed variants of one image.

    profile maps crop amount -> probability vector; entries are keyed by the
    content hash of zoom_in(image, n).
    """
    entries = {image_key(zoom_in(image, n)): probs for n, probs in profile.items()}
    return MockTableBackend(labels, entries, default=default, features=features)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
