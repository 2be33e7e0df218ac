import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zoomfool.zoom import crop_window, zoom_in

from conftest import rand_image


def reference_zoom(img, n):
    """Loop-based crop + bilinear upscale, kept independent of the library path."""
    h, w, c = img.shape
    lead = n // 2
    trail = n - lead
    crop = img[lead:h - trail, lead:w - trail, :].astype(float)
    ch, cw = crop.shape[:2]
    out = np.zeros((h, w, c), dtype=np.uint8)
    for y in range(h):
        sy = min(max((y + 0.5) * ch / h - 0.5, 0.0), ch - 1.0)
        y0 = int(np.floor(sy))
        y1 = min(y0 + 1, ch - 1)
        fy = sy - y0
        for x in range(w):
            sx = min(max((x + 0.5) * cw / w - 0.5, 0.0), cw - 1.0)
            x0 = int(np.floor(sx))
            x1 = min(x0 + 1, cw - 1)
            fx = sx - x0
            for ch_i in range(c):
                v = (
                    crop[y0, x0, ch_i] * (1 - fy) * (1 - fx)
                    + crop[y0, x1, ch_i] * (1 - fy) * fx
                    + crop[y1, x0, ch_i] * fy * (1 - fx)
                    + crop[y1, x1, ch_i] * fy * fx
                )
                out[y, x, ch_i] = min(max(int(np.floor(v + 0.5)), 0), 255)
    return out


# reference_zoom(arange(256).reshape(16,16,1), 8), frozen at authoring time
GRADIENT_16_N8 = [
    [68, 68, 69, 69, 70, 70, 71, 71, 72, 72, 73, 73, 74, 74, 75, 75],
    [72, 72, 73, 73, 74, 74, 75, 75, 76, 76, 77, 77, 78, 78, 79, 79],
    [80, 80, 81, 81, 82, 82, 83, 83, 84, 84, 85, 85, 86, 86, 87, 87],
    [88, 88, 89, 89, 90, 90, 91, 91, 92, 92, 93, 93, 94, 94, 95, 95],
    [96, 96, 97, 97, 98, 98, 99, 99, 100, 100, 101, 101, 102, 102, 103, 103],
    [104, 104, 105, 105, 106, 106, 107, 107, 108, 108, 109, 109, 110, 110, 111, 111],
    [112, 112, 113, 113, 114, 114, 115, 115, 116, 116, 117, 117, 118, 118, 119, 119],
    [120, 120, 121, 121, 122, 122, 123, 123, 124, 124, 125, 125, 126, 126, 127, 127],
    [128, 128, 129, 129, 130, 130, 131, 131, 132, 132, 133, 133, 134, 134, 135, 135],
    [136, 136, 137, 137, 138, 138, 139, 139, 140, 140, 141, 141, 142, 142, 143, 143],
    [144, 144, 145, 145, 146, 146, 147, 147, 148, 148, 149, 149, 150, 150, 151, 151],
    [152, 152, 153, 153, 154, 154, 155, 155, 156, 156, 157, 157, 158, 158, 159, 159],
    [160, 160, 161, 161, 162, 162, 163, 163, 164, 164, 165, 165, 166, 166, 167, 167],
    [168, 168, 169, 169, 170, 170, 171, 171, 172, 172, 173, 173, 174, 174, 175, 175],
    [176, 176, 177, 177, 178, 178, 179, 179, 180, 180, 181, 181, 182, 182, 183, 183],
    [180, 180, 181, 181, 182, 182, 183, 183, 184, 184, 185, 185, 186, 186, 187, 187],
]


def test_identity_is_bit_exact(rng):
    img = rand_image(rng, 24, 17, 3)
    out = zoom_in(img, 0)
    assert np.array_equal(out, img)
    assert out is not img  # a copy, inputs are never aliased


def test_constant_image_is_fixed_point():
    img = np.full((8, 8, 1), 7, dtype=np.uint8)
    assert np.array_equal(zoom_in(img, 4), img)


def test_gradient_crop_matches_reference():
    img = np.arange(256, dtype=np.uint8).reshape(16, 16, 1)
    expected = np.asarray(GRADIENT_16_N8, dtype=np.uint8)[:, :, None]
    assert np.array_equal(reference_zoom(img, 8), expected)
    got = zoom_in(img, 8)
    assert np.max(np.abs(got.astype(int) - expected.astype(int))) <= 1


@settings(deadline=None, max_examples=40)
@given(
    h=st.integers(min_value=8, max_value=48),
    w=st.integers(min_value=8, max_value=48),
    c=st.sampled_from([1, 3]),
    n_frac=st.floats(min_value=0.0, max_value=0.99),
    seed=st.integers(min_value=0, max_value=2**31),
)
def test_shape_preserved_and_matches_reference(h, w, c, n_frac, seed):
    img = rand_image(np.random.default_rng(seed), h, w, c)
    n = int(n_frac * (min(h, w) - 1))
    out = zoom_in(img, n)
    assert out.shape == img.shape
    ref = reference_zoom(img, n)
    assert np.max(np.abs(out.astype(int) - ref.astype(int))) <= 1


@settings(deadline=None, max_examples=30)
@given(
    h=st.integers(min_value=8, max_value=64),
    w=st.integers(min_value=8, max_value=64),
    value=st.integers(min_value=0, max_value=255),
    n_frac=st.floats(min_value=0.0, max_value=0.99),
)
def test_constant_invariance(h, w, value, n_frac):
    img = np.full((h, w, 1), value, dtype=np.uint8)
    n = int(n_frac * (min(h, w) - 1))
    out = zoom_in(img, n)
    assert np.max(np.abs(out.astype(int) - int(value))) <= 1


@settings(deadline=None, max_examples=60)
@given(
    h=st.integers(min_value=8, max_value=100),
    w=st.integers(min_value=8, max_value=100),
    data=st.data(),
)
def test_crop_windows_nest(h, w, data):
    hi = min(h, w) - 1
    n1 = data.draw(st.integers(min_value=0, max_value=hi - 1))
    n2 = data.draw(st.integers(min_value=n1 + 1, max_value=hi))
    t1, l1, b1, r1 = crop_window(h, w, n1)
    t2, l2, b2, r2 = crop_window(h, w, n2)
    assert t1 <= t2 and l1 <= l2 and b2 <= b1 and r2 <= r1
    assert (b2 - t2) < (b1 - t1) and (r2 - l2) < (r1 - l1)  # proper containment


def test_zoom_is_deterministic(rng):
    img = rand_image(rng, 32, 32, 3)
    assert np.array_equal(zoom_in(img, 13), zoom_in(img, 13))


def test_rejects_out_of_range_crop(rng):
    img = rand_image(rng, 16, 12, 3)
    with pytest.raises(ValueError):
        zoom_in(img, 12)
    with pytest.raises(ValueError):
        zoom_in(img, -1)
