import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from skintone import imgcore

unit = st.floats(0.0, 1.0, allow_nan=False)
small = settings(max_examples=40, deadline=None)


def rgb_arrays(max_side=6):
    return st.tuples(st.integers(1, max_side), st.integers(1, max_side)).flatmap(
        lambda hw: arrays(np.float64, hw + (3,), elements=unit))


def masks(max_side=12):
    return st.tuples(st.integers(1, max_side), st.integers(1, max_side)).flatmap(
        lambda hw: arrays(bool, hw))


# HSV

@pytest.mark.parametrize("rgb, hsv", [
    ((1.0, 0.0, 0.0), (0.0, 1.0, 1.0)),
    ((0.5, 0.5, 0.5), (0.0, 0.0, 0.5)),
    ((0.0, 1.0, 0.0), (1 / 3, 1.0, 1.0)),
    ((0.0, 0.0, 1.0), (2 / 3, 1.0, 1.0)),
    ((0.0, 0.0, 0.0), (0.0, 0.0, 0.0)),
])
def test_hsv_known_pixels(rgb, hsv):
    out = imgcore.rgb_to_hsv(np.array([[rgb]]))[0, 0]
    np.testing.assert_allclose(out, hsv, atol=1e-15)


def test_hsv_to_rgb_known_pixels():
    np.testing.assert_allclose(imgcore.hsv_to_rgb(np.array([[[0.0, 1.0, 1.0]]]))[0, 0], [1, 0, 0])
    for h in (0.0, 0.3, 0.99):
        np.testing.assert_allclose(imgcore.hsv_to_rgb(np.array([[[h, 0.0, 0.4]]]))[0, 0], [0.4] * 3)


def test_hsv_matches_colorsys(rng):
    img = rng.uniform(size=(20, 20, 3))
    np.testing.assert_allclose(imgcore.rgb_to_hsv(img), oracles.hsv_colorsys(img), atol=1e-12)


def test_hsv_round_trip_1000_pixels(rng):
    img = rng.uniform(size=(1000, 1, 3))
    assert np.abs(imgcore.hsv_to_rgb(imgcore.rgb_to_hsv(img)) - img).max() <= 1e-12
    hsv = np.stack([rng.uniform(0, 1, 1000), rng.uniform(0.01, 1, 1000), rng.uniform(0.01, 1, 1000)], -1)
    back = imgcore.rgb_to_hsv(imgcore.hsv_to_rgb(hsv[:, None]))[:, 0]
    d = np.abs(back - hsv)
    d[:, 0] = np.minimum(d[:, 0], 1 - d[:, 0])
    assert d.max() <= 1e-12


@small
@given(rgb_arrays())
def test_hsv_round_trip_property(img):
    hsv = imgcore.rgb_to_hsv(img)
    assert hsv[..., 0].min() >= 0.0 and hsv[..., 0].max() < 1.0
    assert np.abs(imgcore.hsv_to_rgb(hsv) - img).max() <= 1e-12


# Morphology

def test_dilate_examples():
    empty = np.zeros((9, 9), bool)
    assert not imgcore.dilate_disc(empty, 4).any()
    single = empty.copy()
    single[4, 4] = True
    plus = imgcore.dilate_disc(single, 1)
    assert plus.sum() == 5 and plus[3, 4] and plus[4, 3] and not plus[3, 3]
    assert imgcore.dilate_disc(np.ones((9, 9), bool), 20).all()


def test_dilate_lattice_count_radius_20():
    m = np.zeros((61, 61), bool)
    m[30, 30] = True
    expected = sum(1 for a in range(-20, 21) for b in range(-20, 21) if a * a + b * b <= 400)
    assert imgcore.dilate_disc(m, 20).sum() == expected == 1257


@small
@given(masks(10), st.integers(0, 4))
def test_dilate_matches_brute_force(mask, radius):
    out = imgcore.dilate_disc(mask, radius)
    np.testing.assert_array_equal(out, oracles.brute_dilate(mask, radius))
    assert np.all(out >= mask)


@small
@given(masks(10), masks(10), st.integers(0, 3))
def test_dilate_monotone(a, b, radius):
    if a.shape != b.shape:
        b = np.resize(b, a.shape)
    union = a | b
    assert np.all(imgcore.dilate_disc(union, radius) >= imgcore.dilate_disc(a, radius))


def test_dilate_rejects_negative_radius():
    with pytest.raises(ValueError):
        imgcore.dilate_disc(np.zeros((3, 3), bool), -1)


# Components

def test_components_examples():
    ids, members = imgcore.connected_components(np.zeros((4, 5), int))
    assert len(members) == 1 and (ids == 0).all()
    ids, members = imgcore.connected_components(np.array([[0, 1], [1, 0]]))
    assert len(members) == 4
    center = np.zeros((3, 3), int)
    center[1, 1] = 1
    ids, members = imgcore.connected_components(center)
    assert len(members) == 2


@small
@given(st.tuples(st.integers(1, 10), st.integers(1, 10)).flatmap(
    lambda hw: arrays(np.int64, hw, elements=st.integers(0, 2))))
def test_components_match_flood_fill(labels):
    ids, members = imgcore.connected_components(labels)
    ref, n = oracles.flood_fill(labels)
    assert len(members) == n
    assert oracles.same_partition(ids, ref)
    flat = np.concatenate(members)
    assert np.array_equal(np.sort(flat), np.arange(labels.size))


# Windowed sums

def test_windowed_sums_example():
    stats = imgcore.windowed_sums(np.array([[1.0, 2.0, 3.0]]), 3)
    np.testing.assert_array_equal(stats.sums[0, :, 0], [3, 6, 5])
    np.testing.assert_array_equal(stats.count[0], [2, 3, 2])


def test_windowed_sums_constant_mean():
    stats = imgcore.windowed_sums(np.full((7, 9), 0.37), 5)
    np.testing.assert_allclose(stats.means[..., 0], 0.37, atol=1e-15)


def test_windowed_sums_8x8_window_5(rng):
    plane = rng.uniform(size=(8, 8))
    sums, count = oracles.brute_window_sums(plane, 5)
    stats = imgcore.windowed_sums(plane, 5)
    assert np.abs(stats.sums[..., 0] - sums).max() <= 1e-10
    np.testing.assert_array_equal(stats.count, count)


@small
@given(st.tuples(st.integers(1, 16), st.integers(1, 16)).flatmap(
    lambda hw: arrays(np.float64, hw + (2,), elements=unit)), st.sampled_from([1, 3, 5, 7, 19]))
def test_windowed_sums_property(planes, side):
    stats = imgcore.windowed_sums(planes, side, pairs=[(0, 1)])
    for k in range(2):
        sums, count = oracles.brute_window_sums(planes[..., k], side)
        assert np.abs(stats.sums[..., k] - sums).max() <= 1e-10
        np.testing.assert_array_equal(stats.count, count)
    prod, _ = oracles.brute_window_sums(planes[..., 0] * planes[..., 1], side)
    assert np.abs(stats.products[(0, 1)] - prod).max() <= 1e-10


def test_windowed_sums_reproducible(rng):
    plane = rng.uniform(size=(30, 40))
    a = imgcore.windowed_sums(plane, 7).sums
    b = imgcore.windowed_sums(plane.copy(), 7).sums
    assert a.tobytes() == b.tobytes()


def test_windowed_sums_rejects_even_side():
    with pytest.raises(ValueError):
        imgcore.windowed_sums(np.zeros((3, 3)), 4)


# Containers and PNG I/O

def test_as_image_validation():
    with pytest.raises(ValueError):
        imgcore.as_image(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        imgcore.as_image(np.full((2, 2, 3), 1.5))
    with pytest.raises(ValueError):
        imgcore.as_image(np.full((2, 2, 3), np.nan))
    with pytest.raises(ValueError):
        imgcore.as_mask(np.zeros((3, 3)), (4, 4))


def test_png_round_trip(tmp_path, rng):
    img = rng.integers(0, 256, size=(5, 7, 3)) / 255.0
    imgcore.save_png(tmp_path / "a.png", img)
    np.testing.assert_array_equal(imgcore.load_png(tmp_path / "a.png"), img)


def test_to_uint8_rounds_half_up():
    vals = np.array([0.5, 1.5, 2.5, 254.5]) / 255.0
    np.testing.assert_array_equal(imgcore.to_uint8(vals), [1, 2, 3, 255])


def test_mask_png_threshold(tmp_path):
    from PIL import Image
    Image.fromarray(np.array([[0, 127, 128, 255]], dtype=np.uint8)).save(tmp_path / "m.png")
    np.testing.assert_array_equal(imgcore.load_mask_png(tmp_path / "m.png"), [[False, False, True, True]])
    m = np.array([[True, False], [False, True]])
    imgcore.save_mask_png(tmp_path / "n.png", m)
    np.testing.assert_array_equal(imgcore.load_mask_png(tmp_path / "n.png"), m)
