import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skintone import grading
from skintone.grading import IDTConfig

floats = st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=60)


def test_constant_target_maps_to_constant(rng):
    out = grading.pdf_transfer_1d(rng.uniform(size=50), np.full(30, 0.4))
    assert np.all(out == 0.4)


def test_constant_source_maps_to_target_median():
    out = grading.pdf_transfer_1d(np.full(5, 0.2), np.array([0.1, 0.5, 0.9, 0.3]))
    assert np.all(out == 0.3)


def test_identical_samples_nearly_fixed(rng):
    s = rng.uniform(size=2000)
    out = grading.pdf_transfer_1d(s, s, bins=300)
    assert np.abs(out - s).max() <= 1.0 / 300


def test_uniform_to_uniform_is_affine(rng):
    s = rng.uniform(0, 1, 5000)
    t = rng.uniform(2, 4, 5000)
    out = grading.pdf_transfer_1d(s, t, bins=300)
    assert np.abs(out - (2 + 2 * s)).max() < 0.1


def test_empty_samples_rejected():
    with pytest.raises(ValueError):
        grading.pdf_transfer_1d([], [1.0])


@settings(max_examples=80, deadline=None)
@given(floats, floats, st.integers(2, 50))
def test_map_is_monotone(src, tgt, bins):
    src = np.array(src)
    out = grading.pdf_transfer_1d(src, np.array(tgt), bins)
    order = np.argsort(src, kind="stable")
    assert np.all(np.diff(out[order]) >= -1e-12)
    assert out.min() >= min(tgt) - 1e-12 and out.max() <= max(tgt) + 1e-12


def test_rotation_is_orthonormal(rng):
    for _ in range(20):
        q = grading.random_rotation(rng)
        np.testing.assert_allclose(q @ q.T, np.eye(3), atol=1e-12)


def test_identity_rotation_is_per_channel_transfer(rng):
    src = rng.uniform(size=(400, 3))
    tgt = rng.uniform(0.2, 0.6, size=(300, 3))
    out = grading.idt_transfer(src, tgt, IDTConfig(bins=64, clip=False), rotations=[np.eye(3)])
    for c in range(3):
        np.testing.assert_allclose(out[:, c], grading.pdf_transfer_1d(src[:, c], tgt[:, c], 64), atol=1e-12)


def test_shifted_cloud_moves_to_target_mean(rng):
    src = rng.normal(0.4, 0.05, size=(4000, 3))
    tgt = rng.normal(0.6, 0.05, size=(4000, 3)) * [1.0, 0.9, 0.8]
    out = grading.idt_transfer(src, tgt, IDTConfig(iterations=20, seed=1))
    assert np.abs(out.mean(axis=0) - tgt.mean(axis=0)).max() <= 0.02


def test_sliced_distance_drops(rng):
    src = rng.normal(0.3, 0.05, size=(3000, 3))
    tgt = rng.normal(0.6, 0.08, size=(3000, 3))
    dirs = [grading.random_rotation(rng)[0] for _ in range(16)]
    out = grading.idt_transfer(src, tgt, IDTConfig(iterations=10, seed=2, clip=False))
    assert grading.sliced_distance(out, tgt, dirs) < 0.1 * grading.sliced_distance(src, tgt, dirs)


def test_central_band_matches_gaussian_quantiles(rng):
    src = rng.normal(0.0, 1.0, 20000)
    tgt = rng.normal(3.0, 2.0, 20000)
    out = grading.pdf_transfer_1d(src, tgt, bins=300)
    band = np.abs(src) < 1.5
    assert np.abs(out[band] - (3.0 + 2.0 * src[band])).max() < 0.15


def test_idt_deterministic(rng):
    src = rng.uniform(size=(500, 3))
    tgt = rng.uniform(size=(400, 3))
    a = grading.idt_transfer(src, tgt, IDTConfig(seed=9))
    b = grading.idt_transfer(src.copy(), tgt.copy(), IDTConfig(seed=9))
    assert a.tobytes() == b.tobytes()


def test_idt_history_and_config_checks(rng):
    hist = []
    grading.idt_transfer(rng.uniform(size=(50, 3)), rng.uniform(size=(50, 3)), IDTConfig(iterations=3), history=hist)
    assert len(hist) == 3
    with pytest.raises(ValueError):
        IDTConfig(iterations=0)
    with pytest.raises(ValueError):
        IDTConfig(bins=1)
    with pytest.raises(ValueError):
        grading.idt_transfer(np.zeros((0, 3)), np.zeros((4, 3)))


def test_assemble_guide(rng):
    y = rng.uniform(size=(5, 5, 3))
    empty = np.zeros((5, 5), bool)
    np.testing.assert_array_equal(grading.assemble_guide(y, np.zeros((0, 3)), empty), y)
    full = np.ones((5, 5), bool)
    np.testing.assert_array_equal(grading.assemble_guide(y, grading.skin_samples(y, full), full), y)
    one = empty.copy()
    one[2, 3] = True
    g = grading.assemble_guide(y, [[0.1, 0.2, 0.3]], one)
    np.testing.assert_array_equal(g[2, 3], [0.1, 0.2, 0.3])
    assert np.array_equal(g[~one], y[~one])
    with pytest.raises(ValueError):
        grading.assemble_guide(y, np.zeros((2, 3)), one)
