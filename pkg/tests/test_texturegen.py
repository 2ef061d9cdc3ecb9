import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from pavesynth.cracksynth import CrackParams, generate_crack, rasterize_crack
from pavesynth.errors import ParameterError
from pavesynth.texturegen import (
    TileSpec,
    assemble_defect,
    decode_normals,
    normal_from_gradient,
    synthesize_tile,
)

from .oracles import luminance


def test_flat_tile_is_base_gray():
    spec = TileSpec(resolution_px=64, noise_amplitude=0.0, joint_width_m=0.0, base_gray=0.42)
    tile = synthesize_tile(spec)
    assert tile.shape == (64, 64, 3)
    assert np.all(tile == 0.42)


def test_tile_deterministic_and_seed_dependent():
    spec = TileSpec(resolution_px=96, seed=5)
    np.testing.assert_array_equal(synthesize_tile(spec), synthesize_tile(spec))
    other = synthesize_tile(TileSpec(resolution_px=96, seed=6))
    assert not np.array_equal(synthesize_tile(spec), other)


def test_tile_range_and_seams():
    spec = TileSpec(resolution_px=200, joint_width_m=0.1)
    tile = synthesize_tile(spec)
    assert tile.min() >= 0 and tile.max() <= 1
    seam = spec.seam_mask()
    assert seam[0, 100] and seam[100, 0] and not seam[100, 100]
    assert tile[seam].mean() < tile[~seam].mean()


def test_tile_noise_statistics():
    stds = []
    for seed in range(10):
        spec = TileSpec(resolution_px=200, seed=seed)
        tile = synthesize_tile(spec)[:, :, 0]
        stds.append(tile[~spec.seam_mask()].std())
    expected = spec.noise_amplitude * spec.base_gray
    assert abs(np.mean(stds) - expected) <= 0.3 * expected


def test_tile_spec_validation():
    for bad in (dict(size_m=0), dict(resolution_px=8), dict(base_gray=1.0), dict(joint_width_m=-1)):
        with pytest.raises(ParameterError):
            synthesize_tile(TileSpec(**bad))


def test_normal_of_constant_is_up():
    enc = normal_from_gradient(np.full((10, 12), 3.0), strength=2.0)
    np.testing.assert_array_equal(enc[..., 0], 0.5)
    np.testing.assert_array_equal(enc[..., 1], 0.5)
    np.testing.assert_array_equal(enc[..., 2], 1.0)


@pytest.mark.parametrize("a, strength", [(0.3, 1.0), (-1.5, 0.5), (2.0, 3.0)])
def test_normal_of_ramp_closed_form(a, strength):
    h = a * np.arange(16)[None, :] * np.ones((9, 1))
    n = decode_normals(normal_from_gradient(h, strength))
    expected = np.array([-strength * a, 0.0, 1.0]) / np.hypot(strength * a, 1.0)
    np.testing.assert_allclose(n, np.broadcast_to(expected, n.shape), atol=1e-12)


def test_normal_flip_antisymmetry(rng):
    h = rng.random((20, 30))
    a = normal_from_gradient(h)
    b = normal_from_gradient(h[:, ::-1])[:, ::-1]
    np.testing.assert_allclose(b[..., 0] - 0.5, -(a[..., 0] - 0.5), atol=1e-15)
    np.testing.assert_allclose(b[..., 1:], a[..., 1:], atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(
    arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 12)), elements=st.floats(-50, 50)),
    st.floats(0.01, 20),
)
def test_normals_unit_and_up(h, strength):
    n = decode_normals(normal_from_gradient(h, strength))
    assert np.all(np.abs(np.linalg.norm(n, axis=-1) - 1) < 1e-3)
    assert np.all(n[..., 2] > 0)


def test_normal_rejects_bad_input():
    with pytest.raises(ParameterError):
        normal_from_gradient(np.zeros((0, 3)))
    with pytest.raises(ParameterError):
        normal_from_gradient(np.zeros((3, 3)), strength=0)


def test_flat_defect_interior():
    tex = assemble_defect(np.ones((30, 30), dtype=np.uint8), seed=1, darkening=1.0, noise=0.0)
    assert np.all(tex.rgb == tex.rgb[0, 0, 0])
    inner = decode_normals(tex.normal)[4:-4, 4:-4]
    np.testing.assert_allclose(inner, np.broadcast_to([0, 0, 1], inner.shape), atol=1e-12)


def test_defect_shape_contract_and_binarity(rng):
    opacity = (rng.random((17, 23)) > 0.7).astype(np.uint8)
    tex = assemble_defect(opacity, seed=3)
    assert tex.rgb.shape == (17, 23, 3)
    assert tex.normal.shape == (17, 23, 3)
    assert tex.opacity.shape == (17, 23)
    assert set(np.unique(tex.opacity)) <= {0, 1}
    n = decode_normals(tex.normal)
    assert np.all(np.abs(np.linalg.norm(n, axis=-1) - 1) < 1e-3) and np.all(n[..., 2] > 0)


def test_defect_darker_than_concrete():
    base = TileSpec().base_gray
    means = []
    for seed in range(10):
        path = generate_crack(seed, CrackParams(target_length_m=1.0), origin=(0.64, 0.64))
        opacity, _ = rasterize_crack(path, 0.01, (128, 128))
        tex = assemble_defect(opacity, seed, darkening=0.45, base_gray=base)
        inside = opacity.astype(bool)
        means.append(luminance(tex.rgb)[inside].mean())
        assert luminance(tex.rgb)[inside].mean() <= 0.45 * base + 1e-12
    assert np.mean(means) < 0.6 * base


def test_defect_rejects_empty_or_nonbinary():
    with pytest.raises(ParameterError):
        assemble_defect(np.zeros((5, 5), dtype=np.uint8), seed=0)
    with pytest.raises(ParameterError):
        assemble_defect(np.full((5, 5), 2), seed=0)


def test_defect_deterministic(rng):
    opacity = (rng.random((20, 20)) > 0.5).astype(np.uint8)
    a = assemble_defect(opacity, seed=9)
    b = assemble_defect(opacity, seed=9)
    np.testing.assert_array_equal(a.rgb, b.rgb)
    np.testing.assert_array_equal(a.normal, b.normal)
