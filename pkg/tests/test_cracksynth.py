import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pavesynth.cracksynth import CrackParams, CrackPath, generate_crack, rasterize_crack
from pavesynth.errors import ParameterError

from .oracles import capsule_mask


def all_segments_collinear(path):
    v = path.vertices
    d0 = v[1] - v[0]
    cross = d0[0] * (v[:, 1] - v[0, 1]) - d0[1] * (v[:, 0] - v[0, 0])
    return np.allclose(cross, 0, atol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_total_length_close_to_target(seed):
    params = CrackParams(target_length_m=4.0, branch_prob=0.05)
    path = generate_crack(seed, params)
    assert 0.9 * 4.0 <= path.total_length() <= 1.1 * 4.0


def test_branch_depth_bounded():
    params = CrackParams(target_length_m=6.0, branch_prob=0.3, max_branch_depth=1)
    for seed in range(10):
        assert generate_crack(seed, params).depth() <= 1


def test_no_branching_constant_width():
    path = generate_crack(3, CrackParams(branch_prob=0.0, width_jitter=0.0))
    assert path.branches == []
    assert np.all(path.widths == path.widths[0])


def test_zero_jitter_is_straight():
    path = generate_crack(5, CrackParams(heading_jitter_rad=0.0, branch_prob=0.0))
    assert all_segments_collinear(path)


def test_same_seed_same_path():
    params = CrackParams(branch_prob=0.1)
    a = generate_crack(7, params)
    b = generate_crack(7, params)
    assert a == b
    assert a.vertices.tobytes() == b.vertices.tobytes()
    assert generate_crack(8, params) != a


def test_tips_taper_to_min_width():
    params = CrackParams(branch_prob=0.0)
    path = generate_crack(11, params)
    assert path.widths[0] == params.width_range_m[0]
    assert path.widths[-1] == params.width_range_m[0]


@pytest.mark.parametrize(
    "kwargs, word",
    [
        (dict(step_length_m=0), "step_length_m"),
        (dict(width_range_m=(0.05, 0.01)), "width_range_m"),
        (dict(width_range_m=(0.0, 0.01)), "width_range_m"),
        (dict(branch_prob=1.0), "branch_prob"),
        (dict(max_branch_depth=-1), "max_branch_depth"),
    ],
)
def test_invalid_params_name_the_bound(kwargs, word):
    with pytest.raises(ParameterError, match=word):
        generate_crack(0, CrackParams(**kwargs))


def test_crackpath_invariants():
    with pytest.raises(ParameterError):
        CrackPath([[0, 0]], [0.1])
    with pytest.raises(ParameterError):
        CrackPath([[0, 0], [1, 0]], [0.1, 0.0])
    child = CrackPath([[0, 0], [1, 1]], [0.1, 0.1])
    with pytest.raises(ParameterError):
        CrackPath([[0, 0], [1, 0]], [0.1, 0.1], [(5, child)])


def test_horizontal_segment_matches_capsule_count():
    path = CrackPath([[0.3, 0.5], [2.3, 0.5]], [0.1, 0.1])
    mask, empty = rasterize_crack(path, 0.01, (100, 300))
    assert not empty
    oracle = capsule_mask(path, 0.01, (100, 300))
    assert mask.sum() == oracle.sum()
    np.testing.assert_array_equal(mask, oracle)


def test_path_outside_canvas():
    path = CrackPath([[10.0, 10.0], [12.0, 10.0]], [0.1, 0.1])
    mask, empty = rasterize_crack(path, 0.01, (50, 50))
    assert empty
    assert mask.sum() == 0


def test_thin_stroke_is_visible():
    path = CrackPath([[0.1, 0.237], [0.9, 0.237]], [0.02, 0.02])
    mask, empty = rasterize_crack(path, 0.01, (64, 128))
    assert not empty and mask.sum() > 0
    np.testing.assert_array_equal(mask, capsule_mask(path, 0.01, (64, 128)))


def test_rasterize_is_binary_and_rejects_bad_args():
    path = generate_crack(1, CrackParams(target_length_m=1.0), origin=(0.5, 0.5))
    mask, _ = rasterize_crack(path, 0.01, (128, 128))
    assert mask.dtype == np.uint8
    assert set(np.unique(mask)) <= {0, 1}
    with pytest.raises(ParameterError):
        rasterize_crack(path, 0.0, (8, 8))
    with pytest.raises(ParameterError):
        rasterize_crack(path, 0.01, (0, 8))


@settings(max_examples=40, deadline=None)
@given(
    pts=st.lists(
        st.tuples(st.floats(-0.1, 0.7), st.floats(-0.1, 0.7)), min_size=2, max_size=6
    ),
    widths=st.lists(st.floats(0.004, 0.1), min_size=6, max_size=6),
    gsd=st.sampled_from([0.01, 0.0125, 0.02]),
)
def test_rasterize_matches_oracle_property(pts, widths, gsd):
    path = CrackPath(pts, widths[: len(pts)])
    mask, _ = rasterize_crack(path, gsd, (40, 48))
    np.testing.assert_array_equal(mask, capsule_mask(path, gsd, (40, 48)))


@pytest.mark.parametrize("k", [2.0, 4.0, 0.5])
def test_scale_invariance(k):
    params = CrackParams(target_length_m=1.5, branch_prob=0.1)
    base = generate_crack(21, params, origin=(0.6, 0.6))
    scaled = generate_crack(21, params.scaled(k), origin=(0.6 * k, 0.6 * k))
    a, _ = rasterize_crack(base, 0.01, (128, 128))
    b, _ = rasterize_crack(scaled, 0.01 * k, (128, 128))
    np.testing.assert_array_equal(a, b)


def test_branch_heading_offset_in_range():
    params = CrackParams(target_length_m=8.0, branch_prob=0.2, heading_jitter_rad=0.0)
    found = 0
    for seed in range(20):
        path = generate_crack(seed, params)
        for index, child in path.branches:
            parent_dir = path.vertices[index] - path.vertices[index - 1]
            child_dir = child.vertices[1] - child.vertices[0]
            angle = math.atan2(
                parent_dir[0] * child_dir[1] - parent_dir[1] * child_dir[0],
                parent_dir @ child_dir,
            )
            assert math.radians(20) - 1e-9 <= abs(angle) <= math.radians(70) + 1e-9
            assert np.allclose(child.vertices[0], path.vertices[index])
            found += 1
    assert found > 0
