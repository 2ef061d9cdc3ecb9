import json
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pavesynth import datasetio
from pavesynth.errors import DatasetIOError, ParameterError
from pavesynth.segmetrics import (
    ConfusionCounts,
    confusion,
    default_grid,
    evaluate,
    ods,
    ois,
    prf_iou,
    report_from_arrays,
    sweep_counts,
    write_report,
)

from .oracles import naive_counts, naive_ods, naive_ois, naive_prf


def random_instance(rng, h=8, w=8):
    r = (rng.random((h, w)) < rng.uniform(0.05, 0.5)).astype(np.uint8)
    # quantized probabilities put many values exactly on grid thresholds
    p = np.round(rng.random((h, w)) * 100) / 100
    return p, r


# -- confusion ----------------------------------------------------------------


@pytest.mark.parametrize("t", [0.01, 0.3, 0.5, 0.99])
def test_perfect_binary_prediction(rng, t):
    _, r = random_instance(rng)
    c = confusion(r.astype(float), r, t)
    assert c.fp == 0 and c.fn == 0 and c.tp == r.sum()


def test_zero_prediction_counts(rng):
    _, r = random_instance(rng)
    c = confusion(np.zeros(r.shape), r)
    assert (c.tp, c.fp, c.fn) == (0, 0, int(r.sum()))


def test_threshold_inclusive():
    c = confusion(np.array([[0.5, 0.49]]), np.array([[1, 1]]), 0.5)
    assert (c.tp, c.fn) == (1, 1)


def test_confusion_matches_naive_loop(rng):
    for _ in range(10):
        p, r = random_instance(rng)
        c = confusion(p, r, 0.5)
        assert (c.tp, c.fp, c.fn, c.tn) == naive_counts(p, r, 0.5)
        assert c.total == p.size


def test_confusion_errors():
    with pytest.raises(ParameterError):
        confusion(np.zeros((2, 2)), np.zeros((2, 3)))
    with pytest.raises(ParameterError):
        confusion(np.zeros((2, 2)), np.zeros((2, 2)), 1.0)


# -- prf_iou ------------------------------------------------------------------


def test_prf_examples():
    assert prf_iou(ConfusionCounts(10, 0, 0, 5)) == (1.0, 1.0, 1.0, 1.0)
    P, R, F, I = prf_iou(ConfusionCounts(2, 2, 2, 0))
    assert (P, R, F) == (0.5, 0.5, 0.5)
    assert I == pytest.approx(1 / 3, abs=1e-15)


def test_prf_degenerate_rules():
    assert prf_iou(ConfusionCounts(0, 0, 0, 64)) == (1.0, 1.0, 1.0, 1.0)
    # prediction empty, GT nonempty
    assert prf_iou(ConfusionCounts(0, 0, 3, 61)) == (0.0, 0.0, 0.0, 0.0)
    # GT empty, prediction nonempty
    assert prf_iou(ConfusionCounts(0, 3, 0, 61)) == (0.0, 0.0, 0.0, 0.0)


@settings(max_examples=200)
@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_prf_matches_naive(tp, fp, fn, tn):
    got = prf_iou(ConfusionCounts(tp, fp, fn, tn))
    want = naive_prf(tp, fp, fn)
    for g, w in zip(got, want):
        assert abs(g - w) <= 1e-12
        assert 0 <= g <= 1


# -- sweeps, ODS, OIS ---------------------------------------------------------


def test_default_grid():
    g = default_grid()
    assert len(g) == 99
    assert g[0] == pytest.approx(0.01) and g[-1] == pytest.approx(0.99)
    with pytest.raises(ParameterError):
        default_grid(0)


def test_sweep_matches_confusion(rng):
    p, r = random_instance(rng, 12, 9)
    grid = default_grid()
    rows = sweep_counts(p, r, grid)
    for t, row in zip(grid, rows):
        c = confusion(p, r, t)
        assert tuple(row) == (c.tp, c.fp, c.fn, c.tn)


def test_ods_perfect_picks_smallest_threshold(rng):
    _, r = random_instance(rng)
    t, f1 = ods([(r.astype(float), r)])
    assert f1 == 1.0
    assert t == default_grid()[0]


def test_ods_zero_predictions():
    r = np.zeros((8, 8), dtype=np.uint8)
    r[2, 3] = 1
    assert ods([(np.zeros((8, 8)), r)])[1] == 0.0


def test_ods_matches_brute_force(rng):
    data = [random_instance(rng) for _ in range(3)]
    grid = default_grid()
    assert ods(data, grid) == pytest.approx(naive_ods(data, grid), abs=1e-12)
    assert ois(data, grid) == pytest.approx(naive_ois(data, grid), abs=1e-12)


def test_ods_unsorted_grid_same_answer(rng):
    data = [random_instance(rng) for _ in range(2)]
    grid = default_grid()
    shuffled = grid.copy()
    np.random.default_rng(0).shuffle(shuffled)
    assert ods(data, shuffled) == ods(data, grid)


def test_ois_properties(rng):
    _, r = random_instance(rng)
    assert ois([(r.astype(float), r)] * 3) == 1.0
    single = [random_instance(rng)]
    assert ois(single) >= ods(single)[1] - 1e-12
    data = [random_instance(rng) for _ in range(5)]
    t, _ = ods(data)
    at_t = np.mean([prf_iou(confusion(p, r, t))[2] for p, r in data])
    assert ois(data) >= at_t - 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), extra=st.floats(0.001, 0.999))
def test_adding_threshold_never_hurts(seed, extra):
    g = np.random.default_rng(seed)
    data = [random_instance(g, 6, 6) for _ in range(2)]
    grid = np.linspace(0.1, 0.9, 5)
    bigger = np.append(grid, extra)
    assert ods(data, bigger)[1] >= ods(data, grid)[1]
    assert ois(data, bigger) >= ois(data, grid)


def test_empty_inputs_rejected():
    with pytest.raises(ParameterError):
        ods([])
    with pytest.raises(ParameterError):
        ois([(np.zeros((2, 2)), np.zeros((2, 2)))], grid=[])


# -- reports ------------------------------------------------------------------


def test_report_matches_components(rng):
    data = [random_instance(rng) for _ in range(4)]
    rep = report_from_arrays((f"{k:02d}", p, r) for k, (p, r) in enumerate(data))
    total = sum((confusion(p, r) for p, r in data), ConfusionCounts(0, 0, 0, 0))
    assert (rep.precision, rep.recall, rep.f1, rep.iou) == prf_iou(total)
    assert rep.ods == ods(data)
    assert rep.ois == pytest.approx(ois(data), abs=1e-15)
    assert [rec.id for rec in rep.per_image] == ["00", "01", "02", "03"]


def test_report_serialization(rng):
    p, r = random_instance(rng)
    rep = report_from_arrays([("a", p, r)])
    d = json.loads(rep.to_json())
    for key in ("precision", "recall", "f1", "iou", "ois", "threshold", "per_image"):
        assert key in d
    assert set(d["ods"]) == {"threshold", "f1"}
    header = rep.table().splitlines()[0].split()
    assert header == ["Precision", "Recall", "F1-score", "IoU", "ODS", "OIS"]


def _dataset(tmp_path, rng, n=4, shape=(20, 24)):
    entries = []
    masks = {}
    for k in range(n):
        ident = f"{k:03d}"
        m = (rng.random(shape) < 0.1).astype(np.uint8)
        masks[ident] = m
        datasetio.save_image(tmp_path / "images" / f"{ident}.png", np.repeat(m[..., None], 3, 2) * 1.0)
        datasetio.save_mask(tmp_path / "masks" / f"{ident}.png", m)
        entries.append(datasetio.ManifestEntry(ident, f"images/{ident}.png", f"masks/{ident}.png"))
    manifest = datasetio.Manifest(entries, {})
    datasetio.write_manifest(manifest, tmp_path)
    return datasetio.read_manifest(tmp_path), masks


def test_evaluate_perfect(tmp_path, rng):
    manifest, masks = _dataset(tmp_path, rng)
    pred = tmp_path / "pred"
    for ident, m in masks.items():
        datasetio.save_probability(pred / f"{ident}.png", m.astype(float))
    rep = evaluate(pred, manifest)
    assert (rep.precision, rep.recall, rep.f1, rep.iou, rep.ods[1], rep.ois) == (1.0,) * 6
    write_report(rep, tmp_path / "r.json")
    assert json.loads((tmp_path / "r.json").read_text())["f1"] == 1.0


def test_evaluate_order_invariant(tmp_path, rng):
    manifest, masks = _dataset(tmp_path, rng, n=6)
    pred = tmp_path / "pred"
    for ident, m in masks.items():
        datasetio.save_probability(pred / f"{ident}.png", np.clip(m * 0.7 + rng.random(m.shape) * 0.4, 0, 1))
    a = evaluate(pred, manifest)
    shuffled = list(manifest.entries)
    random.Random(3).shuffle(shuffled)
    b = evaluate(pred, datasetio.Manifest(shuffled, manifest.header, manifest.root))
    assert a.to_dict() == b.to_dict()


def test_evaluate_missing_prediction(tmp_path, rng):
    manifest, masks = _dataset(tmp_path, rng, n=3)
    pred = tmp_path / "pred"
    datasetio.save_probability(pred / "000.png", masks["000"].astype(float))
    with pytest.raises(DatasetIOError, match="001, 002"):
        evaluate(pred, manifest)


def test_evaluate_dimension_mismatch(tmp_path, rng):
    manifest, masks = _dataset(tmp_path, rng, n=2)
    pred = tmp_path / "pred"
    datasetio.save_probability(pred / "000.png", masks["000"].astype(float))
    datasetio.save_probability(pred / "001.png", np.zeros((5, 5)))
    with pytest.raises(ParameterError, match="001.png"):
        evaluate(pred, manifest)
