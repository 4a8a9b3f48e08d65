from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from asset_health import features as F
from asset_health.dataset import (
    AssetHistory,
    Attribute,
    ConditionSchema,
    HealthIndex,
    InspectionRecord,
    LabeledDataset,
    Numerical,
    Ordered,
    Unordered,
    cable_like,
    pole_like,
    synthesize,
)
from asset_health.errors import DataError


def test_encode_ordered_examples():
    assert F.encode_ordered(1, 3) == 1 / 6
    assert round(F.encode_ordered(1, 3), 2) == 0.17
    assert F.encode_ordered(2, 3) == 0.5
    assert round(F.encode_ordered(3, 3), 2) == 0.83
    assert F.encode_ordered(1, 1) == 0.5
    with pytest.raises(ValueError):
        F.encode_ordered(0, 3)
    with pytest.raises(ValueError):
        F.encode_ordered(4, 3)


@given(st.integers(1, 50))
def test_encode_ordered_spacing_and_symmetry(n):
    xs = [F.encode_ordered(i, n) for i in range(1, n + 1)]
    assert np.allclose(np.diff(xs), 1 / n)
    assert np.allclose(np.array(xs) + np.array(xs[::-1]), 1.0)
    assert all(0 < x < 1 for x in xs)


def test_encode_unordered_examples():
    assert F.encode_unordered(3, 5).tolist() == [0, 0, 1, 0, 0]
    assert F.encode_unordered(5, 5).tolist() == [0, 0, 0, 0, 1]
    assert F.encode_unordered(1, 2).tolist() == [1, 0]
    with pytest.raises(ValueError):
        F.encode_unordered(3, 2)


def test_minmax_examples():
    assert F.fit_minmax([26, 20, 5, 37, 32, 22]) == (5.0, 37.0)
    assert F.fit_minmax([4, 4]) == (4.0, 4.0)
    assert F.fit_minmax([7]) == (7.0, 7.0)
    with pytest.raises(ValueError):
        F.fit_minmax([])
    assert F.apply_minmax(26, 5, 37) == float(Fraction(21, 32))
    assert F.apply_minmax(5, 5, 37) == 0.0
    assert F.apply_minmax(9, 4, 4) == 0.5


@given(st.floats(-1e6, 1e6), st.floats(-1e3, 1e3), st.floats(0, 1e3))
def test_minmax_output_in_unit_interval(x, lo, span):
    v = F.apply_minmax(x, lo, lo + span)
    assert 0.0 <= v <= 1.0


def test_pve_and_selection():
    assert F.pve([3.0, 1.0], 1) == 0.75
    assert F.pve([3.0, 1.0], 2) == 1.0
    assert F.pve([5.0, 0.0, 0.0], 1) == 1.0
    assert F.select_components([3.0, 1.0], 0.9) == 2
    assert F.select_components([3.0, 1.0], 0.7) == 1
    assert F.select_components([4.0, 3.0, 2.0, 1.0], 1.0) == 4
    with pytest.raises(ValueError):
        F.pve([0.0, 0.0], 1)


def test_fit_pca_examples():
    P, lam, _ = F.fit_pca([[1, 1], [2, 2], [3, 3]])
    assert lam[1] == 0.0
    assert F.pve(lam, 1) == 1.0
    P, lam, _ = F.fit_pca([[1, 0], [-1, 0], [0, 1], [0, -1]])
    assert lam[0] == pytest.approx(lam[1], abs=1e-12)
    assert F.pve(lam, 1) == pytest.approx(0.5, abs=1e-12)


def test_fit_pca_random():
    X = np.random.default_rng(0).normal(size=(50, 4))
    P, lam, means = F.fit_pca(X)
    assert np.abs(P.T @ P - np.eye(4)).max() <= 1e-8
    assert lam.sum() == pytest.approx(np.var(X, axis=0, ddof=1).sum(), abs=1e-8)
    S = np.cov(X, rowvar=False)
    assert np.abs(P @ np.diag(lam) @ P.T - S).max() <= 1e-8


# -- pipeline ---------------------------------------------------------------


def _tiny_dataset(values, schema, T=1):
    entries = []
    for k, v in enumerate(values):
        aid = f"a{k}"
        recs = tuple(InspectionRecord(aid, 2000 + t, v, 10.0 + t) for t in range(T))
        entries.append((AssetHistory(aid, recs), HealthIndex.H3))
    return LabeledDataset(schema, T, tuple(entries), 2100)


def test_pipeline_widths():
    pole = synthesize(pole_like(n_assets=60), seed=1)
    pipe = F.fit_pipeline(pole)
    assert pipe.raw_width == 3 + 1 + 1 + 2 + 3 + 1 == 11
    assert pipe.out_width == 11
    pca = F.fit_pipeline(pole, pca_threshold=0.9)
    assert pca.out_width == pca.pca.kept + 5
    assert pca.pca.pve_achieved >= 0.9
    cable = synthesize(cable_like(n_assets=60), seed=1)
    assert F.fit_pipeline(cable).raw_width == 5


def test_transform_deterministic_and_bounded():
    ds = synthesize(pole_like(n_assets=80, noise=0.1), seed=2)
    pipe = F.fit_pipeline(ds)
    a, b = pipe.transform(ds), pipe.transform(ds)
    assert np.array_equal(a.values, b.values)
    assert a.values.shape == (80, 2, 11)
    assert a.values.min() >= 0 and a.values.max() <= 1
    dummies = a.values[..., pipe.dummy_mask]
    assert np.array_equal(dummies[..., :2].sum(-1), np.ones((80, 2)))
    assert np.array_equal(dummies[..., 2:].sum(-1), np.ones((80, 2)))


def test_zero_variance_column_maps_to_half():
    schema = ConditionSchema((Attribute("x", Numerical()),))
    ds = _tiny_dataset([{"x": 4.0}, {"x": 4.0}], schema)
    t = F.fit_pipeline(ds).transform(ds)
    assert np.array_equal(t.values[..., 0], np.full((2, 1), 0.5))


def test_unseen_category_rejected():
    schema = ConditionSchema((Attribute("u", Unordered(("a", "b"))),))
    ds = _tiny_dataset([{"u": "a"}, {"u": "b"}], schema)
    pipe = F.fit_pipeline(ds)
    bad = _tiny_dataset([{"u": "c"}], schema)
    with pytest.raises(DataError, match="unseen category"):
        pipe.transform(bad)


def test_pca_round_trip_with_all_components():
    ds = synthesize(pole_like(n_assets=100, noise=0.2), seed=4)
    pipe = F.fit_pipeline(ds, pca_threshold=1.0)
    assert pipe.pca.kept == 6
    raw = pipe.raw_rows(ds.histories)
    out = pipe.transform(ds).values
    dense = raw[..., ~pipe.dummy_mask]
    back = out[..., : pipe.pca.kept] @ pipe.pca.components.T + pipe.pca.column_means
    assert np.abs(back - dense).max() <= 1e-8
    assert np.array_equal(out[..., pipe.pca.kept:], raw[..., pipe.dummy_mask])


def test_no_leakage_and_serialization():
    ds = synthesize(pole_like(n_assets=100, noise=0.1), seed=5)
    train, test = ds.subset(range(80)), ds.subset(range(80, 100))
    pipe = F.fit_pipeline(train, pca_threshold=0.9)
    before = pipe.to_json()
    pipe.transform(test)
    assert pipe.to_json() == before
    # bounds come from training rows only
    lo, hi = pipe.minmax_bounds["shell_thickness_1"]
    train_vals = [r.values["shell_thickness_1"] for h in train.histories for r in h.records]
    assert (lo, hi) == (min(train_vals), max(train_vals))
    clone = F.FeaturePipeline.from_json(before)
    assert clone.to_json() == before
    assert np.array_equal(clone.transform(test).values, pipe.transform(test).values)
    assert clone.digest() == pipe.digest()
