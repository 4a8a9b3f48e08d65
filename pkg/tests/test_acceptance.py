"""Acceptance gate. Each criterion prints one PASS/FAIL line and then
asserts, so ``pytest -s tests/test_acceptance.py`` (or ``-v``) shows a
one-line verdict per criterion."""

import json
import time
from fractions import Fraction

import numpy as np
import pytest

from asset_health import features as F
from asset_health import metrics as M
from asset_health import network as N
from asset_health import training as TR
from asset_health.cli import main, run_compare
from asset_health.dataset import pole_like, synthesize

from gradcheck import draw_inputs, fd_check


@pytest.fixture
def verdict(capsys):
    def emit(number, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}" + (f" ({detail})" if detail else ""))
        assert ok, detail
    return emit


def test_c01_ordered_encoding(verdict):
    ok = all(
        F.encode_ordered(i, n) == float(Fraction(2 * i - 1, 2 * n))
        for n in range(1, 11) for i in range(1, n + 1)
    )
    ok &= round(F.encode_ordered(1, 3), 2) == 0.17 and round(F.encode_ordered(2, 3), 2) == 0.5
    verdict(1, "ordered encoding exact for N <= 10", ok)


def test_c02_dummy_features(verdict):
    ok = True
    for n in range(1, 11):
        for i in range(1, n + 1):
            v = F.encode_unordered(i, n)
            ok &= v.sum() == 1.0 and v[i - 1] == 1.0 and set(v.tolist()) <= {0.0, 1.0}
    ok &= F.encode_unordered(3, 5).tolist() == [0, 0, 1, 0, 0]
    verdict(2, "dummy features one-hot", ok)


def test_c03_minmax(verdict):
    lo, hi = F.fit_minmax([26, 20, 5, 37, 32, 22])
    ok = F.apply_minmax(26, lo, hi) == 0.65625
    ok &= F.apply_minmax(4, *F.fit_minmax([4, 4, 4])) == 0.5
    ds = synthesize(pole_like(n_assets=200, noise=0.2), seed=0)
    vals = F.fit_pipeline(ds).transform(ds).values
    ok &= bool(vals.min() >= 0 and vals.max() <= 1)
    verdict(3, "min-max scaling", ok, f"26 -> {F.apply_minmax(26, lo, hi)}")


def test_c04_pca_suite(verdict):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    ok = True
    for _ in range(100):
        rows, cols = int(rng.integers(20, 201)), int(rng.integers(2, 13))
        X = rng.normal(size=(rows, cols)) @ rng.normal(size=(cols, cols))
        P, lam, _ = F.fit_pca(X)
        S = np.cov(X, rowvar=False)
        scale = np.abs(S).max()
        ortho = np.abs(P.T @ P - np.eye(cols)).max()
        recon = np.abs(P @ np.diag(lam) @ P.T - S).max()
        trace = abs(lam.sum() - np.trace(S))
        pves = [F.pve(lam, t) for t in range(1, cols + 1)]
        worst = max(worst, ortho, recon / scale)
        ok &= ortho <= 1e-8 and recon <= 1e-8 * scale and trace <= 1e-8 * max(1.0, np.trace(S))
        ok &= all(b >= a for a, b in zip(pves, pves[1:])) and abs(pves[-1] - 1) <= 1e-12
    _, lam, _ = F.fit_pca([[1, 1], [2, 2], [3, 3]])
    ok &= F.pve(lam, 1) == 1.0
    elapsed = time.perf_counter() - start
    ok &= elapsed < 10
    verdict(4, "PCA suite on 100 random matrices", ok, f"worst rel err {worst:.1e}, {elapsed:.1f}s")


def test_c05_gradient_checks(verdict):
    start = time.perf_counter()
    worst = 0.0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        lstm = N.SequenceClassifier.init(N.ClassifierConfig(3, 3, (4, 4)), seed=seed)
        worst = max(worst, fd_check(lstm, rng.normal(size=(4, 3, 3)), rng.integers(0, 5, size=4)))
        fnn = N.FnnBaseline.init(N.FnnConfig(3, (4, 4)), seed=seed)
        worst = max(worst, fd_check(fnn, draw_inputs(fnn, (4, 3), rng), rng.integers(0, 5, size=4)))
    elapsed = time.perf_counter() - start
    verdict(5, "finite-difference gradient checks, LSTM and FNN, 10 seeds",
            worst < 1e-4 and elapsed < 60, f"worst rel err {worst:.1e}, {elapsed:.1f}s")


def test_c06_metrics_oracle(verdict):
    rng = np.random.default_rng(6)
    ok = True
    for _ in range(1000):
        n = int(rng.integers(1, 60))
        t, p = rng.integers(1, 6, size=n), rng.integers(1, 6, size=n)
        cm = M.confusion(t, p)
        for i in range(1, 6):
            tp = int(np.sum((t == i) & (p == i)))
            fp = int(np.sum((t != i) & (p == i)))
            fn = int(np.sum((t == i) & (p != i)))
            ok &= M.class_counts(cm, i) == (tp, fp, fn)
    mp, mr, _ = M.macro(M.ConfusionMatrix(np.array([[2, 1], [0, 3]])))
    ok &= abs(mp - 0.875) <= 1e-12 and abs(mr - 5 / 6) <= 1e-12
    verdict(6, "metrics match counting oracle and worked example", ok, f"MP {mp}, MR {mr:.4f}")


def test_c07_overfit_one(verdict):
    start = time.perf_counter()
    X = np.random.default_rng(7).normal(size=(1, 2, 3))
    cfg = TR.TrainConfig(epochs=500, batch_size=1, validation_fraction=0.0, early_stop_patience=500)
    tm = TR.train(N.ClassifierConfig(3, 2, (10, 10)), X, [2], cfg)
    loss = tm.model.loss(X, [1])
    elapsed = time.perf_counter() - start
    verdict(7, "overfit a single sample", loss < 1e-3 and elapsed < 10, f"loss {loss:.1e}, {elapsed:.1f}s")


# End-to-end comparison: one fixed configuration, both data regimes.
E2E = dict(n_assets=1000, timesteps=3)
E2E_TRAIN = TR.TrainConfig(epochs=300, seed=0)
E2E_HIDDEN = (10, 10)


def _compare(rate_weight, noise):
    ds = synthesize(pole_like(**E2E, rate_weight=rate_weight, noise=noise), seed=0)
    rl, rf, *_ = run_compare(ds, None, E2E_HIDDEN, E2E_TRAIN, 0.2, 0)
    return rl, rf


@pytest.mark.slow
def test_c08_history_matters(verdict):
    start = time.perf_counter()
    trend_l, trend_f = _compare(0.8, 0.05)
    snap_l, snap_f = _compare(0.0, 0.0)
    elapsed = time.perf_counter() - start
    dmp, dmr = trend_l.mp - trend_f.mp, trend_l.mr - trend_f.mr
    gap_mp, gap_mr = snap_l.mp - snap_f.mp, snap_l.mr - snap_f.mr
    ok = dmp >= 0.05 and dmr >= 0.05
    ok &= abs(gap_mp) <= 0.02 and abs(gap_mr) <= 0.02
    ok &= elapsed < 300
    detail = (
        f"trend: LSTM MP/MR {trend_l.mp:.3f}/{trend_l.mr:.3f} vs FNN {trend_f.mp:.3f}/{trend_f.mr:.3f}; "
        f"snapshot gap MP {gap_mp:+.3f} MR {gap_mr:+.3f}; {elapsed:.0f}s"
    )
    verdict(8, "sequence model beats snapshot baseline only when history matters", ok, detail)


def _hashes(out):
    return json.loads((out / "manifest.json").read_text())["artifacts"]


def test_c09_determinism(verdict, tmp_path):
    data = tmp_path / "data"
    main(["synth", "--out", str(data), "--assets", "150", "--timesteps", "3", "--seed", "9",
          "--profile", "pole-like", "--rate-weight", "0.5", "--noise", "0.05"])
    args = ["--records", str(data / "records.csv"), "--labels", str(data / "labels.csv"),
            "--schema", str(data / "schema.json"), "--epochs", "10", "--seed", "9"]
    runs = {}
    for cmd in ("train", "compare"):
        for k in (1, 2):
            out = tmp_path / f"{cmd}{k}"
            assert main([cmd, "--out", str(out), *args]) == 0
            runs[cmd, k] = _hashes(out)
    ok = runs["train", 1] == runs["train", 2] and runs["compare", 1] == runs["compare", 2]
    verdict(9, "train and compare artifacts byte-identical across runs", ok)


def test_c10_architecture(verdict, tmp_path):
    found = {}
    for profile, n in (("pole-like", 60), ("cable-like", 60)):
        data = tmp_path / profile
        T = {"pole-like": 2, "cable-like": 3}[profile]
        main(["synth", "--out", str(data), "--assets", str(n), "--timesteps", str(T), "--seed", "1", "--profile", profile])
        out = tmp_path / f"{profile}-model"
        assert main(["train", "--out", str(out), "--seed", "1", "--profile", profile, "--epochs", "1",
                     "--records", str(data / "records.csv"), "--labels", str(data / "labels.csv"),
                     "--schema", str(data / "schema.json")]) == 0
        doc = json.loads((out / "model.json").read_text())
        found[profile] = (doc["config"]["timesteps"], tuple(doc["config"]["lstm_hidden"]), len(doc["params"]["out.W"]))
    ok = found["pole-like"] == (2, (10, 10), 5) and found["cable-like"] == (3, (8, 8), 5)
    ok &= pole_like().timesteps == 2
    verdict(10, "profile architectures from serialized models", ok, str(found))
