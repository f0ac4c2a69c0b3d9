"""Acceptance criteria, one test per criterion at its stated tolerance.

Each test records a PASS/FAIL/SKIP line (printed in the pytest terminal
summary). Checks that need the public UCI file skip when it is absent; the
same properties also run on the schema-identical synthetic file so they are
never silently untested.
"""

import filecmp
import math
import time

import numpy as np
import pytest

import oracles
from checklist import record, skip
from dowfactors import cli, clustering, evaluation, features, ingest, models
from dowfactors.config import Config
from test_clustering import all_pairs_best
from test_models import eight_by_two, ff_inputs, random_system

NO_FILE = "canonical UCI file not available; set DOW_JONES_DATA"


def canonical_or_skip(name):
    from conftest import find_canonical
    path = find_canonical()
    if path is None:
        skip(name, NO_FILE)
    return path


# -- ingestion -------------------------------------------------------------

def check_ingestion(name, path):
    t0 = time.perf_counter()
    d, rep = ingest.load(path)
    elapsed = time.perf_counter() - t0
    shape = (rep.row_count, rep.attribute_count, rep.ticker_count, rep.week_count)
    record(name, shape == (750, 16, 30, 25) and elapsed < 1.0,
           f"records/attributes/tickers/weeks={shape}, {elapsed:.3f} s")


def test_ingestion_canonical():
    name = "ingestion: canonical file 750 x 16, 30 tickers x 25 weeks, < 1 s"
    check_ingestion(name, canonical_or_skip(name))


def test_ingestion_synthetic(synthetic_path):
    check_ingestion("ingestion: synthetic file 750 x 16, 30 tickers x 25 weeks, < 1 s",
                    synthetic_path)


# -- OLS -------------------------------------------------------------------

def test_ols_oracle_equivalence():
    worst = 0.0
    for seed in range(100):
        X, y = random_system(1000 + seed)
        m = models.fit_ols(X, y)
        ref = oracles.normal_equations(X, y)
        worst = max(worst, float(np.abs(np.array([m.intercept, *m.coefficients]) - ref).max()))
    record("OLS: 100 random 50x4 systems match normal equations within 1e-8",
           worst <= 1e-8, f"max abs diff {worst:.3g}")


def test_ols_exact_recovery():
    X = np.random.default_rng(0).normal(size=(50, 2))
    m = models.fit_ols(X, 1 + 2 * X[:, 0] - 3 * X[:, 1])
    err = float(np.abs(np.array([m.intercept, *m.coefficients]) - [1, 2, -3]).max())
    record("OLS: noiseless y = 1 + 2x1 - 3x2 recovered within 1e-9", err < 1e-9,
           f"max coefficient error {err:.3g}")


# -- factor regression -----------------------------------------------------

def test_factor_regression_betas():
    rng = np.random.default_rng(21)
    mkt, smb = rng.normal(size=25), rng.normal(size=25)
    y = 0.5 * mkt + 0.2 * smb + rng.normal(scale=1e-6, size=25)
    m = models.fit_fama_french(*ff_inputs(y, mkt, smb), "DIS")
    err = max(abs(m.coef("mkt_excess") - 0.5), abs(m.coef("smb") - 0.2))
    record("factor regression: betas (0.5, 0.2) with noise 1e-6 recovered within 1e-4",
           err < 1e-4, f"max beta error {err:.3g}")


# -- k-means ---------------------------------------------------------------

def check_kmeans_monotone(name, returns):
    runs = 0
    ok = True
    for k in (2, 3, 4):
        for seed in range(10):
            m = clustering.kmeans(returns, k, seed=seed)  # lloyd asserts in-loop too
            ok &= bool(np.all(np.diff(m.history) <= 0))
            runs += 1
    record(name, ok, f"{runs} runs")


def test_kmeans_monotone_canonical():
    name = "k-means: WCSS non-increasing every iteration, canonical file, k in {2,3,4}"
    d, _ = ingest.load(canonical_or_skip(name))
    check_kmeans_monotone(name, features.pivot_returns(d))


def test_kmeans_monotone_synthetic(synthetic_dataset):
    check_kmeans_monotone("k-means: WCSS non-increasing every iteration, synthetic, k in {2,3,4}",
                          features.pivot_returns(synthetic_dataset))


def all_pairs_gap(fixtures):
    worst, worst_seed = 0.0, None
    for seed, pts in fixtures:
        w_opt, _ = oracles.best_two_partition(pts)
        gap = (all_pairs_best(pts).wcss - w_opt) / w_opt
        if gap > worst:
            worst, worst_seed = gap, seed
    return worst, worst_seed


@pytest.mark.xfail(strict=True, reason="Lloyd from point pairs can miss the optimum; "
                                       "seed 269 is a counterexample")
def test_kmeans_all_pairs_optimal_generic():
    fixtures = [(s, np.random.default_rng(s).normal(size=(8, 2))) for s in range(300)]
    worst, seed = all_pairs_gap(fixtures)
    record("k-means: best-of-all-pairs k=2 equals brute force on every 8-point fixture",
           worst <= 1e-12, f"max relative gap {worst:.3g} at seed {seed}; not attainable")


def test_kmeans_all_pairs_optimal_two_groups():
    fixtures = []
    for s in range(300):
        pts = np.random.default_rng(s).normal(size=(8, 2))
        pts[:4, 0] += 6.0
        fixtures.append((s, pts))
    worst, _ = all_pairs_gap(fixtures)
    record("k-means: best-of-all-pairs k=2 equals brute force on 300 two-group 8-point fixtures",
           worst <= 1e-12, f"max relative gap {worst:.3g}")


def test_elbow_non_increasing(synthetic_dataset):
    from conftest import find_canonical
    path = find_canonical()
    d = ingest.load(path)[0] if path else synthetic_dataset
    curve = clustering.elbow_curve(features.pivot_returns(d), 10, seed=42)
    w = [v for _, v in curve]
    record(f"k-means: elbow curve non-increasing for k = 1..10 ({'canonical' if path else 'synthetic'})",
           all(b <= a for a, b in zip(w, w[1:])), f"wcss(1)={w[0]:.6g}, wcss(10)={w[-1]:.6g}")


# -- trees and ensembles ---------------------------------------------------

def test_forest_reduction_bit_exact():
    ok = True
    for seed in range(20):
        X, y = random_system(seed, n=40, p=5)
        f = models.fit_random_forest(X, y, B=1, bootstrap=False, mtry=5, max_depth=6,
                                     min_leaf=2, seed=seed)
        t = models.fit_tree(X, y, max_depth=6, min_leaf=2)
        probe = np.vstack([X, np.random.default_rng(seed).normal(size=(20, 5))])
        ok &= np.array_equal(f.predict(probe), t.predict(probe))
    record("forest: B=1, no bootstrap, mtry=all equals single tree bit-exactly", ok,
           "20 fixtures")


def check_boost_trace(name, dm, train):
    b = models.fit_gradient_boost(dm.X[train], dm.y[train], K=100, learning_rate=0.1, seed=42)
    steps = np.diff(b.sse_trace)
    record(name, bool(np.all(steps <= 0)),
           f"SSE {b.sse_trace[0]:.6g} -> {b.sse_trace[-1]:.6g}, largest step {steps.max():.3g}")


def test_boost_trace_canonical():
    name = "boosting: SSE trace non-increasing, K=100, lr=0.1, canonical design matrix"
    d, _ = ingest.load(canonical_or_skip(name))
    prep = evaluation.prepare(d, Config())
    dm, train, _, _ = evaluation.design_for(prep, "DIS", evaluation.SplitSpec())
    check_boost_trace(name, dm, train)


def test_boost_trace_synthetic(synthetic_dataset):
    prep = evaluation.prepare(synthetic_dataset, Config())
    dm, train, _, _ = evaluation.design_for(prep, "DIS", evaluation.SplitSpec())
    check_boost_trace("boosting: SSE trace non-increasing, K=100, lr=0.1, synthetic design matrix",
                      dm, train)


def test_boost_zero_stages_r2_zero():
    X = np.arange(14, dtype=float).reshape(7, 2)
    ytr = np.array([1.0, 2.0, 3.0, 6.0])
    yte = np.array([0.0, 3.0, 6.0])
    b = models.fit_gradient_boost(X[:4], ytr, K=0)
    r2 = evaluation.r_squared(yte, b.predict(X[4:]))
    record("boosting: K=0 is the mean predictor, test R^2 = 0 when train/test means agree",
           r2 == 0.0 and b.predict(X[:1])[0] == 3.0, f"R^2={r2!r}")


def test_tree_exhaustive_oracle():
    checked = 0
    ok = True
    for seed in range(500):
        X, y = eight_by_two(seed)
        for depth in (0, 1, 2):
            for min_leaf in (1, 2):
                t = models.fit_tree(X, y, max_depth=depth, min_leaf=min_leaf)
                ok &= oracles.nested_equal(oracles.tree_to_nested(t),
                                           oracles.exhaustive_tree(X, y, depth, min_leaf))
                checked += 1
    record("tree: equals exhaustive split enumeration on 8-row, 2-feature fixtures, depth <= 2",
           ok, f"{checked} fits")


# -- end to end ------------------------------------------------------------

def check_report(name, path, tmp_path, budget):
    dirs = []
    elapsed = []
    for tag in ("run1", "run2"):
        t0 = time.perf_counter()
        code = cli.main(["report", "--data", str(path), "--out", str(tmp_path / tag),
                         "--seed", "42"])
        elapsed.append(time.perf_counter() - t0)
        assert code == 0
        dirs.append(tmp_path / tag)
    names = sorted(p.relative_to(dirs[0]).as_posix() for p in dirs[0].rglob("*") if p.is_file())
    other = sorted(p.relative_to(dirs[1]).as_posix() for p in dirs[1].rglob("*") if p.is_file())
    _, mismatch, errors = filecmp.cmpfiles(dirs[0], dirs[1], names, shallow=False)
    same = names == other and not mismatch and not errors
    record(name, same and max(elapsed) < budget,
           f"{len(names)} files identical={same}, slowest run {max(elapsed):.2f} s")


def test_report_determinism_canonical(tmp_path, capsys):
    name = "end to end: report byte-identical across runs, canonical file < 60 s"
    check_report(name, canonical_or_skip(name), tmp_path, 60.0)


def test_report_determinism_synthetic(synthetic_path, tmp_path, capsys):
    check_report("end to end: report byte-identical across runs, synthetic file < 60 s",
                 synthetic_path, tmp_path, 60.0)


def check_accuracy_status(name, dataset):
    rep = evaluation.evaluate_all(dataset, Config())
    text = rep.to_text()
    parts = []
    ok = True
    for s in rep.scores:
        ok &= math.isfinite(s.accuracy) and s.accuracy <= 100.0
        ok &= evaluation.fmt(s.reference_accuracy) in text
        parts.append(f"{s.name} {evaluation.fmt(s.accuracy)} vs ref {evaluation.fmt(s.reference_accuracy)}")
    record(name, ok, "; ".join(parts))


def test_accuracy_status_canonical():
    name = "published accuracies shown beside obtained; obtained finite and <= 100 (canonical)"
    d, _ = ingest.load(canonical_or_skip(name))
    check_accuracy_status(name, d)


def test_accuracy_status_synthetic(synthetic_dataset):
    check_accuracy_status(
        "published accuracies shown beside obtained; obtained finite and <= 100 (synthetic)",
        synthetic_dataset)


@pytest.mark.parametrize("source", ["canonical", "synthetic"])
def test_log_round_trip(source, synthetic_dataset):
    name = f"log transform: exp(log(close)) within 1e-12 relative error ({source})"
    if source == "canonical":
        d, _ = ingest.load(canonical_or_skip(name))
    else:
        d = synthetic_dataset
    close = np.array([r.close for r in d.records])
    back = np.exp(features.log_transform(close))
    err = float(np.max(np.abs(back - close) / close))
    record(name, err <= 1e-12, f"{close.size} prices, max relative error {err:.3g}")
