"""
Train/test splitting, scoring, and the end-to-end model comparison.

"Accuracy" for these regressions is 100 x test-set R^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import clustering, features
from .config import Config
from .errors import DegenerateSplit, ZeroVariance
from .ingest import Dataset
from .models import (
    LinearModel,
    default_mtry,
    fit_fama_french,
    fit_gradient_boost,
    fit_ols,
    fit_random_forest,
)

ACCURACY_DEFINITION = "accuracy = 100 x R^2 on the test rows (R^2 = 1 - SSE/SST, SST about the test mean)"

MODEL_NAMES = ("linear_regression", "random_forest", "gradient_boosting")
MODEL_LABELS = {
    "linear_regression": "Linear regression",
    "random_forest": "Random forest",
    "gradient_boosting": "Gradient boosting",
}
# Published reference accuracies, shown side by side only.
REFERENCE_ACCURACY = {
    "linear_regression": 95.23,
    "random_forest": 71.27,
    "gradient_boosting": 92.97,
}


def fmt(x) -> str:
    """Six significant digits; the single number format for all outputs."""
    if x is None:
        return "undefined"
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if x == 0:
        return "0"
    return f"{x:.6g}"


@dataclass(frozen=True)
class SplitSpec:
    scheme: str = "temporal"
    fraction: float = 0.0
    seed: int = 0

    def describe(self) -> str:
        if self.scheme == "temporal":
            return "temporal (train quarter 1, test quarter 2)"
        return f"holdout (test fraction {fmt(self.fraction)}, seed {self.seed})"


def parse_split(text: str, seed: int = 0) -> SplitSpec:
    text = text.strip()
    if text == "temporal":
        return SplitSpec("temporal")
    if text.startswith("holdout:"):
        try:
            frac = float(text.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad holdout fraction in {text!r}") from None
        if not 0.0 <= frac <= 1.0:
            raise ValueError("holdout fraction must lie in [0, 1]")
        return SplitSpec("holdout", frac, seed)
    raise ValueError(f"split must be 'temporal' or 'holdout:<fraction>', got {text!r}")


def split(rows, spec: SplitSpec):
    """Return ``(train_indices, test_indices)`` as sorted integer arrays.

    ``rows`` is a DesignMatrix (or anything with ``quarters`` and ``dates``).
    """
    n = len(rows.dates)
    if n == 0:
        raise DegenerateSplit("no rows to split")
    if spec.scheme == "temporal":
        q = np.asarray(rows.quarters)
        train, test = np.flatnonzero(q == 1), np.flatnonzero(q == 2)
        if train.size + test.size != n:
            raise DegenerateSplit("temporal split needs every row labelled quarter 1 or 2")
        if train.size and test.size:
            if max(rows.dates[i] for i in train) >= min(rows.dates[i] for i in test):
                raise DegenerateSplit("quarter 1 rows do not all precede quarter 2 rows")
    elif spec.scheme == "holdout":
        n_test = int(round(spec.fraction * n))
        perm = np.random.default_rng(spec.seed).permutation(n)
        test, train = np.sort(perm[:n_test]), np.sort(perm[n_test:])
    else:
        raise ValueError(f"unknown split scheme {spec.scheme!r}")
    if train.size == 0 or test.size == 0:
        raise DegenerateSplit(f"{spec.describe()} leaves an empty "
                              f"{'training' if train.size == 0 else 'test'} set")
    return train, test


def r_squared(y, yhat) -> float:
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape or y.ndim != 1:
        raise ValueError("y and yhat must be vectors of equal length")
    if y.size < 2:
        raise ValueError("R^2 needs at least two observations")
    mean = math.fsum(y) / y.size
    sst = math.fsum((y - mean) ** 2)
    if sst == 0:
        raise ZeroVariance("target has zero variance; R^2 undefined")
    sse = math.fsum((y - yhat) ** 2)
    return 1.0 - sse / sst


@dataclass
class ModelScore:
    target: str
    name: str
    hyperparameters: dict
    seed: Optional[int]
    train_r2: float
    test_r2: float
    residual_mean: float
    residual_sd: float
    residual_min: float
    residual_max: float
    model: object = None
    train_pred: np.ndarray = None
    test_pred: np.ndarray = None

    @property
    def accuracy(self) -> float:
        return 100.0 * self.test_r2

    @property
    def train_accuracy(self) -> float:
        return 100.0 * self.train_r2

    @property
    def reference_accuracy(self) -> float:
        return REFERENCE_ACCURACY[self.name]


@dataclass
class TargetResult:
    target: str
    members: list[str]
    fama_french: LinearModel
    design: features.DesignMatrix
    train_idx: np.ndarray
    test_idx: np.ndarray
    scores: list[ModelScore]

    @property
    def ranking(self) -> list[str]:
        order = sorted(range(len(self.scores)), key=lambda i: (-self.scores[i].accuracy, i))
        return [self.scores[i].name for i in order]


@dataclass
class EvaluationReport:
    split: SplitSpec
    seed: int
    k: int
    results: list[TargetResult] = field(default_factory=list)

    @property
    def scores(self) -> list[ModelScore]:
        return [s for r in self.results for s in r.scores]

    def to_text(self) -> str:
        out = [
            "Model comparison",
            f"  {ACCURACY_DEFINITION}",
            f"  split: {self.split.describe()}",
            f"  master seed: {self.seed}",
            f"  clusters (k): {self.k}",
            "  reference accuracies are published figures whose split,",
            "  target and hyperparameters are unknown, so they are not reproduction targets",
            "",
        ]
        for res in self.results:
            ff = res.fama_french
            out.append(f"Target {res.target}")
            out.append(f"  rows: {len(res.design.y)} (train {len(res.train_idx)}, "
                       f"test {len(res.test_idx)})")
            out.append(f"  features: {', '.join(res.design.columns)}")
            out.append(f"  co-moving cluster: {', '.join(res.members)}")
            betas = ", ".join(f"beta_{n}={fmt(ff.coef(n))}" for n in ("mkt_excess", "smb", "hml"))
            out.append(f"  three-factor fit: alpha={fmt(ff.intercept)}, {betas}, "
                       f"residual_variance={fmt(ff.residual_variance)}")
            out.append("")
            header = (f"  {'model':<20}{'accuracy':>12}{'reference':>12}{'train R2':>12}"
                      f"{'test R2':>12}{'resid mean':>12}{'resid sd':>12}{'resid min':>12}"
                      f"{'resid max':>12}")
            out.append(header)
            for s in res.scores:
                out.append(
                    f"  {MODEL_LABELS[s.name]:<20}{fmt(s.accuracy):>12}"
                    f"{fmt(s.reference_accuracy):>12}{fmt(s.train_r2):>12}{fmt(s.test_r2):>12}"
                    f"{fmt(s.residual_mean):>12}{fmt(s.residual_sd):>12}"
                    f"{fmt(s.residual_min):>12}{fmt(s.residual_max):>12}")
            out.append("")
            for s in res.scores:
                hp = ", ".join(f"{k}={fmt(v) if not isinstance(v, bool) else v}"
                               for k, v in s.hyperparameters.items())
                out.append(f"  {MODEL_LABELS[s.name]}: seed={s.seed if s.seed is not None else '-'}"
                           f"{', ' + hp if hp else ''}")
            out.append(f"  ranking: {' > '.join(MODEL_LABELS[n] for n in res.ranking)}")
            out.append("")
        return "\n".join(out)

    def to_kv(self) -> str:
        pairs = [
            ("accuracy_definition", ACCURACY_DEFINITION),
            ("split", self.split.describe()),
            ("seed", self.seed),
            ("k", self.k),
        ]
        for res in self.results:
            t = res.target
            ff = res.fama_french
            pairs += [
                (f"{t}.rows", len(res.design.y)),
                (f"{t}.train_rows", len(res.train_idx)),
                (f"{t}.test_rows", len(res.test_idx)),
                (f"{t}.features", ",".join(res.design.columns)),
                (f"{t}.cluster_members", ",".join(res.members)),
                (f"{t}.fama_french.alpha", fmt(ff.intercept)),
                (f"{t}.fama_french.beta_mkt_excess", fmt(ff.coef("mkt_excess"))),
                (f"{t}.fama_french.beta_smb", fmt(ff.coef("smb"))),
                (f"{t}.fama_french.beta_hml", fmt(ff.coef("hml"))),
                (f"{t}.fama_french.residual_variance", fmt(ff.residual_variance)),
            ]
            for s in res.scores:
                p = f"{t}.{s.name}"
                pairs += [
                    (f"{p}.accuracy", fmt(s.accuracy)),
                    (f"{p}.reference_accuracy", fmt(s.reference_accuracy)),
                    (f"{p}.train_r2", fmt(s.train_r2)),
                    (f"{p}.test_r2", fmt(s.test_r2)),
                    (f"{p}.residual_mean", fmt(s.residual_mean)),
                    (f"{p}.residual_sd", fmt(s.residual_sd)),
                    (f"{p}.residual_min", fmt(s.residual_min)),
                    (f"{p}.residual_max", fmt(s.residual_max)),
                    (f"{p}.seed", "" if s.seed is None else s.seed),
                ]
                pairs += [(f"{p}.{k}", str(v).lower() if isinstance(v, bool) else fmt(v))
                          for k, v in s.hyperparameters.items()]
            pairs.append((f"{t}.ranking", ",".join(res.ranking)))
        return "".join(f"{k}={v}\n" for k, v in pairs)


@dataclass
class Prepared:
    """Everything computed before any model is fitted."""

    returns: features.ReturnMatrix
    market: features.MarketValueTable
    factors: features.FactorSeries
    clusters: clustering.ClusterModel


def prepare(dataset: Dataset, config: Config) -> Prepared:
    r = features.pivot_returns(dataset)
    mv = features.market_values(dataset)

    def external(path):
        return None if not path else features.read_factor_file(path, r.dates)

    f = features.build_factors(dataset, r, mv, hml=external(config.hml),
                               risk_free=external(config.risk_free),
                               index=external(config.index))
    cm = clustering.best_of_restarts(r, config.k, config.seed, config.restarts,
                                     config.max_iter, config.tol)
    return Prepared(r, mv, f, cm)


def _residual_stats(resid: np.ndarray):
    return (math.fsum(resid) / resid.size, float(np.std(resid)),
            float(resid.min()), float(resid.max()))


def fit_all(X, y, config: Config, seed: int):
    """Fit the three compared models; returns ``{name: (model, hyperparameters)}``."""
    p = X.shape[1]
    mtry = config.mtry or default_mtry(p)
    forest_hp = {"B": config.trees, "max_depth": config.depth, "min_leaf": config.min_leaf,
                 "mtry": min(mtry, p), "bootstrap": config.bootstrap}
    boost_hp = {"K": config.stages, "learning_rate": config.learning_rate,
                "max_depth": config.boost_depth, "min_leaf": config.min_leaf}
    return {
        "linear_regression": (fit_ols(X, y, names=features.DESIGN_COLUMNS[:p]), {}),
        "random_forest": (fit_random_forest(X, y, seed=seed, **forest_hp), forest_hp),
        "gradient_boosting": (fit_gradient_boost(X, y, seed=seed, **boost_hp), boost_hp),
    }


def design_for(prep: Prepared, target: str, spec: SplitSpec):
    """Design matrix for ``target`` with volume standardized on training rows."""
    members = clustering.cluster_members(prep.clusters, target)
    cf = clustering.cluster_feature(prep.returns, members, target)
    draft = features.build_design_matrix(prep.returns, prep.factors, cf, target)
    train, test = split(draft, spec)
    dm = features.build_design_matrix(prep.returns, prep.factors, cf, target,
                                      standardize_rows=train)
    return dm, train, test, members


def evaluate_all(dataset: Dataset, config: Config, prep: Optional[Prepared] = None):
    """Run features, clustering, the three model fits and scoring.

    Pure in (dataset, config): identical inputs give identical reports.
    """
    spec = parse_split(config.split, config.seed)
    prep = prep or prepare(dataset, config)
    report = EvaluationReport(split=spec, seed=config.seed, k=config.k)
    for target in config.target:
        dm, train, test, members = design_for(prep, target, spec)
        ff = fit_fama_french(prep.returns, prep.factors, target)
        Xtr, ytr, Xte, yte = dm.X[train], dm.y[train], dm.X[test], dm.y[test]
        scores = []
        for name, (model, hp) in fit_all(Xtr, ytr, config, config.seed).items():
            ptr, pte = model.predict(Xtr), model.predict(Xte)
            stats = _residual_stats(yte - pte)
            scores.append(ModelScore(
                target=target, name=name, hyperparameters=hp,
                seed=None if name == "linear_regression" else config.seed,
                train_r2=r_squared(ytr, ptr), test_r2=r_squared(yte, pte),
                residual_mean=stats[0], residual_sd=stats[1],
                residual_min=stats[2], residual_max=stats[3],
                model=model, train_pred=ptr, test_pred=pte))
        report.results.append(TargetResult(target, members, ff, dm, train, test, scores))
    return report
