"""
Versioned text format for fitted models.

A model file is a JSON document::

    {"format": "dowfactors-model", "version": 1, "kind": "forest",
     "hyperparameters": {...}, "seed": 42, "trees": [...]}

Floats are written with ``repr`` precision, so reading a file back yields
bit-identical parameters.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ModelFormatError
from .ensemble import BoostModel, ForestModel
from .linear import LinearModel
from .tree import RegressionTree

FORMAT = "dowfactors-model"
VERSION = 1


def _tree_to_dict(t: RegressionTree) -> dict:
    return {
        "n_features": t.n_features,
        "max_depth": t.max_depth,
        "min_leaf": t.min_leaf,
        "feature": t.feature.tolist(),
        "threshold": t.threshold.tolist(),
        "left": t.left.tolist(),
        "right": t.right.tolist(),
        "value": t.value.tolist(),
        "n_samples": t.n_samples.tolist(),
    }


def _tree_from_dict(d: dict) -> RegressionTree:
    n = len(d["feature"])
    arrays = {}
    for key, dtype in (("feature", np.int64), ("threshold", float), ("left", np.int64),
                       ("right", np.int64), ("value", float), ("n_samples", np.int64)):
        a = np.array(d[key], dtype=dtype)
        if a.shape != (n,):
            raise ModelFormatError(f"tree array {key!r} has length {a.size}, expected {n}")
        arrays[key] = a
    return RegressionTree(n_features=int(d["n_features"]), max_depth=int(d["max_depth"]),
                          min_leaf=int(d["min_leaf"]), **arrays)


def to_dict(model) -> dict:
    head = {"format": FORMAT, "version": VERSION, "kind": model.kind}
    if isinstance(model, LinearModel):
        return {**head, "hyperparameters": {}, "seed": None,
                "intercept": model.intercept,
                "coefficients": list(model.coefficients),
                "names": list(model.names),
                "residual_variance": model.residual_variance,
                "undefined": list(model.undefined)}
    if isinstance(model, ForestModel):
        return {**head,
                "hyperparameters": {"B": model.B, "max_depth": model.max_depth,
                                    "min_leaf": model.min_leaf, "mtry": model.mtry,
                                    "bootstrap": model.bootstrap},
                "seed": model.seed,
                "n_features": model.n_features,
                "trees": [_tree_to_dict(t) for t in model.trees]}
    if isinstance(model, BoostModel):
        return {**head,
                "hyperparameters": {"K": model.K, "learning_rate": model.learning_rate,
                                    "max_depth": model.max_depth, "min_leaf": model.min_leaf},
                "seed": model.seed,
                "n_features": model.n_features,
                "initial": model.initial,
                "sse_trace": list(model.sse_trace),
                "trees": [_tree_to_dict(t) for t in model.trees]}
    raise TypeError(f"cannot serialize {type(model).__name__}")


def from_dict(d: dict):
    if d.get("format") != FORMAT:
        raise ModelFormatError(f"not a {FORMAT} document")
    if d.get("version") != VERSION:
        raise ModelFormatError(f"unsupported model format version {d.get('version')!r}")
    kind = d.get("kind")
    try:
        if kind == "linear":
            return LinearModel(float(d["intercept"]),
                               tuple(float(c) for c in d["coefficients"]),
                               tuple(d["names"]), float(d["residual_variance"]),
                               tuple(d["undefined"]))
        hp = d["hyperparameters"]
        trees = tuple(_tree_from_dict(t) for t in d["trees"])
        if kind == "forest":
            return ForestModel(trees, int(hp["B"]), int(hp["mtry"]), bool(hp["bootstrap"]),
                               int(d["seed"]), int(hp["max_depth"]), int(hp["min_leaf"]),
                               int(d["n_features"]))
        if kind == "boost":
            return BoostModel(float(d["initial"]), trees, float(hp["learning_rate"]),
                              int(hp["K"]), int(d["seed"]), int(hp["max_depth"]),
                              int(hp["min_leaf"]), int(d["n_features"]),
                              tuple(float(s) for s in d["sse_trace"]))
    except KeyError as exc:
        raise ModelFormatError(f"model document lacks field {exc.args[0]!r}") from None
    raise ModelFormatError(f"unknown model kind {kind!r}")


def dumps(model) -> str:
    return json.dumps(to_dict(model), indent=1, sort_keys=True) + "\n"


def loads(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model text is not valid JSON: {exc}") from None
    return from_dict(doc)


def save(model, path) -> Path:
    path = Path(path)
    path.write_text(dumps(model))
    return path


def load(path):
    return loads(Path(path).read_text())
