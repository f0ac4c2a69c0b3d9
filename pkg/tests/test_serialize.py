import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dowfactors import models
from dowfactors.errors import ModelFormatError
from dowfactors.models import serialize


def fitted(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(30, 4))
    y = X @ rng.normal(size=4) + rng.normal(size=30)
    return X, [
        models.fit_ols(X, y, names=["a", "b", "c", "d"]),
        models.fit_random_forest(X, y, B=4, seed=seed),
        models.fit_gradient_boost(X, y, K=6, seed=seed),
    ]


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**16))
def test_round_trip_is_lossless(seed):
    X, fits = fitted(seed)
    for m in fits:
        back = serialize.loads(serialize.dumps(m))
        assert type(back) is type(m)
        assert np.array_equal(back.predict(X), m.predict(X))
        assert serialize.dumps(back) == serialize.dumps(m)


def test_file_round_trip(tmp_path):
    X, fits = fitted(1)
    for m in fits:
        p = serialize.save(m, tmp_path / f"{m.kind}.json")
        assert np.array_equal(serialize.load(p).predict(X), m.predict(X))


def test_document_header():
    _, fits = fitted(2)
    doc = json.loads(serialize.dumps(fits[1]))
    assert doc["format"] == "dowfactors-model"
    assert doc["version"] == 1
    assert doc["kind"] == "forest"
    assert doc["seed"] == 2
    assert doc["hyperparameters"]["B"] == 4


def test_undefined_betas_survive():
    m = models.LinearModel(0.1, (1.0,), ("mkt_excess",), 0.5, ("smb", "hml"))
    back = serialize.loads(serialize.dumps(m))
    assert back.coef("hml") is None and back == m


@pytest.mark.parametrize("mutate,match", [
    (lambda d: d.update(format="other"), "not a"),
    (lambda d: d.update(version=99), "version"),
    (lambda d: d.update(kind="svm"), "unknown model kind"),
    (lambda d: d.pop("trees"), "lacks field"),
    (lambda d: d["trees"][0]["value"].pop(), "length"),
])
def test_bad_documents(mutate, match):
    _, fits = fitted(3)
    doc = serialize.to_dict(fits[2])
    mutate(doc)
    with pytest.raises(ModelFormatError, match=match):
        serialize.from_dict(json.loads(json.dumps(doc)))


def test_not_json():
    with pytest.raises(ModelFormatError):
        serialize.loads("{not json")
