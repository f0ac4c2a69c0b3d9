from typing import Union

import numpy as np

from .ensemble import BoostModel, ForestModel, default_mtry, fit_gradient_boost, fit_random_forest
from .linear import LinearModel, fit_fama_french, fit_ols
from .tree import RegressionTree, fit_tree

FittedModel = Union[LinearModel, ForestModel, BoostModel]


def predict(model: FittedModel, X) -> np.ndarray:
    return model.predict(X)


__all__ = [
    "BoostModel",
    "FittedModel",
    "ForestModel",
    "LinearModel",
    "RegressionTree",
    "default_mtry",
    "fit_fama_french",
    "fit_gradient_boost",
    "fit_ols",
    "fit_random_forest",
    "fit_tree",
    "predict",
]
