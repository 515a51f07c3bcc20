"""Data-rate learners: linear baseline, regression tree, forest, model tree."""

from .cart import TreeModel, fit_cart, leaf_count
from .dataset import CategoryEncoder, Dataset
from .forest import ForestModel, fit_forest
from .linear import LinearModel, fit_linear
from .m5 import M5Model, fit_m5
from .io import load_model, model_from_dict, model_to_dict, save_model


def predict(model, X):
    """Dispatch to the model's own predict; accepts Dataset or array."""
    return model.predict(X)


__all__ = ["Dataset", "CategoryEncoder", "TreeModel", "ForestModel",
           "LinearModel", "M5Model", "fit_cart", "fit_forest", "fit_linear",
           "fit_m5", "leaf_count", "predict", "save_model", "load_model",
           "model_to_dict", "model_from_dict"]
