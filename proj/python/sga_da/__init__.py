"""Python bindings for the hardness-aware domain alignment core.

Array arguments accept anything numpy can convert to a 2-D float64 array.
Configs and dataset specs are plain dicts with the same keys as the JSON
files read by the ``sga`` command-line tool.
"""

import json
import os

from ._sga import (
    ConfigError,
    DataError,
    DomainError,
    EmptyInputError,
    IoError,
    NumericError,
    ParseError,
    SgaError,
    ShapeError,
    SpsState,
    StateError,
    domain_confusion_degree,
    focal_domain_loss,
    median,
    median_heuristic_sigma,
    mmd_hardness,
    rbf_kernel_matrix,
)
from . import _sga

__all__ = [
    "ConfigError", "DataError", "DomainError", "EmptyInputError", "IoError",
    "NumericError", "ParseError", "SgaError", "ShapeError", "SpsState",
    "StateError", "domain_confusion_degree", "evaluate", "focal_domain_loss",
    "generate_dataset", "median", "median_heuristic_sigma", "mmd_hardness",
    "rbf_kernel_matrix", "save_dataset", "train",
]


def generate_dataset(spec):
    """Return a dict of ``source_x``, ``source_y``, ``target_x``, ``target_y``."""
    return _sga._generate_dataset(json.dumps(spec))


def save_dataset(spec, path):
    """Generate a dataset from ``spec`` and write it as CSV."""
    _sga._save_dataset(json.dumps(spec), os.fspath(path))


def train(config, out_dir=None):
    """Train one variant.

    Returns a dict with the iteration count, one entry per epoch and the final
    evaluation. With ``out_dir``, metrics.jsonl and model.json are written there.
    """
    out = None if out_dir is None else os.fspath(out_dir)
    return json.loads(_sga._train(json.dumps(config), out))


def evaluate(model_path, data_path):
    return json.loads(_sga._evaluate(os.fspath(model_path), os.fspath(data_path)))
