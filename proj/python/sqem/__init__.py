"""Defect-model estimation pipeline with neuro-fuzzy recalibration."""

import json as _json
import os as _os

from ._core import (
    ConfigError,
    DataError,
    Error,
    NumericalError,
    __version__,
    anova,
    compute_vaf,
    derive_seed,
    f_cdf,
    improvement_percent,
    kfold_assignment,
    mmre,
    pred,
    spearman,
    stage_names,
    studentized_range_cdf,
    t_cdf,
    train_size,
)
from . import _core


def run(config, stage=None, out_dir=None, data=None, model=None, seed=None):
    """Runs the pipeline (or one stage) and returns (report, summary)."""
    result = _json.loads(
        _core._run(
            _os.fspath(config),
            stage,
            None if out_dir is None else _os.fspath(out_dir),
            None if data is None else _os.fspath(data),
            None if model is None else _os.fspath(model),
            seed,
        )
    )
    return result["report"], result["summary"]


def verify_goldens(manifest):
    """Re-runs every golden fixture; one dict per fixture with per-field deltas."""
    return _json.loads(_core._verify_goldens(_os.fspath(manifest)))


__all__ = [
    "ConfigError",
    "DataError",
    "Error",
    "NumericalError",
    "__version__",
    "anova",
    "compute_vaf",
    "derive_seed",
    "f_cdf",
    "improvement_percent",
    "kfold_assignment",
    "mmre",
    "pred",
    "run",
    "spearman",
    "stage_names",
    "studentized_range_cdf",
    "t_cdf",
    "train_size",
    "verify_goldens",
]
