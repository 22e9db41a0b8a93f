"""Numerical flatness tests and flatness-deviation functionals for metrics and connections."""
import os as _os

# FLATLAB_THREADS caps the BLAS/OpenMP pools; it must be set before numpy loads.
if _os.environ.get("FLATLAB_THREADS"):
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _os.environ["FLATLAB_THREADS"])

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigInvalid,
    DimensionMismatch,
    DimensionTooSmall,
    FlatlabError,
    GaugeViolation,
    IoFailure,
    LineSearchFailed,
    NotPositiveDefinite,
    NumericalFailure,
    OutOfDomain,
    ShapeMismatch,
)
from .fields import ChartBox, FDConfig, FieldSpec, eval_connection_jet1, eval_metric_jet2  # noqa: E402

__all__ = [
    "ChartBox",
    "ConfigInvalid",
    "DimensionMismatch",
    "DimensionTooSmall",
    "FDConfig",
    "FieldSpec",
    "FlatlabError",
    "GaugeViolation",
    "IoFailure",
    "LineSearchFailed",
    "NotPositiveDefinite",
    "NumericalFailure",
    "OutOfDomain",
    "ShapeMismatch",
    "__version__",
    "eval_connection_jet1",
    "eval_metric_jet2",
]
