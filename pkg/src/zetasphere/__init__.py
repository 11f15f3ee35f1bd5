"""Spectra, heat traces, zeta determinants, and Quillen metrics on the sphere.

The package discretizes the generalized conformal Laplacian on the Riemann
sphere in a spherical-harmonic basis, computes full spectra for smooth,
continuous, and singular integrable conformal factors, and derives heat
traces, zeta values, the zeta derivative at zero, and the two determinant
metrics built from them, together with a harness verifying the convergence
of all of it along smoothing families.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DomainError,
    EigenConvergenceError,
    FitWindowError,
    IndefiniteMassError,
    InvalidMetricError,
    UnsupportedPointError,
    ZetasphereError,
)
from .metrics import (
    ChartPoint,
    ConformalMetric,
    MetricFamily,
    fs_metric,
    geomean_family,
    interpolate,
    max_metric,
    parse_metric_spec,
    pnorm_family,
    pnorm_metric,
    scaled_metric,
    volume,
)

__all__ = [
    "__version__",
    "ZetasphereError",
    "ConfigError",
    "DomainError",
    "EigenConvergenceError",
    "FitWindowError",
    "IndefiniteMassError",
    "InvalidMetricError",
    "UnsupportedPointError",
    "ChartPoint",
    "ConformalMetric",
    "MetricFamily",
    "fs_metric",
    "max_metric",
    "pnorm_metric",
    "scaled_metric",
    "pnorm_family",
    "geomean_family",
    "interpolate",
    "parse_metric_spec",
    "volume",
]
