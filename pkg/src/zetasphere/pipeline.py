"""Shared computation pipeline: basis/spectrum caching and scale-aware grids.

Everything downstream (CLI subcommands, the anomaly module, the convergence
harness, the acceptance suite) goes through these helpers so that a basis is
built once per resolution and a pencil is solved once per (metric, basis)
within a process. The disk cache stores eigenvalues and volume, which is all
the scalar pipelines (theta, zeta, torsion) need; operator-level work
(resolvents, heat operators) recomputes eigenvectors in process.

Time grids and fit windows default to the metric's global scale: rescaling
the conformal factor by c rescales eigenvalues by 1/c, so every default time
quantity carries a factor ``metric.scale_hint``. Explicitly passed windows
and grids are used as-is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cache import SpectrumCache, spectrum_cache_key
from .discretize import SpectralBasis, assemble, build_basis
from .eigensolve import SOLVER_VERSION, Spectrum, generalized_eigs
from .heatzeta import (
    DEFAULT_FIT_WINDOW,
    AsymptoticFit,
    HeatTraceSamples,
    ZetaResult,
    fit_asymptotics,
    geometric_grid,
    heat_trace_samples,
    theta_values,
    zeta_result,
)
from .metrics import ConformalMetric

__all__ = [
    "get_basis",
    "compute_spectrum",
    "SpectralData",
    "spectral_data",
    "default_time_grid",
    "default_fit_window",
    "compute_fit",
    "compute_zeta",
    "clear_process_caches",
]

_BASIS_CACHE: dict[tuple[int, int, int], SpectralBasis] = {}
_SPECTRUM_CACHE: dict[tuple[str, int, int, int], Spectrum] = {}


def _sizes(L: int, n_theta: int | None, n_phi: int | None) -> tuple[int, int]:
    return (2 * L + 2 if n_theta is None else n_theta,
            2 * L + 2 if n_phi is None else n_phi)


def clear_process_caches() -> None:
    _BASIS_CACHE.clear()
    _SPECTRUM_CACHE.clear()


def get_basis(L: int, n_theta: int | None = None, n_phi: int | None = None) -> SpectralBasis:
    nt, np_ = _sizes(L, n_theta, n_phi)
    key = (L, nt, np_)
    if key not in _BASIS_CACHE:
        _BASIS_CACHE[key] = build_basis(L, nt, np_)
    return _BASIS_CACHE[key]


def compute_spectrum(
    metric: ConformalMetric,
    L: int,
    n_theta: int | None = None,
    n_phi: int | None = None,
) -> Spectrum:
    """Full spectrum with eigenvectors, memoized per process."""
    nt, np_ = _sizes(L, n_theta, n_phi)
    key = (metric.id, L, nt, np_)
    if key not in _SPECTRUM_CACHE:
        basis = get_basis(L, nt, np_)
        _SPECTRUM_CACHE[key] = generalized_eigs(assemble(basis, metric))
    return _SPECTRUM_CACHE[key]


@dataclass(frozen=True)
class SpectralData:
    """Scalar payload of one solved pencil: eigenvalues and volume."""

    metric_id: str
    L: int
    n_theta: int
    n_phi: int
    eigenvalues: np.ndarray
    volume: float
    solver_version: str
    from_cache: bool

    @property
    def lambda1(self) -> float:
        lam = self.eigenvalues
        return float(lam[lam > 0.0][0])


def spectral_data(
    metric: ConformalMetric,
    L: int,
    n_theta: int | None = None,
    n_phi: int | None = None,
    cache: SpectrumCache | None = None,
) -> SpectralData:
    """Eigenvalues and volume, served from the disk cache when possible.

    The disk lookup runs before any in-process state so a warm cache is
    exercised honestly; on a miss the spectrum is computed, stored, and the
    fresh values returned.
    """
    nt, np_ = _sizes(L, n_theta, n_phi)
    key = spectrum_cache_key(metric.id, L, nt, np_, SOLVER_VERSION)
    if cache is not None:
        hit = cache.load(key)
        if hit is not None:
            return SpectralData(
                metric.id, L, nt, np_,
                np.asarray(hit["eigenvalues"], dtype=float),
                float(hit["volume"][()]),
                SOLVER_VERSION,
                True,
            )
    spectrum = compute_spectrum(metric, L, nt, np_)
    vol = float(spectrum.pair.mass[0, 0])
    if cache is not None:
        cache.store(key, eigenvalues=spectrum.eigenvalues, volume=np.float64(vol))
    return SpectralData(
        metric.id, L, nt, np_, spectrum.eigenvalues, vol, SOLVER_VERSION, False
    )


def default_time_grid(
    metric: ConformalMetric,
    t_lo: float = 0.01,
    t_hi: float = 10.0,
    count: int = 120,
    scale_with_metric: bool = True,
) -> np.ndarray:
    s = metric.scale_hint if scale_with_metric else 1.0
    return geometric_grid(t_lo * s, t_hi * s, count)


def default_fit_window(metric: ConformalMetric) -> tuple[float, float]:
    s = metric.scale_hint
    return (DEFAULT_FIT_WINDOW[0] * s, DEFAULT_FIT_WINDOW[1] * s)


FIT_GRID_NODES = 25


def compute_fit(
    data: SpectralData,
    metric: ConformalMetric,
    window: tuple[float, float] | None = None,
    trunc_tol: float = 1e-8,
    n_nodes: int = FIT_GRID_NODES,
) -> tuple[HeatTraceSamples, AsymptoticFit]:
    """Sample theta on a dedicated geometric grid inside the fit window.

    The grid is laid in the part of the window where the truncation bound
    clears ``trunc_tol``, so the default window keeps working at small L
    (with larger, honestly reported, parameter scatter). A window entirely
    below the valid region raises FitWindowError.
    """
    if window is None:
        window = default_fit_window(metric)
    lam = data.eigenvalues
    lam_max = float(lam[-1])
    n = int(lam.size)
    t_valid = math.log(n / trunc_tol) / lam_max
    lo = max(float(window[0]), t_valid)
    # an all-invalid window still gets a grid so fit_asymptotics can raise
    # its canonical FitWindowError
    grid_lo = lo if lo < float(window[1]) else float(window[0])
    t_grid = geometric_grid(grid_lo, float(window[1]), n_nodes)
    samples = HeatTraceSamples(
        data.metric_id, t_grid, theta_values(lam, t_grid),
        n * np.exp(-lam_max * t_grid), lam_max, n,
    )
    return samples, fit_asymptotics(samples, window, trunc_tol)


def compute_zeta(
    metric: ConformalMetric,
    L: int,
    n_theta: int | None = None,
    n_phi: int | None = None,
    cache: SpectrumCache | None = None,
    window: tuple[float, float] | None = None,
    s_values: tuple[float, ...] = (1.5, 2.0, 3.0),
    trunc_tol: float = 1e-8,
) -> tuple[SpectralData, HeatTraceSamples, AsymptoticFit, ZetaResult]:
    """The scalar pipeline: spectrum -> heat trace -> fit -> zeta data."""
    data = spectral_data(metric, L, n_theta, n_phi, cache)
    samples, fit = compute_fit(data, metric, window, trunc_tol)
    result = zeta_result(data.eigenvalues, fit, s_values, metric_id=data.metric_id)
    return data, samples, fit, result
