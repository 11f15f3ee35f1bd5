"""Generalized symmetric eigensolve for the stiffness/mass pencil.

Wraps the LAPACK sygvd path (Cholesky reduction followed by symmetric
divide-and-conquer) through scipy and maps its failure modes onto the
package error types. The lowest eigenvalue belongs to the constants and is
snapped to an exact zero once it passes the relative threshold check; nearly
degenerate clusters are re-orthonormalized in the mass inner product so that
downstream functional calculus is stable against eigenvector mixing inside
a cluster.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .discretize import OperatorPair
from .errors import EigenConvergenceError, IndefiniteMassError, InvalidMetricError

__all__ = ["Spectrum", "generalized_eigs", "resolvent", "apply_function"]

KERNEL_SNAP_REL = 1e-8
CLUSTER_GAP_REL = 1e-9
SOLVER_VERSION = "sygvd-1"


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues and M-orthonormal eigenvectors of one pencil.

    ``eigenvalues[0]`` is exactly 0.0 (the constants); the columns of
    ``vectors`` satisfy V^T M V = I.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray
    metric_id: str
    L: int
    pair: OperatorPair = field(repr=False)
    kernel_dim: int = 1

    @property
    def positive(self) -> np.ndarray:
        return self.eigenvalues[self.kernel_dim:]

    @property
    def lambda1(self) -> float:
        return float(self.eigenvalues[self.kernel_dim])


def _map_lapack_error(err: Exception, n: int) -> Exception:
    msg = str(err)
    lead = re.search(r"leading minor of order (\d+)", msg)
    if lead is not None:
        return IndefiniteMassError(
            f"mass matrix is not positive definite ({msg})"
        )
    num = re.search(r"(\d+)", msg)
    stuck = int(num.group(1)) if num else None
    if stuck is not None and stuck > n:
        return IndefiniteMassError(
            f"mass matrix is not positive definite ({msg})"
        )
    return EigenConvergenceError(
        f"eigensolver failed to converge ({msg})", stuck_index=stuck
    )


def _recluster(vals: np.ndarray, vecs: np.ndarray, M: np.ndarray) -> None:
    """Modified Gram-Schmidt in the M inner product inside tight clusters.

    The M-images of the cluster columns are formed once as a block product
    and updated alongside the columns, so the sweep costs one matrix product
    per cluster instead of one matrix-vector product per projection.
    """
    n = vals.size
    i = 0
    while i < n:
        j = i + 1
        while j < n and vals[j] - vals[j - 1] <= CLUSTER_GAP_REL * max(1.0, vals[j]):
            j += 1
        if j - i > 1:
            block = vecs[:, i:j]
            images = M @ block
            for k in range(block.shape[1]):
                v = block[:, k]
                mv = images[:, k]
                for prev in range(k):
                    c = block[:, prev] @ mv
                    v -= c * block[:, prev]
                    mv -= c * images[:, prev]
                nrm = np.sqrt(v @ mv)
                block[:, k] = v / nrm
                images[:, k] = mv / nrm
        i = j


def generalized_eigs(pair: OperatorPair) -> Spectrum:
    """All eigenvalues of K v = lambda M v, ascending, with kernel snap.

    Raises
    ------
    IndefiniteMassError
        If the Cholesky reduction of M fails.
    EigenConvergenceError
        If the eigensolver stalls; carries the reported index.
    InvalidMetricError
        If the computed bottom of the spectrum is not a one-dimensional
        kernel within the relative snap threshold.
    """
    n = pair.n
    try:
        vals, vecs = scipy.linalg.eigh(pair.stiffness, pair.mass, driver="gvd")
    except scipy.linalg.LinAlgError as e:
        raise _map_lapack_error(e, n) from e
    except ValueError as e:
        raise _map_lapack_error(e, n) from e

    lam1 = vals[1]
    if not (lam1 > 0.0) or abs(vals[0]) > KERNEL_SNAP_REL * lam1:
        raise InvalidMetricError(
            f"pencil of {pair.metric_id!r} has no clean one-dimensional kernel: "
            f"lowest eigenvalues {vals[0]:.3e}, {vals[1]:.3e}"
        )
    vals = vals.copy()
    vals[0] = 0.0
    _recluster(vals, vecs, pair.mass)
    return Spectrum(vals, vecs, pair.metric_id, pair.L, pair)


def apply_function(spectrum: Spectrum, f) -> np.ndarray:
    """Matrix of f(operator) in the basis: V diag(f(lambda)) V^T M."""
    fv = np.asarray(f(spectrum.eigenvalues), dtype=float)
    V = spectrum.vectors
    return (V * fv[None, :]) @ (V.T @ spectrum.pair.mass)


def resolvent(spectrum: Spectrum, shift: float = 1.0) -> np.ndarray:
    """(shift + operator)^(-1) as a matrix acting on basis coefficients."""
    if shift <= 0.0:
        raise InvalidMetricError(f"resolvent shift must be positive, got {shift}")
    return apply_function(spectrum, lambda lam: 1.0 / (shift + lam))
