"""Galerkin discretization of the conformal Laplace operator.

The trial space is spanned by real spherical harmonics up to degree L. Two
matrices represent the operator pencil:

* the stiffness matrix K of the Dirichlet form, which does not depend on the
  metric at all (the form is conformally invariant in complex dimension one),
  assembled once per basis in chart coordinates;
* the mass matrix M of the metric area form, whose density ratio against the
  round probability measure is ``lambda(z) (1 + |z|^2)^2``.

Generalized eigenvalues of (K, M) then discretize the spectrum of the
operator ``-lambda^{-1} d^2/(dz dzbar)`` acting on functions.

Every built-in conformal factor is radial, so both matrices are block
diagonal over the azimuthal index (m, cos/sin): the assembly loops over
blocks, which keeps a full family sweep at L = 32 cheap. The dense
all-nodes path (`mass_from_node_ratio`) remains for densities tabulated on
the quadrature grid without radial symmetry and for the quadrature
exactness tests; reductions are plain matrix products with a fixed
summation order, so repeated runs produce identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, IndefiniteMassError, InvalidMetricError
from .harmonics import basis_indices, legendre_tables
from .metrics import ConformalMetric
from .quadrature import QuadratureRule, build_quadrature

__all__ = [
    "SpectralBasis",
    "OperatorPair",
    "build_basis",
    "stiffness",
    "mass",
    "mass_log_variation",
    "mass_from_node_ratio",
    "assemble",
]

_SQRT2 = np.sqrt(2.0)


class SpectralBasis:
    """Legendre tables, index bookkeeping, and the stiffness matrix.

    Holding a basis is the one-time cost shared by every metric at a given
    resolution. The full node-value matrix is only materialized on first use
    of the dense path.
    """

    def __init__(self, L: int, quad: QuadratureRule | None = None):
        if L < 0:
            raise DomainError("harmonic degree bound L must be nonnegative")
        if quad is None:
            quad = build_quadrature(2 * L + 2, 2 * L + 2)
        need = 2 * L + 2
        if quad.n_theta < need:
            raise DomainError(
                f"quadrature has {quad.n_theta} polar nodes per panel, "
                f"exactness at L = {L} needs at least {need}"
            )
        if quad.n_phi < need:
            raise DomainError(
                f"quadrature has {quad.n_phi} azimuthal nodes, "
                f"exactness at L = {L} needs at least {need}"
            )
        self.L = int(L)
        self.quad = quad
        self.indices = basis_indices(L)
        self.n = len(self.indices)
        self.ell = np.array([i[0] for i in self.indices])
        self.pbar, self.dpbar, self.qbar = legendre_tables(L, quad.x)

        # positions of each (m, kind) block in the flat index
        self.block_rows: dict[tuple[int, str], np.ndarray] = {}
        for a, (ell, m, kind) in enumerate(self.indices):
            self.block_rows.setdefault((m, kind), []).append(a)
        self.block_rows = {
            key: np.asarray(rows, dtype=int) for key, rows in self.block_rows.items()
        }
        self._values: np.ndarray | None = None
        self._stiffness: np.ndarray | None = None

    @property
    def values(self) -> np.ndarray:
        """Dense matrix of basis values on all flattened quadrature nodes."""
        if self._values is None:
            quad = self.quad
            nphi = quad.n_phi
            m_vals = np.arange(self.L + 1)
            cosm = np.cos(np.outer(m_vals, quad.phi))
            sinm = np.sin(np.outer(m_vals, quad.phi))
            B = np.empty((self.n, quad.x.size * nphi))
            for a, (ell, m, kind) in enumerate(self.indices):
                if kind == "zonal":
                    B[a] = np.outer(self.pbar[ell, 0], np.ones(nphi)).ravel()
                elif kind == "cos":
                    B[a] = _SQRT2 * np.outer(self.pbar[ell, m], cosm[m]).ravel()
                else:
                    B[a] = _SQRT2 * np.outer(self.pbar[ell, m], sinm[m]).ravel()
            self._values = B
        return self._values

    def gram_defect(self) -> float:
        """max |G - I| over the full dense quadrature; the exactness check."""
        G = (self.values * self.quad.weights[None, :]) @ self.values.T
        return float(np.abs(G - np.eye(self.n)).max())


def build_basis(L: int, n_theta: int | None = None, n_phi: int | None = None) -> SpectralBasis:
    """Basis with its quadrature; sizes default to the exactness minimum 2L+2."""
    if n_theta is None:
        n_theta = 2 * L + 2
    if n_phi is None:
        n_phi = 2 * L + 2
    return SpectralBasis(L, build_quadrature(n_theta, n_phi))


def _scatter_blocks(basis: SpectralBasis, block_fn) -> np.ndarray:
    """Assemble a block-diagonal matrix from per-(m) radial blocks.

    ``block_fn(m, ells)`` returns the symmetric block for azimuthal index m;
    cos and sin blocks coincide because the azimuthal average of cos^2 and
    sin^2 agree.
    """
    out = np.zeros((basis.n, basis.n))
    L = basis.L
    for m in range(L + 1):
        kinds = ("zonal",) if m == 0 else ("cos", "sin")
        ells = np.arange(m, L + 1)
        block = block_fn(m, ells)
        for kind in kinds:
            rows = basis.block_rows[(m, kind)]
            out[np.ix_(rows, rows)] = block
    return out


def stiffness(basis: SpectralBasis) -> np.ndarray:
    """Dirichlet-form matrix; metric independent, cached on the basis.

    Assembled in chart coordinates: the pairing of f and g is the quadrature
    of (df/dr dg/dr + r^-2 df/dphi dg/dphi) r^2-free chart gradient against
    the weight (1+r^2)^2 / 4 per round-measure node, which is the real form
    of the normalized d/dz-dbar pairing. Row and column 0 vanish since the
    constant has no Dirichlet energy.
    """
    if basis._stiffness is None:
        quad = basis.quad
        r = quad.radii_theta
        jac = 2.0 / (1.0 + r * r)            # dtheta/dr
        gw = quad.weights_theta * (1.0 + r * r) ** 2 / 4.0

        def block(m, ells):
            dth = basis.dpbar[ells, m] * jac[None, :]   # d/dr values
            blk = (dth * gw[None, :]) @ dth.T
            if m > 0:
                q = basis.qbar[ells, m] * jac[None, :]  # (1/r) d/dphi amplitude
                blk = blk + (m * m) * ((q * gw[None, :]) @ q.T)
            return 0.5 * (blk + blk.T)

        basis._stiffness = _scatter_blocks(basis, block)
    return basis._stiffness


@dataclass(frozen=True)
class OperatorPair:
    """Stiffness/mass pencil of one metric on one basis."""

    stiffness: np.ndarray
    mass: np.ndarray
    metric_id: str
    L: int

    @property
    def n(self) -> int:
        return self.mass.shape[0]


def _radial_weighted_gram(basis: SpectralBasis, wr: np.ndarray) -> np.ndarray:
    """Gram matrix of the basis under a radial node weight ``wr``."""

    def block(m, ells):
        P = basis.pbar[ells, m]
        blk = (P * wr[None, :]) @ P.T
        return 0.5 * (blk + blk.T)

    return _scatter_blocks(basis, block)


def _node_ratio(basis: SpectralBasis, metric: ConformalMetric) -> np.ndarray:
    """Density ratio ``lambda(z) (1+|z|^2)^2`` on the colatitude nodes."""
    r = basis.quad.radii_theta
    log_ratio = metric.log_density(r.astype(complex), 0) + 2.0 * np.log1p(r * r)
    return np.exp(log_ratio)


def mass(basis: SpectralBasis, metric: ConformalMetric) -> np.ndarray:
    """Mass matrix of the metric area form in the harmonic basis.

    The built-in metrics are radial, so each (m, cos/sin) block is assembled
    from the Legendre tables directly; ``M[0, 0]`` is the metric volume.
    """
    ratio = _node_ratio(basis, metric)
    if not np.all(np.isfinite(ratio)) or ratio.min() <= 0.0:
        raise InvalidMetricError(
            f"metric {metric.id!r} has a nonpositive or non-finite density "
            "ratio on the quadrature nodes"
        )
    return _radial_weighted_gram(basis, basis.quad.weights_theta * ratio)


def mass_log_variation(basis: SpectralBasis, metric: ConformalMetric) -> np.ndarray:
    """Parameter derivative of the mass matrix along a metric family.

    Differentiating the area form in the family parameter multiplies the
    mass integrand by ``d log lambda / du``, so the same radial assembly
    applies with that extra node factor. The result is symmetric but
    indefinite in general, and identically zero at the family's exact
    members where the blend is stationary.
    """
    r = basis.quad.radii_theta
    dlog = metric.d_log_density_du(r.astype(complex), 0)
    if not np.all(np.isfinite(dlog)):
        raise InvalidMetricError(
            f"metric {metric.id!r} has a non-finite density variation on "
            "the quadrature nodes"
        )
    wr = basis.quad.weights_theta * _node_ratio(basis, metric) * dlog
    return _radial_weighted_gram(basis, wr)


def mass_from_node_ratio(basis: SpectralBasis, ratio: np.ndarray) -> np.ndarray:
    """Dense-path mass matrix from a density ratio tabulated on all nodes.

    ``ratio`` holds ``lambda(z) (1+|z|^2)^2`` per flattened quadrature node;
    no radial symmetry is assumed.
    """
    ratio = np.asarray(ratio, dtype=float)
    if ratio.shape != (basis.quad.node_count,):
        raise DomainError(
            f"node ratio must have shape ({basis.quad.node_count},), got {ratio.shape}"
        )
    if not np.all(np.isfinite(ratio)) or ratio.min() <= 0.0:
        raise InvalidMetricError("tabulated density ratio must be positive and finite")
    B = basis.values
    M = (B * (basis.quad.weights * ratio)[None, :]) @ B.T
    return 0.5 * (M + M.T)


def assemble(basis: SpectralBasis, metric: ConformalMetric) -> OperatorPair:
    """Build the (K, M) pencil of a metric; M must be positive definite."""
    M = mass(basis, metric)
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError as e:
        raise IndefiniteMassError(
            f"mass matrix of metric {metric.id!r} is not positive definite"
        ) from e
    return OperatorPair(stiffness(basis), M, metric.id, basis.L)
