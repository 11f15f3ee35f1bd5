"""Quadrature rule and normalized-harmonic table checks.

The Legendre tables are compared against scipy's associated Legendre
functions with the normalization written out explicitly, and the rule's
polynomial exactness is checked against closed-form monomial integrals.
"""

import math

import numpy as np
import pytest
from scipy.special import lpmv, roots_legendre

from zetasphere.errors import DomainError
from zetasphere.harmonics import basis_indices, legendre_tables
from zetasphere.quadrature import build_quadrature


@pytest.fixture(scope="module")
def quad():
    return build_quadrature(12, 8)


def test_weights_normalization(quad):
    """wx integrates dx over [-1, 1]; flattened weights are a probability."""
    assert quad.wx.sum() == pytest.approx(2.0, abs=1e-14)
    assert quad.weights.sum() == pytest.approx(1.0, abs=1e-14)
    assert quad.weights_theta.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.all(quad.wx > 0.0)


def test_nodes_ascending_and_interior(quad):
    assert np.all(np.diff(quad.x) > 0.0)
    assert np.all(np.abs(quad.x) < 1.0)
    # two panels of n_theta nodes split at the equator x = 0
    assert quad.x.size == 2 * quad.n_theta
    assert np.sum(quad.x < 0.0) == quad.n_theta
    assert np.sum(quad.x > 0.0) == quad.n_theta


def test_radii_map(quad):
    """r = tan(theta/2) against x = cos(theta), checked both ways."""
    r = quad.radii_theta
    assert np.allclose((1.0 - r * r) / (1.0 + r * r), quad.x, atol=1e-14)
    # equator maps to r = 1: nodes straddle it, none sits on it
    assert np.all((r < 1.0) == (quad.x > 0.0))


def test_monomial_exactness():
    """Each panel is Gauss-Legendre, so x^k is exact for k <= 2n-1."""
    quad = build_quadrature(5, 2)
    for k in range(10):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        got = float(np.sum(quad.wx * quad.x**k))
        assert got == pytest.approx(exact, abs=1e-14), k


def test_kinked_integrand_split():
    """The panel split at x = 0 keeps |x| spectrally integrable."""
    quad = build_quadrature(24, 2)
    got = float(np.sum(quad.wx * np.abs(quad.x)))
    assert got == pytest.approx(1.0, abs=1e-14)


def test_build_quadrature_validation():
    with pytest.raises(DomainError):
        build_quadrature(0, 4)
    with pytest.raises(DomainError):
        build_quadrature(4, 0)


def test_flattened_weights_shape(quad):
    assert quad.node_count == quad.x.size * quad.n_phi
    assert quad.weights.shape == (quad.node_count,)
    assert quad.radii.shape == (quad.node_count,)


def test_legendre_against_scipy():
    """pbar_{lm} = (-1)^m sqrt((2l+1)(l-m)!/(l+m)!) P_l^m with scipy's P_l^m."""
    x = np.array([-0.83, -0.31, 0.02, 0.47, 0.9])
    L = 6
    pbar, _, _ = legendre_tables(L, x)
    for ell in range(L + 1):
        for m in range(ell + 1):
            norm = math.sqrt(
                (2 * ell + 1) * math.factorial(ell - m) / math.factorial(ell + m)
            )
            ref = (-1.0) ** m * norm * lpmv(m, ell, x)
            assert np.allclose(pbar[ell, m], ref, atol=1e-12), (ell, m)


def test_legendre_orthonormality_independent_rule():
    """Rows are orthogonal with squared norm 2 under a plain 200-node rule."""
    x, w = roots_legendre(200)
    L = 10
    pbar, _, _ = legendre_tables(L, x)
    for m in range(L + 1):
        rows = pbar[m:, m]
        G = (rows * w[None, :]) @ rows.T
        assert np.allclose(G, 2.0 * np.eye(rows.shape[0]), atol=1e-12), m


def test_legendre_theta_derivative():
    """dpbar is the theta derivative of pbar(cos theta), checked by stencil."""
    theta = np.array([0.4, 1.1, 1.9, 2.6])
    h = 1e-6
    L = 5
    pbar, dpbar, _ = legendre_tables(L, np.cos(theta))
    p_hi = legendre_tables(L, np.cos(theta + h))[0]
    p_lo = legendre_tables(L, np.cos(theta - h))[0]
    fd = (p_hi - p_lo) / (2.0 * h)
    for ell in range(L + 1):
        for m in range(ell + 1):
            assert np.allclose(dpbar[ell, m], fd[ell, m], atol=1e-8), (ell, m)


def test_legendre_sine_quotient():
    """qbar carries pbar / sin(theta) for m >= 1 without the 0/0 at the poles."""
    x = np.linspace(-0.95, 0.95, 11)
    s = np.sqrt(1.0 - x * x)
    L = 5
    pbar, _, qbar = legendre_tables(L, x)
    for ell in range(1, L + 1):
        for m in range(1, ell + 1):
            assert np.allclose(qbar[ell, m] * s, pbar[ell, m], atol=1e-12)


def test_legendre_validation():
    with pytest.raises(DomainError):
        legendre_tables(4, np.array([0.0, 1.0]))
    with pytest.raises(DomainError):
        legendre_tables(-1, np.array([0.5]))
    with pytest.raises(DomainError):
        legendre_tables(3, np.zeros((2, 2)))


def test_basis_indices_layout():
    L = 7
    idx = basis_indices(L)
    assert len(idx) == (L + 1) ** 2
    assert idx[0].ell == 0 and idx[0].m == 0 and idx[0].kind == "zonal"
    zonal = [i for i in idx if i.kind == "zonal"]
    assert len(zonal) == L + 1
    assert all(i.m == 0 for i in zonal)
    for kind in ("cos", "sin"):
        per_m = [i for i in idx if i.kind == kind]
        assert len(per_m) == L * (L + 1) // 2
        assert all(1 <= i.m <= i.ell for i in per_m)
