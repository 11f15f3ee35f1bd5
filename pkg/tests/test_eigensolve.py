"""Eigensolver checks: residuals, orthonormality, kernel handling, calculus."""

import numpy as np
import pytest
import scipy.linalg

from zetasphere.discretize import OperatorPair, assemble, build_basis
from zetasphere.eigensolve import apply_function, generalized_eigs, resolvent
from zetasphere.errors import (
    IndefiniteMassError,
    InvalidMetricError,
)
from zetasphere.metrics import fs_metric, max_metric, pnorm_metric, scaled_metric

METRICS = [fs_metric(), pnorm_metric(3.0), max_metric()]


@pytest.fixture(scope="module")
def basis():
    return build_basis(12)


@pytest.fixture(scope="module", params=[m.id for m in METRICS])
def spectrum(request, basis):
    metric = next(m for m in METRICS if m.id == request.param)
    return generalized_eigs(assemble(basis, metric))


def test_eigen_residuals(spectrum):
    K = spectrum.pair.stiffness
    M = spectrum.pair.mass
    scale_k = np.linalg.norm(K, 2)
    scale_m = np.linalg.norm(M, 2)
    for lam, v in zip(spectrum.eigenvalues, spectrum.vectors.T):
        res = np.linalg.norm(K @ v - lam * (M @ v))
        assert res <= 1e-9 * (scale_k + abs(lam) * scale_m), spectrum.metric_id


def test_mass_orthonormality(spectrum):
    V = spectrum.vectors
    gram = V.T @ spectrum.pair.mass @ V
    assert np.abs(gram - np.eye(V.shape[1])).max() < 1e-10


def test_kernel_is_constants(spectrum):
    assert spectrum.eigenvalues[0] == 0.0
    assert spectrum.kernel_dim == 1
    assert spectrum.lambda1 > 0.0
    # the kernel vector is the constant: only the first coefficient survives
    v0 = spectrum.vectors[:, 0]
    m00 = spectrum.pair.mass[0, 0]
    assert abs(v0[0]) == pytest.approx(1.0 / np.sqrt(m00), rel=1e-10)
    assert np.abs(v0[1:]).max() < 1e-8 * abs(v0[0])


def test_positive_excludes_kernel(spectrum):
    pos = spectrum.positive
    assert pos.shape == (spectrum.eigenvalues.size - 1,)
    assert pos.min() == spectrum.lambda1
    assert np.all(pos > 0.0)
    assert np.all(np.diff(spectrum.eigenvalues) >= 0.0)


def test_round_spectrum_exact():
    """l(l+1)/2 with multiplicity 2l+1: the basis diagonalizes the round pencil."""
    spec = generalized_eigs(assemble(build_basis(16), fs_metric()))
    expect = np.concatenate(
        [np.full(2 * ell + 1, ell * (ell + 1) / 2.0) for ell in range(17)]
    )
    assert spec.eigenvalues.shape == expect.shape
    assert spec.eigenvalues[0] == 0.0
    rel = np.abs(spec.eigenvalues[1:] - expect[1:]) / expect[1:]
    assert rel.max() < 1e-10


def test_scaled_metric_scales_spectrum(basis):
    base = generalized_eigs(assemble(basis, pnorm_metric(3.0)))
    for t0 in (0.5, 2.0, 10.0):
        scaled = generalized_eigs(assemble(basis, scaled_metric(t0, pnorm_metric(3.0))))
        rel = np.abs(scaled.positive - base.positive / t0) / (base.positive / t0)
        assert rel.max() < 1e-12, t0


def test_against_expert_lapack_driver(basis):
    """Same pencil through the gvx expert routine instead of gv."""
    pair = assemble(basis, pnorm_metric(3.0))
    spec = generalized_eigs(pair)
    vals = scipy.linalg.eigh(pair.stiffness, pair.mass, eigvals_only=True, driver="gvx")
    scale = np.maximum(np.abs(vals), 1.0)
    assert (np.abs(spec.eigenvalues - vals) / scale).max() < 1e-11


def test_apply_function_identity(spectrum):
    """f(lam) = lam reconstructs the operator M^{-1} K."""
    got = apply_function(spectrum, lambda lam: lam)
    want = np.linalg.solve(spectrum.pair.mass, spectrum.pair.stiffness)
    scale = np.abs(want).max()
    assert np.abs(got - want).max() < 1e-10 * max(1.0, scale)


def test_apply_function_preserves_constants(spectrum):
    e0 = np.zeros(spectrum.pair.n)
    e0[0] = 1.0
    heat = apply_function(spectrum, lambda lam: np.exp(-0.7 * lam))
    assert np.abs(heat @ e0 - e0).max() < 1e-10


def test_resolvent_inverts(spectrum):
    shift = 1.0
    R = resolvent(spectrum, shift)
    op = np.linalg.solve(spectrum.pair.mass, spectrum.pair.stiffness)
    prod = (shift * np.eye(spectrum.pair.n) + op) @ R
    assert np.abs(prod - np.eye(spectrum.pair.n)).max() < 1e-9


def test_resolvent_rejects_nonpositive_shift(spectrum):
    with pytest.raises(InvalidMetricError):
        resolvent(spectrum, 0.0)
    with pytest.raises(InvalidMetricError):
        resolvent(spectrum, -1.0)


def test_indefinite_mass_is_reported():
    n = 6
    K = np.eye(n)
    M = np.eye(n)
    M[0, 0] = -1.0
    pair = OperatorPair(stiffness=K, mass=M, metric_id="synthetic", L=1)
    with pytest.raises(IndefiniteMassError):
        generalized_eigs(pair)


def test_missing_kernel_is_reported():
    n = 6
    pair = OperatorPair(
        stiffness=np.eye(n), mass=np.eye(n), metric_id="synthetic", L=1
    )
    with pytest.raises(InvalidMetricError):
        generalized_eigs(pair)


def test_cluster_vectors_stay_orthonormal():
    """Degenerate round clusters are returned M-orthonormal, not just LAPACK-raw."""
    spec = generalized_eigs(assemble(build_basis(10), fs_metric()))
    V = spec.vectors
    gram = V.T @ spec.pair.mass @ V
    assert np.abs(gram - np.eye(V.shape[1])).max() < 1e-12
