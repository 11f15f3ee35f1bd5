"""Anomaly integrals, determinant metrics, and the two-route consistency check.

The curvature integral has a closed form on pnorm pairs, (1/p - 1/q)/3,
verified in the oracle module by high-precision quadrature from the
definition; the tests here compare the library's node sums against it.
"""

import math

import numpy as np
import pytest

import oracles
from zetasphere.anomaly import (
    BC_SCALING_SLOPE,
    SIGN_CONVENTION,
    bott_chern_bound,
    bott_chern_integral,
    calibrate_sign,
    l2_metric_log,
    quillen_limit,
    quillen_log,
    torsion_report,
    two_route_check,
)
from zetasphere.errors import DomainError, UnsupportedPointError
from zetasphere.metrics import (
    MetricFamily,
    fs_metric,
    geomean_family,
    max_metric,
    pnorm_family,
    pnorm_metric,
    scaled_metric,
    volume,
)
from zetasphere.pipeline import compute_zeta
from zetasphere.quadrature import build_quadrature


PAIRS = [(1.0, 2.0), (2.0, 3.0), (3.0, 8.0)]


@pytest.mark.parametrize("p,q", PAIRS)
def test_bott_chern_closed_form(p, q):
    got = bott_chern_integral(pnorm_metric(p), pnorm_metric(q))
    assert got == pytest.approx(oracles.bott_chern_pnorm_pair(p, q), abs=1e-10)


def test_bott_chern_quadrature_robustness():
    coarse = build_quadrature(64, 2)
    got = bott_chern_integral(pnorm_metric(2.0), pnorm_metric(3.0), coarse)
    assert got == pytest.approx(oracles.bott_chern_pnorm_pair(2.0, 3.0), abs=1e-8)


def test_bott_chern_antisymmetry():
    p, q = pnorm_metric(2.0), pnorm_metric(5.0)
    assert bott_chern_integral(p, q) == pytest.approx(
        -bott_chern_integral(q, p), abs=1e-15
    )
    assert bott_chern_integral(p, p) == 0.0


@pytest.mark.parametrize("base_id", ["fs", "pnorm:2"])
@pytest.mark.parametrize("t0", [0.5, 10.0])
def test_bott_chern_scaling_slope(base_id, t0):
    """Constant log shift integrates against total curvature 2 + 2."""
    base = fs_metric() if base_id == "fs" else pnorm_metric(2.0)
    got = bott_chern_integral(scaled_metric(t0, base), base)
    assert got == pytest.approx(BC_SCALING_SLOPE * math.log(t0), rel=1e-12)
    assert BC_SCALING_SLOPE == -1.0 / 3.0


@pytest.mark.parametrize("p,q", PAIRS)
def test_bott_chern_bound_dominates(p, q):
    mp_, mq = pnorm_metric(p), pnorm_metric(q)
    assert abs(bott_chern_integral(mp_, mq)) <= bott_chern_bound(mp_, mq)


def test_bott_chern_bound_value():
    """For pnorm pairs: K = (2+2)/12 and sup = 2 log2 |1/p - 1/q|."""
    p, q = 2.0, 4.0
    want = (4.0 / 12.0) * 2.0 * math.log(2.0) * abs(1.0 / p - 1.0 / q)
    assert bott_chern_bound(pnorm_metric(p), pnorm_metric(q)) == pytest.approx(
        want, rel=1e-10
    )


def test_kinked_factor_is_refused():
    with pytest.raises(UnsupportedPointError):
        bott_chern_integral(max_metric(), fs_metric())
    with pytest.raises(UnsupportedPointError):
        bott_chern_bound(fs_metric(), max_metric())


def test_l2_metric_log_is_log_volume():
    quad = build_quadrature(128, 2)
    for metric in (fs_metric(), pnorm_metric(3.0), max_metric()):
        assert l2_metric_log(metric) == pytest.approx(
            math.log(volume(metric, quad)), rel=1e-14
        )


def test_quillen_log_assembly(cache):
    metric = pnorm_metric(2.0)
    _, _, _, zres = compute_zeta(metric, 16, cache=cache)
    qd = quillen_log(metric, zres)
    assert qd.metric_id == "pnorm:2"
    assert qd.sign_convention == SIGN_CONVENTION == 1
    assert qd.log_l2 == pytest.approx(math.log(qd.vol), rel=1e-15)
    assert qd.log_quillen == pytest.approx(
        qd.log_l2 + qd.sign_convention * zres.zeta_prime0, rel=1e-15
    )
    assert qd.error_budget == zres.error_budget
    # explicit volume skips the quadrature and is reported as passed
    shortcut = quillen_log(metric, zres, vol=2.5)
    assert shortcut.vol == 2.5
    assert shortcut.log_l2 == pytest.approx(math.log(2.5), rel=1e-15)
    for bad_sign in (0, 2, -3):
        with pytest.raises(DomainError):
            quillen_log(metric, zres, sign=bad_sign)


def test_spectral_route_scaling_slope(cache):
    """Under h -> t0 h the spectral route moves by (1 + zeta0) log t0.

    The fitted zeta0 sits near -2/3, so the slope matches the curvature
    route's 1/3; the decomposition below checks the exact covariance and the
    closeness of zeta0 to its continuum value separately.
    """
    t0 = 10.0
    metric = pnorm_metric(2.0)
    _, _, _, z_base = compute_zeta(metric, 16, cache=cache)
    q_base = quillen_log(metric, z_base)
    scaled = scaled_metric(t0, pnorm_metric(2.0))
    _, _, _, z_scaled = compute_zeta(scaled, 16, cache=cache)
    q_scaled = quillen_log(scaled, z_scaled)
    spectral = q_scaled.log_quillen - q_base.log_quillen
    assert spectral == pytest.approx(
        (1.0 + z_base.zeta0) * math.log(t0), abs=1e-7
    )
    assert z_base.zeta0 == pytest.approx(-2.0 / 3.0, abs=2e-2)
    curvature = -bott_chern_integral(scaled, metric)
    assert curvature == pytest.approx(math.log(t0) / 3.0, rel=1e-12)


def test_two_route_check_smooth_pair(cache):
    report = two_route_check(fs_metric(), pnorm_metric(2.0), L=20, cache=cache)
    assert report.metric_p == "fs"
    assert report.metric_q == "pnorm:2"
    assert report.passed
    assert report.gap == pytest.approx(
        abs(report.route_spectral - report.route_curvature), rel=1e-15
    )
    assert report.tolerance >= 1e-3
    assert report.gap <= report.tolerance
    assert report.budget > 0.0


def test_two_route_check_pnorm_pair(cache):
    report = two_route_check(pnorm_metric(2.0), pnorm_metric(3.0), L=20, cache=cache)
    assert report.passed
    assert report.route_curvature == pytest.approx(
        -oracles.bott_chern_pnorm_pair(2.0, 3.0), abs=1e-10
    )


def test_calibrate_sign(cache):
    assert calibrate_sign(L=16, cache=cache) == SIGN_CONVENTION


def test_quillen_limit_pnorm(cache):
    fam = pnorm_family([1.0, 2.0, 3.0, 4.0])
    out = quillen_limit(fam, L=16, cache=cache)
    assert out.family_id == "pnorm"
    assert out.converged
    assert out.failures == ()
    assert [r.param for r in out.rows] == [1.0, 2.0, 3.0, 4.0]
    first, rest = out.rows[0], out.rows[1:]
    assert math.isnan(first.diff_to_prev) and math.isnan(first.bound)
    for row in rest:
        assert row.bound > 0.0
        assert math.isfinite(row.diff_to_prev)
    diffs = [abs(r.diff_to_prev) for r in rest]
    assert diffs == sorted(diffs, reverse=True)
    assert math.isfinite(out.limit)
    assert abs(out.limit - out.rows[-1].log_quillen) <= 5.0 * diffs[-1]


def test_quillen_limit_p_list_selection(cache):
    fam = pnorm_family([1.0, 2.0, 3.0, 4.0])
    out = quillen_limit(fam, p_list=(2.0, 4.0), L=16, cache=cache)
    assert [r.param for r in out.rows] == [2.0, 4.0]
    with pytest.raises(DomainError):
        quillen_limit(fam, p_list=(2.0, 7.0), L=16, cache=cache)


def test_quillen_limit_flags_growing_differences(cache):
    fam = MetricFamily(
        id="pnorm-misordered",
        members=(pnorm_metric(4.0), pnorm_metric(3.0), pnorm_metric(1.0)),
        parameters=(4.0, 3.0, 1.0),
    )
    out = quillen_limit(fam, L=16, cache=cache)
    assert not out.converged
    assert any("grow" in msg for msg in out.failures)


def test_limit_agreement_between_families(cache):
    """Two different smoothing families extrapolate to the same limit."""
    p_fam = quillen_limit(pnorm_family([2.0, 3.0, 4.0, 5.0]), L=20, cache=cache)
    g_fam = quillen_limit(geomean_family([2.0, 3.0, 4.0, 5.0]), L=20, cache=cache)
    assert p_fam.converged and g_fam.converged
    assert abs(p_fam.limit - g_fam.limit) <= 2e-3


def test_torsion_report_consistency(cache):
    report = torsion_report(pnorm_metric(3.0), L=16, cache=cache)
    assert report.data.metric_id == "pnorm:3"
    assert report.zeta.metric_id == "pnorm:3"
    assert report.quillen.vol == report.data.volume
    assert report.zeta.fit is report.fit
    assert report.quillen.zeta_prime0 == report.zeta.zeta_prime0
    assert report.quillen.log_quillen == pytest.approx(
        math.log(report.data.volume) + report.zeta.zeta_prime0, rel=1e-14
    )
    assert np.all(report.samples.t >= report.fit.window_requested[0] * (1 - 1e-12))
