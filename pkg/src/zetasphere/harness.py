"""Convergence harness: run a metric family through the pipeline and check limits.

A smoothing family approaches its singular limit metric in the uniform
log-density sense. Every spectral quantity we compute should then settle
down at a rate controlled by that distance, and several of them obey exact
finite-dimensional inequalities along the way. This module sweeps a family,
tabulates the scalar pipeline per member, and turns each limiting statement
into a quantitative pass/fail check:

- ``sweep`` / ``cauchy_check``: every scalar column is Cauchy with
  differences bounded by (constant) x (sup log-density distance).
- ``limit_agreement``: the last member's row agrees with the limit metric's
  row computed directly, since a continuous limit assembles fine.
- ``lambda1_floor``: a uniform positive lower bound on the spectral gap from
  mass-matrix equivalence and the min-max principle.
- ``resolvent_convergence``: resolvents and heat operators form Cauchy
  sequences in operator norm, bounded by the integrated density variation.
- ``bornelapbelt_check``: the parameter derivative of the operator is
  dominated by the sup of the density variation, exactly, on test vectors.
- ``duhamel_at``: the integrated variation identity for the heat operator.

Constants in the bounds (written c, c3, C below) are existential, so the
harness measures each one on the first pair of the sweep, freezes it with a
2x safety factor, and asserts the bound on all remaining pairs. That turns
"there exists a constant" into a regression test without inventing values.

``convergence_summary`` orchestrates all checks and reports one boolean per
named check tag; the CLI writes these to summary.json.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .anomaly import (
    SIGN_CONVENTION,
    QuillenLimit,
    TwoRouteReport,
    quillen_limit,
    quillen_log,
    two_route_check,
)
from .cache import SpectrumCache
from .discretize import assemble, mass, mass_log_variation
from .eigensolve import resolvent
from .errors import DomainError
from .heatzeta import DuhamelReport, duhamel_residual, heat_operator, theta_values
from .metrics import MetricFamily, delta_X, interpolate, sup_log_distance
from .operators import InnerProduct, operator_norm
from .pipeline import compute_spectrum, compute_zeta, get_basis, spectral_data

__all__ = [
    "FROZEN_SAFETY",
    "DUHAMEL_RATIO_TOL",
    "THEOREM_TAGS",
    "SweepRow",
    "SweepFailure",
    "SweepReport",
    "sweep",
    "CauchyColumn",
    "CauchyReport",
    "cauchy_check",
    "LimitColumn",
    "LimitAgreement",
    "limit_agreement",
    "Lambda1FloorRow",
    "Lambda1Floor",
    "lambda1_floor",
    "ResolventRow",
    "ResolventReport",
    "resolvent_convergence",
    "BorneReport",
    "bornelapbelt_check",
    "duhamel_at",
    "ConvergenceSummary",
    "convergence_summary",
]

# Safety factor applied to every constant measured on the first sweep pair.
FROZEN_SAFETY = 2.0

# Residual of the integrated variation identity, relative to the derivative
# norm, at the default step; refinement tests halve it further.
DUHAMEL_RATIO_TOL = 1e-4

# Stable identifiers of the named checks, in reporting order.
THEOREM_TAGS = (
    "laplaceTX",
    "bornelapbelt",
    "deltacompact",
    "variationEu",
    "key2",
    "convergenceAnomaly",
    "compare2methods",
    "lowerbound",
)

# Sweep columns whose values come out of the heat-trace fit and therefore
# carry the zeta error budget as measurement noise.
_BUDGET_COLUMNS = frozenset({"b_minus1", "b0", "zeta_prime0", "log_quillen"})

_TINY_REL = 1e-9


def _select_members(family: MetricFamily, parameters):
    """Family members matching an explicit parameter list, or all of them."""
    if parameters is None:
        return tuple(float(p) for p in family.parameters), tuple(family.members)
    by_param = dict(zip(family.parameters, family.members))
    members = []
    for p in parameters:
        if p not in by_param:
            raise DomainError(
                f"parameter {p} is not a member of family {family.id!r}; "
                f"available: {family.parameters}"
            )
        members.append(by_param[p])
    return tuple(float(p) for p in parameters), tuple(members)


@dataclass(frozen=True)
class SweepRow:
    """Scalar pipeline output for one family member."""

    param: float
    vol: float
    lambda1: float
    theta: dict[float, float]
    b_minus1: float
    b0: float
    zeta_prime0: float
    log_quillen: float
    sup_log_dist_to_limit: float


@dataclass(frozen=True)
class SweepFailure:
    """A member whose pipeline raised; the sweep records it and moves on."""

    param: float
    error: str


@dataclass(frozen=True)
class SweepReport:
    """All rows of one family sweep plus the data the checks need.

    ``budgets`` holds the zeta error budget per successful row and
    ``pair_dist`` the sup log-density distance of consecutive members,
    both aligned with ``rows`` when there are no failures.
    """

    family_id: str
    L: int
    t_set: tuple[float, ...]
    rows: tuple[SweepRow, ...]
    failures: tuple[SweepFailure, ...]
    budgets: tuple[float, ...]
    pair_dist: tuple[float, ...]


def _check_row_finite(row: SweepRow, require_dist: bool) -> None:
    values = [row.vol, row.lambda1, row.b_minus1, row.b0, row.zeta_prime0,
              row.log_quillen, *row.theta.values()]
    if require_dist:
        values.append(row.sup_log_dist_to_limit)
    if not all(math.isfinite(v) for v in values):
        raise DomainError(f"non-finite sweep column for parameter {row.param}")
    if row.lambda1 <= 0.0:
        raise DomainError(f"nonpositive spectral gap for parameter {row.param}")


def sweep(
    family: MetricFamily,
    parameters: Sequence[float] | None = None,
    L: int = 24,
    t_set: tuple[float, ...] = (0.5, 1.0, 2.0),
    cache: SpectrumCache | None = None,
    sign: int = SIGN_CONVENTION,
    window: tuple[float, float] | None = None,
    trunc_tol: float = 1e-8,
) -> SweepReport:
    """Run the scalar pipeline over family members, one row per parameter.

    Parameters
    ----------
    family : MetricFamily
        The family to sweep; rows are produced for its members only, never
        for interpolated metrics.
    parameters : sequence of float, optional
        Strictly ascending subset of ``family.parameters``; all of them by
        default.
    L : int
        Spectral truncation degree for every member.
    t_set : tuple of float
        Heat-trace times tabulated per row.
    cache : SpectrumCache, optional
        Disk cache for the eigenvalue data.
    sign : int
        Sign convention joining the zeta derivative to the volume term.
    window, trunc_tol
        Passed through to the heat-trace fit.

    Returns
    -------
    SweepReport
        Rows in parameter order. A member whose pipeline raises is recorded
        in ``failures`` and the sweep continues.
    """
    params, members = _select_members(family, parameters)
    if len(params) < 1:
        raise DomainError("sweep needs at least one parameter")
    if any(b <= a for a, b in zip(params, params[1:])):
        raise DomainError(f"sweep parameters must be strictly ascending, got {params}")
    t_arr = np.asarray(t_set, dtype=float)
    if t_arr.size == 0 or np.any(t_arr <= 0.0):
        raise DomainError(f"t_set must be positive times, got {t_set}")

    rows: list[SweepRow] = []
    failures: list[SweepFailure] = []
    budgets: list[float] = []
    for p, metric in zip(params, members):
        try:
            data, _, fit, zres = compute_zeta(
                metric, L, cache=cache, window=window, trunc_tol=trunc_tol
            )
            quil = quillen_log(metric, zres, vol=data.volume, sign=sign)
            th = theta_values(data.eigenvalues, t_arr)
            if family.limit is not None:
                dist = sup_log_distance(metric, family.limit)
            else:
                dist = math.nan
            row = SweepRow(
                param=p,
                vol=data.volume,
                lambda1=data.lambda1,
                theta={float(t): float(v) for t, v in zip(t_arr, th)},
                b_minus1=fit.b_minus1,
                b0=fit.b0,
                zeta_prime0=zres.zeta_prime0,
                log_quillen=quil.log_quillen,
                sup_log_dist_to_limit=dist,
            )
            _check_row_finite(row, require_dist=family.limit is not None)
            rows.append(row)
            budgets.append(zres.error_budget)
        except Exception as e:  # noqa: BLE001 - the contract is per-row isolation
            failures.append(SweepFailure(p, f"{type(e).__name__}: {e}"))
    pair_dist = tuple(
        sup_log_distance(a, b) for a, b in zip(members[:-1], members[1:])
    )
    return SweepReport(
        family_id=family.id,
        L=L,
        t_set=tuple(float(t) for t in t_arr),
        rows=tuple(rows),
        failures=tuple(failures),
        budgets=tuple(budgets),
        pair_dist=pair_dist,
    )


@dataclass(frozen=True)
class CauchyColumn:
    """Cauchy data of one sweep column: |differences| against frozen bounds."""

    name: str
    c_frozen: float
    diffs: tuple[float, ...]
    bounds: tuple[float, ...]
    passed: bool


@dataclass(frozen=True)
class CauchyReport:
    """Per-column Cauchy verdicts for one sweep."""

    family_id: str
    columns: tuple[CauchyColumn, ...]
    violations: tuple[str, ...]
    passed: bool


def _sweep_columns(report: SweepReport) -> list[tuple[str, np.ndarray]]:
    rows = report.rows
    cols: list[tuple[str, np.ndarray]] = [
        ("vol", np.array([r.vol for r in rows])),
        ("lambda1", np.array([r.lambda1 for r in rows])),
    ]
    for t in report.t_set:
        cols.append((f"theta_t{t:g}", np.array([r.theta[t] for r in rows])))
    cols += [
        ("b_minus1", np.array([r.b_minus1 for r in rows])),
        ("b0", np.array([r.b0 for r in rows])),
        ("zeta_prime0", np.array([r.zeta_prime0 for r in rows])),
        ("log_quillen", np.array([r.log_quillen for r in rows])),
    ]
    return cols


def _column_slack(name: str, values: np.ndarray, budgets, i: int) -> float:
    """Measurement noise allowed on the pair (i, i+1) of one column."""
    if name in _BUDGET_COLUMNS:
        return budgets[i] + budgets[i + 1]
    return _TINY_REL * (1.0 + float(np.abs(values).max()))


def cauchy_check(report: SweepReport) -> CauchyReport:
    """Check every sweep column is Cauchy at the sup-log-distance rate.

    For each column the constant C in |x_i - x_{i+1}| <= C * dist_i is
    measured on the first pair, frozen with the 2x safety factor, and
    asserted on the remaining pairs. Fit-derived columns additionally get
    the two rows' zeta error budgets as slack; exact columns only a
    relative epsilon. A constant family (zero distances) must have zero
    differences up to the slack.
    """
    if report.failures:
        msgs = tuple(
            f"sweep failure at parameter {f.param}: {f.error}" for f in report.failures
        )
        return CauchyReport(report.family_id, (), msgs, False)
    if len(report.rows) < 2:
        raise DomainError("cauchy_check needs at least two sweep rows")

    s = np.asarray(report.pair_dist, dtype=float)
    columns: list[CauchyColumn] = []
    violations: list[str] = []
    for name, values in _sweep_columns(report):
        d = np.abs(np.diff(values))
        slack = [
            _column_slack(name, values, report.budgets, i) for i in range(d.size)
        ]
        c_hat = float(d[0] / s[0]) if s[0] > 0.0 else 0.0
        c_frozen = FROZEN_SAFETY * c_hat
        bounds = tuple(float(c_frozen * s[i] + slack[i]) for i in range(d.size))
        col_ok = True
        first_checked = 1 if s[0] > 0.0 else 0
        for i in range(first_checked, d.size):
            if d[i] > bounds[i]:
                col_ok = False
                violations.append(
                    f"column {name}: pair ({report.rows[i].param:g}, "
                    f"{report.rows[i + 1].param:g}) difference {d[i]:.3e} exceeds "
                    f"frozen bound {bounds[i]:.3e}"
                )
        columns.append(CauchyColumn(name, c_frozen, tuple(map(float, d)), bounds, col_ok))
    return CauchyReport(
        family_id=report.family_id,
        columns=tuple(columns),
        violations=tuple(violations),
        passed=not violations,
    )


@dataclass(frozen=True)
class LimitColumn:
    """Last-row vs directly-computed-limit agreement for one column."""

    name: str
    last_value: float
    limit_value: float
    diff: float
    allowance: float
    ok: bool


@dataclass(frozen=True)
class LimitAgreement:
    """Agreement of the sweep's final row with the limit metric's own row.

    The limit metric is continuous, so its mass matrix assembles directly
    and the limit can be computed both as a limit and in one shot; the two
    must agree within the frozen Cauchy rate at the remaining distance.
    """

    limit_id: str
    dist_last: float
    columns: tuple[LimitColumn, ...]
    passed: bool


def limit_agreement(
    family: MetricFamily,
    report: SweepReport,
    cauchy: CauchyReport,
    cache: SpectrumCache | None = None,
    sign: int = SIGN_CONVENTION,
    window: tuple[float, float] | None = None,
    trunc_tol: float = 1e-8,
) -> LimitAgreement:
    """Compare the sweep's last row against the limit metric computed directly."""
    if family.limit is None:
        raise DomainError(f"family {family.id!r} has no limit member")
    if not report.rows:
        raise DomainError("limit_agreement needs at least one sweep row")
    data, _, fit, zres = compute_zeta(
        family.limit, report.L, cache=cache, window=window, trunc_tol=trunc_tol
    )
    quil = quillen_log(family.limit, zres, vol=data.volume, sign=sign)
    th = theta_values(data.eigenvalues, np.asarray(report.t_set, dtype=float))
    limit_values = {
        "vol": data.volume,
        "lambda1": data.lambda1,
        "b_minus1": fit.b_minus1,
        "b0": fit.b0,
        "zeta_prime0": zres.zeta_prime0,
        "log_quillen": quil.log_quillen,
    }
    for t, v in zip(report.t_set, th):
        limit_values[f"theta_t{t:g}"] = float(v)

    last = report.rows[-1]
    dist_last = last.sup_log_dist_to_limit
    budget_slack = report.budgets[-1] + zres.error_budget
    c_by_name = {c.name: c.c_frozen for c in cauchy.columns}

    columns: list[LimitColumn] = []
    for name, values in _sweep_columns(report):
        last_value = float(values[-1])
        limit_value = float(limit_values[name])
        diff = abs(last_value - limit_value)
        if name in _BUDGET_COLUMNS:
            slack = budget_slack
        else:
            slack = _TINY_REL * (1.0 + max(abs(last_value), abs(limit_value)))
        allowance = c_by_name[name] * dist_last + slack
        columns.append(
            LimitColumn(name, last_value, limit_value, diff, allowance, diff <= allowance)
        )
    return LimitAgreement(
        limit_id=family.limit.id,
        dist_last=dist_last,
        columns=tuple(columns),
        passed=all(c.ok for c in columns),
    )


@dataclass(frozen=True)
class Lambda1FloorRow:
    """One metric in the uniform gap bound: its gap and equivalence constant."""

    param: float
    lambda1: float
    c_member: float


@dataclass(frozen=True)
class Lambda1Floor:
    """Uniform lower bound on the spectral gap across a family.

    The Dirichlet form is metric-independent, so mass-matrix equivalence
    v'M_p v <= c v'M_ref v pushes every Rayleigh quotient up by 1/c and the
    min-max principle gives lambda1(p) >= lambda1(ref)/c. ``c`` is the
    largest measured equivalence constant, ``kappa`` the smallest gap.
    """

    family_id: str
    L: int
    reference_param: float
    lambda1_ref: float
    c: float
    floor: float
    kappa: float
    margin: float
    rows: tuple[Lambda1FloorRow, ...]
    passed: bool


def lambda1_floor(
    family: MetricFamily,
    parameters: Sequence[float] | None = None,
    L: int = 24,
    n_theta: int | None = None,
    n_phi: int | None = None,
    cache: SpectrumCache | None = None,
    include_limit: bool = True,
) -> Lambda1Floor:
    """Verify the uniform spectral-gap floor lambda1 >= lambda1(ref)/c.

    The reference is the first selected member; the limit metric joins the
    rows when present (parameter reported as inf) since the bound must be
    uniform up to the limit.
    """
    params, members = _select_members(family, parameters)
    if len(members) < 2:
        raise DomainError("lambda1_floor needs at least two members")
    labels = list(params)
    metrics = list(members)
    if include_limit and family.limit is not None:
        labels.append(math.inf)
        metrics.append(family.limit)

    basis = get_basis(L, n_theta, n_phi)
    m_ref = mass(basis, metrics[0])
    rows: list[Lambda1FloorRow] = []
    for label, metric in zip(labels, metrics):
        m_p = mass(basis, metric)
        c_member = float(scipy.linalg.eigh(m_p, m_ref, eigvals_only=True)[-1])
        lam1 = spectral_data(metric, L, n_theta, n_phi, cache).lambda1
        rows.append(Lambda1FloorRow(float(label), lam1, c_member))

    c = max(r.c_member for r in rows)
    lambda1_ref = rows[0].lambda1
    floor = lambda1_ref / c
    kappa = min(r.lambda1 for r in rows)
    margin = kappa - floor
    return Lambda1Floor(
        family_id=family.id,
        L=L,
        reference_param=rows[0].param,
        lambda1_ref=lambda1_ref,
        c=c,
        floor=floor,
        kappa=kappa,
        margin=margin,
        rows=tuple(rows),
        passed=bool(math.isfinite(margin) and kappa >= floor * (1.0 - 1e-12)),
    )


@dataclass(frozen=True)
class ResolventRow:
    """Operator distance of one consecutive member pair with its bound."""

    param_lo: float
    param_hi: float
    dist: float
    heat_dist: float
    delta_integral: float
    bound: float
    heat_bound: float


@dataclass(frozen=True)
class ResolventReport:
    """Cauchy table of resolvents and heat operators along a family.

    Distances are operator norms in the first member's mass inner product.
    ``limit_dist`` is the final column: distance from the last member to the
    limit metric's operator, reported without a bound (the interpolation
    path stops at the last member).
    """

    family_id: str
    L: int
    shift: float
    t_heat: float
    c3: float
    c3_heat: float
    rows: tuple[ResolventRow, ...]
    limit_dist: float
    heat_limit_dist: float
    failures: tuple[str, ...]
    resolvent_ok: bool
    heat_ok: bool
    passed: bool


def resolvent_convergence(
    family: MetricFamily,
    L: int = 24,
    shift: float = 1.0,
    t_heat: float = 1.0,
    n_theta: int | None = None,
    n_phi: int | None = None,
    n_gl: int = 8,
) -> ResolventReport:
    """Check resolvents and heat operators are Cauchy along the family.

    Consecutive member pairs (from the second member on, matching the
    interpolation domain) are compared in operator norm; each distance must
    stay below c3 times the integrated density variation over the joining
    segment, where c3 is measured on the first pair and frozen with the
    safety factor. Differences must not grow, and the distance to the limit
    member's operator is reported as the final column.
    """
    members = family.members
    params = tuple(float(p) for p in family.parameters)
    if len(members) < 3:
        raise DomainError("resolvent_convergence needs at least three members")

    basis = get_basis(L, n_theta, n_phi)
    ip_ref = InnerProduct.from_gram(mass(basis, members[0]))
    xg, wg = np.polynomial.legendre.leggauss(n_gl)

    def operators_at(k: int) -> tuple[np.ndarray, np.ndarray]:
        spec = compute_spectrum(members[k], L, n_theta, n_phi)
        return resolvent(spec, shift), heat_operator(spec, t_heat)

    raw: list[tuple[float, float, float, float, float]] = []
    r_prev, e_prev = operators_at(1)
    for k in range(1, len(members) - 1):
        r_next, e_next = operators_at(k + 1)
        dist = operator_norm(r_prev - r_next, ip_ref)
        heat_dist = operator_norm(e_prev - e_next, ip_ref)
        mid, half = k + 0.5, 0.5
        delta_int = float(
            np.sum(wg * half * np.array([delta_X(family, mid + half * x) for x in xg]))
        )
        raw.append((params[k], params[k + 1], dist, heat_dist, delta_int))
        r_prev, e_prev = r_next, e_next

    tiny = _TINY_REL
    first_delta = raw[0][4]
    if first_delta > tiny:
        c3 = FROZEN_SAFETY * raw[0][2] / first_delta
        c3_heat = FROZEN_SAFETY * raw[0][3] / first_delta
    else:
        c3 = math.nan
        c3_heat = math.nan

    rows: list[ResolventRow] = []
    failures: list[str] = []
    resolvent_ok = True
    heat_ok = True
    for i, (p_lo, p_hi, dist, heat_dist, delta_int) in enumerate(raw):
        if math.isnan(c3):
            bound, heat_bound = tiny, tiny
        else:
            bound, heat_bound = c3 * delta_int + tiny, c3_heat * delta_int + tiny
        rows.append(ResolventRow(p_lo, p_hi, dist, heat_dist, delta_int, bound, heat_bound))
        if i >= 1 or math.isnan(c3):
            if dist > bound:
                resolvent_ok = False
                failures.append(
                    f"resolvent pair ({p_lo:g}, {p_hi:g}): distance {dist:.3e} "
                    f"exceeds bound {bound:.3e}"
                )
            if heat_dist > heat_bound:
                heat_ok = False
                failures.append(
                    f"heat pair ({p_lo:g}, {p_hi:g}): distance {heat_dist:.3e} "
                    f"exceeds bound {heat_bound:.3e}"
                )
        if i >= 1:
            prev = raw[i - 1]
            if dist > prev[2] * (1.0 + tiny) + tiny:
                resolvent_ok = False
                failures.append(
                    f"resolvent distances grew at pair ({p_lo:g}, {p_hi:g}): "
                    f"{dist:.3e} after {prev[2]:.3e}"
                )
            if heat_dist > prev[3] * (1.0 + tiny) + tiny:
                heat_ok = False
                failures.append(
                    f"heat distances grew at pair ({p_lo:g}, {p_hi:g}): "
                    f"{heat_dist:.3e} after {prev[3]:.3e}"
                )

    limit_dist = math.nan
    heat_limit_dist = math.nan
    if family.limit is not None:
        spec_lim = compute_spectrum(family.limit, L, n_theta, n_phi)
        limit_dist = operator_norm(r_prev - resolvent(spec_lim, shift), ip_ref)
        heat_limit_dist = operator_norm(
            e_prev - heat_operator(spec_lim, t_heat), ip_ref
        )

    return ResolventReport(
        family_id=family.id,
        L=L,
        shift=shift,
        t_heat=t_heat,
        c3=c3,
        c3_heat=c3_heat,
        rows=tuple(rows),
        limit_dist=limit_dist,
        heat_limit_dist=heat_limit_dist,
        failures=tuple(failures),
        resolvent_ok=resolvent_ok,
        heat_ok=heat_ok,
        passed=resolvent_ok and heat_ok,
    )


@dataclass(frozen=True)
class BorneReport:
    """Test-vector check that the operator variation obeys the density bound."""

    family_id: str
    u: float
    L: int
    n_vectors: int
    delta_nodes: float
    delta_grid: float
    max_ratio: float
    passed: bool


def bornelapbelt_check(
    family: MetricFamily,
    u: float = 2.5,
    L: int = 16,
    n_theta: int | None = None,
    n_phi: int | None = None,
    n_vectors: int = 100,
    seed: int = 20260818,
) -> BorneReport:
    """Check the operator's parameter derivative against the density variation.

    The Dirichlet form does not depend on the family parameter, so the
    operator varies only through the mass matrix: d(Lap) = -B Lap with
    B = M^{-1} dM. B is self-adjoint in the mass inner product and its
    Rayleigh quotient is a weighted average of d(log density)/du over the
    quadrature nodes, hence for every test vector

        ||d(Lap) v||_M <= max_nodes |d log density/du| * ||Lap v||_M

    holds exactly in the discretization, up to roundoff.
    """
    metric = interpolate(family, u)
    basis = get_basis(L, n_theta, n_phi)
    pair = assemble(basis, metric)
    d_mass = mass_log_variation(basis, metric)

    cho = scipy.linalg.cho_factor(pair.mass)
    rng = np.random.default_rng(seed)
    test = rng.standard_normal((pair.n, n_vectors))
    lap_v = scipy.linalg.cho_solve(cho, pair.stiffness @ test)
    dlap_v = -scipy.linalg.cho_solve(cho, d_mass @ lap_v)

    def m_norms(x: np.ndarray) -> np.ndarray:
        return np.sqrt(np.einsum("ij,ij->j", x, pair.mass @ x))

    num = m_norms(dlap_v)
    den = m_norms(lap_v)
    max_ratio = float((num / den).max())
    r = basis.quad.radii_theta
    delta_nodes = float(np.abs(metric.d_log_density_du(r.astype(complex), 0)).max())
    return BorneReport(
        family_id=family.id,
        u=float(u),
        L=L,
        n_vectors=n_vectors,
        delta_nodes=delta_nodes,
        delta_grid=delta_X(family, u),
        max_ratio=max_ratio,
        passed=bool(max_ratio <= delta_nodes * (1.0 + 1e-9) + 1e-15),
    )


def duhamel_at(
    family: MetricFamily,
    u: float = 2.5,
    h: float = 1e-3,
    t: float = 0.5,
    L: int = 16,
    n_theta: int | None = None,
    n_phi: int | None = None,
    n_nodes: int = 32,
) -> DuhamelReport:
    """Integrated variation identity for the heat operator at one (u, t).

    Solves the three pencils at u - h, u, u + h and checks that the
    centered difference of the heat operator matches the integral of
    E(t - s) dLap E(s); the residual should sit at the quadrature and
    differencing level, far below the derivative's norm.
    """
    spec_lo = compute_spectrum(interpolate(family, u - h), L, n_theta, n_phi)
    spec_mid = compute_spectrum(interpolate(family, u), L, n_theta, n_phi)
    spec_hi = compute_spectrum(interpolate(family, u + h), L, n_theta, n_phi)
    return duhamel_residual(spec_lo, spec_mid, spec_hi, h, t=t, n_nodes=n_nodes)


@dataclass(frozen=True)
class ConvergenceSummary:
    """Every harness check on one family, with one verdict per named tag."""

    family_id: str
    L: int
    sweep: SweepReport
    cauchy: CauchyReport
    limit_check: LimitAgreement | None
    floor: Lambda1Floor
    resolvents: ResolventReport
    borne: BorneReport
    duhamel: DuhamelReport
    quillen: QuillenLimit
    two_route: TwoRouteReport
    tags: dict[str, bool]
    passed: bool

    @property
    def failed_tags(self) -> tuple[str, ...]:
        return tuple(t for t in THEOREM_TAGS if not self.tags[t])


def convergence_summary(
    family: MetricFamily,
    parameters: Sequence[float] | None = None,
    L: int = 24,
    t_set: tuple[float, ...] = (0.5, 1.0, 2.0),
    cache: SpectrumCache | None = None,
    sign: int = SIGN_CONVENTION,
    window: tuple[float, float] | None = None,
    trunc_tol: float = 1e-8,
    variation_u: float = 2.5,
    variation_L: int = 16,
    duhamel_h: float = 1e-3,
    duhamel_t: float = 0.5,
    seed: int = 20260818,
) -> ConvergenceSummary:
    """Run every convergence check on one family and aggregate tag verdicts.

    The sweep, Cauchy rates, limit agreement, gap floor, and extrapolated
    determinant run at degree ``L``; the variation checks run at the lighter
    ``variation_L`` since they need interpolated pencils of their own.
    """
    rep = sweep(
        family, parameters, L=L, t_set=t_set, cache=cache, sign=sign,
        window=window, trunc_tol=trunc_tol,
    )
    cauchy = cauchy_check(rep)
    limit_check = None
    if family.limit is not None and rep.rows:
        limit_check = limit_agreement(
            family, rep, cauchy, cache=cache, sign=sign,
            window=window, trunc_tol=trunc_tol,
        )
    floor = lambda1_floor(family, parameters, L=L, cache=cache)
    resolvents = resolvent_convergence(family, L=L, t_heat=1.0)
    borne = bornelapbelt_check(family, u=variation_u, L=variation_L, seed=seed)
    duhamel = duhamel_at(family, u=variation_u, h=duhamel_h, t=duhamel_t, L=variation_L)
    quillen = quillen_limit(
        family, p_list=parameters, L=L, cache=cache, sign=sign,
        window=window, trunc_tol=trunc_tol,
    )
    two_route = two_route_check(
        family.members[0], family.members[1], L=L, cache=cache, sign=sign,
        window=window, trunc_tol=trunc_tol,
    )

    tags = {
        "laplaceTX": bool(rep.rows) and not rep.failures
        and all(r.lambda1 > 0.0 for r in rep.rows),
        "bornelapbelt": borne.passed,
        "deltacompact": resolvents.resolvent_ok,
        "variationEu": resolvents.heat_ok and duhamel.ratio < DUHAMEL_RATIO_TOL,
        "key2": cauchy.passed and (limit_check.passed if limit_check else True),
        "convergenceAnomaly": quillen.converged,
        "compare2methods": two_route.passed,
        "lowerbound": floor.passed,
    }
    return ConvergenceSummary(
        family_id=family.id,
        L=L,
        sweep=rep,
        cauchy=cauchy,
        limit_check=limit_check,
        floor=floor,
        resolvents=resolvents,
        borne=borne,
        duhamel=duhamel,
        quillen=quillen,
        two_route=two_route,
        tags=tags,
        passed=all(tags.values()),
    )
