"""Command-line entry point: compute, serialize, and verify.

Subcommands: spectrum, theta, zeta, torsion, anomaly, converge, selftest.
Exit codes: 0 success, 2 validation failure (bad config, bad metric spec,
unusable fit window), 3 tolerance failure (a named check did not pass;
summary.json in the output directory says which).

Heavy imports happen inside the command handlers so the thread environment
from the config takes effect before the linear algebra libraries load.
Every file write is atomic (temp file + rename) and deterministic: the same
config produces byte-identical CSV/JSON.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import tempfile
import time
from pathlib import Path

from .config import RunConfig, load_config, override
from .errors import ConfigError, ZetasphereError

__all__ = ["main"]

_THREAD_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


def _atomic_write(path: Path, data: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return "%.17g" % float(value)


def write_csv(path: Path, header: list[str], rows) -> Path:
    lines = [",".join(header)]
    lines += [",".join(_cell(c) for c in row) for row in rows]
    _atomic_write(path, "\n".join(lines) + "\n")
    return path


def _jsonable(obj):
    """Plain-JSON view: dataclasses to dicts, arrays to lists, nan to null."""
    import numpy as np

    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {
            f.name: _jsonable(getattr(obj, f.name))
            for f in dataclasses.fields(obj)
        }
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return obj


def write_json(path: Path, payload) -> Path:
    text = json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"
    _atomic_write(path, text)
    return path


def _make_cache(config: RunConfig):
    from .cache import SpectrumCache

    return SpectrumCache(config.cache_dir)


def _make_metric(config: RunConfig):
    from .metrics import parse_metric_spec

    return parse_metric_spec(config.metric)


def _make_family(config: RunConfig):
    from .metrics import geomean_family, pnorm_family

    if config.family == "pnorm":
        return pnorm_family(config.family_parameters)
    if config.family == "geomean-pnorm":
        return geomean_family(config.family_parameters)
    raise ConfigError(f"unknown family {config.family!r}")


def _theta_grid(config: RunConfig):
    import numpy as np

    from .heatzeta import geometric_grid

    if config.t_geometric:
        return geometric_grid(config.t_lo, config.t_hi, config.t_count)
    return np.linspace(config.t_lo, config.t_hi, config.t_count)


def _fit_payload(fit) -> dict:
    return {
        "b_minus1": fit.b_minus1,
        "b0": fit.b0,
        "b1": fit.b1,
        "residual": fit.residual,
        "window_requested": list(fit.window_requested),
        "window_effective": list(fit.window_effective),
        "n_points": fit.n_points,
        "trunc_tol": fit.trunc_tol,
        "param_sigma": fit.param_sigma,
    }


def _zeta_payload(data, fit, zres) -> dict:
    return {
        "metric": data.metric_id,
        "L": data.L,
        "n_theta": data.n_theta,
        "n_phi": data.n_phi,
        "solver_version": data.solver_version,
        "volume": data.volume,
        "s_points": [
            {"s": p.s, "value": p.value, "tail_bound": p.tail_bound}
            for p in zres.s_points
        ],
        "kernel_dim": zres.kernel_dim,
        "zeta0": zres.zeta0,
        "zeta0_minus_kernel": zres.zeta0_minus_kernel,
        "zeta_prime0": zres.zeta_prime0,
        "zeta_prime0_variants": dict(zres.zeta_prime0_variants),
        "error_budget": zres.error_budget,
        "fit": _fit_payload(fit),
        "method": zres.method,
    }


def _quillen_payload(quillen) -> dict:
    return {
        "metric": quillen.metric_id,
        "vol": quillen.vol,
        "log_l2": quillen.log_l2,
        "zeta_prime0": quillen.zeta_prime0,
        "sign_convention": quillen.sign_convention,
        "log_quillen": quillen.log_quillen,
        "error_budget": quillen.error_budget,
    }


def _cmd_spectrum(config: RunConfig, out: Path) -> int:
    from .pipeline import spectral_data

    metric = _make_metric(config)
    data = spectral_data(metric, config.L, config.n_theta, config.n_phi, _make_cache(config))
    path = write_csv(
        out / "spectrum.csv",
        ["index", "eigenvalue"],
        ((i, lam) for i, lam in enumerate(data.eigenvalues)),
    )
    print(
        f"spectrum: {data.metric_id} L={data.L} modes={data.eigenvalues.size} "
        f"lambda1={data.lambda1:.6g} -> {path}"
    )
    return 0


def _cmd_theta(config: RunConfig, out: Path) -> int:
    from .heatzeta import heat_trace_samples
    from .pipeline import spectral_data

    metric = _make_metric(config)
    data = spectral_data(metric, config.L, config.n_theta, config.n_phi, _make_cache(config))
    samples = heat_trace_samples(data, _theta_grid(config))
    path = write_csv(
        out / "theta.csv",
        ["t", "theta", "trunc_bound"],
        zip(samples.t, samples.values, samples.trunc_bound),
    )
    print(
        f"theta: {data.metric_id} L={data.L} grid={samples.t.size} "
        f"[{config.t_lo:g}, {config.t_hi:g}] -> {path}"
    )
    return 0


def _cmd_zeta(config: RunConfig, out: Path) -> int:
    from .pipeline import compute_zeta

    metric = _make_metric(config)
    data, _, fit, zres = compute_zeta(
        metric,
        config.L,
        config.n_theta,
        config.n_phi,
        cache=_make_cache(config),
        window=config.fit_window,
        s_values=config.s_values,
        trunc_tol=config.trunc_tol,
    )
    path = write_json(out / "zeta.json", _zeta_payload(data, fit, zres))
    print(
        f"zeta: {data.metric_id} L={data.L} zeta_prime0={zres.zeta_prime0:.12g} "
        f"budget={zres.error_budget:.3g} -> {path}"
    )
    return 0


def _cmd_torsion(config: RunConfig, out: Path) -> int:
    from .anomaly import torsion_report

    metric = _make_metric(config)
    report = torsion_report(
        metric,
        L=config.L,
        n_theta=config.n_theta,
        n_phi=config.n_phi,
        cache=_make_cache(config),
        window=config.fit_window,
        s_values=config.s_values,
        trunc_tol=config.trunc_tol,
    )
    zeta_path = write_json(out / "zeta.json", _zeta_payload(report.data, report.fit, report.zeta))
    quillen_path = write_json(out / "quillen.json", _quillen_payload(report.quillen))
    print(
        f"torsion: {report.data.metric_id} L={report.data.L} "
        f"zeta_prime0={report.zeta.zeta_prime0:.12g} "
        f"log_quillen={report.quillen.log_quillen:.12g} -> {zeta_path}, {quillen_path}"
    )
    return 0


def _cmd_anomaly(config: RunConfig, out: Path) -> int:
    from .anomaly import two_route_check

    family = _make_family(config)
    cache = _make_cache(config)
    reports = [
        two_route_check(
            a,
            b,
            L=config.L,
            cache=cache,
            window=config.fit_window,
            trunc_tol=config.trunc_tol,
        )
        for a, b in zip(family.members[:-1], family.members[1:])
    ]
    passed = all(r.passed for r in reports)
    payload = {
        "family": family.id,
        "L": config.L,
        "sign_convention": reports[0].sign_convention,
        "pairs": [_jsonable(r) for r in reports],
        "passed": passed,
    }
    path = write_json(out / "anomaly.json", payload)
    for r in reports:
        status = "ok" if r.passed else "FAIL"
        print(
            f"anomaly {status}: ({r.metric_p}, {r.metric_q}) "
            f"gap={r.gap:.3e} tolerance={r.tolerance:.3e}"
        )
    print(f"anomaly: {len(reports)} pairs -> {path}")
    if not passed:
        write_json(
            out / "summary.json",
            {"tags": {"compare2methods": False}, "passed": False,
             "failed": ["compare2methods"]},
        )
        print("anomaly: tolerance failure on tag compare2methods", file=sys.stderr)
        return 3
    return 0


def _cmd_converge(config: RunConfig, out: Path) -> int:
    from .harness import convergence_summary

    family = _make_family(config)
    summary = convergence_summary(
        family,
        L=config.L,
        t_set=config.t_set,
        cache=_make_cache(config),
        window=config.fit_window,
        trunc_tol=config.trunc_tol,
    )
    theta_cols = [f"theta_t{t:g}" for t in summary.sweep.t_set]
    csv_path = write_csv(
        out / "converge.csv",
        ["param", "vol", "lambda1", *theta_cols,
         "b_minus1", "b0", "zeta_prime0", "log_quillen", "sup_log_dist_to_limit"],
        (
            (
                row.param,
                row.vol,
                row.lambda1,
                *[row.theta[t] for t in summary.sweep.t_set],
                row.b_minus1,
                row.b0,
                row.zeta_prime0,
                row.log_quillen,
                row.sup_log_dist_to_limit,
            )
            for row in summary.sweep.rows
        ),
    )
    quillen_path = write_csv(
        out / "converge_quillen.csv",
        ["p", "vol", "zeta_prime0", "log_quillen", "diff_to_prev", "bound"],
        (
            (r.param, r.vol, r.zeta_prime0, r.log_quillen, r.diff_to_prev, r.bound)
            for r in summary.quillen.rows
        ),
    )
    payload = {
        "family": summary.family_id,
        "L": summary.L,
        "tags": dict(summary.tags),
        "passed": summary.passed,
        "failed": list(summary.failed_tags),
        "detail": {
            "sweep_failures": [_jsonable(f) for f in summary.sweep.failures],
            "cauchy_violations": list(summary.cauchy.violations),
            "floor": {
                "c": summary.floor.c,
                "floor": summary.floor.floor,
                "kappa": summary.floor.kappa,
                "margin": summary.floor.margin,
            },
            "resolvent": {
                "c3": summary.resolvents.c3,
                "c3_heat": summary.resolvents.c3_heat,
                "limit_dist": summary.resolvents.limit_dist,
                "heat_limit_dist": summary.resolvents.heat_limit_dist,
                "failures": list(summary.resolvents.failures),
            },
            "borne": {
                "u": summary.borne.u,
                "max_ratio": summary.borne.max_ratio,
                "delta_nodes": summary.borne.delta_nodes,
            },
            "duhamel_ratio": summary.duhamel.ratio,
            "two_route_gap": summary.two_route.gap,
            "two_route_tolerance": summary.two_route.tolerance,
            "quillen_limit": summary.quillen.limit,
            "quillen_failures": list(summary.quillen.failures),
        },
    }
    summary_path = write_json(out / "summary.json", payload)
    for tag, ok in summary.tags.items():
        print(f"converge {'ok  ' if ok else 'FAIL'} {tag}")
    print(f"converge: {summary.family_id} L={summary.L} -> {csv_path}, {quillen_path}, {summary_path}")
    if not summary.passed:
        print(
            "converge: tolerance failure on tags " + ", ".join(summary.failed_tags),
            file=sys.stderr,
        )
        return 3
    return 0


def _cmd_selftest(config: RunConfig, out: Path) -> int:
    from .selftest import run_selftest

    tags, details = run_selftest(config)
    for line in details:
        print(line)
    failed = [name for name, ok in tags.items() if not ok]
    write_json(
        out / "summary.json",
        {"tags": dict(tags), "passed": not failed, "failed": failed},
    )
    if failed:
        print("selftest: failure on tags " + ", ".join(failed), file=sys.stderr)
        return 3
    print(f"selftest: {len(tags)} checks ok")
    return 0


_COMMANDS = {
    "spectrum": _cmd_spectrum,
    "theta": _cmd_theta,
    "zeta": _cmd_zeta,
    "torsion": _cmd_torsion,
    "anomaly": _cmd_anomaly,
    "converge": _cmd_converge,
    "selftest": _cmd_selftest,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zetasphere",
        description="Spectra, heat traces, zeta values, and determinant "
        "metrics of conformal Laplacians on the sphere.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", metavar="FILE", help="config file (INI)")
    common.add_argument("--metric", help="metric spec, e.g. fs, max, pnorm:3")
    common.add_argument("--L", type=int, dest="L", help="spectral degree cutoff")
    common.add_argument("--output-dir", dest="output_dir", help="directory for result files")
    common.add_argument("--cache-dir", dest="cache_dir", help="spectrum cache directory")
    common.add_argument("--threads", type=int, help="BLAS/OpenMP thread count (0 = library default)")

    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")
    helps = {
        "spectrum": "eigenvalues of one metric -> spectrum.csv",
        "theta": "heat trace on the time grid -> theta.csv",
        "zeta": "zeta values and derivative at 0 -> zeta.json",
        "torsion": "zeta derivative and determinant metric -> zeta.json, quillen.json",
        "anomaly": "two-route determinant comparison over the family -> anomaly.json",
        "converge": "full family harness -> converge.csv, converge_quillen.csv, summary.json",
        "selftest": "fast built-in checks -> summary.json",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = load_config(args.config) if args.config else RunConfig()
        config = override(
            config,
            metric=args.metric,
            L=args.L,
            output_dir=args.output_dir,
            cache_dir=args.cache_dir,
            threads=args.threads,
        )
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    if config.threads > 0:
        for var in _THREAD_VARS:
            os.environ[var] = str(config.threads)

    out = Path(config.output_dir)
    started = time.monotonic()
    try:
        code = _COMMANDS[args.command](config, out)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ZetasphereError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if code == 0:
        print(f"done in {time.monotonic() - started:.2f}s")
    return code


if __name__ == "__main__":
    sys.exit(main())
