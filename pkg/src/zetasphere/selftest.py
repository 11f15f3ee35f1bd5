"""Fast built-in checks behind the ``selftest`` subcommand.

Each check is a small, self-contained assertion battery; together they
touch every module at low degree so a fresh checkout can verify itself in
a few seconds. The convergence checks reuse the harness on a short family
and report its named tags directly.
"""

from __future__ import annotations

import time

from .config import RunConfig

__all__ = ["run_selftest"]


def _check_quadrature() -> None:
    import numpy as np

    from .discretize import build_basis
    from .quadrature import build_quadrature

    quad = build_quadrature(18, 18)
    assert abs(float(quad.wx.sum()) - 2.0) < 1e-14, "node weights must sum to 2"
    assert abs(float(quad.weights.sum()) - 1.0) < 1e-14, "probability weights must sum to 1"
    assert np.all(np.diff(quad.x) > 0), "cosine nodes must ascend"
    basis = build_basis(8)
    defect = basis.gram_defect()
    assert defect < 1e-12, f"basis Gram defect {defect:.3e} too large"


def _check_round_spectrum() -> None:
    import numpy as np

    from .metrics import fs_metric
    from .pipeline import compute_spectrum

    spectrum = compute_spectrum(fs_metric(), 8)
    lam = spectrum.eigenvalues
    assert lam.size == 81, f"expected 81 modes, got {lam.size}"
    assert lam[0] <= 1e-8 * lam[1], "kernel eigenvalue must vanish"
    idx = 1
    for ell in range(1, 5):
        group = lam[idx:idx + 2 * ell + 1]
        idx += 2 * ell + 1
        spread = float(group.max() - group.min()) / float(group.mean())
        assert spread < 1e-7, f"multiplet ell={ell} relative spread {spread:.3e}"
    assert np.all(np.diff(lam) >= 0), "eigenvalues must ascend"


def _check_operators() -> None:
    import numpy as np

    from .heatzeta import heat_operator, theta
    from .metrics import fs_metric
    from .operators import InnerProduct, lidskii_defect, operator_norm, singular_values, trace_norm
    from .pipeline import compute_spectrum

    spectrum = compute_spectrum(fs_metric(), 6)
    ip = InnerProduct.from_gram(spectrum.pair.mass)
    t = 0.7
    E = heat_operator(spectrum, t)
    P = np.eye(spectrum.pair.n)
    P -= np.outer(spectrum.vectors[:, 0], spectrum.vectors[:, 0] @ spectrum.pair.mass)
    bridge = abs(trace_norm(P @ E, ip) - theta(spectrum, t))
    assert bridge < 1e-10, f"heat-trace bridge defect {bridge:.3e}"

    rng = np.random.default_rng(7)
    for _ in range(5):
        A = rng.standard_normal((12, 12))
        sv = singular_values(A, InnerProduct.from_gram(np.eye(12)))
        assert np.all(np.diff(sv) <= 1e-12), "singular values must descend"
        ip_id = InnerProduct.from_gram(np.eye(12))
        assert abs(np.trace(A)) <= trace_norm(A, ip_id) + 1e-10, "trace bound"
        assert trace_norm(A, ip_id) >= operator_norm(A, ip_id) - 1e-12, "norm order"
        assert lidskii_defect(A) <= 1e-10 * (1.0 + trace_norm(A, ip_id)), "trace vs eigenvalue sum"


def _check_heatzeta() -> None:
    import numpy as np
    import scipy.special

    from .heatzeta import AsymptoticFit, HeatTraceSamples, exp_e1, fit_asymptotics, geometric_grid, zeta_direct
    from .metrics import fs_metric
    from .pipeline import compute_zeta

    for x in (0.05, 0.8, 1.3, 7.0, 40.0):
        rel = abs(exp_e1(x) - float(scipy.special.exp1(x))) / float(scipy.special.exp1(x))
        assert rel < 1e-13, f"exponential integral at {x}: rel err {rel:.3e}"

    t = geometric_grid(0.05, 0.5, 40)
    synth = 3.0 / t + 5.0 + 0.1 * t
    samples = HeatTraceSamples("synthetic", t, synth, np.zeros_like(t), 1e9, 10**6)
    fit = fit_asymptotics(samples, (0.05, 0.5), 1e-8)
    assert isinstance(fit, AsymptoticFit)
    err = max(abs(fit.b_minus1 - 3.0), abs(fit.b0 - 5.0), abs(fit.b1 - 0.1))
    assert err < 1e-10, f"synthetic expansion recovery off by {err:.3e}"

    point = zeta_direct(np.array([0.0, 1.0, 4.0]), 2.0)
    assert abs(point.value - 1.0625) < 1e-15, "zeta(2) of {1, 4}"

    data, _, fit, zres = compute_zeta(fs_metric(), 16)
    rel = abs(fit.b_minus1 - data.volume) / data.volume
    assert rel < 0.02, f"leading coefficient vs volume: rel err {rel:.3e}"
    assert zres.error_budget < 0.05, f"round-metric budget {zres.error_budget:.3e}"


def _check_determinism() -> None:
    import json

    from .metrics import pnorm_metric
    from .pipeline import compute_zeta

    def payload() -> str:
        data, _, fit, zres = compute_zeta(pnorm_metric(3.0), 16)
        return json.dumps(
            {
                "eigenvalues": ["%.17g" % v for v in data.eigenvalues],
                "b": ["%.17g" % v for v in (fit.b_minus1, fit.b0, fit.b1)],
                "zeta_prime0": "%.17g" % zres.zeta_prime0,
            },
            sort_keys=True,
        )

    first = payload()
    second = payload()
    assert first == second, "repeated runs must serialize identically"


def _check_cache() -> None:
    import tempfile

    import numpy as np

    from .cache import SpectrumCache, spectrum_cache_key

    with tempfile.TemporaryDirectory() as root:
        cache = SpectrumCache(root)
        key = spectrum_cache_key("selftest-metric", 4, 10, 10, "v1")
        other = spectrum_cache_key("selftest-metric", 4, 10, 10, "v2")
        assert key != other, "solver version must enter the cache key"
        assert cache.load(key) is None, "empty cache must miss"
        values = np.linspace(0.0, 1.0, 5)
        cache.store(key, eigenvalues=values, volume=np.float64(2.0))
        hit = cache.load(key)
        assert hit is not None and np.array_equal(hit["eigenvalues"], values), "roundtrip"
        path = cache.path_for(key)
        path.write_bytes(b"not an archive")
        assert cache.load(key) is None, "corrupted entries must read as misses"


def run_selftest(config: RunConfig) -> tuple[dict[str, bool], list[str]]:
    """Run the whole battery; returns (tag -> ok, printable detail lines)."""
    from .cache import SpectrumCache
    from .harness import convergence_summary
    from .metrics import pnorm_family

    tags: dict[str, bool] = {}
    details: list[str] = []

    def run(name: str, fn) -> None:
        start = time.monotonic()
        try:
            fn()
            tags[name] = True
            details.append(f"ok   {name} ({time.monotonic() - start:.2f}s)")
        except Exception as e:  # noqa: BLE001 - report, do not abort the battery
            tags[name] = False
            details.append(
                f"FAIL {name} ({time.monotonic() - start:.2f}s): {type(e).__name__}: {e}"
            )

    run("quadrature", _check_quadrature)
    run("round_spectrum", _check_round_spectrum)
    run("operators", _check_operators)
    run("heatzeta", _check_heatzeta)
    run("determinism", _check_determinism)
    run("cache", _check_cache)

    family = pnorm_family(params=(1.0, 2.0, 3.0))
    start = time.monotonic()
    try:
        summary = convergence_summary(
            family,
            L=16,
            cache=SpectrumCache(config.cache_dir),
            variation_u=1.5,
            variation_L=10,
        )
        tags.update(summary.tags)
        for tag, ok in summary.tags.items():
            details.append(
                f"{'ok  ' if ok else 'FAIL'} {tag} "
                f"(family {summary.family_id}, L={summary.L})"
            )
        details.append(
            f"     harness block took {time.monotonic() - start:.2f}s"
        )
    except Exception as e:  # noqa: BLE001
        from .harness import THEOREM_TAGS

        for tag in THEOREM_TAGS:
            tags[tag] = False
        details.append(
            f"FAIL harness ({time.monotonic() - start:.2f}s): {type(e).__name__}: {e}"
        )
    return tags, details
