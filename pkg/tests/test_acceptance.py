"""Acceptance criteria 1-9, one PASS/FAIL line each.

Run with pytest (lines appear in the terminal summary) or directly with
``python3 tests/test_acceptance.py``.  Sub-checks that cannot be met are
reported as FAIL and their pytest counterparts are strict xfails; see the
decisions ledger for the analysis.
"""

import functools
import math
import time

import mpmath as mp
import numpy as np
import pytest

from rieszgas.el_verify import (
    default_outside_grid,
    el_check,
    energy,
    energy_closed_form,
    riesz_potential_quadrature,
    riesz_potential_series,
)
from rieszgas.halfspace import (
    G_closed_d3,
    G_profile,
    a_critical,
    conjecture_scan,
    rate_constant,
)
from rieszgas.potentials import PotentialSpec
from rieszgas.sequences import (
    RadialDensity,
    RieszParams,
    power_measure_coeffs,
    power_potential_coeffs,
)
from rieszgas.simulate import (
    ParticleConfiguration,
    Schedule,
    minimize,
    radial_cdf,
    random_start,
)
from rieszgas.specfun import riesz_identity_residual

RESULTS = {}

DS_PAIRS = [(1, 0.5), (2, 1.0), (3, 1.5), (3, 2.5)]
INSIDE = np.linspace(0.1, 0.9, 9)


def _record(n, checks):
    """``checks`` maps a sub-check name to ``(ok, detail)``."""
    ok = all(v[0] for v in checks.values())
    detail = "; ".join(f"{k}: {'ok' if v[0] else 'FAIL'} ({v[1]})" for k, v in checks.items())
    RESULTS[n] = (ok, detail)
    return checks


# ---------------------------------------------------------------------------
# shared computations
# ---------------------------------------------------------------------------


def _valid_pairs():
    for d, s in DS_PAIRS:
        params = RieszParams(d, s)
        for m in (0, 1):
            seq = power_measure_coeffs((s - d) / 2 + 2 * m + 1, params)
            yield f"soft-edge m={m} d={d} s={s}", RadialDensity.of(seq), PotentialSpec.soft_edge(m, params)
        for p in (1, 2, 3):
            seq = power_potential_coeffs(p, params)
            yield f"pure-power p={p} d={d} s={s}", RadialDensity.of(seq), PotentialSpec.pure_power(p, params)


@functools.lru_cache(maxsize=None)
def _el_reports():
    t0 = time.perf_counter()
    reps = [(name, rd, spec, el_check(rd, spec, INSIDE, default_outside_grid())) for name, rd, spec in _valid_pairs()]
    return reps, time.perf_counter() - t0


@functools.lru_cache(maxsize=None)
def _simulation(d, s, N, seed):
    params = RieszParams(d, s)
    spec = PotentialSpec.pure_power(1, params)
    cfg = ParticleConfiguration(random_start(N, params, seed=seed), params, spec)
    t0 = time.perf_counter()
    res = minimize(cfg, Schedule(max_iters=20000, grad_tol=1e-6 * N))
    elapsed = time.perf_counter() - t0
    rd = RadialDensity.of(power_potential_coeffs(1, params))
    ks = radial_cdf(res.config, rd)["ks_distance"]
    return res, ks, elapsed


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------


def criterion_1():
    t0 = time.perf_counter()
    worst = 0.0
    for d in (1, 2, 3, 5):
        for off in (1.9, 1.5, 1.0, 0.5, 0.1):
            params = RieszParams(d, d - off)
            for k in range(11):
                worst = max(worst, abs(riesz_identity_residual(params, k)))
    elapsed = time.perf_counter() - t0
    return _record(1, {
        "residual": (worst <= 1e-9, f"max {worst:.2e}"),
        "runtime": (elapsed < 5.0, f"{elapsed:.2f} s"),
    })


def criterion_2():
    reps, elapsed = _el_reports()
    res = max(r.max_residual for *_, r in reps)
    dis = max(r.method_disagreement for *_, r in reps)
    return _record(2, {
        "residual": (res <= 1e-6, f"max {res:.2e} over {len(reps)} pairs"),
        "disagreement": (dis <= 1e-6, f"max {dis:.2e}"),
        "runtime": (elapsed < 60.0, f"{elapsed:.1f} s"),
    })


def criterion_3():
    reps, _ = _el_reports()
    worst = min(r.min_margin for *_, r in reps)
    d, s = 2, 1.0
    params = RieszParams(d, s)
    alpha = (s - d) / 2 + 2
    bad = el_check(
        RadialDensity.of(power_measure_coeffs(alpha, params)),
        PotentialSpec.power_measure(alpha, params),
        INSIDE,
        default_outside_grid(),
    )
    return _record(3, {
        "valid pairs": (worst >= -1e-8, f"min margin {worst:.2e}"),
        "even-n potential": (bad.min_margin < 0, f"min margin {bad.min_margin:.3g}"),
    })


def criterion_4():
    worst = 0.0
    for _, rd, spec in _valid_pairs():
        worst = max(worst, abs(energy(rd, spec) - energy_closed_form(rd, spec)))
    lims = {}
    for d, target in ((2, 0.75), (1, 0.75 + math.log(2))):
        params = RieszParams(d, 1e-4)
        rd = RadialDensity.of(power_potential_coeffs(1, params))
        lims[d] = energy(rd, PotentialSpec.pure_power(1, params)) - 1e4 - target
    return _record(4, {
        "closed forms": (worst <= 1e-8, f"max diff {worst:.2e}"),
        "log limit d=2": (abs(lims[2]) <= 5e-3, f"error {lims[2]:.2e}"),
        "log limit d=1": (abs(lims[1]) <= 5e-3, f"error {lims[1]:.2e}"),
    })


def criterion_5():
    a = 0.7
    c2 = 5 / 9 * ((6 * math.pi) ** 1.5 / 6 - 1)
    e0 = abs(a_critical(0) - 1.0)
    e1 = abs(a_critical(1) - math.sqrt(2))
    r0 = abs(rate_constant(a, 0) - (a * a + 1 / 3))
    r1 = abs(rate_constant(a, 1) - (a * a + math.log(2) / 2))
    r2 = abs(rate_constant(a, 2) - (a * a + c2))
    return _record(5, {
        "a_cri(0)": (e0 <= 1e-14, f"{e0:.1e}"),
        "a_cri(1)": (e1 <= 1e-14, f"{e1:.1e}"),
        "C(a;0)": (r0 <= 1e-12, f"{r0:.1e}"),
        "C(a;1)": (r1 <= 1e-12, f"{r1:.1e}"),
        "C(a;2) printed": (r2 <= 1e-12, f"off by {r2:.4g}; general formula gives a^2+{rate_constant(0, 2):.6f}"),
    })


def criterion_6():
    grid = np.linspace(0, 3, 20)
    err = max(abs(G_profile(3, t, x) - G_closed_d3(t, x)) for t in grid for x in grid)
    drop = 0.0
    for t in (0.1, 1.0, 3.0):
        x = np.linspace(1e-6, 5, 1000)
        v = np.array([G_closed_d3(t, xi) for xi in x])
        drop = min(drop, float(np.min(np.diff(v))))
    scans = {d: conjecture_scan(d, a_critical(d)).min_margin for d in (2, 3)}
    return _record(6, {
        "closed vs quadrature": (err <= 1e-8, f"max {err:.2e}"),
        "monotone": (drop >= -1e-12, f"min step {drop:.2e}"),
        "scan d=2": (scans[2] >= -1e-6, f"min margin {scans[2]:.2e}"),
        "scan d=3": (scans[3] >= -1e-6, f"min margin {scans[3]:.2e}"),
    })


def criterion_7():
    N = 400
    res2, ks2, t2 = _simulation(2, 1.0, N, 0)
    res1, ks1, t1 = _simulation(1, 0.0, N, 0)
    return _record(7, {
        "d=2 gradient": (res2.grad_norm <= 1e-6 * N, f"{res2.grad_norm:.2e} after {res2.iterations} iterations"),
        "d=2 KS": (ks2 <= 0.08, f"{ks2:.4f}"),
        "d=1 gradient": (res1.grad_norm <= 1e-6 * N, f"{res1.grad_norm:.2e}"),
        "d=1 KS": (ks1 <= 0.08, f"{ks1:.4f}"),
        "runtime": (t1 + t2 < 300, f"{t1 + t2:.1f} s"),
    })


def criterion_8():
    worst = 0.0
    for d, s, alpha in ((2, 1.0, 0.5), (3, 1.5, 1.0), (1, 0.5, -0.25)):
        params = RieszParams(d, s)
        rd = RadialDensity.of(power_measure_coeffs(alpha, params))
        norm = float(mp.gamma(alpha + 1 + mp.mpf(d) / 2) / (mp.gamma(alpha + 1) * mp.gamma(mp.mpf(d) / 2 + 1)))
        t = mp.mpf(d - s) / 2
        pre = (
            mp.pi ** (mp.mpf(d) / 2) * mp.gamma(t) * mp.gamma(alpha + 1)
            / (mp.gamma(mp.mpf(d) / 2) * mp.gamma(alpha + 1 + t))
        )
        for y in np.linspace(0.1, 0.9, 5):
            raw = riesz_potential_quadrature(rd, y) / (norm * params.density_scale)
            ref = float(pre * mp.hyp2f1(mp.mpf(s) / 2, mp.mpf(s - d) / 2 - alpha, mp.mpf(d) / 2, mp.mpf(y) ** 2))
            worst = max(worst, abs(raw - ref))
    return _record(8, {"identity": (worst <= 1e-6, f"max diff {worst:.2e}")})


def criterion_9():
    worst = 0.0
    for d in (3, 4, 5):
        params = RieszParams(d, d - 2.0)
        seq = power_measure_coeffs(0.0, params)
        rd = RadialDensity.of(seq)
        s = params.s
        for r in (1.0, 1.5, 2.0, 4.0):
            g = r ** (-s) / s
            # unit mass: (1/s) U equals one point charge's kernel
            worst = max(worst, abs(riesz_potential_series(seq, params, r) / s - g))
            worst = max(worst, abs(riesz_potential_quadrature(rd, r) / s - g))
    return _record(9, {"Newton": (worst <= 1e-8, f"max diff {worst:.2e}")})


CRITERIA = {n: globals()[f"criterion_{n}"] for n in range(1, 10)}


# ---------------------------------------------------------------------------
# pytest entry points
# ---------------------------------------------------------------------------


def _assert_all(checks, skip=()):
    for name, (ok, detail) in checks.items():
        if name not in skip:
            assert ok, f"{name}: {detail}"


def test_criterion_1_identity():
    _assert_all(criterion_1())


def test_criterion_2_el_equality():
    _assert_all(criterion_2())


def test_criterion_3_el_inequality():
    _assert_all(criterion_3())


def test_criterion_4_energies():
    _assert_all(criterion_4())


def test_criterion_5_thresholds_and_rates():
    _assert_all(criterion_5(), skip=("C(a;2) printed",))


@pytest.mark.xfail(strict=True, reason="printed C(a;2) constant contradicts the general formula; see decisions ledger")
def test_criterion_5_printed_plane_constant():
    checks = criterion_5()
    ok, detail = checks["C(a;2) printed"]
    assert ok, detail


def test_criterion_6_appendix_profiles():
    _assert_all(criterion_6())


def test_criterion_7_simulator_convergence_and_log_gas():
    _assert_all(criterion_7(), skip=("d=2 KS",))


@pytest.mark.xfail(strict=True, reason="finite-N edge layer keeps KS near 0.082 at N=400; see decisions ledger")
def test_criterion_7_plane_ks_bound():
    ok, detail = criterion_7()["d=2 KS"]
    assert ok, detail


def test_criterion_8_power_measure_identity():
    _assert_all(criterion_8())


def test_criterion_9_newton():
    _assert_all(criterion_9())


if __name__ == "__main__":
    for n, fn in CRITERIA.items():
        fn()
        ok, detail = RESULTS[n]
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
