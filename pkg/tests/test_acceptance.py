"""Acceptance criteria 1-8, each at its stated tolerance.

Every test prints one ``PASS criterion N: ...`` or ``FAIL criterion N: ...``
line; the lines are repeated in the terminal summary. Run alone with::

    pytest tests/test_acceptance.py -v -s
"""

import numpy as np
import pytest

from conftest import VERDICTS
from epcircle import equations as eq
from epcircle import evolution as ev
from epcircle import invariants as inv
from epcircle import landau as ll
from epcircle import runner
from epcircle.config import RunConfig
from epcircle.initial import random_unit
from epcircle.spectral import Grid

PRESETS = ["burgers", "ch", "much", "dp", "mudp", "hs", "muburgers"]


def verdict(n: int, ok: bool, detail: str, label: str = "") -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    VERDICTS[(n, label)] = line
    print(line)
    assert ok, line


def relative(col: np.ndarray, scale: float) -> float:
    return float(np.max(np.abs(col - col[0])) / scale)


def run(name, grid, u0, dt, t_end, record_every=100, backend=ev.integrate, **kw):
    cfg = ev.IntegratorConfig(dt=dt, t_end=t_end, record_every=record_every)
    return backend(eq.preset(name).spec, grid.function(u0), cfg, **kw)


# 1. orbit invariant ------------------------------------------------------------


def orbit_data(name, x):
    # high mean flow and a k=8 ripple: time-stepping error dominates round-off
    p8 = float(eq.preset(name).spec.phi.symbol(np.array([8]))[0])
    return 3.0 + min(0.1 / p8, 0.01) * np.sin(8 * x)


def test_criterion_1_orbit_invariant():
    g = Grid(256)
    lines, ok = [], True
    for name in PRESETS:
        u0 = orbit_data(name, g.points)
        spec = eq.preset(name).spec
        if not spec.homogeneous:  # Phi u has zero mean on the homogeneous presets
            assert inv.sign_condition(spec, g.function(u0))[0]
        drifts = []
        for dt in (1e-3, 5e-4):
            result = run(name, g, u0, dt, 1.0, record_every=int(round(0.1 / dt)))
            assert result.verdict.completed
            drifts.append(inv.drift_report(result.series).get(eq.ORBIT).max_drift)
        ratio = drifts[0] / drifts[1]
        good = drifts[0] <= 1e-5 and ratio >= 8
        ok &= good
        lines.append(f"{name} drift {drifts[0]:.2e} ratio {ratio:.1f}")
    verdict(1, ok, "orbit drift <= 1e-5 and >= 8x on dt halving; " + ", ".join(lines))


# 2. global existence ---------------------------------------------------------


@pytest.mark.parametrize("name", ["ch", "dp"])
def test_criterion_2_global_existence(name):
    g = Grid(256)
    u0 = 1 + 0.1 * np.sin(g.points)
    result = run(name, g, u0, 1e-3, 20.0, record_every=500)
    s = result.series
    min_m = float(s.column("min_phi_u").min())
    mom = s.column("momentum_integral")
    drift = relative(mom, abs(mom[0]))
    ok = result.verdict.completed and min_m >= -1e-6 and drift <= 1e-9
    verdict(2, ok, f"{name} T=20 {result.verdict.status}, min Phi u {min_m:.4f} (>= -1e-6), "
                   f"momentum drift {drift:.2e} (<= 1e-9)", label=name)


# 3. breakdown ------------------------------------------------------------------


def test_criterion_3_breakdown():
    # particle-path slopes u'(gamma) = gammadot' / gamma' resolve the steepening front
    g = Grid(256)
    result = run("ch", g, np.sin(g.points), 1e-3, 5.0, record_every=50, backend=ev.integrate_lagrangian)
    s = result.series
    report = inv.drift_report(s)
    last_ux = float(s.records[-1].min_ux)
    mom = report.get(eq.MOMENTUM).max_drift
    ok = result.verdict.status == ev.BREAKDOWN and last_ux <= -1e2 and mom <= 1e-8
    verdict(3, ok, f"{result.verdict.status} at t={result.verdict.t:.3f} ({result.verdict.reason}); "
                   f"final min u' {last_ux:.1f} (<= -100); momentum drift {mom:.1e} (<= 1e-8) "
                   f"up to horizon t={report.reliable_horizon:.2f}")


# 4. backend equivalence ------------------------------------------------------


def compare(equation, ic, t_end):
    cfg = RunConfig(equation=equation, initial_condition=ic, grid_n=128, dt=1e-3, t_end=t_end,
                    record_every=50, backend="both")
    return runner.compare_backends(cfg)


def test_criterion_4_backend_equivalence():
    cases = {
        "ch": {"kind": "mean_plus_sine", "c": 1, "a": 0.2, "k": 1},
        "dp": {"kind": "mean_plus_sine", "c": 1, "a": 0.2, "k": 1},
        "burgers": {"kind": "sine", "a": 0.1, "k": 1},
    }
    parts, ok = [], True
    for name, ic in cases.items():
        c = compare(name, ic, 0.5)
        ok &= c.max_discrepancy <= 1e-4
        parts.append(f"{name} {c.max_discrepancy:.1e}")
    oracle = compare("burgers", cases["burgers"], 1.0).max_oracle_error
    ok &= oracle <= 1e-6
    verdict(4, ok, "backend discrepancy (<= 1e-4) " + ", ".join(parts)
            + f"; burgers characteristics error {oracle:.1e} (<= 1e-6)")


# 5. energy and Kelvin ----------------------------------------------------------


def test_criterion_5_energy_kelvin():
    g = Grid(256)
    x = g.points
    data = {"ch": 1 + 0.1 * np.sin(x), "much": 1 + 0.1 * np.sin(x), "hs": 0.5 * np.sin(x)}
    parts, ok = [], True
    for name, u0 in data.items():
        result = run(name, g, u0, 1e-3, 1.0)
        s = result.series
        energy = s.column("energy")
        e = relative(energy, abs(energy[0]))
        k = 0.0
        for probe in inv.DEFAULT_PROBES:
            col = s.column(probe.name)
            k = max(k, relative(col, max(abs(col[0]), 1.0)))
        ok &= result.verdict.completed and e <= 1e-8 and k <= 1e-8
        parts.append(f"{name} energy {e:.1e} kelvin {k:.1e}")
    verdict(5, ok, "relative drift (<= 1e-8) " + ", ".join(parts))


# 6. homogeneous gauge ----------------------------------------------------------


def test_criterion_6_gauge():
    g = Grid(256)
    x = g.points
    u0 = 0.25 + 0.3 * np.sin(x)
    parts, ok = [], True
    for name in ("hs", "muburgers"):
        spec = eq.preset(name).spec
        result = run(name, g, u0, 1e-3, 1.0)
        mean_m = max(abs(float(np.mean(s.m.values))) for s in result.trajectory)
        mean_u = max(abs(float(np.mean(s.u.values)) - 0.25) for s in result.trajectory)
        ok &= result.verdict.completed and mean_m <= 1e-10 and mean_u <= 1e-12
        part = f"{name} |mean m| {mean_m:.1e} mean u drift {mean_u:.1e}"
        if name == "muburgers":
            residual = 0.0
            for s in result.trajectory:
                ut = ev.velocity_tendency(spec, s.m, s.gauge_mean).values
                residual = max(residual, float(np.max(np.abs(ut + s.u.values * g.deriv_array(s.u.values)))))
            ok &= residual <= 1e-6
            part += f" |u_t + u u'| {residual:.1e}"
        parts.append(part)
    verdict(6, ok, "(<= 1e-10, 1e-12, 1e-6) " + ", ".join(parts))


# 7. Landau-Lifschitz -----------------------------------------------------------


def test_criterion_7_landau_lifschitz():
    g = Grid(64)
    cfg = ev.IntegratorConfig(dt=1e-3, t_end=1.0, record_every=100)
    result = ll.integrate_ll(random_unit(g, seed=7), cfg)
    report = runner.loop_drift_report(result)
    drifts = {k: v["max_drift"] for k, v in report["invariants"].items()}
    theta = np.pi / 3
    wave = ll.integrate_ll(ll.spin_wave(g, 1, theta), cfg)
    measured = ll.measure_dispersion(wave, 1)
    rel = abs(measured - (-np.cos(theta))) / np.cos(theta)
    ok = result.verdict.completed and all(v <= 1e-7 for v in drifts.values()) and rel <= 1e-4
    verdict(7, ok, "drift (<= 1e-7) " + ", ".join(f"{k} {v:.1e}" for k, v in drifts.items())
            + f"; dispersion {measured:.8f} vs {-np.cos(theta):.8f} (rel {rel:.1e} <= 1e-4)")


# 8. convergence ----------------------------------------------------------------


def test_criterion_8_convergence():
    cfg = RunConfig(equation="ch", initial_condition={"kind": "sine", "a": 1, "k": 1}, grid_n=128,
                    dt=1e-3, t_end=0.5, record_every=1000)
    time = runner.convergence_study(cfg, dts=[4e-3, 2e-3, 1e-3])
    space = runner.convergence_study(cfg, ns=[64, 128, 256])
    order = time.rows[0].observed
    ratio = space.rows[1].observed
    ok = time.passed and space.passed
    verdict(8, ok, f"temporal order {order:.3f} (in [3.6, 4.4]); spatial ratio {ratio:.1e} (< 1/8)")
