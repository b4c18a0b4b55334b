"""Execute configured runs and write their artifacts.

The command line is a thin layer over :func:`execute_run`,
:func:`convergence_study` and :func:`compare_backends`; all three can be
driven from Python with a :class:`~epcircle.config.RunConfig`.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import equations as eq
from . import evolution as ev
from . import invariants as inv
from . import landau as ll
from .config import RunConfig
from .oracles import burgers_characteristics

DIAGNOSTIC_COLUMNS = (
    "t",
    "orbit_drift",
    "momentum_integral",
    "energy",
    "mean_u",
    "min_phi_u",
    "min_ux",
    "c1_norm",
    "gamma_min_deriv",
    "kelvin_1",
    "kelvin_sin1",
    "kelvin_cos1",
)
LOOP_COLUMNS = ("t", "norm_deviation", "energy", "mean_x", "mean_y", "mean_z")

LOOP_INVARIANTS = ("pointwise_norm", "energy", "mean_vector")
LOOP_TOLERANCES = {"pointwise_norm": 1e-8, "energy": 1e-8, "mean_vector": 1e-9}

BACKEND_TOL = 1e-4
ORACLE_TOL = 1e-6
ORDER_RANGE = (3.6, 4.4)
SPATIAL_RATIO = 1.0 / 8.0

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAIL = 2

LOOP_ENTRY = {
    "name": "landau_lifschitz",
    "lambda": None,
    "phi": {"kind": "loop", "r": None, "form": "m = -d^-2 u on loops in so(3) = (R^3, x)"},
    "gauge": "none",
    "homogeneous": True,
    "anchor": "Landau-Lifschitz spin chain, L_t = L x L''",
    "known_invariants": list(LOOP_INVARIANTS),
}


def catalog_json() -> list[dict]:
    return [entry.to_json() for entry in eq.catalog()] + [dict(LOOP_ENTRY)]


def _fmt(value: float) -> str:
    return repr(float(value))


# single runs -----------------------------------------------------------------


@dataclass
class RunOutcome:
    config: RunConfig
    results: dict = field(default_factory=dict)  # backend name -> RunResult or LoopResult
    summary: dict = field(default_factory=dict)

    @property
    def breakdown(self) -> bool:
        return self.summary["verdict"]["status"] == ev.BREAKDOWN

    @property
    def exit_code(self) -> int:
        return EXIT_FAIL if self.breakdown else EXIT_OK


def loop_drift_report(result: ll.LoopResult) -> dict:
    norm = float(result.column("norm_deviation").max())
    energies = result.column("energy")
    means = np.array([r.mean_vector for r in result.records])
    drifts = {
        "pointwise_norm": norm,
        "energy": float(np.max(np.abs(energies - energies[0])) / max(abs(energies[0]), 1e-300)),
        "mean_vector": float(np.max(np.abs(means - means[0]))),
    }
    invariants = {
        name: {"name": name, "max_drift": value, "tolerance": LOOP_TOLERANCES[name],
               "passed": bool(value <= LOOP_TOLERANCES[name])}
        for name, value in drifts.items()
    }
    return {
        "passed": all(d["passed"] for d in invariants.values()),
        "reliable_horizon": result.records[-1].t,
        "orbit_flagged": False,
        "invariants": invariants,
    }


def _max_discrepancy(a: ev.RunResult, b: ev.RunResult) -> float:
    pairs = zip(a.trajectory, b.trajectory)
    return max((float(np.max(np.abs(x.u.values - y.u.values))) for x, y in pairs), default=0.0)


def _run_backend(cfg: RunConfig, backend: str):
    spec = cfg.catalog_entry().spec
    u0 = cfg.initial_field()
    fn = ev.integrate if backend == "eulerian" else ev.integrate_lagrangian
    return fn(spec, u0, cfg.integrator())


def _verdict_json(verdict: ev.Verdict) -> dict:
    return verdict.to_json()


def execute_run(cfg: RunConfig) -> RunOutcome:
    """Integrate ``cfg`` and assemble the summary; writes nothing."""
    outcome = RunOutcome(cfg)
    if cfg.is_loop:
        result = ll.integrate_ll(cfg.initial_field(), cfg.integrator())
        outcome.results["eulerian"] = result
        outcome.summary = {
            "equation": dict(LOOP_ENTRY),
            "backend": cfg.backend,
            "verdict": _verdict_json(result.verdict),
            "breaking_time": result.verdict.t,
            "drift_report": loop_drift_report(result),
            "sign_condition": None,
            "sign_condition_min": None,
            "records": len(result.records),
            "backend_discrepancy": None,
            "config": cfg.to_json(),
        }
        return outcome

    entry = cfg.catalog_entry()
    backends = ("eulerian", "lagrangian") if cfg.backend == "both" else (cfg.backend,)
    for name in backends:
        outcome.results[name] = _run_backend(cfg, name)
    primary = outcome.results[backends[0]]
    verdict = primary.verdict
    for result in outcome.results.values():
        if not result.verdict.completed:
            verdict = result.verdict
            break
    sign_ok, sign_min = inv.sign_condition(entry.spec, cfg.initial_field())
    discrepancy = None
    if len(backends) == 2:
        discrepancy = _max_discrepancy(outcome.results["eulerian"], outcome.results["lagrangian"])
    outcome.summary = {
        "equation": entry.to_json(),
        "backend": cfg.backend,
        "verdict": _verdict_json(verdict),
        "breaking_time": verdict.t if verdict.status == ev.BREAKDOWN else None,
        "drift_report": inv.drift_report(primary.series).to_json(),
        "sign_condition": sign_ok,
        "sign_condition_min": sign_min,
        "records": len(primary.series),
        "backend_discrepancy": discrepancy,
        "config": cfg.to_json(),
    }
    return outcome


def write_diagnostics(path: Path, series: inv.DiagnosticsSeries) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DIAGNOSTIC_COLUMNS)
        for r in series.records:
            kelvin = dict(r.kelvin)
            writer.writerow(
                [_fmt(v) for v in (
                    r.t, r.orbit_invariant_drift, r.momentum_integral, r.energy, r.mean_u,
                    r.min_phi_u, r.min_ux, r.c1_norm, r.gamma_min_deriv,
                    kelvin.get("kelvin_1", math.nan), kelvin.get("kelvin_sin1", math.nan),
                    kelvin.get("kelvin_cos1", math.nan),
                )]
            )


def write_loop_diagnostics(path: Path, result: ll.LoopResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LOOP_COLUMNS)
        for r in result.records:
            writer.writerow([_fmt(v) for v in (r.t, r.norm_deviation, r.energy, *r.mean_vector)])


def _grid_json(n: int) -> dict:
    return {"n": n, "period": 2 * math.pi, "points": "x_j = 2 pi j / n, j = 0..n-1"}


def _write_snapshots(out: Path, outcome: RunOutcome) -> None:
    snap_dir = out / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    n = outcome.config.grid_n
    for backend, result in outcome.results.items():
        if outcome.config.is_loop:
            items = [{"t": t, "grid": _grid_json(n), "L": L.values.tolist()} for t, L in result.trajectory]
        else:
            items = [
                {
                    "t": s.t,
                    "grid": _grid_json(n),
                    "u": s.u.values.tolist(),
                    "m": s.m.values.tolist(),
                    "gamma_displacement": s.flow.displacement.tolist(),
                }
                for s in result.trajectory
            ]
        for i, item in enumerate(items):
            with open(snap_dir / f"{backend}_{i:05d}.json", "w") as fh:
                json.dump(item, fh)


def write_outputs(outcome: RunOutcome, out_dir=None) -> Path:
    """Write ``diagnostics.csv``, ``summary.json`` and optional snapshots.

    With ``backend == "both"`` the Lagrangian diagnostics go to
    ``diagnostics_lagrangian.csv``.
    """
    cfg = outcome.config
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.is_loop:
        write_loop_diagnostics(out / "diagnostics.csv", outcome.results["eulerian"])
    else:
        for backend, result in outcome.results.items():
            name = "diagnostics.csv" if backend == next(iter(outcome.results)) else f"diagnostics_{backend}.csv"
            write_diagnostics(out / name, result.series)
    with open(out / "summary.json", "w") as fh:
        json.dump(outcome.summary, fh, indent=2, default=float)
        fh.write("\n")
    if cfg.emit_snapshots:
        _write_snapshots(out, outcome)
    return out


# convergence -----------------------------------------------------------------


def _final_field(cfg: RunConfig):
    """Worker: run one resolution and return its final solution samples."""
    if cfg.is_loop:
        result = ll.integrate_ll(cfg.initial_field(), cfg.integrator())
        return result.verdict.status, result.trajectory[-1][1].values
    backend = "eulerian" if cfg.backend == "both" else cfg.backend
    result = _run_backend(cfg, backend)
    return result.verdict.status, result.final.u.values


@dataclass
class ConvergenceRow:
    resolution: str
    value: float
    status: str
    error: float
    observed: float
    passed: bool


@dataclass
class ConvergenceTable:
    kind: str  # "dt" or "n"
    rows: list[ConvergenceRow]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def write_csv(self, path: Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["resolution", "value", "status", "error", "observed", "pass"])
            for r in self.rows:
                writer.writerow([r.resolution, _fmt(r.value), r.status, _fmt(r.error), _fmt(r.observed),
                                 str(r.passed).lower()])


def _coarsen(field_: np.ndarray, n: int) -> np.ndarray:
    stride = field_.shape[-1] // n
    return field_[..., ::stride]


def _map(configs: list[RunConfig], workers: int | None):
    workers = workers or min(len(configs), os.cpu_count() or 1)
    if workers <= 1:
        return [_final_field(c) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_final_field, configs))


def convergence_study(cfg: RunConfig, dts=None, ns=None, workers: int | None = None) -> ConvergenceTable:
    """Self-convergence in ``dt`` or in ``n``.

    Time: successive differences ``e_i = |u(dt_i) - u(dt_{i+1})|_inf`` over
    ``dt`` sorted coarse to fine, and observed orders
    ``log(e_i / e_{i+1}) / log(dt_i / dt_{i+1})``; each must lie in
    ``[3.6, 4.4]``.

    Space: errors against the finest grid, compared at the coarse points,
    and ratios ``e(2n) / e(n)``; each must be below ``1/8``.

    Errors that vanish at every resolution count as exact and pass.
    """
    if (dts is None) == (ns is None):
        raise ValueError("give exactly one of dts or ns")
    values = sorted(set(dts if dts is not None else ns), reverse=dts is not None)
    if len(values) < 3:
        raise ValueError("a convergence study needs at least 3 distinct resolutions")
    if dts is not None:
        configs = [cfg.with_(dt=float(v)) for v in values]
    else:
        configs = [cfg.with_(grid_n=int(v)) for v in values]
    results = _map(configs, workers)
    statuses = [s for s, _ in results]
    fields = [f for _, f in results]

    if dts is not None:
        errors = [float(np.max(np.abs(fields[i] - fields[i + 1]))) for i in range(len(values) - 1)]
        errors.append(math.nan)
        exact = all(e == 0.0 for e in errors[:-1])
        observed = [math.nan] * len(values)
        for i in range(len(values) - 2):
            if errors[i] > 0 and errors[i + 1] > 0:
                observed[i] = math.log(errors[i] / errors[i + 1]) / math.log(values[i] / values[i + 1])
        checked = range(len(values) - 2)
        ok = [exact or ORDER_RANGE[0] <= observed[i] <= ORDER_RANGE[1] for i in checked]
        kind, label = "dt", "dt={:g}"
    else:
        ref = fields[-1]
        errors = [float(np.max(np.abs(f - _coarsen(ref, v)))) for f, v in zip(fields[:-1], values[:-1])]
        errors.append(math.nan)
        exact = all(e == 0.0 for e in errors[:-1])
        observed = [math.nan] * len(values)
        for i in range(1, len(values) - 1):
            if errors[i - 1] > 0:
                observed[i] = errors[i] / errors[i - 1]
        checked = range(1, len(values) - 1)
        ok = [exact or observed[i] < SPATIAL_RATIO for i in checked]
        kind, label = "n", "n={:d}"

    passed = [True] * len(values)
    for i, flag in zip(checked, ok):
        passed[i] = bool(flag)
    rows = []
    for i, v in enumerate(values):
        good = passed[i] and statuses[i] == ev.COMPLETED
        rows.append(ConvergenceRow(label.format(v), float(v), statuses[i], errors[i], observed[i], good))
    return ConvergenceTable(kind, rows)


# backend comparison --------------------------------------------------------


@dataclass
class Comparison:
    times: list[float]
    discrepancy: list[float]
    oracle_eulerian: list[float] | None
    oracle_lagrangian: list[float] | None
    verdicts: dict

    @property
    def max_discrepancy(self) -> float:
        return max(self.discrepancy, default=0.0)

    @property
    def max_oracle_error(self) -> float | None:
        if self.oracle_eulerian is None:
            return None
        finite = [e for e in self.oracle_eulerian + self.oracle_lagrangian if math.isfinite(e)]
        return max(finite, default=0.0)

    @property
    def passed(self) -> bool:
        ok = self.max_discrepancy <= BACKEND_TOL
        if self.oracle_eulerian is not None:
            ok = ok and self.max_oracle_error <= ORACLE_TOL
        return bool(ok)

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "max_discrepancy": self.max_discrepancy,
            "tolerance": BACKEND_TOL,
            "max_oracle_error": self.max_oracle_error,
            "oracle_tolerance": ORACLE_TOL if self.oracle_eulerian is not None else None,
            "verdicts": self.verdicts,
        }

    def write_csv(self, path: Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["t", "discrepancy"]
            if self.oracle_eulerian is not None:
                header += ["oracle_error_eulerian", "oracle_error_lagrangian"]
            writer.writerow(header)
            for i, t in enumerate(self.times):
                row = [_fmt(t), _fmt(self.discrepancy[i])]
                if self.oracle_eulerian is not None:
                    row += [_fmt(self.oracle_eulerian[i]), _fmt(self.oracle_lagrangian[i])]
                writer.writerow(row)


def compare_backends(cfg: RunConfig) -> Comparison:
    """Sup-norm discrepancy between the two backends at every record.

    For ``Phi = 1`` (``u_t + (1 + lam) u u' = 0``) both backends are also
    compared with the characteristics solution, at records strictly before
    the breaking time.
    """
    if cfg.is_loop:
        raise ValueError("compare-backends applies to the scalar equations only")
    if cfg.backend != "both":
        raise ValueError("compare-backends requires backend 'both'")
    spec = cfg.catalog_entry().spec
    euler = _run_backend(cfg, "eulerian")
    lagr = _run_backend(cfg, "lagrangian")
    pairs = list(zip(euler.trajectory, lagr.trajectory))
    times = [a.t for a, _ in pairs]
    disc = [float(np.max(np.abs(a.u.values - b.u.values))) for a, b in pairs]
    oe = ol = None
    if spec.phi.kind == "sobolev" and spec.phi.r == 0:
        grid = cfg.grid()
        u0 = cfg.initial_field()
        c = 1.0 + spec.lam
        profile = lambda s: grid.interp_array(u0.values, s)  # noqa: E731
        t_break = math.inf
        slope = float(np.min(grid.deriv_array(u0.values, 1)))
        if slope < 0:
            t_break = -1.0 / (c * slope)
        oe, ol = [], []
        for a, b in pairs:
            if a.t >= t_break:
                oe.append(math.nan)
                ol.append(math.nan)
                continue
            exact = burgers_characteristics(profile, grid.points, a.t, c)
            oe.append(float(np.max(np.abs(a.u.values - exact))))
            ol.append(float(np.max(np.abs(b.u.values - exact))))
    verdicts = {"eulerian": euler.verdict.to_json(), "lagrangian": lagr.verdict.to_json()}
    return Comparison(times, disc, oe, ol, verdicts)
