"""Conserved quantities and monitored criteria for the circle flows.

Along a solution with flow map ``gamma`` the density
``(m o gamma) * gamma'**lam`` equals ``m0`` for all time. For ``lam == 2``
this is the coadjoint orbit invariant and the pairings
``<m, Ad_gamma xi0>`` (Kelvin quantities) are constant as well.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import equations as eq
from .spectral import (
    DegenerateFlowError,
    FlowMap,
    GridFunction,
    InversionError,
    apply_phi,
    integral,
    invert_circle_map,
)

SIGN_TOL = 1e-12
RELIABLE_ORBIT_DRIFT = 1e-4

TOLERANCES = {
    eq.ORBIT: 1e-5,
    eq.MOMENTUM: 1e-10,
    eq.ENERGY: 1e-8,
    eq.KELVIN: 1e-8,
    eq.MEAN_U: 1e-10,
}


@dataclass(frozen=True)
class KelvinProbe:
    """A named test field ``xi0`` for the Kelvin quantity."""

    name: str
    k: int
    kind: str  # "const", "sin" or "cos"

    def sample(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "const":
            return np.ones_like(x)
        return np.sin(self.k * x) if self.kind == "sin" else np.cos(self.k * x)


DEFAULT_PROBES = (
    KelvinProbe("kelvin_1", 0, "const"),
    KelvinProbe("kelvin_sin1", 1, "sin"),
    KelvinProbe("kelvin_cos1", 1, "cos"),
)


def basis_probes(kmax: int = 4) -> tuple[KelvinProbe, ...]:
    probes = [KelvinProbe("kelvin_1", 0, "const")]
    for k in range(1, kmax + 1):
        probes += [KelvinProbe(f"kelvin_sin{k}", k, "sin"), KelvinProbe(f"kelvin_cos{k}", k, "cos")]
    return tuple(probes)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    orbit_invariant_drift: float
    kelvin: tuple[tuple[str, float], ...]
    momentum_integral: float
    energy: float
    mean_u: float
    min_phi_u: float
    min_ux: float
    c1_norm: float
    gamma_min_deriv: float

    def kelvin_value(self, name: str) -> float:
        return dict(self.kelvin)[name]


@dataclass
class DiagnosticsSeries:
    spec: eq.EquationSpec
    records: list[DiagnosticsRecord] = field(default_factory=list)

    def append(self, record: DiagnosticsRecord) -> None:
        if self.records and record.t <= self.records[-1].t:
            raise ValueError(f"records must have increasing t ({record.t} after {self.records[-1].t})")
        self.records.append(record)

    def column(self, name: str) -> np.ndarray:
        if name.startswith("kelvin_"):
            return np.array([r.kelvin_value(name) for r in self.records])
        return np.array([getattr(r, name) for r in self.records])

    @property
    def times(self) -> np.ndarray:
        return self.column("t")

    def __len__(self):
        return len(self.records)


def orbit_invariant(spec: eq.EquationSpec, m: GridFunction, flow: FlowMap) -> GridFunction:
    """``x -> m(gamma(x)) * gamma'(x)**lam``."""
    if flow.min_derivative <= 0.0:
        raise DegenerateFlowError(f"flow map degenerate: min gamma' = {flow.min_derivative:.3e}")
    grid = m.grid
    if not np.any(flow.displacement):
        m_at_gamma = m.values  # identity map: no interpolation round-off
    else:
        m_at_gamma = grid.interp_array(m.values, flow.values)
    return GridFunction(grid, m_at_gamma * flow.derivative**spec.lam)


def orbit_drift(spec: eq.EquationSpec, m: GridFunction, flow: FlowMap, m0: GridFunction) -> float:
    """Relative sup-norm distance of the transported density from ``m0``."""
    density = orbit_invariant(spec, m, flow).values
    return float(np.max(np.abs(density - m0.values)) / max(np.max(np.abs(m0.values)), 1e-300))


def kelvin_quantity(
    spec: eq.EquationSpec,
    m: GridFunction,
    flow: FlowMap,
    xi0: GridFunction,
    inverse: FlowMap | None = None,
) -> float:
    """``int m * (xi0 o gamma^-1) * (gamma' o gamma^-1) dx``.

    Conserved only for ``lam == 2``; for other weights the value is still
    computed but carries no conservation meaning.
    """
    if inverse is None:
        inverse = invert_circle_map(flow)
    grid = m.grid
    y = inverse.values
    xi_back, gp_back = grid.interp_array(np.stack([xi0.values, flow.derivative]), y)
    return integral(m.values * xi_back * gp_back)


def momentum_integral(m: GridFunction) -> float:
    return integral(m.values)


def energy(spec: eq.EquationSpec, u: GridFunction) -> float:
    """``0.5 * int u Phi u dx``."""
    return 0.5 * integral(u.values * apply_phi(spec.phi, u).values)


def c1_norm(u: GridFunction) -> float:
    ux = u.grid.deriv_array(u.values, 1)
    return float(np.max(np.abs(u.values)) + np.max(np.abs(ux)))


def min_field(f: GridFunction) -> float:
    return float(np.min(f.values))


def sign_condition(spec: eq.EquationSpec, u0: GridFunction) -> tuple[bool, float]:
    """Check ``Phi u0 >= 0`` on the grid, up to a relative round-off allowance."""
    m0 = apply_phi(spec.phi, u0).values
    lo = float(m0.min())
    return bool(lo >= -SIGN_TOL * float(np.max(np.abs(m0)))), lo


def make_record(
    spec: eq.EquationSpec,
    t: float,
    u: GridFunction,
    m: GridFunction,
    flow: FlowMap,
    m0: GridFunction,
    probes=DEFAULT_PROBES,
    particle_ux: np.ndarray | None = None,
) -> DiagnosticsRecord:
    """Diagnostics of one state.

    ``particle_ux`` holds extra samples of ``u'`` at the particle positions;
    ``min_ux`` and ``c1_norm`` are taken over grid and particle samples.
    """
    grid = u.grid
    ux = grid.deriv_array(u.values, 1)
    if particle_ux is not None:
        ux = np.concatenate([ux, particle_ux])
    try:
        inverse = invert_circle_map(flow)
        x = grid.points
        kelvin = tuple(
            (p.name, kelvin_quantity(spec, m, flow, GridFunction(grid, p.sample(x)), inverse))
            for p in probes
        )
    except (DegenerateFlowError, InversionError):
        kelvin = tuple((p.name, float("nan")) for p in probes)
    try:
        drift = orbit_drift(spec, m, flow, m0)
    except DegenerateFlowError:
        drift = float("nan")
    return DiagnosticsRecord(
        t=float(t),
        orbit_invariant_drift=drift,
        kelvin=kelvin,
        momentum_integral=momentum_integral(m),
        energy=0.5 * integral(u.values * m.values),
        mean_u=float(np.mean(u.values)),
        min_phi_u=min_field(m),
        min_ux=float(ux.min()),
        c1_norm=float(np.max(np.abs(u.values)) + np.max(np.abs(ux))),
        gamma_min_deriv=flow.min_derivative,
    )


@dataclass(frozen=True)
class InvariantDrift:
    name: str
    max_drift: float
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class DriftReport:
    invariants: tuple[InvariantDrift, ...]
    reliable_horizon: float
    orbit_flagged: bool

    @property
    def passed(self) -> bool:
        return all(d.passed for d in self.invariants)

    def get(self, name: str) -> InvariantDrift:
        for d in self.invariants:
            if d.name == name:
                return d
        raise KeyError(name)

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "reliable_horizon": self.reliable_horizon,
            "orbit_flagged": self.orbit_flagged,
            "invariants": {d.name: asdict(d) for d in self.invariants},
        }


def _relative(values: np.ndarray, scale: float) -> float:
    if values.size == 0:
        return 0.0
    return float(np.max(np.abs(values - values[0]))) / scale


def drift_report(series: DiagnosticsSeries, tolerances: dict | None = None) -> DriftReport:
    """Maximum drift of each invariant the equation is known to conserve.

    Drifts are measured up to the reliable horizon: the last record whose
    orbit drift is below ``RELIABLE_ORBIT_DRIFT``. Past that point a breaking
    solution is no longer classical and its records are not judged.
    """
    if not series.records:
        raise ValueError("empty diagnostics series")
    tol = dict(TOLERANCES)
    tol.update(tolerances or {})
    orbit = series.column("orbit_invariant_drift")
    ok = np.isfinite(orbit) & (orbit < RELIABLE_ORBIT_DRIFT)
    bad = np.flatnonzero(~ok)
    last = len(orbit) if bad.size == 0 else int(bad[0])
    last = max(last, 1)
    records = series.records[:last]
    horizon = records[-1].t
    sub = DiagnosticsSeries(series.spec, list(records))

    drifts = []
    for name in eq.known_invariants(series.spec):
        if name == eq.ORBIT:
            value = float(np.max(sub.column("orbit_invariant_drift")))
        elif name == eq.MOMENTUM:
            col = sub.column("momentum_integral")
            value = _relative(col, 1.0 + abs(col[0]))
        elif name == eq.ENERGY:
            col = sub.column("energy")
            value = _relative(col, max(abs(col[0]), 1e-300))
        elif name == eq.MEAN_U:
            value = _relative(sub.column("mean_u"), 1.0)
        elif name == eq.KELVIN:
            value = 0.0
            for probe, _ in records[0].kelvin:
                col = sub.column(probe)
                value = max(value, _relative(col, 1.0 + abs(col[0])))
        else:  # pragma: no cover - catalog and report are kept in sync
            raise KeyError(name)
        drifts.append(InvariantDrift(name, value, tol[name], bool(value <= tol[name])))
    return DriftReport(tuple(drifts), float(horizon), bool(bad.size > 0))
