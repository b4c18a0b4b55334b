"""Named members of the family ``m_t = -u m' - lam u' m``, ``m = Phi u``."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .spectral import GridFunction, InertiaOperator, apply_phi, invert_phi

NONE = "none"
FIXED_MEAN = "fixed_mean"

ORBIT = "orbit_invariant"
MOMENTUM = "momentum_integral"
ENERGY = "energy"
MEAN_U = "mean_u"
KELVIN = "kelvin"


@dataclass(frozen=True)
class EquationSpec:
    name: str
    phi: InertiaOperator
    lam: float
    gauge: str = NONE
    homogeneous: bool = False

    def __post_init__(self):
        if not np.isfinite(self.lam):
            raise ValueError(f"lambda must be finite, got {self.lam!r}")
        if self.gauge not in (NONE, FIXED_MEAN):
            raise ValueError(f"unknown gauge {self.gauge!r}")
        if self.homogeneous != self.phi.singular:
            raise ValueError("homogeneous equations are exactly those with Phi = -d^2")
        if self.homogeneous and self.gauge != FIXED_MEAN:
            raise ValueError("Phi = -d^2 needs the fixed_mean gauge")

    @property
    def is_geodesic(self) -> bool:
        """``lam == 2``: the density action is the coadjoint action."""
        return self.lam == 2


@dataclass(frozen=True)
class CatalogEntry:
    spec: EquationSpec
    anchor: str
    known_invariants: tuple[str, ...] = field(default=())

    def to_json(self) -> dict:
        phi = self.spec.phi
        return {
            "name": self.spec.name,
            "lambda": self.spec.lam,
            "phi": {"kind": phi.kind, "r": phi.r, "form": phi.describe()},
            "gauge": self.spec.gauge,
            "homogeneous": self.spec.homogeneous,
            "anchor": self.anchor,
            "known_invariants": list(self.known_invariants),
        }


_PRESETS = {
    "burgers": (InertiaOperator.sobolev(0), 2, "inviscid Burgers u_t = -3 u u' (L2 geodesic)"),
    "ch": (InertiaOperator.sobolev(1), 2, "Camassa-Holm, m = u - u''"),
    "much": (InertiaOperator.mu_minus_dxx(), 2, "mu-Camassa-Holm (muHS), m = mu(u) - u''"),
    "dp": (InertiaOperator.sobolev(1), 3, "Degasperis-Procesi, m = u - u''"),
    "mudp": (InertiaOperator.mu_minus_dxx(), 3, "mu-Degasperis-Procesi, m = mu(u) - u''"),
    "hs": (InertiaOperator.minus_dxx(), 2, "Hunter-Saxton, m = -u'' on the coset space Rot\\Diff(S1)"),
    "muburgers": (InertiaOperator.minus_dxx(), 3, "mu-Burgers, m = -u''; (u_t + u u')' = 0"),
}

PRESET_NAMES = tuple(_PRESETS) + ("sobolev(r, lambda)",)

_SOBOLEV_RE = re.compile(r"^sobolev\(\s*(\d+)\s*,\s*([-+0-9.eE]+)\s*\)$")


def known_invariants(spec: EquationSpec) -> tuple[str, ...]:
    found = [ORBIT, MOMENTUM]
    if spec.is_geodesic:
        found += [ENERGY, KELVIN]
    if spec.phi.kind == "mu" or spec.gauge == FIXED_MEAN:
        found.append(MEAN_U)
    return tuple(found)


def make_spec(name: str, phi: InertiaOperator, lam: float) -> EquationSpec:
    homogeneous = phi.singular
    return EquationSpec(name, phi, float(lam), FIXED_MEAN if homogeneous else NONE, homogeneous)


def preset(name: str, r: int | None = None, lam: float | None = None) -> CatalogEntry:
    """Look up a catalog entry by name.

    ``sobolev`` takes ``r`` and ``lam`` either as arguments or inline,
    e.g. ``"sobolev(2, 3)"``.
    """
    key = name.strip().lower()
    match = _SOBOLEV_RE.match(key)
    if match:
        key, r, lam = "sobolev", int(match.group(1)), float(match.group(2))
    if key == "sobolev":
        if r is None or lam is None:
            raise ValueError("sobolev preset needs both r and lambda")
        spec = make_spec(f"sobolev({int(r)},{float(lam):g})", InertiaOperator.sobolev(r), lam)
        anchor = f"H^{int(r)} Sobolev member, m = sum_j (-1)^j d^(2j) u, lambda = {float(lam):g}"
        return CatalogEntry(spec, anchor, known_invariants(spec))
    if key not in _PRESETS:
        raise ValueError(f"unknown preset {name!r}; valid presets: {', '.join(PRESET_NAMES)}")
    phi, lam_, anchor = _PRESETS[key]
    spec = make_spec(key, phi, lam_)
    return CatalogEntry(spec, anchor, known_invariants(spec))


def catalog() -> list[CatalogEntry]:
    return [preset(name) for name in _PRESETS]


def momentum(spec: EquationSpec, u: GridFunction) -> GridFunction:
    return apply_phi(spec.phi, u)


def velocity(spec: EquationSpec, m: GridFunction, gauge_mean: float | None = None) -> GridFunction:
    """Recover ``u`` from ``m``.

    Only the fixed-mean gauge consults ``gauge_mean``; otherwise ``m``
    determines the constant mode.
    """
    return invert_phi(spec.phi, m, gauge_mean if spec.gauge == FIXED_MEAN else None)
