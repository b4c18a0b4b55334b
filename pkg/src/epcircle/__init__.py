"""Euler-Poincare flows on the circle: m_t = -u m' - lam u' m with m = Phi u.

Fourier pseudospectral discretization with the flow map carried along. An
Eulerian momentum form and a Lagrangian flow-map ODE serve as independent
backends, and the conservation laws of the family are monitored as
diagnostics. The loop-valued case L_t = L x L'' lives in ``landau``.
"""

from .config import RunConfig, load
from .equations import EquationSpec, catalog, preset
from .evolution import IntegratorConfig, integrate, integrate_lagrangian
from .invariants import drift_report
from .landau import LoopField, integrate_ll
from .spectral import FlowMap, Grid, GridFunction, InertiaOperator

__all__ = [
    "EquationSpec",
    "FlowMap",
    "Grid",
    "GridFunction",
    "InertiaOperator",
    "IntegratorConfig",
    "LoopField",
    "RunConfig",
    "catalog",
    "drift_report",
    "integrate",
    "integrate_lagrangian",
    "integrate_ll",
    "load",
    "preset",
]
__version__ = "0.1.0"
