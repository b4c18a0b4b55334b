"""Initial data presets and the reproducible generator behind random data.

Random data use SplitMix64, which is short enough to reimplement exactly in
any language:

.. code-block:: text

    state <- (state + 0x9E3779B97F4A7C15) mod 2**64
    z <- state
    z <- ((z xor (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2**64
    z <- ((z xor (z >> 27)) * 0x94D049BB133111EB) mod 2**64
    return z xor (z >> 31)

The initial state is the seed. A draw is mapped to ``[-1, 1)`` by
``2 * (z >> 11) * 2**-53 - 1``.

``random_bandlimited(seed, kmax, amplitude)`` draws ``a_1, b_1, a_2, b_2, ...``
in that order and returns
``amplitude * sum_k (a_k cos kx + b_k sin kx) / k``.
"""

from __future__ import annotations

import numpy as np

from .landau import LoopField, planar_loop, spin_wave, unit_field_from
from .spectral import Grid, GridFunction

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    """SplitMix64 generator on Python integers (bit-exact across platforms)."""

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """A double in ``[-1, 1)``."""
        return 2.0 * ((self.next_u64() >> 11) * 2.0**-53) - 1.0


def _bandlimited(rng: SplitMix64, x: np.ndarray, kmax: int, amplitude: float) -> np.ndarray:
    out = np.zeros_like(x)
    for k in range(1, kmax + 1):
        a, b = rng.uniform(), rng.uniform()
        out += (a * np.cos(k * x) + b * np.sin(k * x)) / k
    return amplitude * out


def constant(grid: Grid, c: float) -> GridFunction:
    return GridFunction(grid, np.full(grid.n, float(c)))


def sine(grid: Grid, a: float, k: int) -> GridFunction:
    return GridFunction(grid, a * np.sin(k * grid.points))


def mean_plus_sine(grid: Grid, c: float, a: float, k: int) -> GridFunction:
    return GridFunction(grid, c + a * np.sin(k * grid.points))


def random_bandlimited(grid: Grid, seed: int, kmax: int, amplitude: float) -> GridFunction:
    if kmax < 1 or kmax >= grid.n // 2:
        raise ValueError(f"kmax must lie in [1, {grid.n // 2 - 1}], got {kmax}")
    return GridFunction(grid, _bandlimited(SplitMix64(seed), grid.points, kmax, amplitude))


def random_unit(grid: Grid, seed: int, kmax: int = 2, amplitude: float = 0.2) -> LoopField:
    """Unit loop ``v / |v|`` with ``v = e_z + (r_x, r_y, r_z)``.

    The three perturbations are band-limited draws taken in the order
    x, y, z from one generator.
    """
    rng = SplitMix64(seed)
    x = grid.points
    v = np.stack([_bandlimited(rng, x, kmax, amplitude) for _ in range(3)])
    v[2] += 1.0
    return unit_field_from(grid, v)


SCALAR_PRESETS = {
    "constant": (constant, ("c",)),
    "sine": (sine, ("a", "k")),
    "mean_plus_sine": (mean_plus_sine, ("c", "a", "k")),
    "random_bandlimited": (random_bandlimited, ("seed", "kmax", "amplitude")),
}

LOOP_PRESETS = {
    "spin_wave": (spin_wave, ("k", "theta")),
    "planar_loop": (planar_loop, ("k",)),
    "random_unit": (random_unit, ("seed", "kmax", "amplitude")),
}

_INTEGER_ARGS = {"k", "seed", "kmax"}


def _build(table: dict, grid: Grid, spec: dict):
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValueError("initial_condition must be an object with a 'kind' field")
    kind = spec["kind"]
    if kind not in table:
        raise ValueError(f"unknown initial condition {kind!r}; valid: {', '.join(table)}")
    fn, names = table[kind]
    extra = set(spec) - set(names) - {"kind"}
    if extra:
        raise ValueError(f"unexpected parameters for {kind}: {sorted(extra)}")
    kwargs = {}
    for name in names:
        if name not in spec:
            if table is LOOP_PRESETS:
                continue  # loop presets have defaults
            raise ValueError(f"{kind} needs parameter {name!r}")
        value = spec[name]
        kwargs[name] = int(value) if name in _INTEGER_ARGS else float(value)
    return fn(grid, **kwargs)


def build_scalar(grid: Grid, spec: dict) -> GridFunction:
    """Build ``u0`` from ``{"kind": ..., <parameters>}``."""
    return _build(SCALAR_PRESETS, grid, spec)


def build_loop(grid: Grid, spec: dict) -> LoopField:
    """Build ``L0`` from ``{"kind": ..., <parameters>}``."""
    return _build(LOOP_PRESETS, grid, spec)
