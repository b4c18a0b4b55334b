"""Fourier calculus on the periodic grid [0, 2*pi).

Fields are sampled at ``x_j = 2*pi*j/n``. Wavenumbers are integers, so the
derivative symbol is ``(ik)**order`` with no length rescaling. All objects
here are immutable and every operation is a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

SINGULAR_TOL = 1e-8
INVERSE_TOL = 1e-12
COMPOSITION_TOL = 1e-10
NEWTON_MAXITER = 100


class GaugeError(ValueError):
    """Momentum has a constant mode that ``-d^2`` cannot produce."""


class DegenerateFlowError(ValueError):
    """The circle map is not orientation preserving."""


class InversionError(RuntimeError):
    """Newton inversion of a circle map failed to converge."""


def _check_finite(values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite field")


@dataclass(frozen=True)
class Grid:
    """Uniform grid of ``n`` points on the circle of length 2*pi."""

    n: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 8 or self.n % 2:
            raise ValueError(f"grid size must be an even integer >= 8, got {self.n!r}")

    @cached_property
    def points(self) -> np.ndarray:
        x = 2.0 * np.pi * np.arange(self.n) / self.n
        x.setflags(write=False)
        return x

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Nonnegative wavenumbers of the real FFT, ``0..n/2``."""
        k = np.arange(self.n // 2 + 1, dtype=float)
        k.setflags(write=False)
        return k

    @cached_property
    def ik(self) -> np.ndarray:
        """First-derivative symbol with the Nyquist mode dropped."""
        ik = 1j * self.wavenumbers
        ik[-1] = 0.0
        ik.setflags(write=False)
        return ik

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        mask = self.wavenumbers <= self.n / 3.0
        mask.setflags(write=False)
        return mask

    def function(self, values) -> GridFunction:
        return GridFunction(self, values)

    def sample(self, f) -> GridFunction:
        """Sample a callable ``f(x)`` on the grid points."""
        return GridFunction(self, np.broadcast_to(f(self.points), (self.n,)))

    # Array-level kernels. The public functions below wrap these; the
    # integrators call them directly to avoid boxing every stage.

    def deriv_hat(self, fhat: np.ndarray, order: int) -> np.ndarray:
        out = fhat * (1j * self.wavenumbers) ** order
        if order % 2:
            out[..., -1] = 0.0
        return out

    def deriv_array(self, f: np.ndarray, order: int = 1) -> np.ndarray:
        return np.fft.irfft(self.deriv_hat(np.fft.rfft(f), order), self.n)

    def dealias_array(self, f: np.ndarray) -> np.ndarray:
        fhat = np.fft.rfft(f)
        fhat[..., ~self.dealias_mask] = 0.0
        return np.fft.irfft(fhat, self.n)

    def interp_array(self, f: np.ndarray, targets) -> np.ndarray:
        """Evaluate the trigonometric interpolant of ``f`` at ``targets``.

        ``f`` may be a stack of fields with shape ``(..., n)``; the result has
        shape ``(..., len(targets))``.
        """
        return self.interp_hat(np.fft.rfft(np.asarray(f, dtype=float), axis=-1), targets)

    def interp_hat(self, fhat: np.ndarray, targets) -> np.ndarray:
        """Like :meth:`interp_array` but from the real-FFT spectrum.

        Powers ``z^k`` of ``z = exp(i t)`` are split as ``z^(a*nb + b)`` so each
        target needs about ``2*sqrt(n/2)`` complex powers instead of ``n/2``.
        """
        targets = np.asarray(targets, dtype=float)
        nk = self.n // 2 + 1
        nb = int(np.ceil(np.sqrt(nk)))
        na = -(-nk // nb)
        lead = fhat.shape[:-1]
        blocks = np.zeros(lead + (na * nb,), dtype=complex)
        blocks[..., :nk] = fhat
        blocks[..., 1 : nk - 1] *= 2.0
        # symmetric Nyquist term: Re(c) cos(n x / 2)
        blocks[..., nk - 1] = blocks[..., nk - 1].real
        blocks /= self.n
        blocks = blocks.reshape(lead + (na, nb))

        t = np.mod(targets.ravel(), 2.0 * np.pi)
        z = np.exp(1j * t)
        baby = np.empty((t.size, nb), dtype=complex)
        baby[:, 0] = 1.0
        baby[:, 1:] = z[:, None]
        np.cumprod(baby, axis=1, out=baby)
        giant = np.empty((t.size, na), dtype=complex)
        giant[:, 0] = 1.0
        giant[:, 1:] = np.exp(1j * nb * t)[:, None]
        np.cumprod(giant, axis=1, out=giant)

        inner = baby @ np.swapaxes(blocks, -1, -2)  # (..., targets, na)
        values = np.sum(giant * inner, axis=-1).real
        return values.reshape(lead + targets.shape)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real samples of a periodic field on ``grid``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {values.shape}")
        _check_finite(values)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.grid.n

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


_SYMBOL_CACHE: dict = {}


@dataclass(frozen=True)
class InertiaOperator:
    """Fourier multiplier ``Phi`` defining the Lagrangian ``0.5 * int(u Phi u)``.

    ``kind`` is one of ``"sobolev"`` (``sum_j (-1)^j d^{2j}``, order ``r``),
    ``"mu"`` (``mu - d^2``, unit weight on the mean mode) or ``"minus_dxx"``
    (``-d^2``, singular on constants).
    """

    kind: str
    r: int = 0

    KINDS = ("sobolev", "mu", "minus_dxx")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown inertia operator kind {self.kind!r}")
        if self.kind == "sobolev" and (int(self.r) != self.r or self.r < 0):
            raise ValueError(f"Sobolev order must be a nonnegative integer, got {self.r!r}")

    @classmethod
    def sobolev(cls, r: int) -> InertiaOperator:
        return cls("sobolev", int(r))

    @classmethod
    def mu_minus_dxx(cls) -> InertiaOperator:
        return cls("mu", 1)

    @classmethod
    def minus_dxx(cls) -> InertiaOperator:
        return cls("minus_dxx", 1)

    @property
    def singular(self) -> bool:
        return self.kind == "minus_dxx"

    def symbol(self, k) -> np.ndarray:
        k2 = np.asarray(k, dtype=float) ** 2
        if self.kind == "sobolev":
            return sum(k2**j for j in range(self.r + 1)) * np.ones_like(k2)
        p = k2.copy()
        if self.kind == "mu":
            p[k2 == 0] = 1.0
        return p

    def symbol_on(self, grid: Grid) -> np.ndarray:
        """Symbol on ``grid.wavenumbers`` (cached; read-only)."""
        key = (self, grid.n)
        p = _SYMBOL_CACHE.get(key)
        if p is None:
            p = self.symbol(grid.wavenumbers)
            p.setflags(write=False)
            _SYMBOL_CACHE[key] = p
        return p

    def describe(self) -> str:
        if self.kind == "sobolev":
            if self.r == 0:
                return "identity"
            return " + ".join(["1"] + [f"(-1)^{j} d^{2 * j}" for j in range(1, self.r + 1)])
        return "mu - d^2" if self.kind == "mu" else "-d^2"


@dataclass(frozen=True, eq=False)
class FlowMap:
    """Circle diffeomorphism stored as ``gamma(x) - x`` and ``gamma'(x)``."""

    grid: Grid
    displacement: np.ndarray
    derivative: np.ndarray

    def __post_init__(self):
        for name in ("displacement", "derivative"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (self.grid.n,):
                raise ValueError(f"{name}: expected {self.grid.n} samples, got {arr.shape}")
            _check_finite(arr)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def identity(cls, grid: Grid) -> FlowMap:
        return cls(grid, np.zeros(grid.n), np.ones(grid.n))

    @classmethod
    def from_displacement(cls, grid: Grid, displacement) -> FlowMap:
        """Build a flow map, computing ``gamma'`` spectrally."""
        d = np.asarray(displacement, dtype=float)
        return cls(grid, d, 1.0 + grid.deriv_array(d, 1))

    @property
    def values(self) -> np.ndarray:
        """Lift ``gamma(x_j)`` (not reduced mod 2*pi)."""
        return self.grid.points + self.displacement

    @property
    def min_derivative(self) -> float:
        return float(self.derivative.min())

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x + self.grid.interp_array(self.displacement, x)


def _same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise ValueError(f"grid mismatch: n={a.n} vs n={b.n}")


def deriv(f: GridFunction, order: int = 1) -> GridFunction:
    """Spectral derivative; the Nyquist mode is dropped for odd orders."""
    if order < 1 or order > 4:
        raise ValueError(f"derivative order must be in 1..4, got {order}")
    _check_finite(f.values)
    return GridFunction(f.grid, f.grid.deriv_array(f.values, order))


def apply_phi(op: InertiaOperator, u: GridFunction) -> GridFunction:
    grid = u.grid
    uhat = np.fft.rfft(u.values) * op.symbol_on(grid)
    return GridFunction(grid, np.fft.irfft(uhat, grid.n))


def invert_phi_hat(
    op: InertiaOperator,
    grid: Grid,
    mhat: np.ndarray,
    gauge_mean: float | None = None,
    scale: float | None = None,
    tol: float = SINGULAR_TOL,
) -> np.ndarray:
    """Spectral core of :func:`invert_phi`; ``scale`` is ``|m|_inf`` (needed for ``-d^2``)."""
    n = grid.n
    mean_m = mhat[0].real / n
    if op.singular:
        if abs(mean_m) > tol * scale:
            raise GaugeError(
                f"momentum outside the invertible complement: mean {mean_m:.3e} "
                f"exceeds {tol:g} * |m|_inf = {tol * scale:.3e}"
            )
        if gauge_mean is None:
            raise GaugeError("inverting -d^2 requires a gauge mean")
        target = float(gauge_mean)
    else:
        target = mean_m / op.symbol(np.zeros(1))[0]
        if gauge_mean is not None and abs(gauge_mean - target) > tol * max(1.0, abs(target)):
            raise GaugeError(
                f"gauge mean {gauge_mean!r} inconsistent with momentum (implied mean {target!r})"
            )
    p = op.symbol_on(grid)
    uhat = np.empty_like(mhat)
    uhat[1:] = mhat[1:] / p[1:]
    uhat[0] = target * n
    return uhat


def invert_phi_array(
    op: InertiaOperator,
    grid: Grid,
    m: np.ndarray,
    gauge_mean: float | None = None,
    tol: float = SINGULAR_TOL,
    scale: float | None = None,
) -> np.ndarray:
    """Array form of :func:`invert_phi`.

    ``scale`` overrides ``|m|_inf`` as the reference for the zero-mean check,
    for right-hand sides formed by cancellation of larger terms.
    """
    if scale is None and op.singular:
        scale = float(np.max(np.abs(m)))
    uhat = invert_phi_hat(op, grid, np.fft.rfft(m), gauge_mean, scale, tol)
    return np.fft.irfft(uhat, grid.n)


def invert_phi(op: InertiaOperator, m: GridFunction, gauge_mean: float | None = None) -> GridFunction:
    """Solve ``Phi u = m``.

    For ``-d^2`` the constant mode of ``u`` is the gauge choice ``gauge_mean``
    and ``m`` must have (numerically) zero mean. For the invertible kinds the
    mean is fixed by ``m``; a supplied ``gauge_mean`` is checked against it.
    """
    return GridFunction(m.grid, invert_phi_array(op, m.grid, m.values, gauge_mean))


def interp(f: GridFunction, targets) -> np.ndarray:
    """Trigonometric interpolation of ``f`` at arbitrary points (taken mod 2*pi)."""
    targets = np.asarray(targets, dtype=float)
    if not np.all(np.isfinite(targets)):
        raise ValueError("non-finite interpolation target")
    return f.grid.interp_array(f.values, targets)


def dealias(f: GridFunction) -> GridFunction:
    """Zero every Fourier mode with ``|k| > n/3``."""
    return GridFunction(f.grid, f.grid.dealias_array(f.values))


def mean(f: GridFunction) -> float:
    """Grid mean ``(1/n) sum f_j``; the integral over the circle is ``2*pi`` times this."""
    return float(np.mean(f.values))


def integral(f) -> float:
    values = np.asarray(f, dtype=float)
    return float(2.0 * np.pi * np.mean(values))


def invert_circle_map_samples(
    grid: Grid,
    displacement: np.ndarray,
    derivative: np.ndarray,
    targets: np.ndarray,
    tol: float = INVERSE_TOL,
    maxiter: int = NEWTON_MAXITER,
) -> tuple[np.ndarray, np.ndarray]:
    """Solve ``y + d(y) = x`` for each target ``x``; return ``(y, gamma'(y))``.

    Safeguarded Newton: each iterate is kept inside a bracket on the monotone
    lift and replaced by the bracket midpoint whenever Newton leaves it.
    """
    if float(np.min(derivative)) <= 0.0:
        raise DegenerateFlowError("not a diffeomorphism: min gamma' <= 0")
    x = np.asarray(targets, dtype=float)
    dprime = derivative - 1.0
    # grid extremes of d can undershoot the continuous ones; pad generously
    pad = 0.5 * (displacement.max() - displacement.min()) + 1e-3
    lo = x - displacement.max() - pad
    hi = x - displacement.min() + pad
    # first-order guess y = x - d(x)
    y = np.clip(x - grid.interp_array(displacement, x), lo, hi)
    for _ in range(maxiter):
        d_y, dp_y = grid.interp_array(np.stack([displacement, dprime]), y)
        g = y + d_y - x
        gp = 1.0 + dp_y
        lo = np.where(g < 0.0, y, lo)
        hi = np.where(g > 0.0, y, hi)
        step = g / np.where(gp > 0.0, gp, np.inf)
        y_new = y - step
        outside = (y_new <= lo) | (y_new >= hi) | (gp <= 0.0)
        y_new = np.where(outside, 0.5 * (lo + hi), y_new)
        converged = np.max(np.abs(y_new - y)) <= tol
        y = y_new
        if converged:
            break
    else:
        g = y + grid.interp_array(displacement, y) - x
        raise InversionError(
            f"circle-map inversion did not converge in {maxiter} iterations; "
            f"worst residual {np.max(np.abs(g)):.3e}"
        )
    gp = 1.0 + grid.interp_array(dprime, y)
    return y, gp


def invert_circle_map(g: FlowMap) -> FlowMap:
    """Return ``gamma^{-1}`` sampled on the grid.

    The derivative of the inverse is ``1 / gamma'(gamma^{-1}(x))``.
    """
    grid = g.grid
    if g.min_derivative <= 0.0:
        raise DegenerateFlowError(f"not a diffeomorphism: min gamma' = {g.min_derivative:.3e}")
    x = grid.points
    y, gp = invert_circle_map_samples(grid, g.displacement, g.derivative, x)
    if np.any(gp <= 0.0):
        raise DegenerateFlowError("not a diffeomorphism: interpolated gamma' <= 0")
    residual = np.max(np.abs(y + grid.interp_array(g.displacement, y) - x))
    if residual > COMPOSITION_TOL:
        raise InversionError(f"composition residual {residual:.3e} exceeds {COMPOSITION_TOL:g}")
    return FlowMap(grid, y - x, 1.0 / gp)
