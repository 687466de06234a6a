"""Problem data: flux, advecting field, initial density, and presets.

A spec must satisfy the standing hypothesis "div b in L^inf and f' in L^inf,
or div b = 0".  Since solutions never leave |v| <= N, the f' bound is taken
over the solver's velocity range rather than all of R.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError
from .fields import DensityField
from .grids import SpatialGrid

Array = np.ndarray


@dataclass
class ProblemSpec:
    """Data (f, f', b, div b, rho0) with structural flags.

    ``b`` maps points of shape (..., dim) to vectors of the same shape;
    ``div_b`` maps them to scalars (...,).  ``rho0`` maps a SpatialGrid to a
    value array.  ``div_b_sup`` must be a correct upper bound on |div b|
    (0 for divergence-free fields); it enters the growth rate C0.
    """

    name: str
    dim: int
    f: Callable[[Array], Array]
    f_prime: Callable[[Array], Array]
    b: Callable[[Array], Array]
    div_b: Callable[[Array], Array]
    rho0: Callable[[SpatialGrid], Array]
    div_free: bool
    f_prime_bounded: bool
    div_b_sup: float = 0.0
    b_sup: Optional[float] = None
    linear_flux: bool = False

    def __post_init__(self):
        if self.div_free and self.div_b_sup != 0.0:
            raise ConfigurationError("div_free spec must declare div_b_sup = 0")
        if not self.div_free and not self.f_prime_bounded:
            raise ConfigurationError(
                "hypothesis violated: need div b = 0, or bounded f' with div b in L^inf"
            )
        if not self.div_free and self.div_b_sup <= 0.0:
            raise ConfigurationError("non-div-free spec must declare div_b_sup > 0")

    def f_prime_sup(self, v_bound: float) -> float:
        """sup |f'| over [-v_bound, v_bound], by dense sampling."""
        v = np.linspace(-v_bound, v_bound, 4097)
        return float(np.max(np.abs(self.f_prime(v))))

    def growth_rate(self, v_bound: float) -> float:
        """C0 = ||f'||_inf * ||div b||_inf (zero for divergence-free b)."""
        if self.div_free:
            return 0.0
        return self.f_prime_sup(v_bound) * self.div_b_sup

    def b_on_grid(self, grid: SpatialGrid) -> Array:
        """b evaluated at all cell centers, shape (*grid.shape, dim)."""
        return np.asarray(self.b(grid.centers()), dtype=float)

    def b_sup_on_grid(self, grid: SpatialGrid) -> float:
        if self.b_sup is not None:
            return self.b_sup
        bg = self.b_on_grid(grid)
        return float(np.max(np.linalg.norm(bg, axis=-1))) if bg.size else 0.0

    def initial_field(self, grid: SpatialGrid) -> DensityField:
        if grid.dim != self.dim:
            raise ConfigurationError(
                f"spec is {self.dim}-dimensional but grid is {grid.dim}-dimensional"
            )
        return DensityField(grid, np.asarray(self.rho0(grid), dtype=float))

    def with_initial(self, rho0: Callable[[SpatialGrid], Array], name=None) -> "ProblemSpec":
        out = ProblemSpec(
            name=name or self.name,
            dim=self.dim,
            f=self.f,
            f_prime=self.f_prime,
            b=self.b,
            div_b=self.div_b,
            rho0=rho0,
            div_free=self.div_free,
            f_prime_bounded=self.f_prime_bounded,
            div_b_sup=self.div_b_sup,
            b_sup=self.b_sup,
            linear_flux=self.linear_flux,
        )
        return out


# ---------------------------------------------------------------------------
# flux presets

def burgers_flux():
    return (lambda r: 0.5 * r * r), (lambda r: np.asarray(r, dtype=float)), False


def linear_flux():
    return (lambda r: np.asarray(r, dtype=float)), (lambda r: np.ones_like(np.asarray(r, dtype=float))), True


# ---------------------------------------------------------------------------
# advecting-field presets

def constant_field(c):
    """b identically equal to the vector c (divergence free)."""
    c = np.atleast_1d(np.asarray(c, dtype=float))

    def b(x):
        return np.broadcast_to(c, x.shape).copy()

    def div_b(x):
        return np.zeros(x.shape[:-1])

    return b, div_b, float(np.linalg.norm(c))


def tanh_field_1d(amplitude=1.0, width=1.0):
    """1D b(x) = a tanh(x/w): bounded, Holder, div b = (a/w) sech^2 in L^inf."""

    def b(x):
        return amplitude * np.tanh(x / width)

    def div_b(x):
        return (amplitude / width) / np.cosh(x[..., 0] / width) ** 2

    return (lambda x: b(x)), div_b, abs(amplitude / width)


def shear_field_2d(amplitude=1.0, width=1.0):
    """2D divergence-free shear b(x, y) = (a tanh(y/w), 0)."""

    def b(x):
        out = np.zeros_like(x)
        out[..., 0] = amplitude * np.tanh(x[..., 1] / width)
        return out

    def div_b(x):
        return np.zeros(x.shape[:-1])

    return b, div_b


# ---------------------------------------------------------------------------
# initial-data presets (generators taking a SpatialGrid)

def riemann_data(left=1.0, right=0.0, x0=0.0):
    """1D jump from `left` to `right` at x0."""

    def gen(grid: SpatialGrid):
        x = grid.axis_centers()
        return np.where(x < x0, left, right)

    return gen


def plateau_data(height=1.0, a=-1.0, b=0.0):
    """1D indicator of [a, b] scaled by height (compactly supported)."""

    def gen(grid: SpatialGrid):
        x = grid.axis_centers()
        return np.where((x >= a) & (x <= b), height, 0.0)

    return gen


def bump_data(center=0.0, width=1.0, amplitude=1.0):
    """cos^2 bump supported on |x - center| <= width (1D or radial 2D)."""

    def gen(grid: SpatialGrid):
        pts = grid.centers()
        ctr = np.full(grid.dim, center) if np.isscalar(center) else np.asarray(center)
        r = np.linalg.norm(pts - ctr, axis=-1)
        out = np.zeros(grid.shape)
        m = r < width
        out[m] = amplitude * np.cos(0.5 * np.pi * r[m] / width) ** 2
        return out

    return gen


def random_bv_data(seed, pieces=8, amplitude=1.0, support=(-1.0, 1.0), floor=0.0):
    """Seeded 1D piecewise-constant profile on `support`, zero outside.

    Values are drawn in [floor, floor + amplitude]; useful for ordered pairs
    (same seed, different floor) and Holder-fit data.
    """

    def gen(grid: SpatialGrid):
        if grid.dim != 1:
            raise ConfigurationError("random_bv preset is 1D")
        rng = np.random.default_rng(seed)
        levels = floor + amplitude * rng.random(pieces)
        x = grid.axis_centers()
        lo, hi = support
        idx = np.floor((x - lo) / (hi - lo) * pieces).astype(int)
        inside = (idx >= 0) & (idx < pieces)
        out = np.zeros(grid.shape)
        out[inside] = levels[idx[inside]]
        return out

    return gen


def constant_data(value=1.0):
    def gen(grid: SpatialGrid):
        return np.full(grid.shape, float(value))

    return gen


# ---------------------------------------------------------------------------
# assembled spec presets

def make_spec(name, dim, flux, field_parts, rho0, div_free, div_b_sup=0.0, b_sup=None):
    f, f_prime, linear = flux
    b, div_b = field_parts[0], field_parts[1]
    return ProblemSpec(
        name=name,
        dim=dim,
        f=f,
        f_prime=f_prime,
        b=b,
        div_b=div_b,
        rho0=rho0,
        div_free=div_free,
        f_prime_bounded=True,
        div_b_sup=div_b_sup,
        b_sup=b_sup,
        linear_flux=linear,
    )


def burgers_const_1d(rho0, c=1.0, name="burgers-const"):
    """Burgers flux with constant b (the x-independent-flux regime)."""
    b, div_b, bs = constant_field([c])
    return make_spec(name, 1, burgers_flux(), (b, div_b), rho0, True, b_sup=bs)


def linear_const_1d(rho0, c=1.0, name="linear-const"):
    b, div_b, bs = constant_field([c])
    return make_spec(name, 1, linear_flux(), (b, div_b), rho0, True, b_sup=bs)


def burgers_tanh_1d(rho0, amplitude=1.0, width=1.0, name="burgers-tanh"):
    b, div_b, dbs = tanh_field_1d(amplitude, width)
    return make_spec(name, 1, burgers_flux(), (b, div_b), rho0, False,
                     div_b_sup=dbs, b_sup=abs(amplitude))
