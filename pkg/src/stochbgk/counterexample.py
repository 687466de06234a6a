"""The explicit 2D transport flow with an inverse-square-root gradient blow-up,
its closed-form solution, and the deterministic-vs-noisy BV refinement study.

The advecting field is b(x, y) = (0, b1(x) b2(y)) with
b1 = sqrt(x) on [0, 1], 1/sqrt(x) beyond, and b2 = y / (1 + y^2) on y >= 0.
The flow leaves x frozen and moves y along
Y(t, x, y) = g^{-1}(g(y) e^{2 b1(x) t}) with g(y) = e^{y^2} y^2, so the pure
transport solution is available in closed form and can be sampled with no
discretization error beyond pointwise evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError
from .fields import DensityField, discrete_bv
from .grids import SpatialGrid
from .problem import ProblemSpec, linear_flux


def b1(x):
    """sqrt(x) on [0,1], x^(-1/2) on (1, inf), zero for x < 0."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    mid = (x >= 0) & (x <= 1)
    out[mid] = np.sqrt(x[mid])
    far = x > 1
    out[far] = 1.0 / np.sqrt(x[far])
    return out


def b1_prime(x):
    """Derivative of b1 where defined (used by the commutator envelope)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    mid = (x > 0) & (x <= 1)
    out[mid] = 0.5 / np.sqrt(x[mid])
    far = x > 1
    out[far] = -0.5 * x[far] ** -1.5
    return out


def b2(y):
    """y / (1 + y^2) for y >= 0, zero below."""
    y = np.asarray(y, dtype=float)
    return np.where(y >= 0, y / (1.0 + y * y), 0.0)


def b2_prime(y):
    """(1 - y^2) / (1 + y^2)^2 for y >= 0, zero below; range [-1/8, 1]."""
    y = np.asarray(y, dtype=float)
    val = (1.0 - y * y) / (1.0 + y * y) ** 2
    return np.where(y >= 0, val, 0.0)


def g(y):
    """g(y) = e^{y^2} y^2, strictly increasing on [0, inf), g(0) = 0."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ConfigurationError("g is defined for y >= 0")
    return np.exp(y * y) * y * y


def g_inverse(w):
    """Inverse of g on [0, inf): bracketed bisection plus Newton polish.

    The bracket seed uses g(y) >= y^2, so the root lies in [0, sqrt(w)];
    for w > e the solve runs on log g(y) = y^2 + 2 log y to avoid overflow.
    Accurate to |g(y) - w| <= 1e-12 max(1, w).
    """
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise ConfigurationError("g_inverse is defined for w >= 0")
    scalar = w.ndim == 0
    w = np.atleast_1d(w)
    out = np.zeros_like(w)

    small = (w > 0) & (w <= math.e)
    if np.any(small):
        ws = w[small]
        lo = np.zeros_like(ws)
        hi = np.sqrt(ws)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            below = np.exp(mid * mid) * mid * mid < ws
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        y = 0.5 * (lo + hi)
        for _ in range(3):
            gy = np.exp(y * y) * y * y
            gp = 2.0 * y * np.exp(y * y) * (1.0 + y * y)
            y = np.where(gp > 0, y - (gy - ws) / np.where(gp > 0, gp, 1.0), y)
        out[small] = np.maximum(y, 0.0)

    large = w > math.e
    if np.any(large):
        lw = np.log(w[large])
        lo = np.ones_like(lw)
        hi = np.sqrt(lw)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            below = mid * mid + 2.0 * np.log(mid) < lw
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        y = 0.5 * (lo + hi)
        for _ in range(3):
            phi = y * y + 2.0 * np.log(y) - lw
            y = y - phi / (2.0 * y + 2.0 / y)
        out[large] = y

    return float(out[0]) if scalar else out


def exact_flow(t, x, y):
    """Forward flow of dX = 0, dY = b1(X) b2(Y): (x, g^{-1}(g(y) e^{2 b1 t}))."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(y < 0) or t < 0:
        raise ConfigurationError("exact_flow needs y >= 0 and t >= 0")
    return x, g_inverse(g(y) * np.exp(2.0 * b1(x) * t))


def exact_inverse_flow(t, x, y):
    """Inverse of the forward flow: (x, g^{-1}(g(y) e^{-2 b1 t}))."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(y < 0) or t < 0:
        raise ConfigurationError("exact_inverse_flow needs y >= 0 and t >= 0")
    return x, g_inverse(g(y) * np.exp(-2.0 * b1(x) * t))


# ---------------------------------------------------------------------------
# data

def cusp_profile_x(x):
    """0 for x <= 0, sqrt(x) on [0, 1], cosine taper to 0 on [1, 3].

    BV with a single non-Lipschitz feature: derivative ~ x^(-1/2) at 0+.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    core = (x > 0) & (x <= 1)
    out[core] = np.sqrt(x[core])
    taper = (x > 1) & (x < 3)
    out[taper] = np.cos(np.pi * (x[taper] - 1.0) / 4.0) ** 2
    return out


def smooth_profile_x(x):
    """Smooth control with the same support [0, 3], no cusp."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = (x > 0) & (x < 3)
    out[m] = np.sin(np.pi * x[m] / 3.0) ** 2
    return out


def bump_profile_y(y):
    """Cosine bump supported on [0, 2] with max 1."""
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    m = (y > 0) & (y < 2)
    out[m] = np.sin(np.pi * y[m] / 2.0) ** 2
    return out


@dataclass
class CounterexampleData:
    """Product initial data rho0(x, y) = p1(x) p2(y) and the study box."""

    profile_x: Callable = cusp_profile_x
    profile_y: Callable = bump_profile_y
    radius: float = 3.0

    def sample(self, grid: SpatialGrid) -> DensityField:
        c = grid.axis_centers()
        return DensityField(grid, np.outer(self.profile_x(c), self.profile_y(c)))

    def evaluate(self, x, y):
        return self.profile_x(x) * self.profile_y(y)


def cusp_data(radius=3.0) -> CounterexampleData:
    return CounterexampleData(cusp_profile_x, bump_profile_y, radius)


def smooth_control_data(radius=3.0) -> CounterexampleData:
    return CounterexampleData(smooth_profile_x, bump_profile_y, radius)


# ---------------------------------------------------------------------------
# experiments

def deterministic_solution(t, data: CounterexampleData,
                           grid: SpatialGrid) -> DensityField:
    """Closed-form weak solution rho(t) = rho0 o (flow)^{-1}, sampled pointwise.

    Points with y < 0 are frozen (b2 vanishes there).
    """
    if grid.dim != 2:
        raise ConfigurationError("the construction is two-dimensional")
    c = grid.axis_centers()
    X, Y = np.meshgrid(c, c, indexing="ij")
    pos = Y >= 0
    _, eta_pos = exact_inverse_flow(t, X, np.where(pos, Y, 0.0))
    eta = np.where(pos, eta_pos, Y)
    return DensityField(grid, data.evaluate(X, eta))


def bv_growth_experiment(data: CounterexampleData, t, resolutions):
    """Discrete BV of the closed-form solution on a refinement ladder.

    Returns rows (n, h, bv at time t, bv at time 0).
    """
    if t < 0:
        raise ConfigurationError("t must be >= 0")
    rows = []
    for n in resolutions:
        grid = SpatialGrid(dim=2, half_width=data.radius, n=int(n))
        f0 = data.sample(grid)
        ft = deterministic_solution(t, data, grid) if t > 0 else f0
        rows.append((int(n), grid.h, discrete_bv(ft), discrete_bv(f0)))
    return rows


def cusp_flow_spec(data: CounterexampleData) -> ProblemSpec:
    """Linear-flux 2D spec with b = (0, b1(x) b2(y)); div b in [-1/8, 1]."""
    f, f_prime, _ = linear_flux()

    def b(pts):
        out = np.zeros_like(pts)
        out[..., 1] = b1(pts[..., 0]) * b2(pts[..., 1])
        return out

    def div_b(pts):
        return b1(pts[..., 0]) * b2_prime(pts[..., 1])

    def rho0(grid: SpatialGrid):
        return data.sample(grid).values

    return ProblemSpec(
        name="cusp_flow",
        dim=2,
        f=f,
        f_prime=f_prime,
        b=b,
        div_b=div_b,
        rho0=rho0,
        div_free=False,
        f_prime_bounded=True,
        div_b_sup=1.0,
        b_sup=0.5,
        linear_flux=True,
    )


def stochastic_counterpart(data: CounterexampleData, t, resolutions,
                           n_paths: int, master_seed: int,
                           n_v: int = 8, dt_cells: float = 1.0,
                           zeroed: bool = False, workers: int = 1):
    """BGK runs of the same field under transport noise, per resolution.

    Returns rows (n, h, mean BV at time t over paths, std, n_paths).
    ``zeroed`` replaces every path's increments by zeros (deterministic
    consistency control).  Aggregation is ordered by path index, so results
    do not depend on scheduling.
    """
    from concurrent.futures import ThreadPoolExecutor

    from .bgk import BGKConfig, run_simulation
    from .brownian import sample_path

    spec = cusp_flow_spec(data)
    rows = []
    for n in resolutions:
        n = int(n)
        grid_h = 2.0 * data.radius / n
        n_steps = max(1, int(round(t / (dt_cells * grid_h))))
        dt = t / n_steps
        config = BGKConfig(
            epsilon=2.0 * dt, dt=dt, horizon=t, half_width=data.radius,
            n=n, n_v=n_v, snapshot_stride=max(1, n_steps),
        )

        def one(k):
            path = sample_path(master_seed, dt, t, dim=2, path_index=k)
            if zeroed:
                path = path.zeroed()
            traj = run_simulation(spec, config, path)
            return discrete_bv(traj.final())

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                bvs = list(pool.map(one, range(n_paths)))
        else:
            bvs = [one(k) for k in range(n_paths)]
        bvs = np.asarray(bvs)
        rows.append((n, grid_h, float(bvs.mean()), float(bvs.std()), n_paths))
    return rows
