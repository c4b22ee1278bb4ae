"""Structured-grid fields, derivative operators, streamlines and frames.

Arrays are indexed ``[j, i]`` with ``j`` the y index and ``i`` the x index
(row-major over y).  All stencils are second order: central differences in
the interior, three-point one-sided at boundaries.  Off-node evaluation is
bilinear, the lowest-order interpolation consistent with the stencils; it is
documented here precisely so reference calculations can replicate it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DegenerateTrajectory,
    InsufficientSnapshots,
    PointOutsideDomain,
    SeedOutsideDomain,
    ShapeMismatch,
    StagnationAtSeed,
)

__all__ = [
    "StructuredGrid2D",
    "Snapshot",
    "FieldSet",
    "Trajectory",
    "AccompanyingFrame",
    "gradient",
    "curl2d",
    "time_derivative",
    "interp_bilinear",
    "directional_derivative",
    "trace_streamline",
    "frame_along",
]


@dataclass(frozen=True)
class StructuredGrid2D:
    """Uniform rectangular node grid: x = x0 + i*hx, y = y0 + j*hy."""

    nx: int
    ny: int
    x0: float = 0.0
    y0: float = 0.0
    hx: float = 1.0
    hy: float = 1.0

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise ValueError(f"need nx, ny >= 3, got {self.nx}x{self.ny}")
        if not (self.hx > 0.0 and self.hy > 0.0):
            raise ValueError("grid spacings must be positive")

    @property
    def shape(self) -> tuple:
        return (self.ny, self.nx)

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.hx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.y0 + self.hy * np.arange(self.ny)

    @property
    def xmax(self) -> float:
        return self.x0 + self.hx * (self.nx - 1)

    @property
    def ymax(self) -> float:
        return self.y0 + self.hy * (self.ny - 1)

    def contains(self, x: float, y: float) -> bool:
        return (self.x0 <= x <= self.xmax) and (self.y0 <= y <= self.ymax)

    def check_conforms(self, arr: np.ndarray, name: str = "field"):
        if np.shape(arr) != self.shape:
            raise ShapeMismatch(
                f"{name} has shape {np.shape(arr)}, grid is {self.shape}"
            )


@dataclass(frozen=True)
class Snapshot:
    """One time level of a node-sampled flow state."""

    t: float
    rho: np.ndarray
    u: np.ndarray
    v: np.ndarray
    p: np.ndarray


@dataclass(frozen=True)
class FieldSet:
    """Node-sampled flow state (rho, u, v, p), optionally a time series.

    ``snapshots`` holds (t, fields) levels with strictly increasing times;
    the primary arrays are the working state (by convention the first
    snapshot when a series is attached).  ``mask`` marks fluid nodes; False
    nodes are excluded from the domain (used by the connectedness test).
    Masked-out nodes still need finite placeholder values: the stencil
    operators run on the full arrays.
    """

    grid: StructuredGrid2D
    rho: np.ndarray
    u: np.ndarray
    v: np.ndarray
    p: np.ndarray
    snapshots: Optional[Sequence[Snapshot]] = None
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("rho", "u", "v", "p"):
            arr = np.asarray(getattr(self, name), dtype=float)
            self.grid.check_conforms(arr, name)
            object.__setattr__(self, name, arr)
        live = self.mask if self.mask is not None else slice(None)
        if self.mask is not None:
            self.grid.check_conforms(self.mask, "mask")
        if np.any(self.rho[live] <= 0.0) or np.any(self.p[live] <= 0.0):
            raise ValueError("rho and p must be positive at every fluid node")
        if self.snapshots is not None:
            times = [s.t for s in self.snapshots]
            if any(b <= a for a, b in zip(times, times[1:])):
                raise ValueError("snapshot times must be strictly increasing")
            for s in self.snapshots:
                for name in ("rho", "u", "v", "p"):
                    self.grid.check_conforms(getattr(s, name), f"snapshot {name}")

    @property
    def speed(self) -> np.ndarray:
        return np.hypot(self.u, self.v)


@dataclass(frozen=True)
class Trajectory:
    """Ordered point samples of a flow trajectory with cumulative arclength."""

    points: np.ndarray  # (n, 2)
    arclength: np.ndarray  # (n,)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        arc = np.asarray(self.arclength, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] != arc.shape[0]:
            raise ValueError("points must be (n, 2) matching arclength (n,)")
        if pts.shape[0] >= 2:
            seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
            if np.any(seg == 0.0):
                raise ValueError("consecutive trajectory points must be distinct")
            if np.any(np.diff(arc) <= 0.0):
                raise ValueError("arclength must be strictly increasing")
        if arc.shape[0] >= 1 and arc[0] != 0.0:
            raise ValueError("arclength must start at 0")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "arclength", arc)

    @classmethod
    def from_points(cls, points) -> "Trajectory":
        pts = np.asarray(points, dtype=float)
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        arc = np.concatenate(([0.0], np.cumsum(seg)))
        return cls(pts, arc)

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class AccompanyingFrame:
    """Unit tangent / left-normal pair at every trajectory sample."""

    tangent: np.ndarray  # (n, 2)
    normal: np.ndarray  # (n, 2)

    def __post_init__(self):
        t = np.asarray(self.tangent, dtype=float)
        n = np.asarray(self.normal, dtype=float)
        if not np.allclose(np.linalg.norm(t, axis=1), 1.0, atol=1e-12):
            raise ValueError("tangent vectors must be unit length")
        if not np.allclose(np.linalg.norm(n, axis=1), 1.0, atol=1e-12):
            raise ValueError("normal vectors must be unit length")
        if not np.allclose(np.einsum("ij,ij->i", t, n), 0.0, atol=1e-12):
            raise ValueError("tangent and normal must be orthogonal")
        object.__setattr__(self, "tangent", t)
        object.__setattr__(self, "normal", n)


# ---------------------------------------------------------------------------
# derivative operators


def gradient(f: np.ndarray, grid: StructuredGrid2D):
    """(df/dx, df/dy) by second-order central/one-sided differences."""
    grid.check_conforms(f, "field")
    dfdx = np.gradient(f, grid.hx, axis=1, edge_order=2)
    dfdy = np.gradient(f, grid.hy, axis=0, edge_order=2)
    return dfdx, dfdy


def curl2d(u: np.ndarray, v: np.ndarray, grid: StructuredGrid2D) -> np.ndarray:
    """Scalar curl dv/dx - du/dy."""
    grid.check_conforms(u, "u")
    grid.check_conforms(v, "v")
    dvdx = np.gradient(v, grid.hx, axis=1, edge_order=2)
    dudy = np.gradient(u, grid.hy, axis=0, edge_order=2)
    return dvdx - dudy


def time_derivative(fs: FieldSet, name: str, index: int) -> np.ndarray:
    """Partial time derivative of one snapshot field at a snapshot index.

    Three-point second-order formulas on the (possibly nonuniform) snapshot
    times in the interior and at the ends; plain two-point slope when only
    two snapshots exist.
    """
    if fs.snapshots is None or len(fs.snapshots) < 2:
        raise InsufficientSnapshots("need at least two snapshots")
    n = len(fs.snapshots)
    if not 0 <= index < n:
        raise IndexError(f"snapshot index {index} out of range [0, {n})")
    t = np.array([s.t for s in fs.snapshots])
    f = lambda k: getattr(fs.snapshots[k], name)

    if n == 2:
        return (f(1) - f(0)) / (t[1] - t[0])
    if index == 0:
        h1, h2 = t[1] - t[0], t[2] - t[1]
        w0 = -(2.0 * h1 + h2) / (h1 * (h1 + h2))
        w1 = (h1 + h2) / (h1 * h2)
        w2 = -h1 / (h2 * (h1 + h2))
        return w0 * f(0) + w1 * f(1) + w2 * f(2)
    if index == n - 1:
        h1, h2 = t[-2] - t[-3], t[-1] - t[-2]
        w0 = h2 / (h1 * (h1 + h2))
        w1 = -(h1 + h2) / (h1 * h2)
        w2 = (h1 + 2.0 * h2) / (h2 * (h1 + h2))
        return w0 * f(n - 3) + w1 * f(n - 2) + w2 * f(n - 1)
    h1 = t[index] - t[index - 1]
    h2 = t[index + 1] - t[index]
    wm = -h2 / (h1 * (h1 + h2))
    w0 = (h2 - h1) / (h1 * h2)
    wp = h1 / (h2 * (h1 + h2))
    return wm * f(index - 1) + w0 * f(index) + wp * f(index + 1)


# ---------------------------------------------------------------------------
# off-node evaluation


def interp_bilinear(f: np.ndarray, grid: StructuredGrid2D, point) -> float:
    """Bilinear interpolation of a node field at an interior point."""
    x, y = float(point[0]), float(point[1])
    if not grid.contains(x, y):
        raise PointOutsideDomain(f"point ({x}, {y}) outside grid")
    fx = (x - grid.x0) / grid.hx
    fy = (y - grid.y0) / grid.hy
    i = min(int(fx), grid.nx - 2)
    j = min(int(fy), grid.ny - 2)
    tx = fx - i
    ty = fy - j
    return float(
        (1 - tx) * (1 - ty) * f[j, i]
        + tx * (1 - ty) * f[j, i + 1]
        + (1 - tx) * ty * f[j + 1, i]
        + tx * ty * f[j + 1, i + 1]
    )


def directional_derivative(
    f: np.ndarray, grid: StructuredGrid2D, point, direction
) -> float:
    """Gradient of ``f`` interpolated at ``point``, dotted with a unit vector."""
    d = np.asarray(direction, dtype=float)
    if abs(np.linalg.norm(d) - 1.0) > 1e-9:
        raise ValueError("direction must be a unit vector")
    dfdx, dfdy = gradient(f, grid)
    gx = interp_bilinear(dfdx, grid, point)
    gy = interp_bilinear(dfdy, grid, point)
    return gx * d[0] + gy * d[1]


# ---------------------------------------------------------------------------
# streamlines and frames


def _unit_velocity(fs: FieldSet, x: float, y: float, vtol: float):
    ux = interp_bilinear(fs.u, fs.grid, (x, y))
    vy = interp_bilinear(fs.v, fs.grid, (x, y))
    speed = np.hypot(ux, vy)
    if speed < vtol:
        return None
    return ux / speed, vy / speed


def trace_streamline(
    fs: FieldSet,
    seed,
    step: Optional[float] = None,
    max_len: Optional[float] = None,
) -> Trajectory:
    """Trace the streamline through ``seed`` by classical RK4 at unit speed.

    Integrates dx/dxi = U/|U| (xi is arclength) with bilinear velocity
    interpolation; stops at the domain boundary, at ``max_len``, or where
    the speed drops below the stagnation tolerance (1e-10 of the grid's
    peak speed).
    """
    grid = fs.grid
    x, y = float(seed[0]), float(seed[1])
    if not grid.contains(x, y):
        raise SeedOutsideDomain(f"seed ({x}, {y}) outside grid")
    if step is None:
        step = 0.25 * min(grid.hx, grid.hy)
    if max_len is None:
        max_len = 4.0 * np.hypot(grid.xmax - grid.x0, grid.ymax - grid.y0)
    vtol = max(1e-10 * float(np.max(fs.speed)), np.finfo(float).tiny)
    if _unit_velocity(fs, x, y, vtol) is None:
        raise StagnationAtSeed(f"speed below tolerance at seed ({x}, {y})")

    pts = [(x, y)]
    arc = 0.0
    while arc < max_len:
        h = min(step, max_len - arc)

        def rhs(px, py):
            if not grid.contains(px, py):
                return None
            return _unit_velocity(fs, px, py, vtol)

        k1 = rhs(x, y)
        if k1 is None:
            break
        k2 = rhs(x + 0.5 * h * k1[0], y + 0.5 * h * k1[1])
        if k2 is None:
            break
        k3 = rhs(x + 0.5 * h * k2[0], y + 0.5 * h * k2[1])
        if k3 is None:
            break
        k4 = rhs(x + h * k3[0], y + h * k3[1])
        if k4 is None:
            break
        nx = x + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        ny = y + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        if not grid.contains(nx, ny):
            break
        x, y = nx, ny
        arc += h
        pts.append((x, y))
    if len(pts) < 2:
        raise DegenerateTrajectory("streamline terminated at its seed")
    return Trajectory.from_points(np.array(pts))


def frame_along(traj: Trajectory) -> AccompanyingFrame:
    """Unit tangent by centered arclength differencing; left normal by +90 deg."""
    n = len(traj)
    if n < 2:
        raise DegenerateTrajectory("need at least 2 trajectory points")
    xi = traj.arclength
    tx = np.gradient(traj.points[:, 0], xi, edge_order=1 if n < 3 else 2)
    ty = np.gradient(traj.points[:, 1], xi, edge_order=1 if n < 3 else 2)
    norm = np.hypot(tx, ty)
    if np.any(norm == 0.0):
        raise DegenerateTrajectory("zero tangent encountered")
    tx, ty = tx / norm, ty / norm
    tangent = np.column_stack([tx, ty])
    normal = np.column_stack([-ty, tx])
    return AccompanyingFrame(tangent=tangent, normal=normal)
