"""Charge bodies: point nuclei plus an electron density.

Electron densities are either isotropic Gaussian mixtures or values sampled
on a regular lattice.  Charges are physically signed: a nucleus carries +Z,
each electron -1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError
from .geometry import RigidPlacement

GRID_INTEGRAL_RTOL = 1e-3
_NODE_SNAP = 1e-9
_WEIGHT_RTOL = 1e-12


def _vec3(v, what: str) -> tuple[float, float, float]:
    t = tuple(float(x) for x in v)
    if len(t) != 3 or not all(math.isfinite(x) for x in t):
        raise InvalidArgumentError(f"{what} must be 3 finite numbers, got {v!r}")
    return t


@dataclass(frozen=True)
class Nucleus:
    position: tuple[float, float, float]
    Z: float

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3(self.position, "nucleus position"))
        if not (math.isfinite(self.Z) and self.Z > 0):
            raise InvalidArgumentError(f"nuclear charge Z must be > 0, got {self.Z}")


@dataclass(frozen=True)
class GaussianComponent:
    """Isotropic Gaussian carrying ``weight`` electrons.

    density(x) = weight * (2 pi sigma^2)^(-3/2) * exp(-|x - center|^2 / (2 sigma^2))
    """

    center: tuple[float, float, float]
    sigma: float
    weight: float

    def __post_init__(self):
        object.__setattr__(self, "center", _vec3(self.center, "Gaussian center"))
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise InvalidArgumentError(f"Gaussian sigma must be > 0, got {self.sigma}")
        if not (math.isfinite(self.weight) and self.weight > 0):
            raise InvalidArgumentError(f"Gaussian weight must be > 0, got {self.weight}")

    def density(self, x) -> np.ndarray:
        r2 = np.sum((np.asarray(x, dtype=float) - self.center) ** 2, axis=-1)
        return self.weight * (2 * math.pi * self.sigma**2) ** -1.5 * np.exp(-r2 / (2 * self.sigma**2))


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Nonnegative samples on a (possibly rotated) regular lattice.

    Node ``(i, j, k)`` sits at ``origin + axes @ (i*sx, j*sy, k*sz)``.
    ``values`` has shape ``(nx, ny, nz)``; files store it x-fastest.  Each
    sample stands for one cell of volume ``sx*sy*sz`` centred on its node.
    """

    origin: tuple[float, float, float]
    spacing: tuple[float, float, float]
    values: np.ndarray
    axes: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        object.__setattr__(self, "origin", _vec3(self.origin, "grid origin"))
        sp = _vec3(self.spacing, "grid spacing")
        if min(sp) <= 0:
            raise InvalidArgumentError(f"grid spacing must be positive, got {sp}")
        object.__setattr__(self, "spacing", sp)
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 3 or min(vals.shape) < 1:
            raise InvalidArgumentError(f"grid values must be a non-empty 3D array, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise InvalidArgumentError("grid values must be finite")
        if np.any(vals < 0):
            raise InvalidArgumentError("grid density values must be >= 0")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        axes = np.array(self.axes, dtype=float)
        if axes.shape != (3, 3) or np.max(np.abs(axes.T @ axes - np.eye(3))) > 1e-9:
            raise InvalidArgumentError("grid axes must be an orthonormal 3x3 matrix")
        axes.flags.writeable = False
        object.__setattr__(self, "axes", axes)

    @property
    def counts(self) -> tuple[int, int, int]:
        return tuple(self.values.shape)

    @property
    def cell_volume(self) -> float:
        sx, sy, sz = self.spacing
        return sx * sy * sz

    def integral(self) -> float:
        return float(np.sum(self.values)) * self.cell_volume

    @cached_property
    def node_positions(self) -> np.ndarray:
        """(N, 3) node coordinates in the same order as ``values.ravel()``."""
        idx = [np.arange(n) * h for n, h in zip(self.counts, self.spacing)]
        local = np.stack(np.meshgrid(*idx, indexing="ij"), axis=-1).reshape(-1, 3)
        return local @ self.axes.T + np.array(self.origin)

    def transformed(self, p: RigidPlacement) -> "GridDensity":
        return GridDensity(
            tuple(p.matrix @ np.array(self.origin) + p.vector),
            self.spacing,
            self.values,
            p.matrix @ self.axes,
        )

    def interpolate(self, x) -> np.ndarray:
        """Trilinear interpolation; 0 outside the node box."""
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        f = ((pts - np.array(self.origin)) @ self.axes) / np.array(self.spacing)
        snapped = np.round(f)
        f = np.where(np.abs(f - snapped) < _NODE_SNAP, snapped, f)
        n = np.array(self.counts)
        inside = np.all((f >= 0) & (f <= n - 1), axis=1)
        out = np.zeros(len(pts))
        if not np.any(inside):
            return out.reshape(np.shape(x)[:-1])
        fi = f[inside]
        i0 = np.minimum(np.floor(fi).astype(int), np.maximum(n - 2, 0))
        t = fi - i0
        v = self.values
        acc = np.zeros(len(fi))
        for dx in (0, 1):
            wx = t[:, 0] if dx else 1 - t[:, 0]
            ix = np.minimum(i0[:, 0] + dx, n[0] - 1)
            for dy in (0, 1):
                wy = t[:, 1] if dy else 1 - t[:, 1]
                iy = np.minimum(i0[:, 1] + dy, n[1] - 1)
                for dz in (0, 1):
                    wz = t[:, 2] if dz else 1 - t[:, 2]
                    iz = np.minimum(i0[:, 2] + dz, n[2] - 1)
                    w = wx * wy * wz
                    acc += np.where(w != 0, w * v[ix, iy, iz], 0.0)
        out[inside] = acc
        return out.reshape(np.shape(x)[:-1])


def sample_gaussians_on_grid(components: Sequence[GaussianComponent], origin, spacing, counts) -> GridDensity:
    """Sample a Gaussian mixture at the nodes of an axis-aligned lattice."""
    h = _vec3(spacing if np.ndim(spacing) else (spacing,) * 3, "spacing")
    o = np.array(_vec3(origin, "origin"))
    axes = [o[k] + h[k] * np.arange(int(counts[k])) for k in range(3)]
    vals = np.zeros(tuple(int(c) for c in counts))
    for g in components:
        gx = [np.exp(-((a - c) ** 2) / (2 * g.sigma**2)) for a, c in zip(axes, g.center)]
        norm = g.weight * (2 * math.pi * g.sigma**2) ** -1.5
        vals += norm * gx[0][:, None, None] * gx[1][None, :, None] * gx[2][None, None, :]
    return GridDensity(tuple(o), h, vals)


@dataclass(frozen=True, eq=False)
class ChargeBody:
    """One rigid system: nuclei plus either Gaussians or a grid density."""

    name: str
    nuclei: tuple[Nucleus, ...] = ()
    gaussians: tuple[GaussianComponent, ...] = ()
    grid: GridDensity | None = None
    electron_count: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "nuclei", tuple(self.nuclei))
        object.__setattr__(self, "gaussians", tuple(self.gaussians))
        if self.grid is not None and self.gaussians:
            raise InvalidArgumentError(f"body {self.name!r}: density is either Gaussians or a grid, not both")
        if self.grid is not None:
            measured = self.grid.integral()
            n = measured if self.electron_count is None else float(self.electron_count)
            if not math.isfinite(n) or n < 0:
                raise InvalidArgumentError(f"body {self.name!r}: electron_count must be >= 0")
            if abs(measured - n) > GRID_INTEGRAL_RTOL * max(abs(n), 1e-300):
                raise InvalidArgumentError(
                    f"body {self.name!r}: grid integrates to {measured:.6g} electrons, declared {n:.6g} "
                    f"(tolerance {GRID_INTEGRAL_RTOL:g} relative)"
                )
        else:
            total = math.fsum(g.weight for g in self.gaussians)
            n = total if self.electron_count is None else float(self.electron_count)
            if abs(total - n) > _WEIGHT_RTOL * max(abs(n), 1.0):
                raise InvalidArgumentError(
                    f"body {self.name!r}: Gaussian weights sum to {total!r}, declared electron_count {n!r}"
                )
            n = total
        object.__setattr__(self, "electron_count", n)
        if not self.nuclei and n == 0:
            raise InvalidArgumentError(f"body {self.name!r} is empty: no nuclei and no electrons")

    # array views used by the kernels
    @cached_property
    def nucleus_positions(self) -> np.ndarray:
        return np.array([n.position for n in self.nuclei], dtype=float).reshape(-1, 3)

    @cached_property
    def nucleus_charges(self) -> np.ndarray:
        return np.array([n.Z for n in self.nuclei], dtype=float)

    @cached_property
    def gaussian_centers(self) -> np.ndarray:
        return np.array([g.center for g in self.gaussians], dtype=float).reshape(-1, 3)

    @cached_property
    def gaussian_sigmas(self) -> np.ndarray:
        return np.array([g.sigma for g in self.gaussians], dtype=float)

    @cached_property
    def gaussian_weights(self) -> np.ndarray:
        return np.array([g.weight for g in self.gaussians], dtype=float)

    @property
    def is_grid(self) -> bool:
        return self.grid is not None


def total_electron_count(body: ChargeBody) -> float:
    """Integral of the electron density."""
    if body.grid is not None:
        return body.grid.integral()
    return math.fsum(g.weight for g in body.gaussians)


def total_charge(body: ChargeBody) -> float:
    """Signed net charge ``sum(Z) - n``."""
    return math.fsum(n.Z for n in body.nuclei) - body.electron_count


def transform_body(body: ChargeBody, p: RigidPlacement) -> ChargeBody:
    """Move every site of ``body`` through ``p``; charges are untouched."""
    nuclei = tuple(Nucleus(tuple(p.apply(n.position)), n.Z) for n in body.nuclei)
    gaussians = tuple(GaussianComponent(tuple(p.apply(g.center)), g.sigma, g.weight) for g in body.gaussians)
    grid = body.grid.transformed(p) if body.grid is not None else None
    return ChargeBody(body.name, nuclei, gaussians, grid, body.electron_count)


def density_at(body: ChargeBody, x) -> np.ndarray | float:
    """Electron density at ``x`` (one point or an (n, 3) array)."""
    pts = np.asarray(x, dtype=float)
    if body.grid is not None:
        out = body.grid.interpolate(pts)
    else:
        out = np.zeros(pts.shape[:-1])
        for g in body.gaussians:
            out = out + g.density(pts)
    return float(out) if np.ndim(out) == 0 else out
