"""External electrostatic potentials and the energy of a placed body in them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import _lattice
from .charge_model import ChargeBody, total_charge
from .coulomb import COINCIDENCE_TOL, DEFAULT_QUAD, QuadratureSpec, _distances, _erf_kernel, _pt, _Sites
from .errors import DomainError, InvalidArgumentError, SingularityError
from .geometry import RigidPlacement

NEUTRALITY_TOL = 1e-9
_GAUSS_EXTENT = 6.0  # sigmas covered by the Gaussian quadrature lattice


@dataclass(frozen=True)
class UniformField:
    """Constant potential ``V(x) = c`` (hartree per e)."""

    c: float

    def __post_init__(self):
        if not math.isfinite(self.c):
            raise InvalidArgumentError("uniform potential must be finite")

    def values(self, x: np.ndarray) -> np.ndarray:
        return np.full(len(x), float(self.c))


@dataclass(frozen=True)
class LinearField:
    """Constant electric field ``E``: ``V(x) = -E . x``."""

    E: tuple[float, float, float]

    def __post_init__(self):
        e = tuple(float(v) for v in self.E)
        if len(e) != 3 or not all(math.isfinite(v) for v in e):
            raise InvalidArgumentError(f"field vector must be 3 finite numbers, got {self.E!r}")
        object.__setattr__(self, "E", e)

    def values(self, x: np.ndarray) -> np.ndarray:
        return -(x @ np.array(self.E))


@dataclass(frozen=True, eq=False)
class PointChargeField:
    """Potential of fixed point charges ``sum q / |x - p|``."""

    positions: np.ndarray
    charges: np.ndarray

    def __post_init__(self):
        pos = np.array(self.positions, float).reshape(-1, 3)
        q = np.array(self.charges, float).ravel()
        if len(pos) != len(q):
            raise InvalidArgumentError("point-charge field needs one charge per position")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(q))):
            raise InvalidArgumentError("point-charge field parameters must be finite")
        if len(pos) > 1:
            r = _distances(pos, pos) + np.eye(len(pos)) * 1.0
            if np.any(r <= COINCIDENCE_TOL):
                raise InvalidArgumentError("point-charge field sources must be distinct")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "charges", q)

    def values(self, x: np.ndarray) -> np.ndarray:
        if len(self.charges) == 0:
            return np.zeros(len(x))
        r = _distances(x, self.positions)
        if np.any(r <= COINCIDENCE_TOL):
            i, j = np.argwhere(r <= COINCIDENCE_TOL)[0]
            raise SingularityError(f"point {_pt(x[i])} coincides with field source {j}", pair=(int(i), int(j)))
        return (1.0 / r) @ self.charges


@dataclass(frozen=True, eq=False)
class SampledGridField:
    """Potential samples on an axis-aligned lattice, trilinearly interpolated.

    Nodes equal to ``mask`` (NaN by default) are undefined; a query that
    needs one raises :class:`DomainError`, as does any query outside the box.
    """

    origin: tuple[float, float, float]
    spacing: tuple[float, float, float]
    values_: np.ndarray
    mask: float = float("nan")

    def __post_init__(self):
        v = np.array(self.values_, float)
        if v.ndim != 3 or min(v.shape) < 2:
            raise InvalidArgumentError("sampled potential needs at least 2 nodes per axis")
        if min(self.spacing) <= 0:
            raise InvalidArgumentError("sampled potential spacing must be positive")
        bad = np.isnan(v) if math.isnan(self.mask) else (v == self.mask)
        if not np.all(np.isfinite(v[~bad])):
            raise InvalidArgumentError("sampled potential values must be finite")
        object.__setattr__(self, "values_", np.where(bad, np.nan, v))

    def values(self, x: np.ndarray) -> np.ndarray:
        f = (x - np.array(self.origin)) / np.array(self.spacing)
        n = np.array(self.values_.shape)
        snapped = np.round(f)
        f = np.where(np.abs(f - snapped) < 1e-9, snapped, f)
        if np.any((f < 0) | (f > n - 1)):
            i = int(np.argwhere(np.any((f < 0) | (f > n - 1), axis=1))[0, 0])
            raise DomainError(f"point {_pt(x[i])} lies outside the sampled potential box")
        i0 = np.minimum(np.floor(f).astype(int), n - 2)
        t = f - i0
        out = np.zeros(len(x))
        for corner in np.ndindex(2, 2, 2):
            w = np.prod(np.where(np.array(corner), t, 1 - t), axis=1)
            idx = i0 + np.array(corner)
            v = self.values_[idx[:, 0], idx[:, 1], idx[:, 2]]
            needed = w > 0
            if np.any(needed & np.isnan(v)):
                i = int(np.argwhere(needed & np.isnan(v))[0, 0])
                raise DomainError(f"point {_pt(x[i])} needs a masked potential node")
            out += np.where(needed, w * np.nan_to_num(v), 0.0)
        return out


@dataclass(frozen=True)
class CompositeField:
    """Sum of several fields."""

    parts: tuple

    def values(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(len(x))
        for f in self.parts:
            out = out + f.values(x)
        return out


ExternalField = Union[UniformField, LinearField, PointChargeField, SampledGridField, CompositeField]


def combine(fields: Sequence[ExternalField]) -> ExternalField:
    fields = tuple(fields)
    return fields[0] if len(fields) == 1 else CompositeField(fields)


def potential_value(field: ExternalField, x) -> float:
    """V(x) for a single point."""
    x = np.asarray(x, float)
    if x.shape != (3,) or not np.all(np.isfinite(x)):
        raise InvalidArgumentError("query point must be 3 finite numbers")
    return float(field.values(x[None, :])[0])


def _gaussian_electron_energy(field, s: _Sites, quad: QuadratureSpec) -> float:
    """-integral V rho over the Gaussian components of ``s``."""
    if len(s.g_q) == 0:
        return 0.0
    if isinstance(field, CompositeField):
        return math.fsum(_gaussian_electron_energy(f, s, quad) for f in field.parts)
    if isinstance(field, (UniformField, LinearField)):
        # a Gaussian averages a linear potential to its value at the centre
        return float(s.g_q @ field.values(s.g_pos))
    if isinstance(field, PointChargeField):
        if len(field.charges) == 0:
            return 0.0
        k = _erf_kernel(_distances(s.g_pos, field.positions), s.g_var[:, None])
        return float(s.g_q @ k @ field.charges)
    return _sampled_gaussian_energy(field, s, quad)


def _sampled_gaussian_energy(field, s: _Sites, quad: QuadratureSpec) -> float:
    parts = []
    rng = np.random.default_rng([quad.seed, 0x6669])
    for c, var, q in zip(s.g_pos, s.g_var, s.g_q):
        sigma = math.sqrt(var)
        if quad.method == "monte-carlo":
            pts = c + sigma * rng.standard_normal((quad.samples, 3))
            parts.append(q * float(np.mean(field.values(pts))))
            continue
        m = int(math.ceil(_GAUSS_EXTENT * sigma / quad.spacing))
        ax = quad.spacing * np.arange(-m, m + 1)
        g1 = np.exp(-ax**2 / (2 * var))
        w = (g1[:, None, None] * g1[None, :, None] * g1[None, None, :]).ravel()
        w /= w.sum()
        pts = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), axis=-1).reshape(-1, 3) + c
        parts.append(q * float(w @ field.values(pts)))
    return math.fsum(parts)


def _grid_electron_energy(field, s: _Sites) -> float:
    g = s.grid
    cells, q = g.node_positions, s.cell_charges()
    keep = q != 0
    cells, q = cells[keep], q[keep]
    if isinstance(field, CompositeField):
        return math.fsum(_grid_electron_energy(f, s) for f in field.parts)
    if isinstance(field, PointChargeField):
        h = min(g.spacing)
        v = _lattice.potentials(field.positions, field.charges, cells, near_radius=h / 2, s_near=h / math.sqrt(2.0))
        return float(q @ v)
    return float(q @ field.values(cells))


def field_energy(body: ChargeBody, p: RigidPlacement, field: ExternalField,
                 quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Energy of placed ``body`` in the external potential.

    ``sum_n Z_n V(x_n) - integral V(x) rho(x) dx``.
    """
    s = _Sites.of(body, p)
    nuclear = float(s.nuc_z @ field.values(s.nuc_pos)) if len(s.nuc_z) else 0.0
    if s.grid is not None:
        electronic = _grid_electron_energy(field, s) if s.n_electrons > 0 else 0.0
    else:
        electronic = _gaussian_electron_energy(field, s, quad)
    return nuclear + electronic


def neutrality_report(body: ChargeBody, tol: float = NEUTRALITY_TOL) -> tuple[float, bool]:
    """Net charge and whether ``|Q| <= tol``."""
    q = total_charge(body)
    return q, abs(q) <= tol
