"""Coulomb energies between placed charge bodies.

Units are atomic: hartree, bohr, elementary charge, Coulomb constant 1.
Gaussian densities use closed-form erf kernels; grid densities are summed
cell by cell with a smeared kernel for pairs closer than half a spacing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy.special import erf

from . import _lattice
from .charge_model import ChargeBody, GaussianComponent, GridDensity, Nucleus, transform_body
from .errors import InvalidArgumentError, ResourceError, SingularityError
from .geometry import Bounds, RigidPlacement

COINCIDENCE_TOL = 1e-9
_IDENTITY = RigidPlacement()


@dataclass(frozen=True)
class QuadratureSpec:
    """How integrals with a grid operand are evaluated.

    ``spacing`` is also the lattice used when a Gaussian density meets a
    sampled external potential.
    """

    method: Literal["grid-cellsum", "monte-carlo"] = "grid-cellsum"
    spacing: float = 0.25
    samples: int = 100_000
    seed: int = 0
    max_pairs: float = _lattice.DEFAULT_MAX_PAIRS

    def __post_init__(self):
        if self.method not in ("grid-cellsum", "monte-carlo"):
            raise InvalidArgumentError(f"unknown quadrature method {self.method!r}")
        if not (self.spacing > 0 and math.isfinite(self.spacing)):
            raise InvalidArgumentError(f"quadrature spacing must be > 0, got {self.spacing}")
        if self.samples < 1000:
            raise InvalidArgumentError(f"monte-carlo sample count must be >= 1000, got {self.samples}")


DEFAULT_QUAD = QuadratureSpec()


@dataclass(frozen=True)
class EnergyBreakdown:
    ee: float
    en_a_to_b: float
    en_b_to_a: float
    nn: float
    total: float

    @classmethod
    def from_terms(cls, ee: float, en_a_to_b: float, en_b_to_a: float, nn: float) -> "EnergyBreakdown":
        return cls(ee, en_a_to_b, en_b_to_a, nn, math.fsum((ee, en_a_to_b, en_b_to_a, nn)))

    def as_dict(self) -> dict:
        return {"ee": self.ee, "en_a_to_b": self.en_a_to_b, "en_b_to_a": self.en_b_to_a,
                "nn": self.nn, "total": self.total}


# -- closed-form kernels ----------------------------------------------------

def _erf_kernel(r: np.ndarray, var_sum: np.ndarray) -> np.ndarray:
    """erf(r / sqrt(2 var_sum)) / r, finite at r = 0."""
    width = np.sqrt(2.0 * var_sum)
    x = r / width
    with np.errstate(divide="ignore", invalid="ignore"):
        far = erf(x) / r
    # Taylor series of erf(x)/x below x = 1e-3 (remainder ~ x^6/42)
    near = (2.0 / math.sqrt(math.pi)) / width * (1.0 - x * x / 3.0 + x**4 / 10.0)
    return np.where(x < 1e-3, near, far)


def _distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", d, d))


def gaussian_gaussian_energy(g1: GaussianComponent, q1: float, g2: GaussianComponent, q2: float) -> float:
    """Coulomb energy of two Gaussian charge clouds carrying charges q1, q2.

    ``q1 q2 erf(R / sqrt(2 (s1^2 + s2^2))) / R``; at R = 0 this tends to
    ``q1 q2 sqrt(2/pi) / sqrt(s1^2 + s2^2)``.
    """
    r = math.dist(g1.center, g2.center)
    return float(q1 * q2 * _erf_kernel(np.array(r), np.array(g1.sigma**2 + g2.sigma**2)))


def gaussian_point_energy(g: GaussianComponent, q: float, nucleus: Nucleus | None = None, *,
                          position=None, Z: float | None = None) -> float:
    """Energy of a Gaussian cloud of charge ``q`` with a point charge ``Z``.

    ``q Z erf(R / (s sqrt 2)) / R``, finite at R = 0.  The point charge is
    a :class:`Nucleus` or the keyword pair ``position``/``Z`` (which also
    admits Z = 0 or negative probe charges).
    """
    if nucleus is not None:
        position, Z = nucleus.position, nucleus.Z
    if Z == 0:
        return 0.0
    r = math.dist(g.center, position)
    return float(q * Z * _erf_kernel(np.array(r), np.array(g.sigma**2)))


def _pt(x) -> str:
    return "(" + ", ".join(f"{float(v):.6g}" for v in x) + ")"


def _check_coincidence(pa: np.ndarray, pb: np.ndarray, r: np.ndarray, names=("A", "B")) -> None:
    bad = np.argwhere(r <= COINCIDENCE_TOL)
    if bad.size:
        i, j = (int(v) for v in bad[0])
        raise SingularityError(
            f"nucleus {names[0]}[{i}] at {_pt(pa[i])} coincides with nucleus {names[1]}[{j}] at {_pt(pb[j])} "
            f"(distance {r[i, j]:.3g} bohr)",
            pair=(i, j),
        )


def _point_point(pa, za, pb, zb) -> float:
    if len(za) == 0 or len(zb) == 0:
        return 0.0
    r = _distances(pa, pb)
    _check_coincidence(pa, pb, r)
    return float(za @ (1.0 / r) @ zb)


def point_point_energy(nuclei_a: Sequence[Nucleus], nuclei_b: Sequence[Nucleus]) -> float:
    """Cross-system nucleus-nucleus repulsion ``sum Z_n Z_m / |x_n - x_m|``."""
    pa = np.array([n.position for n in nuclei_a], float).reshape(-1, 3)
    pb = np.array([n.position for n in nuclei_b], float).reshape(-1, 3)
    return _point_point(pa, np.array([n.Z for n in nuclei_a]), pb, np.array([n.Z for n in nuclei_b]))


# -- placed sites -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class _Sites:
    """Array view of a placed body."""

    nuc_pos: np.ndarray
    nuc_z: np.ndarray
    g_pos: np.ndarray
    g_var: np.ndarray
    g_q: np.ndarray  # signed: -weight
    grid: GridDensity | None
    n_electrons: float

    @classmethod
    def of(cls, body: ChargeBody, p: RigidPlacement = _IDENTITY) -> "_Sites":
        still = p is _IDENTITY or p == _IDENTITY
        rot, t = p.matrix, p.vector
        nuc = body.nucleus_positions if still else body.nucleus_positions @ rot.T + t
        gpos = body.gaussian_centers if still else body.gaussian_centers @ rot.T + t
        grid = body.grid if (still or body.grid is None) else body.grid.transformed(p)
        return cls(nuc, body.nucleus_charges, gpos, body.gaussian_sigmas**2, -body.gaussian_weights,
                   grid, body.electron_count)

    def cell_charges(self) -> np.ndarray:
        return -self.grid.values.ravel() * self.grid.cell_volume


def _grid_h(grid: GridDensity) -> float:
    return min(grid.spacing)


def _gauss_gauss(a: _Sites, b: _Sites) -> float:
    if len(a.g_q) == 0 or len(b.g_q) == 0:
        return 0.0
    r = _distances(a.g_pos, b.g_pos)
    k = _erf_kernel(r, a.g_var[:, None] + b.g_var[None, :])
    return float(a.g_q @ k @ b.g_q)


def _gauss_points(g_pos, g_var, g_q, pos, q) -> float:
    """Gaussians against point charges, blocked over the points."""
    if len(g_q) == 0 or len(q) == 0:
        return 0.0
    rows = max(1, 2_000_000 // max(len(g_q), 1))
    parts = []
    for s in range(0, len(q), rows):
        r = _distances(pos[s:s + rows], g_pos)
        parts.append(float(q[s:s + rows] @ _erf_kernel(r, g_var[None, :]) @ g_q))
    return math.fsum(parts)


def _aligned(g1: GridDensity, g2: GridDensity) -> bool:
    return (np.allclose(g1.spacing, g2.spacing, rtol=1e-12, atol=0)
            and np.max(np.abs(g1.axes - g2.axes)) <= 1e-12)


def _grid_grid(ga: GridDensity, gb: GridDensity, quad: QuadratureSpec) -> float:
    h = max(_grid_h(ga), _grid_h(gb))
    s_near = math.sqrt(2.0 * ((_grid_h(ga) / 2) ** 2 + (_grid_h(gb) / 2) ** 2))
    qa = -ga.values * ga.cell_volume
    qb = -gb.values * gb.cell_volume
    if quad.method == "monte-carlo":
        return _grid_grid_mc(ga, gb, quad)
    if _aligned(ga, gb):
        return _lattice.lattice_pair_sum(ga.origin, qa, gb.origin, qb, ga.spacing, axes=ga.axes,
                                         near_radius=h / 2, s_near=s_near)
    return _lattice.pair_sum(ga.node_positions, qa.ravel(), gb.node_positions, qb.ravel(),
                             near_radius=h / 2, s_near=s_near, max_pairs=quad.max_pairs)


def _jittered_cells(grid: GridDensity, rng: np.random.Generator, n: int) -> np.ndarray:
    w = grid.values.ravel()
    idx = rng.choice(w.size, size=n, p=w / w.sum())
    ijk = np.stack(np.unravel_index(idx, grid.counts), axis=1).astype(float)
    local = (ijk + rng.random((n, 3)) - 0.5) * np.array(grid.spacing)
    return local @ grid.axes.T + np.array(grid.origin)


def _grid_grid_mc(ga: GridDensity, gb: GridDensity, quad: QuadratureSpec) -> float:
    """Electron-electron energy of two piecewise-constant grid densities by sampling."""
    na, nb = ga.integral(), gb.integral()
    if na == 0 or nb == 0:
        return 0.0
    rng = np.random.default_rng([quad.seed, 0x6D63])
    x = _jittered_cells(ga, rng, quad.samples)
    y = _jittered_cells(gb, rng, quad.samples)
    return float(na * nb * np.mean(1.0 / np.linalg.norm(x - y, axis=1)))


def _density_density(a: _Sites, b: _Sites, quad: QuadratureSpec) -> float:
    if a.n_electrons == 0 or b.n_electrons == 0:
        return 0.0
    if a.grid is None and b.grid is None:
        return _gauss_gauss(a, b)
    if a.grid is not None and b.grid is not None:
        return _grid_grid(a.grid, b.grid, quad)
    g, s = (a, b) if b.grid is not None else (b, a)
    return _gauss_points(g.g_pos, g.g_var, g.g_q, s.grid.node_positions, s.cell_charges())


def _density_nuclei(d: _Sites, n: _Sites) -> float:
    if len(n.nuc_z) == 0 or d.n_electrons == 0:
        return 0.0
    if d.grid is None:
        return _gauss_points(d.g_pos, d.g_var, d.g_q, n.nuc_pos, n.nuc_z)
    h = _grid_h(d.grid)
    return _lattice.pair_sum(d.grid.node_positions, d.cell_charges(), n.nuc_pos, n.nuc_z,
                             near_radius=h / 2, s_near=h / math.sqrt(2.0))


def density_density_energy(body_a: ChargeBody, body_b: ChargeBody, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Electron-electron cross energy of two (already placed) bodies.

    Two Gaussian densities: exact double sum of erf kernels.  Gaussian vs
    grid: each cell is a point charge against the erf kernel.  Grid vs grid:
    regularized cell-pair sum (FFT-evaluated when the lattices are
    parallel with equal spacing), or a Monte-Carlo estimate when
    ``quad.method == "monte-carlo"``.
    """
    return _density_density(_Sites.of(body_a), _Sites.of(body_b), quad)


def density_nuclei_energy(density_body: ChargeBody, nuclei_body: ChargeBody,
                          quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Energy of ``density_body``'s electrons with ``nuclei_body``'s nuclei (negative)."""
    return _density_nuclei(_Sites.of(density_body), _Sites.of(nuclei_body))


def _interaction(a: _Sites, b: _Sites, quad: QuadratureSpec) -> EnergyBreakdown:
    nn = _point_point(a.nuc_pos, a.nuc_z, b.nuc_pos, b.nuc_z)
    return EnergyBreakdown.from_terms(
        _density_density(a, b, quad), _density_nuclei(a, b), _density_nuclei(b, a), nn,
    )


def interaction_energy(body_a: ChargeBody, pa: RigidPlacement, body_b: ChargeBody, pb: RigidPlacement,
                       quad: QuadratureSpec = DEFAULT_QUAD) -> EnergyBreakdown:
    """Placement-dependent interaction energy of two rigid bodies.

    Sum of the electron-electron, both electron-nucleus and the
    nucleus-nucleus cross terms.  Intra-body energies are constant under
    rigid motion and never enter.
    """
    return _interaction(_Sites.of(body_a, pa), _Sites.of(body_b, pb), quad)


# -- potential ---------------------------------------------------------------

def _potential_values(s: _Sites, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Potential at each row of ``pts`` and a mask of rows sitting on a nucleus."""
    pts = np.asarray(pts, float).reshape(-1, 3)
    out = np.zeros(len(pts))
    masked = np.zeros(len(pts), bool)
    if len(s.nuc_z):
        r = _distances(pts, s.nuc_pos)
        masked = np.any(r <= COINCIDENCE_TOL, axis=1)
        with np.errstate(divide="ignore"):
            out += np.where(masked, 0.0, (1.0 / np.where(r <= COINCIDENCE_TOL, 1.0, r)) @ s.nuc_z)
    if len(s.g_q):
        out += _erf_kernel(_distances(pts, s.g_pos), s.g_var[None, :]) @ s.g_q
    if s.grid is not None and s.n_electrons > 0:
        h = _grid_h(s.grid)
        out += _lattice.potentials(s.grid.node_positions, s.cell_charges(), pts,
                                   near_radius=h / 2, s_near=h / math.sqrt(2.0))
    return out, masked


def potential_at(body: ChargeBody, p: RigidPlacement, y) -> float:
    """Electrostatic potential of placed ``body`` felt by a unit positive probe at ``y``."""
    y = np.asarray(y, float)
    values, masked = _potential_values(_Sites.of(body, p), y[None, :])
    if masked[0]:
        raise SingularityError(f"potential queried on a nucleus at {_pt(y)}")
    return float(values[0])


@dataclass(frozen=True, eq=False)
class PotentialGrid:
    """Potential sampled on a lattice; masked nodes hold ``mask``."""

    origin: tuple[float, float, float]
    spacing: tuple[float, float, float]
    values: np.ndarray
    mask: float = float("nan")

    @property
    def counts(self) -> tuple[int, int, int]:
        return tuple(self.values.shape)

    @property
    def masked(self) -> np.ndarray:
        if math.isnan(self.mask):
            return np.isnan(self.values)
        return self.values == self.mask


def potential_on_lattice(body: ChargeBody, p: RigidPlacement, origin, spacing, counts,
                         mask: float = float("nan")) -> PotentialGrid:
    counts = tuple(int(c) for c in counts)
    spacing = tuple(float(h) for h in (spacing if np.ndim(spacing) else (spacing,) * 3))
    if min(counts) < 1:
        raise InvalidArgumentError(f"lattice counts must be >= 1, got {counts}")
    if min(spacing) <= 0:
        raise InvalidArgumentError(f"lattice spacing must be > 0, got {spacing}")
    o = np.asarray(origin, float)
    axes = [o[k] + spacing[k] * np.arange(counts[k]) for k in range(3)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    values, masked = _potential_values(_Sites.of(body, p), pts)
    values[masked] = mask
    return PotentialGrid(tuple(o), spacing, values.reshape(counts), mask)


def potential_grid(body: ChargeBody, p: RigidPlacement, box: Bounds, spacing: float,
                   mask: float = float("nan")) -> PotentialGrid:
    """Sample :func:`potential_at` on the lattice filling ``box`` at ``spacing``."""
    if not (spacing > 0):
        raise InvalidArgumentError(f"spacing must be > 0, got {spacing}")
    if any(h <= l for l, h in zip(box.lower, box.upper)):
        raise InvalidArgumentError(f"potential box must have positive extent on every axis: {box}")
    counts = [int(math.floor((h - l) / spacing + 1e-9)) + 1 for l, h in zip(box.lower, box.upper)]
    return potential_on_lattice(body, p, box.lower, spacing, counts, mask)


# -- bilinear form -----------------------------------------------------------

def _composite(body: ChargeBody, p: RigidPlacement):
    """Flatten a placed body into (positions, signed charges, sigma, cell spacing)."""
    placed = transform_body(body, p)
    pos = [placed.nucleus_positions, placed.gaussian_centers]
    q = [placed.nucleus_charges, -placed.gaussian_weights]
    sig = [np.zeros(len(placed.nuclei)), placed.gaussian_sigmas]
    cell = [np.zeros(len(placed.nuclei)), np.zeros(len(placed.gaussians))]
    if placed.grid is not None:
        g = placed.grid
        pos.append(g.node_positions)
        q.append(-g.values.ravel() * g.cell_volume)
        sig.append(np.zeros(g.values.size))
        cell.append(np.full(g.values.size, _grid_h(g)))
    return np.concatenate(pos), np.concatenate(q), np.concatenate(sig), np.concatenate(cell)


def bilinear_form(body_a: ChargeBody, pa: RigidPlacement, body_b: ChargeBody, pb: RigidPlacement,
                  quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Coulomb coupling of the two total charge distributions.

    Each body is flattened into one list of signed charges (nuclei as
    points, Gaussians with their widths, grid cells as points) and every
    cross pair goes through a single smeared kernel.  This is assembled
    independently of :func:`interaction_energy` but equals its total.
    """
    xa, qa, sa, ca = _composite(body_a, pa)
    xb, qb, sb, cb = _composite(body_b, pb)
    if len(qa) == 0 or len(qb) == 0:
        return 0.0
    if float(len(qa)) * len(qb) > quad.max_pairs:
        raise ResourceError(f"bilinear form needs {float(len(qa)) * len(qb):.3g} pairs", required=float(len(qa)) * len(qb))
    rows = max(1, 2_000_000 // len(qb))
    parts = []
    for s in range(0, len(qa), rows):
        d = xa[s:s + rows, None, :] - xb[None, :, :]
        r = np.sqrt(np.sum(d * d, axis=-1))
        sig_a, sig_b = sa[s:s + rows, None], sb[None, :]
        both_points = (sig_a == 0) & (sig_b == 0)
        cell_a, cell_b = ca[s:s + rows, None], cb[None, :]
        near = both_points & (r < np.maximum(cell_a, cell_b) / 2)
        if np.any(both_points & ~near & (r <= COINCIDENCE_TOL)):
            i, j = np.argwhere(both_points & ~near & (r <= COINCIDENCE_TOL))[0]
            raise SingularityError(f"point charges A[{s + i}] and B[{j}] coincide", pair=(int(s + i), int(j)))
        sig_a = np.where(near, cell_a / 2, sig_a)
        sig_b = np.where(near, cell_b / 2, sig_b)
        width = np.sqrt(2.0 * (sig_a**2 + sig_b**2))
        k = _lattice.erf_over_r(r, width)
        parts.append(float(qa[s:s + rows] @ k @ qb))
    return math.fsum(parts)
