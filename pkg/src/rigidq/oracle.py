"""Brute-force reference evaluators for the Coulomb integrals.

Two independent routes:

* cell sums -- densities sampled on a lattice, every cell a point charge,
  pairs within half a spacing smeared with width ``spacing/2``;
* Monte Carlo -- ``q_a q_b E[1/|X - Y|]`` with X, Y drawn exactly from the
  normalized densities.

Neither route touches the closed-form erf kernels of :mod:`rigidq.coulomb`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np

from . import _lattice
from .charge_model import GaussianComponent, GridDensity, sample_gaussians_on_grid
from .errors import InvalidArgumentError

Sampler = Callable[[np.random.Generator, int], np.ndarray]
MC_BLOCK = 100_000


@dataclass(frozen=True)
class OracleSpec:
    """Lattice and sampling resolution for the reference evaluators.

    ``half_width`` is measured from every Gaussian centre involved; ``seed``
    is an int or a tuple of ints (a stream key);
    ``method`` chooses how the cell double sum is evaluated ("fft" gives the
    same sum as "direct" in O(N log N)).
    """

    half_width: float = 8.0
    spacing: float = 0.1
    samples: int = 1_000_000
    seed: int | tuple[int, ...] = 0
    method: Literal["fft", "direct"] = "fft"
    max_pairs: float = _lattice.DEFAULT_MAX_PAIRS
    max_fft_elements: float = _lattice.DEFAULT_MAX_FFT_ELEMENTS

    def __post_init__(self):
        if not self.spacing > 0:
            raise InvalidArgumentError(f"oracle spacing must be > 0, got {self.spacing}")
        if not self.half_width > 0:
            raise InvalidArgumentError(f"oracle half-width must be > 0, got {self.half_width}")
        if self.samples < 10_000:
            raise InvalidArgumentError(f"oracle needs >= 1e4 Monte-Carlo samples, got {self.samples}")
        if self.method not in ("fft", "direct"):
            raise InvalidArgumentError(f"unknown cell-sum method {self.method!r}")


def sample_density(components: Sequence[GaussianComponent], spec: OracleSpec) -> GridDensity:
    """Sample a mixture on the oracle lattice around its centres.

    The lattice covers the bounding box of the centres widened by
    ``half_width``; an empty mixture gives a single zero node.
    """
    if not components:
        return GridDensity((0.0, 0.0, 0.0), (spec.spacing,) * 3, np.zeros((1, 1, 1)))
    for g in components:
        if spec.half_width < 6 * g.sigma:
            raise InvalidArgumentError(
                f"oracle box half-width {spec.half_width} covers less than 6 sigma of a Gaussian with sigma {g.sigma}"
            )
    centers = np.array([g.center for g in components])
    lo = centers.min(axis=0) - spec.half_width
    hi = centers.max(axis=0) + spec.half_width
    counts = np.floor((hi - lo) / spec.spacing + 1e-9).astype(int) + 1
    return sample_gaussians_on_grid(components, lo, spec.spacing, counts)


def cellsum_integral(density: GridDensity) -> float:
    """Midpoint-rule integral ``sum(values) * cell_volume``."""
    return float(np.sum(density.values)) * density.cell_volume


def _h(density: GridDensity) -> float:
    return min(density.spacing)


def cellsum_coulomb(density_a: GridDensity, density_b: GridDensity, spec: OracleSpec = OracleSpec()) -> float:
    """Midpoint double sum of ``rho_a(x) rho_b(y) / |x - y|``.

    Both fields must be axis-aligned with equal spacing; their origins may
    differ arbitrarily.  The result is symmetric under operand swap
    bit-for-bit.
    """
    if not np.allclose(density_a.spacing, density_b.spacing, rtol=1e-12, atol=0):
        raise InvalidArgumentError("cell-sum operands must share the lattice spacing")
    if np.max(np.abs(density_a.axes - density_b.axes)) > 1e-12:
        raise InvalidArgumentError("cell-sum operands must share lattice axes")
    h = _h(density_a)
    qa = density_a.values * density_a.cell_volume
    qb = density_b.values * density_b.cell_volume
    if not np.any(qa) or not np.any(qb):
        return 0.0
    if spec.method == "direct":
        return _lattice.pair_sum(density_a.node_positions, qa.ravel(), density_b.node_positions, qb.ravel(),
                                 near_radius=h / 2, s_near=h, max_pairs=spec.max_pairs)
    return _lattice.lattice_pair_sum(density_a.origin, qa, density_b.origin, qb, density_a.spacing,
                                     axes=density_a.axes, near_radius=h / 2, s_near=h,
                                     max_elements=spec.max_fft_elements)


def cellsum_point_coulomb(density: GridDensity, positions, charges, spec: OracleSpec = OracleSpec()) -> float:
    """Midpoint sum of ``rho(x) q_n / |x - x_n|`` over point charges."""
    h = _h(density)
    return _lattice.pair_sum(density.node_positions, density.values.ravel() * density.cell_volume,
                             positions, charges, near_radius=h / 2, s_near=h / math.sqrt(2.0),
                             max_pairs=spec.max_pairs)


# -- Monte Carlo -------------------------------------------------------------

def mixture_sampler(components: Sequence[GaussianComponent]) -> Sampler:
    """Exact sampler of a normalized Gaussian mixture."""
    comps = list(components)
    if not comps:
        raise InvalidArgumentError("cannot sample an empty mixture")
    w = np.array([g.weight for g in comps])
    p = w / w.sum()
    centers = np.array([g.center for g in comps])
    sigmas = np.array([g.sigma for g in comps])

    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        k = rng.choice(len(comps), size=n, p=p) if len(comps) > 1 else np.zeros(n, int)
        return centers[k] + sigmas[k, None] * rng.standard_normal((n, 3))

    return draw


def point_sampler(position) -> Sampler:
    """Degenerate sampler: every draw is ``position``."""
    x = np.asarray(position, float)

    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        return np.broadcast_to(x, (n, 3))

    return draw


def _key(seed) -> tuple[int, ...]:
    return tuple(seed) if isinstance(seed, (tuple, list)) else (int(seed),)


def mc_coulomb(sampler_a: Sampler, sampler_b: Sampler, q_a: float, q_b: float,
               spec: OracleSpec = OracleSpec()) -> tuple[float, float]:
    """Importance-sampled ``q_a q_b E[1/|X - Y|]`` and its standard error.

    Samples are drawn in blocks of ``MC_BLOCK``, each from its own stream
    keyed by (seed, block index), so the estimate depends only on the seed.
    """
    s1 = s2 = 0.0
    n_total = 0
    for block, start in enumerate(range(0, spec.samples, MC_BLOCK)):
        n = min(MC_BLOCK, spec.samples - start)
        rng = np.random.default_rng([*_key(spec.seed), block])
        x = sampler_a(rng, n)
        y = sampler_b(rng, n)
        inv = 1.0 / np.linalg.norm(x - y, axis=1)
        s1 += math.fsum(inv)
        s2 += math.fsum(inv * inv)
        n_total += n
    mean = s1 / n_total
    var = max(s2 / n_total - mean * mean, 0.0) * n_total / (n_total - 1)
    scale = q_a * q_b
    return scale * mean, abs(scale) * math.sqrt(var / n_total)
