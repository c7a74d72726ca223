"""Bundled benchmark bodies.

``GAUSSIAN_PAIRS`` are the kernel/oracle benchmarks; ``OPTIMIZER_PAIRS``
are the minimization benchmarks (repulsive, attractive-penalized,
neutral-dipole).  All widths are >= 0.8 bohr so that a 0.1 bohr cell sum
resolves them to better than 1e-3.
"""

from __future__ import annotations

from dataclasses import dataclass

from .charge_model import ChargeBody, GaussianComponent, Nucleus


def _body(name, nuclei=(), gaussians=()):
    return ChargeBody(
        name,
        tuple(Nucleus(p, z) for p, z in nuclei),
        tuple(GaussianComponent(c, s, w) for c, s, w in gaussians),
    )


def hydrogen_like(name="H", center=(0.0, 0.0, 0.0), sigma=1.0) -> ChargeBody:
    """Z = 1 nucleus with one co-centred Gaussian electron (neutral, spherical)."""
    return _body(name, [(center, 1.0)], [(center, sigma, 1.0)])


def proton(name="p", position=(0.0, 0.0, 0.0)) -> ChargeBody:
    return _body(name, [(position, 1.0)])


def electron_cloud(name="e", center=(0.0, 0.0, 0.0), sigma=1.0, weight=1.0) -> ChargeBody:
    return _body(name, gaussians=[(center, sigma, weight)])


def anion(name="anion", center=(0.0, 0.0, 0.0), sigma=0.05) -> ChargeBody:
    """Z = 1 nucleus carrying two co-centred electrons: net charge -1.

    With a narrow cloud it attracts a bare proton down to separations where
    the nucleus hinge penalty (d_min = 0.1) takes over.
    """
    return _body(name, [(center, 1.0)], [(center, sigma, 2.0)])


def polar(name="polar") -> ChargeBody:
    """Neutral body with a dipole: Z = 2 nucleus, electron cloud shifted by 0.4 bohr."""
    return _body(name, [((0.0, 0.0, 0.0), 2.0)], [((0.4, 0.0, 0.0), 0.8, 2.0)])


@dataclass(frozen=True)
class BenchmarkPair:
    name: str
    a: ChargeBody
    b: ChargeBody


GAUSSIAN_PAIRS: tuple[BenchmarkPair, ...] = (
    BenchmarkPair(
        "separated-hydrogens",
        hydrogen_like("H1"),
        hydrogen_like("H2", center=(3.0, 0.0, 0.0)),
    ),
    BenchmarkPair(
        "overlapping-clouds",
        _body("A", [((0.0, 0.0, 0.0), 1.0)], [((0.0, 0.0, 0.0), 1.0, 1.0)]),
        _body("B", [((0.5, 0.3, 0.0), 1.0)], [((0.5, 0.3, 0.0), 1.3, 1.0)]),
    ),
    BenchmarkPair(
        "two-centre-mixtures",
        _body("A", [((0.0, 0.0, 0.0), 2.0)], [((-0.4, 0.0, 0.0), 0.9, 1.0), ((0.4, 0.0, 0.0), 0.9, 1.0)]),
        _body("B", [((2.0, 1.0, 0.0), 1.0), ((2.0, -1.0, 0.0), 1.0)],
              [((2.0, 1.0, 0.0), 1.0, 1.0), ((2.0, -1.0, 0.0), 1.0, 1.0)]),
    ),
    BenchmarkPair(
        "ion-pair",
        _body("cation", [((0.0, 0.0, 0.0), 3.0)], [((0.0, 0.0, 0.0), 0.8, 2.0)]),
        _body("anion", [((0.0, 0.0, 2.5), 1.0)], [((0.0, 0.0, 2.5), 1.1, 2.0)]),
    ),
    BenchmarkPair(
        "asymmetric-diatomics",
        _body("AB", [((0.0, 0.0, 0.0), 1.0), ((1.2, 0.0, 0.0), 1.0)],
              [((0.2, 0.0, 0.0), 0.9, 1.0), ((1.0, 0.0, 0.0), 1.0, 1.0)]),
        _body("C", [((-1.0, 2.0, 1.0), 2.0)], [((-1.0, 2.0, 1.0), 1.2, 1.5), ((-0.6, 2.3, 1.0), 0.85, 0.5)]),
    ),
)

OPTIMIZER_PAIRS: tuple[BenchmarkPair, ...] = (
    BenchmarkPair("repulsive", proton("p1"), proton("p2")),
    BenchmarkPair("attractive-penalized", proton("p"), anion("anion")),
    BenchmarkPair("neutral-dipole", polar("polar1"), polar("polar2")),
)


def by_name(pairs, name: str) -> BenchmarkPair:
    for p in pairs:
        if p.name == name:
            return p
    raise KeyError(name)
