"""Kernel-versus-oracle verification suite.

For every bundled Gaussian benchmark pair, three closed-form quantities are
recomputed by the cell-sum and Monte-Carlo oracles:

* ``gg`` -- first Gaussian of A against first Gaussian of B;
* ``gp`` -- first Gaussian of A against the first nucleus of B;
* ``dd`` -- full density of A against full density of B.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from typing import Iterable

from . import coulomb, oracle
from .benchmarks import GAUSSIAN_PAIRS, BenchmarkPair

CELLSUM_RTOL = 1e-3
MC_SIGMAS = 3.0
KERNELS = ("gg", "gp", "dd")


@dataclass(frozen=True)
class Check:
    pair: str
    kernel: str
    method: str  # "cellsum" or "mc"
    closed_form: float
    reference: float
    stderr: float | None
    tolerance: float
    seconds: float

    @property
    def error(self) -> float:
        """Relative error for cell sums, deviation in standard errors for Monte Carlo."""
        if self.method == "mc":
            return abs(self.reference - self.closed_form) / self.stderr if self.stderr else float("inf")
        return abs(self.reference - self.closed_form) / abs(self.closed_form)

    @property
    def passed(self) -> bool:
        return self.error <= self.tolerance

    def line(self) -> str:
        unit = "rel" if self.method == "cellsum" else "sigma"
        state = "PASS" if self.passed else "FAIL"
        return (f"{state} {self.pair:22s} {self.kernel} {self.method:7s} closed={self.closed_form:+.12f} "
                f"ref={self.reference:+.12f} err={self.error:.3g} {unit} (tol {self.tolerance:g})")


def _terms(pair: BenchmarkPair):
    a, b = pair.a, pair.b
    g1, g2 = a.gaussians[0], b.gaussians[0]
    nuc = b.nuclei[0]
    return {
        "gg": (
            lambda: coulomb.gaussian_gaussian_energy(g1, -g1.weight, g2, -g2.weight),
            lambda s: oracle.cellsum_coulomb(oracle.sample_density([g1], s), oracle.sample_density([g2], s), s),
            (oracle.mixture_sampler([g1]), oracle.mixture_sampler([g2]), -g1.weight, -g2.weight),
        ),
        "gp": (
            lambda: coulomb.gaussian_point_energy(g1, -g1.weight, nuc),
            lambda s: -oracle.cellsum_point_coulomb(oracle.sample_density([g1], s), [nuc.position], [nuc.Z], s),
            (oracle.mixture_sampler([g1]), oracle.point_sampler(nuc.position), -g1.weight, nuc.Z),
        ),
        "dd": (
            lambda: coulomb.density_density_energy(a, b),
            lambda s: oracle.cellsum_coulomb(oracle.sample_density(a.gaussians, s),
                                             oracle.sample_density(b.gaussians, s), s),
            (oracle.mixture_sampler(a.gaussians), oracle.mixture_sampler(b.gaussians),
             -a.electron_count, -b.electron_count),
        ),
    }


def run_suite(spec: oracle.OracleSpec = oracle.OracleSpec(), pairs: Iterable[BenchmarkPair] = GAUSSIAN_PAIRS,
              kernels: Iterable[str] = KERNELS, cellsum: bool = True, mc: bool = True,
              cellsum_rtol: float = CELLSUM_RTOL, on_check=None) -> list[Check]:
    """Run every (pair, kernel, oracle) check.

    Each Monte-Carlo check draws from its own stream keyed by
    (seed, pair index, kernel index), so checks are independent and any
    subset reproduces the same numbers.
    """
    base = oracle._key(spec.seed)
    kernels = tuple(kernels)
    out = []
    for ip, pair in enumerate(pairs):
        terms = _terms(pair)
        for kernel in kernels:
            exact_fn, cell_fn, mc_args = terms[kernel]
            exact = exact_fn()
            if cellsum:
                t = time.perf_counter()
                ref = cell_fn(spec)
                out.append(Check(pair.name, kernel, "cellsum", exact, ref, None, cellsum_rtol,
                                 time.perf_counter() - t))
                if on_check:
                    on_check(out[-1])
            if mc:
                t = time.perf_counter()
                stream = replace(spec, seed=(*base, ip, KERNELS.index(kernel)))
                est, se = oracle.mc_coulomb(*mc_args, spec=stream)
                out.append(Check(pair.name, kernel, "mc", exact, est, se, MC_SIGMAS, time.perf_counter() - t))
                if on_check:
                    on_check(out[-1])
    return out
