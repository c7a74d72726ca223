"""Minimize the interaction energy over the six rigid-body DOFs of body B.

Body A stays at the identity placement.  The objective is the interaction
energy plus a quadratic hinge penalty on cross-system nucleus pairs closer
than ``min_nucleus_separation``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .charge_model import ChargeBody
from .coulomb import DEFAULT_QUAD, EnergyBreakdown, QuadratureSpec, _distances, _interaction, _Sites
from .errors import InvalidArgumentError, OptimizationError, RigidQError, SingularityError
from .geometry import (PARAM_NAMES, Bounds, RigidPlacement, params_to_placement, placement_to_params,
                       sample_placement)

FD_STEP = 1e-5
ARMIJO_C = 1e-4
BACKTRACK = 0.5


class InvalidStartError(InvalidArgumentError):
    """The objective is not finite at the starting parameters."""


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 8
    seed: int = 1
    max_iterations: int = 500
    gradient_tolerance: float = 1e-6
    step_tolerance: float = 1e-10
    translation_box: Bounds = field(default_factory=lambda: Bounds.cube(5.0))
    min_nucleus_separation: float = 0.1
    penalty_stiffness: float = 1e3

    def __post_init__(self):
        if int(self.restarts) != self.restarts or self.restarts < 1:
            raise InvalidArgumentError(f"restarts must be a positive integer, got {self.restarts}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise InvalidArgumentError(f"max_iterations must be a positive integer, got {self.max_iterations}")
        if not (self.gradient_tolerance > 0 and self.step_tolerance > 0):
            raise InvalidArgumentError("tolerances must be > 0")
        if self.translation_box.is_degenerate:
            raise InvalidArgumentError(f"translation box is degenerate: {self.translation_box}")
        if not self.min_nucleus_separation > 1e-6:
            raise InvalidArgumentError("min_nucleus_separation must exceed 1e-6 bohr")
        if not self.penalty_stiffness >= 0:
            raise InvalidArgumentError("penalty_stiffness must be >= 0")


@dataclass
class OptimizationResult:
    best_params: np.ndarray
    best_energy: float
    raw_energy: float
    breakdown: EnergyBreakdown
    iterations: int
    restarts_run: int
    trace: list[list[tuple[int, float]]]
    status: str = "converged_gradient"
    gradient_norm: float = float("nan")
    best_restart: int = 0
    failures: list[tuple[int, str]] = field(default_factory=list)

    @property
    def placement(self) -> RigidPlacement:
        return params_to_placement(self.best_params)

    @property
    def penalty(self) -> float:
        return self.best_energy - self.raw_energy

    def as_dict(self) -> dict:
        return {
            "best_params": dict(zip(PARAM_NAMES, map(float, self.best_params))),
            "best_energy": self.best_energy,
            "raw_energy": self.raw_energy,
            "penalty": self.penalty,
            "breakdown": self.breakdown.as_dict(),
            "iterations": self.iterations,
            "restarts_run": self.restarts_run,
            "best_restart": self.best_restart,
            "status": self.status,
            "gradient_norm": self.gradient_norm,
            "trace": [[[i, e] for i, e in run] for run in self.trace],
            "failures": [{"restart": r, "error": msg} for r, msg in self.failures],
        }


class _Problem:
    """Objective evaluator with body A's sites precomputed."""

    def __init__(self, body_a: ChargeBody, body_b: ChargeBody, config: OptimizerConfig, quad: QuadratureSpec):
        self.a = _Sites.of(body_a)
        self.body_b = body_b
        self.config = config
        self.quad = quad

    def evaluate(self, params) -> tuple[float, EnergyBreakdown]:
        b = _Sites.of(self.body_b, params_to_placement(params))
        breakdown = _interaction(self.a, b, self.quad)
        return breakdown.total + self.penalty(b), breakdown

    def penalty(self, b: _Sites) -> float:
        if len(self.a.nuc_z) == 0 or len(b.nuc_z) == 0:
            return 0.0
        gap = self.config.min_nucleus_separation - _distances(self.a.nuc_pos, b.nuc_pos)
        gap = gap[gap > 0]
        if gap.size == 0:
            return 0.0
        return float(self.config.penalty_stiffness * np.sum(gap * gap))

    def objective(self, params) -> float:
        return self.evaluate(params)[0]

    def gradient(self, params) -> np.ndarray:
        x = np.asarray(params, float)
        g = np.empty(6)
        for i in range(6):
            up, down = x.copy(), x.copy()
            up[i] += FD_STEP
            down[i] -= FD_STEP
            g[i] = (self.objective(up) - self.objective(down)) / (2 * FD_STEP)
        return g


def objective(params, body_a: ChargeBody, body_b: ChargeBody, config: OptimizerConfig = OptimizerConfig(),
              quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Interaction energy of B placed at ``params`` (A at identity) plus the hinge penalty."""
    return _Problem(body_a, body_b, config, quad).objective(params)


def gradient(params, body_a: ChargeBody, body_b: ChargeBody, config: OptimizerConfig = OptimizerConfig(),
             quad: QuadratureSpec = DEFAULT_QUAD) -> np.ndarray:
    """Central-difference gradient of :func:`objective`, step 1e-5 per coordinate."""
    return _Problem(body_a, body_b, config, quad).gradient(params)


def _safe_objective(problem: _Problem, x) -> float:
    try:
        f = problem.objective(x)
    except SingularityError:
        return math.inf
    return f if math.isfinite(f) else math.inf


def _finish(problem: _Problem, x, trace, iterations, status, gnorm) -> OptimizationResult:
    canonical = placement_to_params(params_to_placement(x, canonicalize=True))
    best, breakdown = problem.evaluate(canonical)
    return OptimizationResult(canonical, best, breakdown.total, breakdown, iterations, 1, [trace],
                              status=status, gradient_norm=gnorm)


def _descend(problem: _Problem, start) -> OptimizationResult:
    cfg = problem.config
    x = np.array(start, float)
    if x.shape != (6,):
        raise InvalidArgumentError(f"start needs 6 parameters, got shape {x.shape}")
    try:
        f = problem.objective(x)
    except SingularityError as exc:
        raise InvalidStartError(f"objective is singular at the start: {exc}") from exc
    if not math.isfinite(f):
        raise InvalidStartError(f"objective is not finite at the start ({f})")
    trace = [(0, f)]
    t = 1.0
    iterations = 0
    status = "max_iterations"
    gnorm = math.nan
    while True:
        g = problem.gradient(x)
        gnorm = float(np.linalg.norm(g))
        if gnorm <= cfg.gradient_tolerance:
            status = "converged_gradient"
            break
        if iterations >= cfg.max_iterations:
            break
        t *= 2.0
        slope = gnorm * gnorm
        while True:
            trial = x - t * g
            f_trial = _safe_objective(problem, trial)
            if f_trial <= f - ARMIJO_C * t * slope:
                break
            t *= BACKTRACK
            if t * gnorm <= cfg.step_tolerance:
                f_trial = math.nan
                break
        if math.isnan(f_trial):
            status = "converged_step"
            break
        x, f = trial, f_trial
        iterations += 1
        trace.append((iterations, f))
        if t * gnorm <= cfg.step_tolerance:
            status = "converged_step"
            break
    return _finish(problem, x, trace, iterations, status, gnorm)


def minimize_local(start, body_a: ChargeBody, body_b: ChargeBody, config: OptimizerConfig = OptimizerConfig(),
                   quad: QuadratureSpec = DEFAULT_QUAD) -> OptimizationResult:
    """Gradient descent with Armijo backtracking from ``start``.

    Each line search begins at twice the previous accepted step and halves
    until ``f(x - t g) <= f(x) - 1e-4 t |g|^2``.  Stops when
    ``|g| <= gradient_tolerance``, when the step falls to
    ``step_tolerance``, or after ``max_iterations`` accepted steps.
    Trial points on a singularity count as rejected.
    """
    return _descend(_Problem(body_a, body_b, config, quad), start)


def restart_rng(config: OptimizerConfig, restart: int, stream: Sequence[int] = ()) -> np.random.Generator:
    """Independent rng for one restart, keyed by (seed, *stream, restart)."""
    return np.random.default_rng([config.seed, *stream, restart])


def restart_start(config: OptimizerConfig, restart: int, stream: Sequence[int] = ()) -> np.ndarray:
    return placement_to_params(sample_placement(restart_rng(config, restart, stream), config.translation_box))


def minimize_multistart(body_a: ChargeBody, body_b: ChargeBody, config: OptimizerConfig = OptimizerConfig(),
                        quad: QuadratureSpec = DEFAULT_QUAD, stream: Sequence[int] = ()) -> OptimizationResult:
    """Best of ``config.restarts`` local descents from sampled placements.

    Selection is by penalized energy with the lowest restart index winning
    ties, so the result does not depend on evaluation order.
    """
    problem = _Problem(body_a, body_b, config, quad)
    results: list[tuple[int, OptimizationResult]] = []
    failures: list[tuple[int, str]] = []
    traces: list[list[tuple[int, float]]] = []
    for r in range(config.restarts):
        try:
            res = _descend(problem, restart_start(config, r, stream))
        except RigidQError as exc:
            failures.append((r, f"{type(exc).__name__}: {exc}"))
            traces.append([])
            continue
        results.append((r, res))
        traces.append(res.trace[0])
    if not results:
        raise OptimizationError(f"all {config.restarts} restarts failed", causes=failures)
    r_best, best = min(results, key=lambda item: (item[1].best_energy, item[0]))
    return replace(best, restarts_run=config.restarts, trace=traces, best_restart=r_best, failures=failures)


# -- scans --------------------------------------------------------------------

@dataclass(frozen=True)
class ScanAxis:
    """``n`` evenly spaced values of one parameter from ``lo`` to ``hi`` inclusive."""

    coordinate: str
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.coordinate not in PARAM_NAMES:
            raise InvalidArgumentError(f"unknown scan coordinate {self.coordinate!r}; use one of {PARAM_NAMES}")
        if self.n < 1 or (self.n > 1 and not self.hi > self.lo) or not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise InvalidArgumentError(f"bad scan axis {self}")

    @property
    def index(self) -> int:
        return PARAM_NAMES.index(self.coordinate)

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n) if self.n > 1 else np.array([self.lo])


@dataclass(frozen=True)
class ScanEntry:
    params: np.ndarray
    breakdown: EnergyBreakdown | None
    objective: float
    flag: str = ""


def scan(body_a: ChargeBody, body_b: ChargeBody, axes: Sequence[ScanAxis], base=None,
         quad: QuadratureSpec = DEFAULT_QUAD, config: OptimizerConfig | None = None) -> list[ScanEntry]:
    """Evaluate every lattice point (last axis fastest); singular points are flagged.

    ``objective`` includes the hinge penalty when ``config`` is given and
    equals the raw total otherwise.
    """
    if not axes or len(axes) > 6:
        raise InvalidArgumentError("a scan needs 1 to 6 axes")
    if len({a.coordinate for a in axes}) != len(axes):
        raise InvalidArgumentError("scan axes must be distinct coordinates")
    if config is None:
        config = OptimizerConfig(penalty_stiffness=0.0)
    problem = _Problem(body_a, body_b, config, quad)
    x = np.zeros(6) if base is None else np.array(base, float)
    out = []
    for combo in itertools.product(*(a.values for a in axes)):
        p = x.copy()
        for a, v in zip(axes, combo):
            p[a.index] = v
        try:
            obj, br = problem.evaluate(p)
        except SingularityError as exc:
            out.append(ScanEntry(p, None, math.nan, f"singular: {exc}"))
            continue
        out.append(ScanEntry(p, br, obj))
    return out


def scan_minimum(entries: Sequence[ScanEntry]) -> ScanEntry:
    ok = [e for e in entries if e.breakdown is not None]
    if not ok:
        raise OptimizationError("every scan point was singular")
    return min(ok, key=lambda e: e.objective)


# -- complementarity matching ------------------------------------------------

@dataclass
class MatchResult:
    names: list[str]
    energies: np.ndarray  # NaN on the diagonal and for failed pairs
    placements: dict[tuple[int, int], RigidPlacement]
    errors: dict[tuple[int, int], str]

    @property
    def best_partner(self) -> list[int | None]:
        """Per row, the column with the lowest energy (None if every cell failed)."""
        out = []
        for i, row in enumerate(self.energies):
            cand = [(v, j) for j, v in enumerate(row) if j != i and not math.isnan(v)]
            out.append(min(cand)[1] if cand else None)
        return out


def match_pairs(bodies: Sequence[ChargeBody], config: OptimizerConfig = OptimizerConfig(),
                quad: QuadratureSpec = DEFAULT_QUAD) -> MatchResult:
    """Best interaction energy for every pair of bodies.

    Each unordered pair {i, j} is optimized once (B = j moving around
    A = i, rng stream keyed by (seed, i, j)); entry (j, i) is the same
    relative configuration seen from j, so the matrix is exactly symmetric.
    """
    if len(bodies) < 2:
        raise InvalidArgumentError("matching needs at least two bodies")
    n = len(bodies)
    energies = np.full((n, n), math.nan)
    placements: dict[tuple[int, int], RigidPlacement] = {}
    errors: dict[tuple[int, int], str] = {}
    for i, j in itertools.combinations(range(n), 2):
        try:
            res = minimize_multistart(bodies[i], bodies[j], config, quad, stream=(i, j))
        except RigidQError as exc:
            errors[(i, j)] = errors[(j, i)] = f"{type(exc).__name__}: {exc}"
            continue
        energies[i, j] = energies[j, i] = res.raw_energy
        placements[(i, j)] = res.placement
        placements[(j, i)] = res.placement.inverse()
    return MatchResult([b.name for b in bodies], energies, placements, errors)
