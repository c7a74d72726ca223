"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 input error,
3 singularity, 4 optimization failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from . import io as rio
from .coulomb import QuadratureSpec, _potential_values, _Sites, interaction_energy, potential_on_lattice
from .errors import (DomainError, InputError, InvalidArgumentError, OptimizationError, ResourceError,
                     RigidQError, SingularityError)
from .field import field_energy, neutrality_report
from .geometry import (PARAM_NAMES, Bounds, RigidPlacement, format_placement, parse_bounds, parse_placement,
                       placement_to_params)
from .optimize import OptimizerConfig, ScanAxis, match_pairs, minimize_multistart, scan, scan_minimum
from .oracle import OracleSpec
from .verify import run_suite

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_SINGULAR, EXIT_OPTIMIZE = 0, 1, 2, 3, 4


@dataclass(frozen=True)
class RunConfig:
    quad: QuadratureSpec
    optimizer: OptimizerConfig
    format: str = "text"


class _Out:
    """Collects a report and prints it as aligned text or one JSON document."""

    def __init__(self, fmt: str, stream: TextIO):
        self.fmt = fmt
        self.stream = stream
        self.doc: dict = {}

    def value(self, key: str, v):
        self.doc[key] = v
        if self.fmt == "text":
            self.stream.write(f"{key:<12s} {rio.fmt(v) if isinstance(v, float) else v}\n")

    def text(self, line: str):
        if self.fmt == "text":
            self.stream.write(line + "\n")

    def done(self):
        if self.fmt == "machine":
            self.stream.write(json.dumps(self.doc, allow_nan=True) + "\n")


def _breakdown(out: _Out, br):
    for k, v in br.as_dict().items():
        out.value(k, v)


def _placement_arg(text: str | None) -> RigidPlacement:
    return RigidPlacement() if text is None else parse_placement(text)


def _parse_lattice(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise InvalidArgumentError(f"grid spec must be 'ox,oy,oz:sx,sy,sz:nx,ny,nz', got {text!r}")
    try:
        origin = [float(v) for v in parts[0].split(",")]
        spacing = [float(v) for v in parts[1].split(",")]
        counts = [int(v) for v in parts[2].split(",")]
    except ValueError:
        raise InvalidArgumentError(f"grid spec has a non-numeric entry: {text!r}") from None
    if len(spacing) == 1:
        spacing *= 3
    if len(origin) != 3 or len(spacing) != 3 or len(counts) != 3:
        raise InvalidArgumentError(f"grid spec needs 3 values per group: {text!r}")
    if min(counts) < 1:
        raise InvalidArgumentError(f"grid counts must be >= 1, got {counts}")
    if not all(h > 0 and math.isfinite(h) for h in spacing) or not all(math.isfinite(v) for v in origin):
        raise InvalidArgumentError(f"grid spacing must be positive and finite, got {spacing}")
    return origin, spacing, counts


def _parse_axis(text: str) -> ScanAxis:
    parts = text.split(":")
    if len(parts) != 4:
        raise InvalidArgumentError(f"scan axis must be 'coord:lo:hi:n', got {text!r}")
    try:
        return ScanAxis(parts[0], float(parts[1]), float(parts[2]), int(parts[3]))
    except ValueError:
        raise InvalidArgumentError(f"scan axis has a non-numeric bound or count: {text!r}") from None


# -- subcommands -------------------------------------------------------------

def cmd_energy(args, cfg: RunConfig, out: _Out) -> int:
    a, b = rio.load_body(args.body_a), rio.load_body(args.body_b)
    br = interaction_energy(a, _placement_arg(args.placement_a), b, _placement_arg(args.placement_b), cfg.quad)
    _breakdown(out, br)
    return EXIT_OK


def cmd_potential(args, cfg: RunConfig, out: _Out) -> int:
    body = rio.load_body(args.body)
    p = _placement_arg(args.placement)
    if args.points:
        pts = rio.read_points(args.points)
        values, masked = _potential_values(_Sites.of(body, p), pts)
        values[masked] = math.nan
        rio.write_points_potential(args.out, pts, values)
        warnings = int(np.count_nonzero(masked))
        out.value("points", len(pts))
    else:
        origin, spacing, counts = _parse_lattice(args.grid)
        pot = potential_on_lattice(body, p, origin, spacing, counts)
        rio.write_potential(args.out, pot)
        warnings = int(np.count_nonzero(pot.masked))
        out.value("nodes", int(np.prod(counts)))
    out.value("out", str(args.out))
    if warnings:
        sys.stderr.write(f"warning: {warnings} point(s) on a nucleus written as mask value nan\n")
    out.value("warnings", warnings)
    return EXIT_OK


def cmd_minimize(args, cfg: RunConfig, out: _Out) -> int:
    a, b = rio.load_body(args.body_a), rio.load_body(args.body_b)
    res = minimize_multistart(a, b, cfg.optimizer, cfg.quad)
    out.value("placement_b", format_placement(res.placement))
    for name, v in zip(PARAM_NAMES, res.best_params):
        out.value(name, float(v))
    out.value("best_energy", res.best_energy)
    out.value("raw_energy", res.raw_energy)
    out.value("penalty", res.penalty)
    _breakdown(out, res.breakdown)
    out.value("iterations", res.iterations)
    out.value("restarts_run", res.restarts_run)
    out.value("best_restart", res.best_restart)
    out.value("status", res.status)
    out.value("failed_restarts", len(res.failures))
    if args.out:
        rio.write_result(args.out, res, {"body_a": a.name, "body_b": b.name, "seed": cfg.optimizer.seed})
        out.value("out", str(args.out))
    return EXIT_OK


def cmd_scan(args, cfg: RunConfig, out: _Out) -> int:
    a, b = rio.load_body(args.body_a), rio.load_body(args.body_b)
    axes = [_parse_axis(t) for t in args.axis]
    base = None
    if args.base:
        base = placement_to_params(parse_placement(args.base))
    penalized = cfg.optimizer if args.penalized else None
    entries = scan(a, b, axes, base, cfg.quad, penalized)
    if args.out:
        rio.write_scan(args.out, entries)
        out.value("out", str(args.out))
    elif cfg.format == "text":
        rio.write_scan(sys.stdout, entries)
    flagged = sum(1 for e in entries if e.flag)
    out.value("points", len(entries))
    out.value("flagged", flagged)
    if flagged < len(entries):
        best = scan_minimum(entries)
        out.value("best_objective", best.objective)
        out.value("best_params", ",".join(repr(float(v)) for v in best.params))
    return EXIT_OK


def cmd_match(args, cfg: RunConfig, out: _Out) -> int:
    bodies = [rio.load_body(p) for p in args.bodies]
    m = match_pairs(bodies, cfg.optimizer, cfg.quad)
    if args.out:
        rio.write_match(args.out, m)
        out.value("out", str(args.out))
    elif cfg.format == "text":
        rio.write_match(sys.stdout, m)
    out.doc["names"] = m.names
    out.doc["energies"] = [[None if math.isnan(v) else float(v) for v in row] for row in m.energies]
    for i, j in enumerate(m.best_partner):
        out.value(f"best[{m.names[i]}]", "" if j is None else m.names[j])
    out.value("failed_pairs", len(m.errors) // 2)
    if len(m.errors) == len(bodies) * (len(bodies) - 1):
        raise OptimizationError("every pair failed", causes=sorted(m.errors.items()))
    return EXIT_OK


def cmd_field_energy(args, cfg: RunConfig, out: _Out) -> int:
    body = rio.load_body(args.body)
    fld = rio.load_field(args.field)
    e = field_energy(body, _placement_arg(args.placement), fld, cfg.quad)
    q, neutral = neutrality_report(body)
    out.value("field_energy", e)
    out.value("net_charge", q)
    out.value("neutral", neutral)
    return EXIT_OK


def cmd_verify(args, cfg: RunConfig, out: _Out) -> int:
    spec = OracleSpec(half_width=args.half_width, spacing=args.oracle_spacing, samples=args.oracle_samples,
                      seed=cfg.quad.seed)
    checks = run_suite(spec, on_check=(lambda c: out.text(c.line())) if cfg.format == "text" else None)
    failed = [c for c in checks if not c.passed]
    out.doc["results"] = [{"pair": c.pair, "kernel": c.kernel, "method": c.method, "closed_form": c.closed_form,
                          "reference": c.reference, "stderr": c.stderr, "error": c.error,
                          "tolerance": c.tolerance, "passed": c.passed} for c in checks]
    out.value("checks", len(checks))
    out.value("failed", len(failed))
    return EXIT_VERIFY if failed else EXIT_OK


# -- parser ------------------------------------------------------------------

def _optimizer_flags(p: argparse.ArgumentParser) -> None:
    d = OptimizerConfig()
    p.add_argument("--restarts", type=int, default=d.restarts)
    p.add_argument("--max-iterations", type=int, default=d.max_iterations)
    p.add_argument("--gradient-tolerance", type=float, default=d.gradient_tolerance)
    p.add_argument("--step-tolerance", type=float, default=d.step_tolerance)
    p.add_argument("--box", default=None, help="translation box 'x0,y0,z0:x1,y1,z1' (default +-5 bohr cube)")
    p.add_argument("--min-separation", type=float, default=d.min_nucleus_separation)
    p.add_argument("--stiffness", type=float, default=d.penalty_stiffness)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rigidq", description="Electrostatics of rigid charge bodies.")
    parser.add_argument("--quad-spacing", type=float, default=0.25, help="grid quadrature spacing (bohr)")
    parser.add_argument("--quad-method", choices=("grid-cellsum", "monte-carlo"), default="grid-cellsum")
    parser.add_argument("--mc-samples", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=1, help="root seed for every random stream")
    parser.add_argument("--format", choices=("text", "machine"), default="text")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("energy", help="interaction energy breakdown of two placed bodies")
    p.add_argument("--body-a", required=True)
    p.add_argument("--body-b", required=True)
    p.add_argument("--placement-a")
    p.add_argument("--placement-b")
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("potential", help="electrostatic potential at points or on a lattice")
    p.add_argument("--body", required=True)
    p.add_argument("--placement")
    where = p.add_mutually_exclusive_group(required=True)
    where.add_argument("--points", help="CSV of x,y,z rows")
    where.add_argument("--grid", help="'ox,oy,oz:sx,sy,sz:nx,ny,nz'")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_potential)

    p = sub.add_parser("minimize", help="multistart minimization of the interaction energy")
    p.add_argument("--body-a", required=True)
    p.add_argument("--body-b", required=True)
    p.add_argument("--out")
    _optimizer_flags(p)
    p.set_defaults(func=cmd_minimize)

    p = sub.add_parser("scan", help="energy on a lattice of placements")
    p.add_argument("--body-a", required=True)
    p.add_argument("--body-b", required=True)
    p.add_argument("--axis", action="append", required=True, help="'coord:lo:hi:n', repeatable")
    p.add_argument("--base", help="placement for the coordinates not scanned")
    p.add_argument("--penalized", action="store_true", help="add the nucleus hinge penalty to the objective")
    p.add_argument("--out")
    _optimizer_flags(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("match", help="best pair energies over a set of bodies")
    p.add_argument("bodies", nargs="+")
    p.add_argument("--out")
    _optimizer_flags(p)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("field-energy", help="energy of a placed body in an external potential")
    p.add_argument("--body", required=True)
    p.add_argument("--field", required=True)
    p.add_argument("--placement")
    p.set_defaults(func=cmd_field_energy)

    p = sub.add_parser("verify", help="check closed-form kernels against the brute-force oracles")
    p.add_argument("--oracle-spacing", type=float, default=0.1)
    p.add_argument("--half-width", type=float, default=8.0)
    p.add_argument("--oracle-samples", type=int, default=1_000_000)
    p.set_defaults(func=cmd_verify)
    return parser


def _config(args) -> RunConfig:
    quad = QuadratureSpec(method=args.quad_method, spacing=args.quad_spacing, samples=args.mc_samples, seed=args.seed)
    opt = OptimizerConfig()
    if hasattr(args, "restarts"):
        opt = OptimizerConfig(
            restarts=args.restarts, seed=args.seed, max_iterations=args.max_iterations,
            gradient_tolerance=args.gradient_tolerance, step_tolerance=args.step_tolerance,
            translation_box=parse_bounds(args.box) if args.box else Bounds.cube(5.0),
            min_nucleus_separation=args.min_separation, penalty_stiffness=args.stiffness,
        )
    return RunConfig(quad, opt, args.format)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        cfg = _config(args)
        out = _Out(cfg.format, sys.stdout)
        code = args.func(args, cfg, out)
        out.done()
        return code
    except SingularityError as exc:
        sys.stderr.write(f"error: singularity: {exc}\n")
        return EXIT_SINGULAR
    except OptimizationError as exc:
        sys.stderr.write(f"error: optimization failed: {exc}\n")
        for cause in exc.causes:
            sys.stderr.write(f"  {cause}\n")
        return EXIT_OPTIMIZE
    except (InputError, InvalidArgumentError, DomainError, ResourceError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except RigidQError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
