"""File formats: body and field descriptions, grid files, reports.

Body and field files are YAML (JSON is accepted as a subset).  Validation
errors carry ``path:line:column`` of the offending node.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from .charge_model import ChargeBody, GaussianComponent, GridDensity, Nucleus
from .coulomb import PotentialGrid
from .errors import InputError, RigidQError
from .field import ExternalField, LinearField, PointChargeField, SampledGridField, UniformField, combine
from .geometry import PARAM_NAMES
from .optimize import MatchResult, OptimizationResult, ScanEntry

GRID_MAGIC = "RIGIDQ-GRID"
POTENTIAL_MAGIC = "RIGIDQ-POTENTIAL"
FORMAT_VERSION = "1"
BREAKDOWN_FIELDS = ("ee", "en_a_to_b", "en_b_to_a", "nn", "total")


def fmt(x: float) -> str:
    """Decimal with 12 digits after the point for ordinary magnitudes, else 12-digit scientific."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if x == 0 or 1e-1 <= abs(x) < 1e6:
        return f"{x:.12f}"
    return f"{x:.12e}"


# -- structured-text documents ---------------------------------------------

class _Doc:
    """A YAML node tree with source locations for diagnostics."""

    def __init__(self, path: Path, text: str):
        self.path = path
        self.loader = yaml.SafeLoader(text)
        try:
            self.root = self.loader.get_single_node()
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise InputError(f"cannot parse: {getattr(exc, 'problem', exc)}", self._where(mark)) from exc
        if self.root is None:
            raise InputError("file is empty", str(path))

    def _where(self, mark) -> str:
        if mark is None:
            return str(self.path)
        return f"{self.path}:{mark.line + 1}:{mark.column + 1}"

    def where(self, node) -> str:
        return self._where(node.start_mark)

    def fail(self, node, message: str):
        raise InputError(message, self.where(node))

    def mapping(self, node, what: str) -> dict:
        if not isinstance(node, yaml.MappingNode):
            self.fail(node, f"{what} must be a mapping")
        out = {}
        for k, v in node.value:
            out[self.loader.construct_object(k)] = v
        return out

    def sequence(self, node, what: str) -> list:
        if not isinstance(node, yaml.SequenceNode):
            self.fail(node, f"{what} must be a list")
        return list(node.value)

    def scalar(self, node, what: str):
        if not isinstance(node, yaml.ScalarNode):
            self.fail(node, f"{what} must be a scalar")
        return self.loader.construct_object(node)

    def number(self, node, what: str) -> float:
        v = self.scalar(node, what)
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            self.fail(node, f"{what} must be a finite number, got {node.value!r}")
        return float(v)

    def vec3(self, node, what: str) -> tuple[float, float, float]:
        items = self.sequence(node, what)
        if len(items) != 3:
            self.fail(node, f"{what} must have 3 components, got {len(items)}")
        return tuple(self.number(n, f"{what}[{i}]") for i, n in enumerate(items))

    def require(self, m: dict, key: str, node, what: str):
        if key not in m:
            self.fail(node, f"{what} is missing required field {key!r}")
        return m[key]


def _read_text(path) -> tuple[Path, str]:
    path = Path(path)
    try:
        return path, path.read_text()
    except FileNotFoundError:
        raise InputError(f"no such file: {path}", str(path)) from None
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}", str(path)) from None


def load_body(path) -> ChargeBody:
    """Read a body file.

    ``name``; ``nuclei: [{position: [x,y,z], Z: z}]``; ``density`` either
    ``{type: gaussians, components: [{center, sigma, weight}]}`` or
    ``{type: grid, file: relative/path.grid, electron_count: n}``.
    """
    path, text = _read_text(path)
    doc = _Doc(path, text)
    top = doc.mapping(doc.root, "body")
    name = str(doc.scalar(top["name"], "name")) if "name" in top else path.stem
    nuclei = []
    if "nuclei" in top and not _is_null(top["nuclei"]):
        for i, node in enumerate(doc.sequence(top["nuclei"], "nuclei")):
            m = doc.mapping(node, f"nuclei[{i}]")
            pos = doc.vec3(doc.require(m, "position", node, f"nuclei[{i}]"), f"nuclei[{i}].position")
            z_node = doc.require(m, "Z", node, f"nuclei[{i}]")
            z = doc.number(z_node, f"nuclei[{i}].Z")
            if not z > 0:
                doc.fail(z_node, f"nuclei[{i}].Z must be > 0, got {z}")
            nuclei.append(Nucleus(pos, z))
    gaussians: list[GaussianComponent] = []
    grid = None
    count = None
    if "density" in top and not _is_null(top["density"]):
        dnode = top["density"]
        d = doc.mapping(dnode, "density")
        kind = doc.scalar(doc.require(d, "type", dnode, "density"), "density.type")
        if kind == "gaussians":
            comps = d.get("components")
            for i, node in enumerate(doc.sequence(comps, "density.components") if comps is not None else []):
                m = doc.mapping(node, f"components[{i}]")
                c = doc.vec3(doc.require(m, "center", node, f"components[{i}]"), f"components[{i}].center")
                s_node = doc.require(m, "sigma", node, f"components[{i}]")
                w_node = doc.require(m, "weight", node, f"components[{i}]")
                s, w = doc.number(s_node, f"components[{i}].sigma"), doc.number(w_node, f"components[{i}].weight")
                if not s > 0:
                    doc.fail(s_node, f"components[{i}].sigma must be > 0, got {s}")
                if not w > 0:
                    doc.fail(w_node, f"components[{i}].weight must be > 0, got {w}")
                gaussians.append(GaussianComponent(c, s, w))
            if "electron_count" in d:
                count = doc.number(d["electron_count"], "density.electron_count")
        elif kind == "grid":
            f_node = doc.require(d, "file", dnode, "density")
            n_node = doc.require(d, "electron_count", dnode, "density")
            count = doc.number(n_node, "density.electron_count")
            grid = read_grid(path.parent / str(doc.scalar(f_node, "density.file")))
        else:
            doc.fail(dnode, f"density.type must be 'gaussians' or 'grid', got {kind!r}")
    try:
        return ChargeBody(name, tuple(nuclei), tuple(gaussians), grid, count)
    except RigidQError as exc:
        raise InputError(str(exc), str(path)) from None


def _is_null(node) -> bool:
    return isinstance(node, yaml.ScalarNode) and node.tag == "tag:yaml.org,2002:null"


def load_field(path) -> ExternalField:
    """Read a field file: one field mapping or a list of them (summed)."""
    path, text = _read_text(path)
    doc = _Doc(path, text)
    nodes = doc.sequence(doc.root, "fields") if isinstance(doc.root, yaml.SequenceNode) else [doc.root]
    if not nodes:
        raise InputError("field list is empty", doc.where(doc.root))
    return combine([_field(doc, n, i) for i, n in enumerate(nodes)])


def _field(doc: _Doc, node, i: int) -> ExternalField:
    what = f"field[{i}]"
    m = doc.mapping(node, what)
    kind = doc.scalar(doc.require(m, "type", node, what), f"{what}.type")
    try:
        if kind == "uniform":
            return UniformField(doc.number(doc.require(m, "c", node, what), f"{what}.c"))
        if kind == "linear":
            return LinearField(doc.vec3(doc.require(m, "E", node, what), f"{what}.E"))
        if kind == "point_charges":
            pos, q = [], []
            for j, cn in enumerate(doc.sequence(doc.require(m, "charges", node, what), f"{what}.charges")):
                cm = doc.mapping(cn, f"{what}.charges[{j}]")
                pos.append(doc.vec3(doc.require(cm, "position", cn, f"{what}.charges[{j}]"), "position"))
                q.append(doc.number(doc.require(cm, "q", cn, f"{what}.charges[{j}]"), "q"))
            return PointChargeField(np.array(pos, float).reshape(-1, 3), np.array(q, float))
        if kind == "grid":
            f = doc.scalar(doc.require(m, "file", node, what), f"{what}.file")
            mask = doc.number(m["mask"], f"{what}.mask") if "mask" in m and not _is_null(m["mask"]) else None
            pot = read_potential(doc.path.parent / str(f))
            if mask is None:
                mask = pot.mask
            return SampledGridField(pot.origin, pot.spacing, pot.values, mask)
    except InputError:
        raise
    except RigidQError as exc:
        doc.fail(node, str(exc))
    doc.fail(node, f"{what}.type must be uniform, linear, point_charges or grid, got {kind!r}")


# -- lattice files -----------------------------------------------------------

def _read_lattice(path, magic: str):
    path, text = _read_text(path)
    lines = text.splitlines()
    if len(lines) < 4:
        raise InputError(f"{magic} file needs a 4-line header", str(path))
    head = lines[0].split()
    if len(head) < 2 or head[0] != magic or head[1] != FORMAT_VERSION:
        raise InputError(f"line 1 must start with '{magic} {FORMAT_VERSION}', got {lines[0]!r}", f"{path}:1")
    extras = dict(tok.split("=", 1) for tok in head[2:] if "=" in tok)

    def row(k, conv, what):
        parts = lines[k].replace(",", " ").split()
        if len(parts) != 3:
            raise InputError(f"{what} needs 3 values, got {lines[k]!r}", f"{path}:{k + 1}")
        try:
            return tuple(conv(p) for p in parts)
        except ValueError:
            raise InputError(f"bad {what}: {lines[k]!r}", f"{path}:{k + 1}") from None

    origin = row(1, float, "origin")
    spacing = row(2, float, "spacing")
    counts = row(3, int, "counts")
    if min(counts) < 1:
        raise InputError(f"counts must be positive, got {counts}", f"{path}:4")
    if not all(h > 0 and math.isfinite(h) for h in spacing):
        raise InputError(f"spacing must be positive, got {spacing}", f"{path}:3")
    tokens = []
    for k in range(4, len(lines)):
        for tok in lines[k].split():
            try:
                tokens.append(float(tok))
            except ValueError:
                raise InputError(f"bad value {tok!r}", f"{path}:{k + 1}") from None
    n = counts[0] * counts[1] * counts[2]
    if len(tokens) != n:
        raise InputError(f"expected {n} values (counts {counts}), found {len(tokens)}", str(path))
    values = np.array(tokens).reshape(counts, order="F")  # x fastest
    return path, origin, spacing, values, extras


def _lattice_text(header: str, origin, spacing, values: np.ndarray) -> str:
    lines = [header, " ".join(repr(float(v)) for v in origin), " ".join(repr(float(v)) for v in spacing),
             " ".join(str(int(n)) for n in values.shape)]
    flat = values.ravel(order="F")
    for s in range(0, len(flat), 6):
        lines.append(" ".join(repr(float(v)) for v in flat[s:s + 6]))
    return "\n".join(lines) + "\n"


def read_grid(path) -> GridDensity:
    path, origin, spacing, values, _ = _read_lattice(path, GRID_MAGIC)
    try:
        return GridDensity(origin, spacing, values)
    except RigidQError as exc:
        raise InputError(str(exc), str(path)) from None


def write_grid(path, grid: GridDensity) -> None:
    Path(path).write_text(_lattice_text(f"{GRID_MAGIC} {FORMAT_VERSION}", grid.origin, grid.spacing, grid.values))


def write_potential(path, pot: PotentialGrid) -> None:
    header = f"{POTENTIAL_MAGIC} {FORMAT_VERSION} mask={pot.mask!r}"
    Path(path).write_text(_lattice_text(header, pot.origin, pot.spacing, pot.values))


def read_potential(path) -> PotentialGrid:
    path, origin, spacing, values, extras = _read_lattice(path, POTENTIAL_MAGIC)
    try:
        mask = float(extras.get("mask", "nan"))
    except ValueError:
        raise InputError(f"bad mask token {extras['mask']!r}", f"{path}:1") from None
    return PotentialGrid(origin, spacing, values, mask)


# -- points and reports ------------------------------------------------------

def read_points(path) -> np.ndarray:
    """x,y,z rows; an initial non-numeric header row is skipped."""
    path, text = _read_text(path)
    rows = []
    for k, rec in enumerate(csv.reader(text.splitlines()), start=1):
        if not rec or not "".join(rec).strip() or rec[0].lstrip().startswith("#"):
            continue
        try:
            vals = [float(v) for v in rec]
        except ValueError:
            if not rows and k == 1:
                continue
            raise InputError(f"bad point row {','.join(rec)!r}", f"{path}:{k}") from None
        if len(vals) != 3 or not all(math.isfinite(v) for v in vals):
            raise InputError(f"point row must be 3 finite numbers, got {','.join(rec)!r}", f"{path}:{k}")
        rows.append(vals)
    return np.array(rows, float).reshape(-1, 3)


def write_points_potential(path, points: np.ndarray, values: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "z", "P"])
        for p, v in zip(points, values):
            w.writerow([repr(float(p[0])), repr(float(p[1])), repr(float(p[2])), repr(float(v))])


def write_result(path, result: OptimizationResult, extra: dict | None = None) -> None:
    doc = result.as_dict()
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2, allow_nan=True) + "\n")


def read_result(path) -> dict:
    path, text = _read_text(path)
    return json.loads(text)


def write_scan(path_or_fh, entries: Sequence[ScanEntry]) -> None:
    own = isinstance(path_or_fh, (str, Path))
    fh = open(path_or_fh, "w", newline="") if own else path_or_fh
    try:
        w = csv.writer(fh)
        w.writerow([*PARAM_NAMES, *BREAKDOWN_FIELDS, "objective", "flag"])
        for e in entries:
            terms = [repr(v) for v in e.breakdown.as_dict().values()] if e.breakdown else ["nan"] * 5
            w.writerow([*(repr(float(v)) for v in e.params), *terms, repr(e.objective), e.flag])
    finally:
        if own:
            fh.close()


def write_match(path_or_fh, match: MatchResult) -> None:
    """Square CSV: header row of names, one row per body; diagonal and failed cells empty."""
    own = isinstance(path_or_fh, (str, Path))
    fh = open(path_or_fh, "w", newline="") if own else path_or_fh
    try:
        w = csv.writer(fh)
        w.writerow(["", *match.names])
        for i, name in enumerate(match.names):
            w.writerow([name, *("" if (i == j or math.isnan(v)) else repr(float(v))
                                for j, v in enumerate(match.energies[i]))])
    finally:
        if own:
            fh.close()


def read_match(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    names = rows[0][1:]
    m = np.array([[float(c) if c else math.nan for c in r[1:1 + len(names)]] for r in rows[1:]])
    return names, m
