"""Rigid placements: translation plus intrinsic Z-Y-Z Euler rotation.

A placement maps a body-frame point ``x`` to ``S(alpha, beta, gamma) @ x + t``
with ``S = Rz(alpha) @ Ry(beta) @ Rz(gamma)``.  Lengths are in bohr, angles
in radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError

TWO_PI = 2.0 * math.pi
# Below this |sin(beta)| the Z-Y-Z decomposition is treated as gimbal-locked.
_GIMBAL_EPS = 1e-12


def _wrap(angle: float) -> float:
    """Wrap into [-pi, pi)."""
    a = math.fmod(angle + math.pi, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    a -= math.pi
    # fmod can round up to exactly +pi
    return -math.pi if a >= math.pi else a


def _check_finite(values, what: str) -> None:
    for v in values:
        if not math.isfinite(v):
            raise InvalidArgumentError(f"{what} must be finite, got {tuple(values)}")


@dataclass(frozen=True)
class EulerAngles:
    """Intrinsic Z-Y-Z Euler angles in radians."""

    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        _check_finite((self.alpha, self.beta, self.gamma), "Euler angles")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.alpha, self.beta, self.gamma)

    def canonical(self) -> "EulerAngles":
        """Equivalent angles with beta in [0, pi] and alpha, gamma in [-pi, pi)."""
        a, b, g = self.alpha, _wrap(self.beta), self.gamma
        if b < 0.0:
            # Ry(-b) = Rz(pi) Ry(b) Rz(pi)
            b, a, g = -b, a + math.pi, g + math.pi
        return EulerAngles(_wrap(a), b, _wrap(g))


def _rz(t: float) -> np.ndarray:
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _ry(t: float) -> np.ndarray:
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotation_matrix(angles: EulerAngles | Sequence[float]) -> np.ndarray:
    """Proper rotation ``Rz(alpha) @ Ry(beta) @ Rz(gamma)``."""
    if not isinstance(angles, EulerAngles):
        angles = EulerAngles(*map(float, angles))
    return _rz(angles.alpha) @ _ry(angles.beta) @ _rz(angles.gamma)


def angles_from_matrix(matrix) -> EulerAngles:
    """Canonical Z-Y-Z angles reproducing ``matrix``.

    The result reproduces the matrix entrywise to ~1e-15 even close to
    gimbal lock: alpha comes from the third column, and gamma from whichever
    of (alpha + gamma) or (alpha - gamma) the upper 2x2 block conditions
    well.  At exact gimbal lock gamma is set to 0.
    """
    r = np.asarray(matrix, dtype=float)
    if r.shape != (3, 3) or not np.all(np.isfinite(r)):
        raise InvalidArgumentError("rotation matrix must be a finite 3x3 array")
    sb = 0.5 * (math.hypot(r[0, 2], r[1, 2]) + math.hypot(r[2, 0], r[2, 1]))
    cb = r[2, 2]
    beta = math.atan2(sb, cb)
    total = math.atan2(r[1, 0] - r[0, 1], r[0, 0] + r[1, 1])  # alpha + gamma
    diff = math.atan2(-(r[0, 1] + r[1, 0]), r[1, 1] - r[0, 0])  # alpha - gamma
    if sb < _GIMBAL_EPS:
        if cb > 0.0:
            alpha, gamma = total, 0.0
        else:
            alpha, gamma = diff, 0.0
    else:
        alpha = math.atan2(r[1, 2], r[0, 2])
        gamma = total - alpha if cb >= 0.0 else alpha - diff
    return EulerAngles(alpha, beta, gamma).canonical()


@dataclass(frozen=True)
class RigidPlacement:
    """Translation (bohr) plus Euler rotation; immutable."""

    translation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    angles: EulerAngles = field(default_factory=EulerAngles)

    def __post_init__(self):
        t = tuple(float(v) for v in self.translation)
        if len(t) != 3:
            raise InvalidArgumentError("translation must have 3 components")
        _check_finite(t, "translation")
        object.__setattr__(self, "translation", t)
        if not isinstance(self.angles, EulerAngles):
            object.__setattr__(self, "angles", EulerAngles(*map(float, self.angles)))

    @classmethod
    def identity(cls) -> "RigidPlacement":
        return cls()

    @classmethod
    def from_matrix(cls, matrix, translation) -> "RigidPlacement":
        return cls(tuple(translation), angles_from_matrix(matrix))

    @cached_property
    def matrix(self) -> np.ndarray:
        m = rotation_matrix(self.angles)
        m.flags.writeable = False
        return m

    @cached_property
    def vector(self) -> np.ndarray:
        v = np.array(self.translation)
        v.flags.writeable = False
        return v

    def apply(self, points) -> np.ndarray:
        """Map one point (shape (3,)) or many (shape (n, 3))."""
        return apply_placement(self, points)

    def canonical(self) -> "RigidPlacement":
        return RigidPlacement(self.translation, self.angles.canonical())

    def inverse(self) -> "RigidPlacement":
        rt = self.matrix.T
        return RigidPlacement.from_matrix(rt, -(rt @ self.vector))


def apply_placement(p: RigidPlacement, point) -> np.ndarray:
    """Return ``S(omega) @ point + t`` (row-wise for an (n, 3) array)."""
    x = np.asarray(point, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError("point coordinates must be finite")
    if x.ndim == 1:
        return p.matrix @ x + p.vector
    return x @ p.matrix.T + p.vector


def compose(p2: RigidPlacement, p1: RigidPlacement) -> RigidPlacement:
    """Placement equivalent to applying ``p1`` first, then ``p2``."""
    return RigidPlacement.from_matrix(p2.matrix @ p1.matrix, p2.matrix @ p1.vector + p2.vector)


def inverse(p: RigidPlacement) -> RigidPlacement:
    return p.inverse()


# -- parameter vectors ------------------------------------------------------

PARAM_NAMES = ("tx", "ty", "tz", "alpha", "beta", "gamma")


def placement_to_params(p: RigidPlacement) -> np.ndarray:
    """6-vector (tx, ty, tz, alpha, beta, gamma)."""
    return np.array(p.translation + p.angles.as_tuple())


def params_to_placement(params, canonicalize: bool = False) -> RigidPlacement:
    v = np.asarray(params, dtype=float)
    if v.shape != (6,):
        raise InvalidArgumentError(f"placement parameters need 6 components, got shape {v.shape}")
    p = RigidPlacement(tuple(v[:3]), EulerAngles(*v[3:]))
    return p.canonical() if canonicalize else p


def parse_placement(text: str) -> RigidPlacement:
    """Parse the CLI form ``"tx,ty,tz,alpha,beta,gamma"``."""
    parts = [s.strip() for s in text.split(",")]
    if len(parts) != 6:
        raise InvalidArgumentError(f"placement needs 6 comma-separated numbers, got {text!r}")
    try:
        values = [float(s) for s in parts]
    except ValueError as exc:
        raise InvalidArgumentError(f"bad placement {text!r}: {exc}") from None
    return params_to_placement(values)


def format_placement(p: RigidPlacement) -> str:
    return ",".join(repr(float(v)) for v in placement_to_params(p))


# -- sampling ---------------------------------------------------------------

@dataclass(frozen=True)
class Bounds:
    """Axis-aligned box ``lower <= x <= upper`` (bohr)."""

    lower: tuple[float, float, float]
    upper: tuple[float, float, float]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != 3 or len(hi) != 3:
            raise InvalidArgumentError("bounds need 3 components on each side")
        _check_finite(lo + hi, "bounds")
        if any(h < l for l, h in zip(lo, hi)):
            raise InvalidArgumentError(f"bounds are inverted: {lo} > {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def cube(cls, half_width: float, center=(0.0, 0.0, 0.0)) -> "Bounds":
        c = tuple(float(v) for v in center)
        return cls(tuple(v - half_width for v in c), tuple(v + half_width for v in c))

    @property
    def is_point(self) -> bool:
        return self.lower == self.upper

    @property
    def is_degenerate(self) -> bool:
        """True when some but not all axes have zero extent."""
        widths = [h - l for l, h in zip(self.lower, self.upper)]
        return any(w == 0.0 for w in widths) and not all(w == 0.0 for w in widths)


def parse_bounds(text: str) -> Bounds:
    """Parse ``"x0,y0,z0:x1,y1,z1"``."""
    try:
        lo, hi = text.split(":")
        return Bounds(tuple(float(v) for v in lo.split(",")), tuple(float(v) for v in hi.split(",")))
    except ValueError as exc:
        raise InvalidArgumentError(f"bad bounds {text!r}: {exc}") from None


def random_rotation_matrix(rng: np.random.Generator) -> np.ndarray:
    """Haar-uniform rotation via a uniform unit quaternion (Shoemake)."""
    u1, u2, u3 = rng.random(3)
    a, b = math.sqrt(1.0 - u1), math.sqrt(u1)
    w, x = a * math.sin(TWO_PI * u2), a * math.cos(TWO_PI * u2)
    y, z = b * math.sin(TWO_PI * u3), b * math.cos(TWO_PI * u3)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def sample_placement(rng: np.random.Generator | int, box: Bounds) -> RigidPlacement:
    """Translation uniform in ``box``, rotation uniform on SO(3).

    A box must be either a single point or have positive extent on every
    axis; a flat box (zero width on some axes only) is rejected.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    if box.is_degenerate:
        raise InvalidArgumentError(f"translation box is degenerate: {box}")
    lo, hi = np.array(box.lower), np.array(box.upper)
    t = lo + (hi - lo) * rng.random(3)
    return RigidPlacement.from_matrix(random_rotation_matrix(rng), t)
