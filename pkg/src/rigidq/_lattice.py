"""Point-charge and lattice Coulomb sums with near-pair regularization.

Shared by the grid paths of :mod:`rigidq.coulomb` and by :mod:`rigidq.oracle`.
A pair closer than ``near_radius`` interacts through the smeared kernel
``erf(r/s)/r`` instead of ``1/r``.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.fft as sfft
from scipy.special import erf

from .errors import ResourceError

TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)
DEFAULT_MAX_PAIRS = 4e9
DEFAULT_MAX_FFT_ELEMENTS = 1.5e8
_BLOCK = 2_000_000
_SERIES_X = 1e-3


def erf_over_r(r, s):
    """``erf(r/s)/r`` with its finite limit ``2/(sqrt(pi) s)`` at r -> 0.

    ``s == 0`` means two point charges and yields ``1/r``.
    """
    r = np.asarray(r, dtype=float)
    s = np.broadcast_to(np.asarray(s, dtype=float), r.shape)
    out = np.empty(np.broadcast(r, s).shape)
    point = s == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(point, np.inf, r / np.where(point, 1.0, s))
        small = x < _SERIES_X
        x2 = x * x
        series = TWO_OVER_SQRT_PI / np.where(point, 1.0, s) * (1.0 - x2 / 3.0 + x2 * x2 / 10.0)
        out = np.where(point, 1.0 / r, np.where(small, series, erf(x) / r))
    return out if out.ndim else float(out)


def _near_kernel(r, near_radius, s_near):
    k = erf_over_r(r, s_near)
    return np.where(r < near_radius, k, 1.0 / np.where(r == 0, 1.0, r))


def pair_sum(pos_a, q_a, pos_b, q_b, near_radius=0.0, s_near=0.0, max_pairs=DEFAULT_MAX_PAIRS) -> float:
    """Direct ``sum_ij q_a[i] q_b[j] K(|a_i - b_j|)`` in fixed block order.

    Pairs at distance below ``near_radius`` use ``erf(r/s_near)/r``; the
    caller guarantees no exactly coincident pair when ``near_radius`` is 0.
    """
    pos_a, pos_b = np.asarray(pos_a, float).reshape(-1, 3), np.asarray(pos_b, float).reshape(-1, 3)
    q_a, q_b = np.asarray(q_a, float).ravel(), np.asarray(q_b, float).ravel()
    na, nb = len(q_a), len(q_b)
    if na == 0 or nb == 0:
        return 0.0
    if float(na) * nb > max_pairs:
        raise ResourceError(
            f"direct Coulomb sum needs {float(na) * nb:.3g} pair evaluations, cap is {max_pairs:.3g}",
            required=float(na) * nb,
        )
    # operand order fixed by content so that swapping a and b is bit-identical
    if _order_key(pos_a, q_a) > _order_key(pos_b, q_b):
        pos_a, q_a, pos_b, q_b, na, nb = pos_b, q_b, pos_a, q_a, nb, na
    rows = max(1, _BLOCK // nb)
    partial = []
    for start in range(0, na, rows):
        pa = pos_a[start:start + rows]
        d = pa[:, None, :] - pos_b[None, :, :]
        r = np.sqrt(np.einsum("ijk,ijk->ij", d, d))
        if near_radius > 0:
            k = _near_kernel(r, near_radius, s_near)
        else:
            k = 1.0 / r
        partial.append(float(q_a[start:start + rows] @ (k @ q_b)))
    return math.fsum(partial)


def potentials(pos, q, points, near_radius=0.0, s_near=0.0) -> np.ndarray:
    """``sum_i q[i] K(|points_j - pos_i|)`` for every probe point."""
    pos, q = np.asarray(pos, float).reshape(-1, 3), np.asarray(q, float).ravel()
    points = np.asarray(points, float).reshape(-1, 3)
    out = np.zeros(len(points))
    if len(q) == 0:
        return out
    rows = max(1, _BLOCK // len(q))
    for start in range(0, len(points), rows):
        d = points[start:start + rows, None, :] - pos[None, :, :]
        r = np.sqrt(np.einsum("ijk,ijk->ij", d, d))
        k = _near_kernel(r, near_radius, s_near) if near_radius > 0 else 1.0 / r
        out[start:start + rows] = k @ q
    return out


def _order_key(pos, q):
    return (len(q), pos.tobytes(), q.tobytes())


def lattice_pair_sum(
    origin_a, values_a, origin_b, values_b, spacing, axes=None,
    near_radius=0.0, s_near=0.0, max_elements=DEFAULT_MAX_FFT_ELEMENTS,
) -> float:
    """Same sum as :func:`pair_sum` for two charge arrays on parallel lattices.

    Both lattices share ``spacing`` and ``axes``; their origins may differ by
    any offset.  The kernel depends only on the index difference, so the
    double sum is a linear convolution evaluated with real FFTs.
    """
    a = np.asarray(values_a, float)
    b = np.asarray(values_b, float)
    if a.size == 0 or b.size == 0 or not np.any(a) or not np.any(b):
        return 0.0
    oa, ob = np.asarray(origin_a, float), np.asarray(origin_b, float)
    if _order_key(oa, a) > _order_key(ob, b):
        a, b, oa, ob = b, a, ob, oa
    delta = oa - ob
    if axes is not None:
        delta = np.asarray(axes, float).T @ delta
    h = np.asarray(spacing, float)
    na, nb = np.array(a.shape), np.array(b.shape)
    kshape = na + nb - 1
    fshape = [sfft.next_fast_len(int(n), real=True) for n in kshape]
    if float(np.prod(fshape)) > max_elements:
        raise ResourceError(
            f"lattice Coulomb sum needs an FFT of {np.prod(fshape):.3g} elements, cap is {max_elements:.3g}",
            required=float(np.prod(fshape)),
        )
    d = [delta[k] + h[k] * np.arange(-(nb[k] - 1), na[k]) for k in range(3)]
    kern = d[0][:, None, None] ** 2 + d[1][None, :, None] ** 2 + d[2][None, None, :] ** 2
    np.sqrt(kern, out=kern)
    near = np.nonzero(kern < near_radius) if near_radius > 0 else None
    r_near = kern[near].copy() if near is not None else None
    with np.errstate(divide="ignore"):
        np.divide(1.0, kern, out=kern)
    if near is not None and r_near.size:
        kern[near] = erf_over_r(r_near, s_near)
    spec = sfft.rfftn(kern, fshape)
    del kern
    spec *= sfft.rfftn(b, fshape)
    conv = sfft.irfftn(spec, fshape)
    del spec
    sl = tuple(slice(nb[k] - 1, nb[k] - 1 + na[k]) for k in range(3))
    return float(np.sum(a * conv[sl]))
