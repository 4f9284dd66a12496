"""Hopf tori over closed curves on S^2 and their Willmore energies.

The Hopf map is ``q -> q i conj(q)`` (unit quaternions to unit imaginary
quaternions).  Right multiplication by ``exp(i phi)`` moves along a fiber.
A curve is lifted horizontally by composing, edge by edge, the minimal
rotation that carries each vertex to the next; the holonomy of that lift is
spread along the curve so that the torus closes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .discrete_elastic import elastic_energy
from .errors import DegenerateGrid, IoFailure, LiftDrift
from .sphere_geom import DiscreteCurve

BASE_DIRECTION = np.array([1.0, 0.0, 0.0])
LIFT_TOL = 1e-5


def qmul(a, b):
    """Hamilton product of quaternions stored as ``(..., 4)`` arrays ``(w, x, y, z)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    aw, ax, ay, az = np.moveaxis(a, -1, 0)
    bw, bx, by, bz = np.moveaxis(b, -1, 0)
    return np.stack([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ], axis=-1)


def qconj(q):
    q = np.asarray(q, dtype=float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def hopf_projection(q) -> np.ndarray:
    """``q i conj(q)`` as a point of S^2; accepts ``(..., 4)`` arrays."""
    q = np.asarray(q, dtype=float)
    i = np.zeros(q.shape)
    i[..., 1] = 1.0
    return qmul(qmul(q, i), qconj(q))[..., 1:]


def fiber_phase(phi):
    """Unit quaternions ``exp(i phi)``."""
    phi = np.asarray(phi, dtype=float)
    out = np.zeros(phi.shape + (4,))
    out[..., 0] = np.cos(phi)
    out[..., 1] = np.sin(phi)
    return out


def minimal_rotation(a, b):
    """Unit quaternions rotating ``a`` to ``b`` about ``a x b`` (rows of unit vectors)."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    # half-way vector trick: q = (1 + a.b, a x b) normalised
    w = 1.0 + np.einsum("ij,ij->i", a, b)
    q = np.concatenate([w[:, None], np.cross(a, b)], axis=1)
    return q / np.linalg.norm(q, axis=1, keepdims=True)


@dataclass(frozen=True, eq=False)
class HopfTorusSample:
    grid: np.ndarray  # (N_s, N_f, 4)
    base: np.ndarray  # (N_s, 3)
    holonomy: float  # fiber angle picked up by the horizontal lift

    @property
    def shape(self):
        return self.grid.shape[:2]


def horizontal_lift(c: DiscreteCurve):
    """Discrete horizontal lift and its holonomy angle.

    Returns ``(q, alpha)`` where ``q`` has one quaternion per vertex and
    continuing the lift once around the curve lands on ``q[0] exp(i alpha)``.
    """
    p = c.vertices
    q0 = minimal_rotation(BASE_DIRECTION, p[:1])[0]
    steps = minimal_rotation(p, np.roll(p, -1, axis=0))
    qs = np.empty((len(p), 4))
    qs[0] = q0
    for i in range(1, len(p)):
        qs[i] = qmul(steps[i - 1], qs[i - 1])
        qs[i] /= np.linalg.norm(qs[i])
    end = qmul(steps[-1], qs[-1])
    rel = qmul(qconj(q0), end)  # exp(i alpha) up to roundoff
    return qs, math.atan2(rel[1], rel[0])


def lift_curve(c: DiscreteCurve, N_f: int = 64, phase: float = 0.0) -> HopfTorusSample:
    """Sample the Hopf torus over ``c`` on an ``N x N_f`` grid.

    The lift is twisted along the curve by ``exp(-i alpha s / L)`` so that it
    closes; this only reparametrizes the torus.
    """
    if N_f < 32:
        raise DegenerateGrid("need at least 32 fiber samples")
    qs, alpha = horizontal_lift(c)
    edges = c.edge_lengths()
    s = np.concatenate([[0.0], np.cumsum(edges)[:-1]]) / edges.sum()
    closed = qmul(qs, fiber_phase(-alpha * s))
    phis = phase + 2.0 * math.pi * np.arange(N_f) / N_f
    grid = qmul(closed[:, None, :], fiber_phase(phis)[None, :, :])
    drift = np.abs(hopf_projection(grid) - c.vertices[:, None, :]).max()
    if drift > LIFT_TOL:
        raise LiftDrift(f"projection of the lift misses the base curve by {drift:.2e}")
    return HopfTorusSample(grid, c.vertices.copy(), alpha)


def _normal_4d(x, xu, xv):
    # generalized cross product: the vector orthogonal to three vectors in R^4
    m = np.stack([x, xu, xv], axis=-2)  # (..., 3, 4)
    out = np.empty(x.shape)
    cols = [1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]
    for k in range(4):
        out[..., k] = (-1) ** k * np.linalg.det(m[..., cols[k]])
    return out


def willmore_density(t: HopfTorusSample):
    """Per-vertex ``(1 + |H|^2 / 4)`` and area weights ``sqrt(det g)``."""
    x = t.grid
    n_s, n_f = t.shape
    if n_s < 64 or n_f < 64:
        raise DegenerateGrid("need at least 64 samples in each grid direction")
    up, um = np.roll(x, -1, axis=0), np.roll(x, 1, axis=0)
    vp, vm = np.roll(x, -1, axis=1), np.roll(x, 1, axis=1)
    xu = 0.5 * (up - um)
    xv = 0.5 * (vp - vm)
    xuu = up - 2.0 * x + um
    xvv = vp - 2.0 * x + vm
    xuv = 0.25 * (np.roll(up, -1, axis=1) - np.roll(up, 1, axis=1)
                  - np.roll(um, -1, axis=1) + np.roll(um, 1, axis=1))
    e = np.einsum("...i,...i", xu, xu)
    f = np.einsum("...i,...i", xu, xv)
    g = np.einsum("...i,...i", xv, xv)
    det = e * g - f * f
    if np.any(det <= 1e-300):
        raise DegenerateGrid("degenerate metric on the grid")
    nu = _normal_4d(x, xu, xv)
    nu /= np.linalg.norm(nu, axis=-1, keepdims=True)
    l = np.einsum("...i,...i", xuu, nu)
    m = np.einsum("...i,...i", xuv, nu)
    n = np.einsum("...i,...i", xvv, nu)
    h = (g * l - 2.0 * f * m + e * n) / det
    return 1.0 + 0.25 * h * h, np.sqrt(det)


def willmore_energy(t: HopfTorusSample) -> float:
    """Quadrature of ``1 + |H|^2 / 4`` over the torus, ``H`` the mean curvature in S^3."""
    dens, area = willmore_density(t)
    return float(np.sum(dens * area))


def torus_area(t: HopfTorusSample) -> float:
    return float(np.sum(willmore_density(t)[1]))


@dataclass
class ThresholdReport:
    willmore: float
    curve_energy: float
    pi_factor_defect: float
    below_4pi2: bool
    below_8pi2_over_sqrt2: bool
    below_li_yau: bool
    curve_below_4pi: bool
    curve_below_8pi_over_sqrt2: bool

    def as_dict(self):
        return dict(self.__dict__)


def threshold_report(c: DiscreteCurve, N_f: int = 128) -> ThresholdReport:
    """Willmore energy of the Hopf torus over ``c`` against the reference thresholds.

    ``below_li_yau`` only records ``Will < 8 pi``; injectivity is not checked.
    """
    will = willmore_energy(lift_curve(c, N_f))
    w = elastic_energy(c)
    return ThresholdReport(
        willmore=will,
        curve_energy=w,
        pi_factor_defect=abs(will - math.pi * w) / will,
        below_4pi2=will < 4.0 * math.pi ** 2,
        below_8pi2_over_sqrt2=will < 8.0 * math.pi ** 2 / math.sqrt(2.0),
        below_li_yau=will < 8.0 * math.pi,
        curve_below_4pi=w < 4.0 * math.pi,
        curve_below_8pi_over_sqrt2=w < 8.0 * math.pi / math.sqrt(2.0),
    )


def stereographic(points, pole=(0.0, 0.0, 0.0, 1.0)):
    """Stereographic projection ``S^3 -> R^3`` from ``pole``."""
    pole = np.asarray(pole, dtype=float)
    pole = pole / np.linalg.norm(pole)
    # orthonormal basis of the complement of the pole
    q, _ = np.linalg.qr(np.column_stack([pole, np.eye(4)]))
    basis = q[:, 1:4]
    x = np.asarray(points, dtype=float)
    w = x @ pole
    denom = 1.0 - w
    if np.any(denom < 1e-9):
        raise DegenerateGrid("a grid point coincides with the projection pole")
    return (x @ basis) / denom[..., None]


def write_obj(t: HopfTorusSample, path, pole=(0.0, 0.0, 0.0, 1.0)):
    """Write the stereographically projected torus as a triangulated OBJ mesh."""
    n_s, n_f = t.shape
    pts = stereographic(t.grid.reshape(-1, 4), pole)
    idx = np.arange(n_s * n_f).reshape(n_s, n_f) + 1
    a = idx
    b = np.roll(idx, -1, axis=0)
    c = np.roll(b, -1, axis=1)
    d = np.roll(idx, -1, axis=1)
    lines = [f"v {x:.9f} {y:.9f} {z:.9f}" for x, y, z in pts]
    for i0, i1, i2, i3 in zip(a.ravel(), b.ravel(), c.ravel(), d.ravel()):
        lines.append(f"f {i0} {i1} {i2}")
        lines.append(f"f {i0} {i2} {i3}")
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return path
