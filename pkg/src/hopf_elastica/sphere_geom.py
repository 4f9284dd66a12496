"""Geometry of the unit 2-sphere and of discrete closed curves on it.

Points are plain ``(3,)`` float arrays (batched as ``(..., 3)``); a closed
curve is a :class:`DiscreteCurve`, a cyclic list of unit vectors.  Edges
between consecutive vertices are minimal great-circle arcs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    AntipodalPoints,
    DegenerateSegment,
    InvalidCurve,
    NearZeroVector,
    NotTangent,
    TooFewVertices,
)

MIN_VERTICES = 16
ZERO_NORM = 1e-14
MIN_GAP = 1e-10


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def project_to_sphere(v) -> np.ndarray:
    """Radially project ``v`` (shape ``(..., 3)``) onto the unit sphere."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n <= ZERO_NORM):
        raise NearZeroVector("cannot project a vector of norm <= 1e-14")
    return v / n


def geodesic_distance(a, b) -> np.ndarray:
    """Great-circle distance, via atan2 for conditioning near 0 and pi."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.arctan2(np.linalg.norm(np.cross(a, b), axis=-1), _dot(a, b))


def exp_map(base, tangent_displacement) -> np.ndarray:
    """Riemannian exponential map of S^2 at ``base``.

    Works on single points or row-wise on ``(n, 3)`` batches.  The
    displacement must be tangent: ``|w . base| <= 1e-10``.
    """
    x = np.asarray(base, dtype=float)
    w = np.asarray(tangent_displacement, dtype=float)
    if np.any(np.abs(_dot(x, w)) > 1e-10):
        raise NotTangent("displacement is not tangent to the sphere at base")
    theta = np.linalg.norm(w, axis=-1, keepdims=True)
    small = theta < ZERO_NORM
    safe = np.where(small, 1.0, theta)
    out = np.cos(theta) * x + np.sin(theta) * w / safe
    out = np.where(small, x, out)
    return project_to_sphere(out)


def log_map(base, point) -> np.ndarray:
    """Inverse of :func:`exp_map` for non-antipodal pairs."""
    x = np.asarray(base, dtype=float)
    y = np.asarray(point, dtype=float)
    u = y - _dot(x, y)[..., None] * x
    nu = np.linalg.norm(u, axis=-1, keepdims=True)
    d = geodesic_distance(x, y)[..., None]
    return np.where(nu < ZERO_NORM, 0.0, u * d / np.where(nu < ZERO_NORM, 1.0, nu))


def parallel_transport(v, start, end) -> np.ndarray:
    """Levi-Civita transport of tangent vector ``v`` from ``start`` to ``end``.

    Along the minimal geodesic this is the rotation about ``start x end``
    that carries ``start`` to ``end``.
    """
    v = np.asarray(v, dtype=float)
    a = np.asarray(start, dtype=float)
    b = np.asarray(end, dtype=float)
    if np.any(np.abs(_dot(a, v)) > 1e-10 * np.maximum(1.0, np.linalg.norm(v, axis=-1))):
        raise NotTangent("vector is not tangent at the start point")
    if np.any(np.pi - geodesic_distance(a, b) <= 1e-8):
        raise AntipodalPoints("parallel transport between antipodal points is undefined")
    c = _dot(a, b)[..., None]
    # Rodrigues form of the minimal rotation a -> b
    u = np.cross(a, b)
    return v + np.cross(u, v) + np.cross(u, np.cross(u, v)) / (1.0 + c)


class TangentFrame(NamedTuple):
    """Per-vertex orthonormal frames: position, unit tangent, normal = point x tangent."""

    point: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray


@dataclass(frozen=True, eq=False)
class DiscreteCurve:
    """Closed curve on S^2 stored as a cyclic ``(N, 3)`` array of unit vectors.

    Input rows are re-normalized; construction fails if ``N < 16`` or two
    consecutive vertices (cyclically) are closer than 1e-10.
    """

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float, copy=True)
        if v.ndim != 2 or v.shape[1] != 3:
            raise InvalidCurve(f"expected an (N, 3) array, got shape {v.shape}")
        if v.shape[0] < MIN_VERTICES:
            raise TooFewVertices(f"need at least {MIN_VERTICES} vertices, got {v.shape[0]}")
        if not np.all(np.isfinite(v)):
            raise InvalidCurve("non-finite vertex coordinates")
        v = project_to_sphere(v)
        gaps = geodesic_distance(v, np.roll(v, -1, axis=0))
        if np.any(gaps <= MIN_GAP):
            i = int(np.argmin(gaps))
            raise InvalidCurve(f"vertices {i} and {(i + 1) % len(v)} coincide")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def __len__(self):
        return self.vertices.shape[0]

    @property
    def n(self) -> int:
        return self.vertices.shape[0]

    def edge_lengths(self) -> np.ndarray:
        """Geodesic length of edge ``i`` (from vertex ``i`` to ``i+1``)."""
        v = self.vertices
        return geodesic_distance(v, np.roll(v, -1, axis=0))

    def rotated(self, R) -> "DiscreteCurve":
        return DiscreteCurve(self.vertices @ np.asarray(R, dtype=float).T)

    def reversed(self) -> "DiscreteCurve":
        return DiscreteCurve(self.vertices[::-1])

    def to_json(self) -> str:
        return json.dumps(self.vertices.tolist())

    @classmethod
    def from_json(cls, text: str) -> "DiscreteCurve":
        data = json.loads(text)
        return cls(np.asarray(data, dtype=float))


def save_curve(curve: DiscreteCurve, path) -> Path:
    path = Path(path)
    path.write_text(curve.to_json())
    return path


def load_curve(path) -> DiscreteCurve:
    return DiscreteCurve.from_json(Path(path).read_text())


def curve_length(c: DiscreteCurve) -> float:
    return float(np.sum(c.edge_lengths()))


def tangent_frames(c: DiscreteCurve) -> TangentFrame:
    """Vertex frames with the tangent bisecting the two incident geodesic edges."""
    p = c.vertices
    t_out = log_map(p, np.roll(p, -1, axis=0))
    t_in = -log_map(p, np.roll(p, 1, axis=0))
    t_out /= np.linalg.norm(t_out, axis=1, keepdims=True)
    t_in /= np.linalg.norm(t_in, axis=1, keepdims=True)
    t = t_in + t_out
    nt = np.linalg.norm(t, axis=1, keepdims=True)
    if np.any(nt < 1e-8):
        raise DegenerateSegment("curve reverses direction at a vertex (cusp)")
    t /= nt
    return TangentFrame(p, t, np.cross(p, t))


def great_circle(n: int, covers: int = 1, phase: float = 0.0) -> DiscreteCurve:
    """Equator traversed ``covers`` times with ``n`` equally spaced vertices."""
    s = phase + 2.0 * np.pi * covers * np.arange(n) / n
    return DiscreteCurve(np.column_stack([np.cos(s), np.sin(s), np.zeros(n)]))


def latitude_circle(polar_angle: float, n: int) -> DiscreteCurve:
    """Circle of constant polar angle, run counterclockwise seen from +z."""
    s = 2.0 * np.pi * np.arange(n) / n
    st, ct = np.sin(polar_angle), np.cos(polar_angle)
    return DiscreteCurve(np.column_stack([st * np.cos(s), st * np.sin(s), np.full(n, ct)]))


def normal_graph(base: DiscreteCurve, offsets) -> DiscreteCurve:
    """Displace each vertex of ``base`` along its frame normal by ``offsets[i]``."""
    f = tangent_frames(base)
    w = np.asarray(offsets, dtype=float)[:, None] * f.normal
    return DiscreteCurve(exp_map(f.point, w))


def resample_uniform(c: DiscreteCurve, n: int) -> DiscreteCurve:
    """Redistribute ``n`` vertices evenly along ``c``.

    A periodic cubic spline through the vertices, parametrized by cumulative
    geodesic length, is evaluated at evenly spaced parameter values and
    projected back onto the sphere.  Already-uniform curves are fixed points.
    """
    if n < MIN_VERTICES:
        raise TooFewVertices(f"need at least {MIN_VERTICES} vertices, got {n}")
    p = c.vertices
    ell = c.edge_lengths()
    s = np.concatenate([[0.0], np.cumsum(ell)])
    total = s[-1]
    spline = CubicSpline(s, np.vstack([p, p[:1]]), bc_type="periodic")
    targets = total * np.arange(n) / n
    return DiscreteCurve(project_to_sphere(spline(targets)))


# -- self-intersections -------------------------------------------------------


def _point_arc_distance(x, a, b):
    n = np.cross(a, b)
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    sd = _dot(x, n)
    foot = x - sd[..., None] * n
    inside = (
        (_dot(np.cross(a, foot), n) >= 0.0)
        & (_dot(np.cross(foot, b), n) >= 0.0)
        & (_dot(foot, a + b) > 0.0)
    )
    d_line = np.arcsin(np.clip(np.abs(sd), 0.0, 1.0))
    d_end = np.minimum(geodesic_distance(x, a), geodesic_distance(x, b))
    return np.where(inside, d_line, d_end)


def _close_segment_pairs(p, tol):
    """All non-adjacent segment pairs (i, j), i < j, that cross or come within ``tol``."""
    n = len(p)
    q = np.roll(p, -1, axis=0)
    mid = 0.5 * (p + q)
    rad = 0.5 * np.linalg.norm(q - p, axis=1)
    normals = np.cross(p, q)
    found = []
    block = 256
    for i0 in range(0, n, block):
        i = np.arange(i0, min(i0 + block, n))
        dmid = np.linalg.norm(mid[i, None, :] - mid[None, :, :], axis=2)
        ii, jj = np.nonzero(dmid <= rad[i, None] + rad[None, :] + 2.0 * tol)
        ii = i[ii]
        keep = (jj - ii >= 2) & ~((ii == 0) & (jj == n - 1))
        ii, jj = ii[keep], jj[keep]
        if ii.size == 0:
            continue
        a0, a1, b0, b1 = p[ii], q[ii], p[jj], q[jj]
        na, nb = normals[ii], normals[jj]
        crosses = (
            (_dot(na, b0) * _dot(na, b1) < 0.0)
            & (_dot(nb, a0) * _dot(nb, a1) < 0.0)
            & (_dot(a0, b0) > 0.0)
        )
        dist = np.minimum.reduce([
            _point_arc_distance(a0, b0, b1),
            _point_arc_distance(a1, b0, b1),
            _point_arc_distance(b0, a0, a1),
            _point_arc_distance(b1, a0, a1),
        ])
        hit = crosses | (dist < tol)
        found.extend(zip(ii[hit].tolist(), jj[hit].tolist()))
    return found


def _cyclic_span(indices, n):
    """Smallest cyclic interval ``(start, length)`` covering ``indices``."""
    idx = np.unique(np.asarray(indices) % n)
    if len(idx) == 1:
        return int(idx[0]), 1
    gaps = np.diff(np.concatenate([idx, [idx[0] + n]]))
    k = int(np.argmax(gaps))
    start = int(idx[(k + 1) % len(idx)])
    return start, n - int(gaps[k]) + 1


def _side(point, p, q, window):
    """Signed side of ``point`` w.r.t. the nearest directed segment in ``window``."""
    d = _point_arc_distance(point[None, :], p[window], q[window])
    k = window[int(np.argmin(d))]
    return float(_dot(np.cross(p[k], q[k]), point))


def self_intersection_count(c: DiscreteCurve, tol: float = 1e-6) -> int:
    """Number of transverse self-crossings of the polygon of great-circle arcs.

    Non-adjacent segment pairs that cross or pass within ``tol`` are grouped
    into contact zones (connected runs along both branches).  A zone counts as
    one crossing when the first branch switches sides of the second branch
    between entering and leaving the zone; tangential touching counts as zero.
    Stretches along which two branches coincide over the whole curve (e.g. an
    exactly doubled circle) contribute nothing.
    """
    p = c.vertices
    n = len(p)
    ell = c.edge_lengths()
    if np.any(ell < 1e-12):
        raise DegenerateSegment("zero-length segment")
    if np.any(ell >= np.pi / 8):
        raise DegenerateSegment("segments must be shorter than pi/8")
    pairs = _close_segment_pairs(p, tol)
    if not pairs:
        return 0
    q = np.roll(p, -1, axis=0)

    # union-find over ordered pairs; mirrored zones are deduplicated below
    nodes = pairs + [(j, i) for i, j in pairs]
    index = {pr: k for k, pr in enumerate(nodes)}
    parent = list(range(len(nodes)))

    def find(k):
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    for k, (i, j) in enumerate(nodes):
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                other = index.get(((i + di) % n, (j + dj) % n))
                if other is not None:
                    ra, rb = find(k), find(other)
                    if ra != rb:
                        parent[ra] = rb
    zones = {}
    for k in range(len(nodes)):
        zones.setdefault(find(k), []).append(nodes[k])

    seen = set()
    count = 0
    for members in zones.values():
        key = min((min(i, j), max(i, j)) for i, j in members)
        if key in seen:
            continue
        seen.add(key)
        a_start, a_len = _cyclic_span([i for i, _ in members], n)
        b_start, b_len = _cyclic_span([j for _, j in members], n)
        if a_len + b_len >= n - 4:
            continue  # coincident over the whole curve
        crossed = None
        for margin in (2, 4, 8, 16):
            if a_len + b_len + 4 * margin >= n:
                break
            before = p[(a_start - margin) % n]
            after = p[(a_start + a_len + margin) % n]
            window = np.arange(b_start - margin - 2, b_start + b_len + margin + 2) % n
            s_in = _side(before, p, q, window)
            s_out = _side(after, p, q, window)
            if min(abs(s_in), abs(s_out)) > 1e-15:
                crossed = (s_in > 0) != (s_out > 0)
                break
        if crossed:
            count += 1
    return count
