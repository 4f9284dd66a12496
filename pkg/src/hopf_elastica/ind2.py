"""Z/2 regular-homotopy index of closed regular curves on S^2.

The unit tangent bundle of S^2 is SO(3) via ``(position, tangent, normal)``.
A closed curve gives a loop in SO(3); lifting it through the double cover
by unit quaternions either closes up (index 0) or ends at the negated start
(index 1).
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DiscontinuousPath, SamplingTooCoarse
from .sphere_geom import DiscreteCurve

MAX_STEP_ANGLE = np.pi / 4
HOLONOMY_TOL = 1e-6


def rotation_angle(a, b) -> float:
    """Angle of the rotation ``a^T b`` between two rotation matrices."""
    c = 0.5 * (np.trace(a.T @ b) - 1.0)
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def frame_path(c: DiscreteCurve) -> np.ndarray:
    """Rotation matrices with columns (position, tangent, normal), shape ``(N, 3, 3)``.

    Tangents are centered differences projected to the tangent plane.
    """
    p = c.vertices
    if len(p) < 64:
        raise SamplingTooCoarse(f"need at least 64 vertices, got {len(p)}")
    t = np.roll(p, -1, axis=0) - np.roll(p, 1, axis=0)
    t -= np.einsum("ij,ij->i", t, p)[:, None] * p
    nt = np.linalg.norm(t, axis=1)
    if np.any(nt < 1e-12):
        raise SamplingTooCoarse("centered tangent vanishes")
    t /= nt[:, None]
    frames = np.stack([p, t, np.cross(p, t)], axis=2)
    steps = np.einsum("nji,nji->n", frames, np.roll(frames, -1, axis=0))
    cos_step = np.clip(0.5 * (steps - 1.0), -1.0, 1.0)
    if np.any(np.arccos(cos_step) >= MAX_STEP_ANGLE):
        raise SamplingTooCoarse("consecutive frames differ by pi/4 or more")
    return frames


def matrix_to_quaternion(m) -> np.ndarray:
    """Unit quaternion ``(w, x, y, z)`` of a rotation matrix (either sign)."""
    m = np.asarray(m, dtype=float)
    tr = np.trace(m)
    # pick the numerically largest component first
    cands = np.array([tr, m[0, 0], m[1, 1], m[2, 2]])
    k = int(np.argmax(cands))
    if k == 0:
        s = 2.0 * np.sqrt(1.0 + tr)
        q = [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
    elif k == 1:
        s = 2.0 * np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
        q = [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
    elif k == 2:
        s = 2.0 * np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2])
        q = [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
    else:
        s = 2.0 * np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1])
        q = [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
    q = np.array(q)
    return q / np.linalg.norm(q)


class QuaternionLift(NamedTuple):
    quaternions: np.ndarray  # (N, 4), sign-continuous
    holonomy_sign: int


def lift_to_quaternions(path) -> QuaternionLift:
    """Sign-continuous quaternion lift of a closed rotation path.

    The holonomy compares the lift of the first matrix, continued once
    around the loop, with the starting lift.
    """
    mats = np.asarray(path, dtype=float)
    qs = np.empty((len(mats), 4))
    qs[0] = matrix_to_quaternion(mats[0])
    min_dot = np.cos(0.5 * MAX_STEP_ANGLE)

    def follow(q, prev):
        d = np.dot(q, prev)
        if abs(d) < min_dot:
            raise DiscontinuousPath("consecutive rotations are too far apart to lift")
        return q if d >= 0.0 else -q

    for i in range(1, len(mats)):
        qs[i] = follow(matrix_to_quaternion(mats[i]), qs[i - 1])
    # continue one more step to return to the first matrix
    closing = follow(matrix_to_quaternion(mats[0]), qs[-1])
    if np.linalg.norm(closing - qs[0]) < HOLONOMY_TOL:
        sign = 1
    elif np.linalg.norm(closing + qs[0]) < HOLONOMY_TOL:
        sign = -1
    else:
        raise DiscontinuousPath("lift does not return to +-q0")
    return QuaternionLift(qs, sign)


def ind2(c: DiscreteCurve) -> int:
    """0 when the frame loop lifts to a closed quaternion loop, 1 otherwise."""
    return 0 if lift_to_quaternions(frame_path(c)).holonomy_sign == 1 else 1
