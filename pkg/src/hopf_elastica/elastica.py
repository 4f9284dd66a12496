"""Closed non-geodesic elastica on S^2 and their energies.

A unit-speed curve with frame ``F = [gamma, T, N]`` obeys ``F' = F A(s)``::

    A(s) = [[0, -1,  0   ],
            [1,  0, -k(s)],
            [0,  k(s), 0 ]]

Substituting ``k(s) = k0 cn(r s, p)`` into the stationary equation
``2 k'' + k^3 + k = 0`` and matching the ``cn`` and ``cn^3`` coefficients
(using ``cn'' = (2p^2 - 1) cn - 2 p^2 cn^3``) gives::

    r^2  = 1 / (2 (1 - 2 p^2))
    k0^2 = 2 p^2 / (1 - 2 p^2)

The elastica preserves ``J = 2k gamma + 2k' T + (1 - k^2) N``, so the frame
map over one curvature period is a rotation about ``J``.  Its angle, taken
with the orientation that makes it continuous and decreasing in ``p``, is
the wavelength map used to close the curve with ``n`` lobes and ``m`` trips.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from . import elliptic
from .discrete_elastic import elastic_energy
from .errors import IntegratorFailure, ModulusOutOfRange, NotCoprime, RatioOutOfRange
from .sphere_geom import DiscreteCurve, geodesic_distance

RATIO_MAX = 2.0 - math.sqrt(2.0)
P_MAX = elliptic.SQRT_HALF - 1e-6
ODE_RTOL = 1e-12
ODE_ATOL = 1e-13


@dataclass(frozen=True)
class WaveIndex:
    m: int
    n: int

    def __post_init__(self):
        m, n = self.m, self.n
        if int(m) != m or int(n) != n or m < 1 or n < 1:
            raise RatioOutOfRange(f"(m, n) must be positive integers, got ({m}, {n})")
        if math.gcd(int(m), int(n)) != 1:
            raise NotCoprime(f"gcd({m}, {n}) != 1")
        if not m / n < RATIO_MAX:
            raise RatioOutOfRange(f"m/n = {m / n:.6f} is outside (0, 2 - sqrt 2)")


@dataclass(frozen=True)
class ElasticaProfile:
    """Curvature profile ``k(s) = k0 cn(r s, p)`` with arclength period ``period``."""

    p: float
    k0: float
    r: float
    period: float

    def curvature(self, s):
        return self.k0 * elliptic.jacobi_cn(self.r * np.asarray(s, dtype=float), self.p)

    def curvature_second_derivative(self, s):
        sn, cn, dn = elliptic.jacobi_sn_cn_dn(self.r * np.asarray(s, dtype=float), self.p)
        return self.k0 * self.r ** 2 * (-cn * dn ** 2 + self.p ** 2 * sn ** 2 * cn)

    def stationary_residual(self, s):
        k = self.curvature(s)
        return 2.0 * self.curvature_second_derivative(s) + k ** 3 + k


@dataclass(frozen=True, eq=False)
class ClosedElastica:
    index: WaveIndex
    profile: ElasticaProfile
    curve: DiscreteCurve
    energy_closed_form: float
    energy_quadrature: float
    closure_gap: float


def profile_from_modulus(p: float) -> ElasticaProfile:
    if not (0.0 < p < P_MAX):
        raise ModulusOutOfRange(f"need 0 < p < 1/sqrt(2) - 1e-6, got {p!r}")
    q = 1.0 - 2.0 * p * p
    r = math.sqrt(1.0 / (2.0 * q))
    return ElasticaProfile(p, math.sqrt(2.0 * p * p / q), r, 4.0 * elliptic.complete_K(p) / r)


def _cn_table(p):
    # cn evaluator with the AGM sequence precomputed; the ODE right-hand side
    # calls this thousands of times
    seq = elliptic._agm_sequence(p)
    n = len(seq) - 1
    scale = (2.0 ** n) * seq[-1][0]
    ratios = [seq[k][2] / seq[k][0] for k in range(n, 0, -1)]

    def cn(u):
        phi = scale * u
        for ratio in ratios:
            phi = 0.5 * (phi + math.asin(max(-1.0, min(1.0, ratio * math.sin(phi)))))
        return math.cos(phi)

    return cn


def integrate_frame(profile: ElasticaProfile, length: float, s_eval=None):
    """Solve ``M' = M A(s)`` from ``M(0) = I``; returns the scipy solution."""
    cn = _cn_table(profile.p)
    k0, r = profile.k0, profile.r

    def rhs(s, y):
        k = k0 * cn(r * s)
        m = y.reshape(3, 3)
        out = np.empty((3, 3))
        out[:, 0] = m[:, 1]
        out[:, 1] = -m[:, 0] + k * m[:, 2]
        out[:, 2] = -k * m[:, 1]
        return out.ravel()

    sol = solve_ivp(rhs, (0.0, length), np.eye(3).ravel(), method="DOP853",
                    rtol=ODE_RTOL, atol=ODE_ATOL, t_eval=s_eval)
    if sol.status != 0:
        raise IntegratorFailure(sol.message)
    return sol


def killing_axis(profile: ElasticaProfile) -> np.ndarray:
    """Unit axis of the conserved field J at ``s = 0`` in the initial frame."""
    j = np.array([2.0 * profile.k0, 0.0, 1.0 - profile.k0 ** 2])
    return j / np.linalg.norm(j)


def monodromy(p: float):
    """Frame rotation over one curvature period and its signed angle.

    Returns ``(R, delta_theta)``; ``delta_theta`` in (0, 2 pi) is the angle of
    ``R`` measured about ``-J``.
    """
    prof = profile_from_modulus(p)
    sol = integrate_frame(prof, prof.period)
    rot = sol.y[:, -1].reshape(3, 3)
    axis = killing_axis(prof)
    skew = 0.5 * (rot - rot.T)
    sin_t = float(np.dot([skew[2, 1], skew[0, 2], skew[1, 0]], axis))
    cos_t = 0.5 * (np.trace(rot) - 1.0)
    about_j = math.atan2(sin_t, cos_t) % (2.0 * math.pi)
    return rot, 2.0 * math.pi - about_j


def monodromy_angle(p: float) -> float:
    return monodromy(p)[1]


@lru_cache(maxsize=None)
def modulus_for_ratio(m: int, n: int) -> float:
    """The unique modulus whose monodromy angle equals ``2 pi m / n``."""
    WaveIndex(m, n)
    target = 2.0 * math.pi * m / n
    lo, hi = 1e-4, P_MAX * (1.0 - 1e-12)
    g = lambda p: monodromy_angle(p) - target  # noqa: E731
    p = brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    if abs(g(p)) >= 1e-10:
        raise IntegratorFailure(f"root refinement stalled for ({m}, {n}): residual {g(p):.2e}")
    return p


def energy_closed_form(m: int, n: int) -> float:
    """``8 n / sqrt(2 - 4 p^2) * (2 E(p) - K(p))`` at ``p = p(m, n)``."""
    p = modulus_for_ratio(m, n)
    return 8.0 * n / math.sqrt(2.0 - 4.0 * p * p) * (
        2.0 * elliptic.complete_E(p) - elliptic.complete_K(p))


def synthesize(m: int, n: int, N: int) -> ClosedElastica:
    """Sample the closed elastica with ``n`` lobes and ``m`` trips at ``N`` vertices.

    The frame system is integrated over ``n`` curvature periods; vertices are
    taken at uniform arclength so no further resampling is needed.
    """
    idx = WaveIndex(m, n)
    if N < 64 * n:
        raise ValueError(f"need N >= 64 n = {64 * n}, got {N}")
    prof = profile_from_modulus(modulus_for_ratio(m, n))
    length = n * prof.period
    s = np.linspace(0.0, length, N + 1)
    sol = integrate_frame(prof, length, s_eval=s)
    gam = sol.y.reshape(3, 3, -1)[:, 0, :].T  # first column of M(s)
    gap = float(geodesic_distance(gam[0], gam[-1]))
    curve = DiscreteCurve(gam[:-1])
    return ClosedElastica(idx, prof, curve, energy_closed_form(m, n),
                          elastic_energy(curve), gap)


def admissible_pairs(n_max: int):
    """All coprime ``(m, n)`` with ``n <= n_max`` and ``0 < m/n < 2 - sqrt 2``."""
    out = []
    for n in range(1, n_max + 1):
        for m in range(1, n):
            if m / n < RATIO_MAX and math.gcd(m, n) == 1:
                out.append((m, n))
    return out


@dataclass
class GapReport:
    n_max: int
    energies: dict
    min_energy: float
    min_pair: tuple
    geodesic_values_in_window: list
    passed: bool

    @property
    def window_top(self):
        return 8.0 * math.pi / math.sqrt(2.0)


def critical_gap_scan(n_max: int) -> GapReport:
    """Check that no non-geodesic elastica has energy in (2 pi, 8 pi / sqrt 2].

    The only geodesic critical value ``2 k pi`` in that window must be 4 pi.
    """
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    top = 8.0 * math.pi / math.sqrt(2.0)
    energies = {pair: energy_closed_form(*pair) for pair in admissible_pairs(n_max)}
    min_pair = min(energies, key=energies.get)
    geodesic = [2.0 * k * math.pi for k in range(2, 10) if 2.0 * k * math.pi <= top]
    passed = all(e > top for e in energies.values()) and geodesic == [4.0 * math.pi]
    return GapReport(n_max, energies, energies[min_pair], min_pair, geodesic, passed)
