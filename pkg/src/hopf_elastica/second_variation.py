"""Second variation of the elastic energy at the doubly covered great circle.

A normal field along ``E + E`` is a pair of profiles ``(phi1, phi2)`` on
``[0, 2 pi]``; the first covers the first trip around the circle and the
second the return trip.  With ``z(t) = phi(4 pi t) / (4 pi)`` the
concatenated displacement on ``t in [0, 1]``, the quadratic form is::

    Q = 8 pi int_0^1 (z''/(4 pi) + 4 pi z) (z''/(4 pi) + 2 pi z) dt

On a Fourier mode ``exp(2 pi i j t)`` the integrand is
``pi^2 (4 - j^2)(2 - j^2) |z|^2``, which is never negative for integer
``j``; ``j = 2`` are the rotations of the circle.  Q equals the second
derivative of ``eps -> W(exp(eps phi N))`` at ``eps = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .discrete_elastic import elastic_energy
from .errors import EpsOutOfRange, MalformedPerturbation, NotSmoothlyClosing
from .sphere_geom import DiscreteCurve, exp_map

TWO_PI = 2.0 * math.pi
DEFAULT_SAMPLES = 1024
EPS_MAX = 0.15
FLAT_TOL = 1e-8
SPECTRAL_TAIL_TOL = 1e-9
JUNCTION_TOL = 1e-10


def _bump(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = (t > 0.0) & (t < TWO_PI)
    ti = t[inside]
    out[inside] = np.exp(-1.0 / ti ** 2 - 1.0 / (TWO_PI - ti) ** 2 + 2.0 / math.pi ** 2)
    return out


@dataclass(frozen=True, eq=False)
class BumpProfile:
    """Flat-ended bump on ``[0, 2 pi]`` sampled on a closed grid of ``M + 1`` points."""

    t: np.ndarray
    values: np.ndarray

    def __call__(self, t):
        return _bump(t)


def bump_phi(M: int = DEFAULT_SAMPLES) -> BumpProfile:
    """``exp(-1/t^2 - 1/(2 pi - t)^2)`` normalised to peak 1 at ``t = pi``."""
    if M < 256:
        raise ValueError("need at least 256 samples")
    t = np.linspace(0.0, TWO_PI, M + 1)
    return BumpProfile(t, _bump(t))


def one_sided_derivatives(values, h, order=4):
    """Forward derivatives at the left end and backward ones at the right end.

    Returns two arrays of length ``order + 1`` (order 0 is the value).
    """
    v = np.asarray(values, dtype=float)
    left, right = [v[0]], [v[-1]]
    fwd, bwd = v[: order + 1].copy(), v[-(order + 1):][::-1].copy()
    for k in range(1, order + 1):
        fwd = np.diff(fwd)
        bwd = -np.diff(bwd)
        left.append(fwd[0] / h ** k)
        right.append(bwd[0] / h ** k)
    return np.array(left), np.array(right)


def _is_flat(values, h):
    left, right = one_sided_derivatives(values, h)
    return bool(np.all(np.abs(left) < FLAT_TOL) and np.all(np.abs(right) < FLAT_TOL))


def _spectrally_periodic(values):
    v = np.asarray(values[:-1], dtype=float)
    coef = np.abs(np.fft.rfft(v))
    top = coef.max()
    if top == 0.0:
        return True
    return bool(coef[len(v) // 4:].max() <= SPECTRAL_TAIL_TOL * top)


def closes_smoothly(values) -> bool:
    """Whether a closed-grid profile extends to a smooth function on the circle.

    Accepts profiles that are flat to fourth order at the basepoint, and
    profiles whose periodic extension is resolved to roundoff by its Fourier
    series (a kink at the basepoint leaves an algebraic spectral tail).
    """
    v = np.asarray(values, dtype=float)
    h = TWO_PI / (len(v) - 1)
    if abs(v[0] - v[-1]) > JUNCTION_TOL:
        return False
    return _is_flat(v, h) or _spectrally_periodic(v)


@dataclass(frozen=True, eq=False)
class NormalPerturbation:
    """Normal field ``phi1 N + phi2 N`` along the double loop.

    Both profiles are sampled on the closed grid ``linspace(0, 2 pi, M + 1)``.
    """

    phi1: np.ndarray
    phi2: np.ndarray
    smooth_closing: bool = field(init=False)

    def __post_init__(self):
        a = np.array(self.phi1, dtype=float)
        b = np.array(self.phi2, dtype=float)
        if a.ndim != 1 or a.shape != b.shape:
            raise MalformedPerturbation("profiles must be 1-d arrays of equal length")
        if len(a) < 257:
            raise MalformedPerturbation("need at least 256 intervals per profile")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise MalformedPerturbation("non-finite samples")
        # the field must be continuous along the double loop at both junctions
        if abs(a[-1] - b[0]) > JUNCTION_TOL or abs(b[-1] - a[0]) > JUNCTION_TOL:
            raise MalformedPerturbation("profiles do not join at the basepoint")
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "phi1", a)
        object.__setattr__(self, "phi2", b)
        object.__setattr__(self, "smooth_closing", closes_smoothly(a) and closes_smoothly(b))

    @classmethod
    def from_functions(cls, f1, f2, M: int = DEFAULT_SAMPLES):
        t = np.linspace(0.0, TWO_PI, M + 1)
        return cls(np.asarray(f1(t), dtype=float), np.asarray(f2(t), dtype=float))

    @property
    def samples(self) -> int:
        return len(self.phi1) - 1

    def concatenated(self) -> np.ndarray:
        """Periodic samples of the field over the double loop (``2M`` points)."""
        return np.concatenate([self.phi1[:-1], self.phi2[:-1]])


def _spectral_second_derivative(values, period=1.0):
    n = len(values)
    freq = np.fft.rfftfreq(n, d=period / n) * TWO_PI
    return np.fft.irfft(-(freq ** 2) * np.fft.rfft(values), n)


def _integrand(z, loop_scale):
    # loop_scale is 4 pi on the double loop and 2 pi on a single loop
    zpp = _spectral_second_derivative(z)
    return (zpp / loop_scale + loop_scale * z) * (zpp / loop_scale + 0.5 * loop_scale * z)


def second_variation_form(pert: NormalPerturbation) -> float:
    """Quadratic form of the second variation at the double loop."""
    z = pert.concatenated() / (4.0 * math.pi)
    return float(8.0 * math.pi * np.mean(_integrand(z, 4.0 * math.pi)))


def single_loop_form(phi) -> float:
    """Second variation at a single great circle for a closed-grid profile."""
    v = np.asarray(phi, dtype=float)
    z = v[:-1] / TWO_PI
    return float(4.0 * math.pi * np.mean(_integrand(z, TWO_PI)))


def split_form(pert: NormalPerturbation):
    """The form restricted to ``t in [0, 1/2]`` and ``[1/2, 1]``.

    For smoothly closing profiles each half is the single-loop form of the
    corresponding profile, and the two halves sum to the full form.
    """
    if not pert.smooth_closing:
        raise NotSmoothlyClosing("profiles do not close up smoothly at the basepoint")
    z = pert.concatenated() / (4.0 * math.pi)
    dens = 8.0 * math.pi * _integrand(z, 4.0 * math.pi) / len(z)
    half = pert.samples
    return float(dens[:half].sum()), float(dens[half:].sum())


def double_circle_frame(N: int):
    """Vertices, unit normals and loop parameter of the doubly covered equator."""
    theta = 2.0 * TWO_PI * np.arange(N) / N
    pts = np.stack([np.cos(theta), np.sin(theta), np.zeros(N)], axis=1)
    normals = np.tile([0.0, 0.0, 1.0], (N, 1))
    return pts, normals, theta


def displace_double_circle(pert_values, eps, N):
    """Apply ``exp(eps * phi * N)`` along the double loop.

    ``pert_values`` is a callable of the double-loop angle in ``[0, 4 pi)``.
    """
    pts, normals, theta = double_circle_frame(N)
    phi = np.asarray(pert_values(theta), dtype=float)
    return DiscreteCurve(exp_map(pts, eps * phi[:, None] * normals))


def _bump_pair(theta):
    return np.where(theta < TWO_PI, _bump(theta), -_bump(theta - TWO_PI))


def perturbed_double_circle(eps: float, N: int, eps_max: float = EPS_MAX) -> DiscreteCurve:
    """The double loop pushed off itself by ``eps * (bump, -bump)`` along the normal."""
    if not (0.0 < eps <= eps_max) or not math.isfinite(eps):
        raise EpsOutOfRange(f"eps must lie in (0, {eps_max}], got {eps!r}")
    if N < 256 or N % 2:
        raise ValueError("N must be even and at least 256")
    return displace_double_circle(_bump_pair, eps, N)


def finite_difference_second_variation(profile_fn, N: int = 1024, h: float = 1e-3) -> float:
    """Centered second difference of the energy along ``exp(eps phi N)``."""
    e0 = elastic_energy(displace_double_circle(profile_fn, 0.0, N))
    ep = elastic_energy(displace_double_circle(profile_fn, h, N))
    em = elastic_energy(displace_double_circle(profile_fn, -h, N))
    return (ep - 2.0 * e0 + em) / h ** 2


def eps_for_energy_window(delta: float, N: int, eps_max: float = EPS_MAX, target=0.5) -> float:
    """An ``eps`` whose perturbed energy is ``4 pi + target * delta``.

    Relies on the energy of the perturbed double loop increasing in ``eps``.
    """
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    goal = 4.0 * math.pi + target * delta

    def excess(eps):
        return elastic_energy(perturbed_double_circle(eps, N, eps_max)) - goal

    if excess(eps_max) < 0.0:
        raise EpsOutOfRange(f"eps_max = {eps_max} cannot reach energy 4 pi + {target * delta}")
    return brentq(excess, 1e-6, eps_max, xtol=1e-12)
