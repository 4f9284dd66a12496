"""Complete elliptic integrals, Jacobi cn, and the energy factor f(p).

Every function takes the *modulus* ``p`` (not the parameter ``m = p**2``)::

    K(p) = int_0^{pi/2} dt / sqrt(1 - p^2 sin^2 t)
    E(p) = int_0^{pi/2} sqrt(1 - p^2 sin^2 t) dt

All of them use the arithmetic-geometric mean.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ModulusOutOfRange

SQRT_HALF = 1.0 / math.sqrt(2.0)
F_EDGE = 1e-9


def _check_modulus(p):
    if not (0.0 <= p < 1.0) or not math.isfinite(p):
        raise ModulusOutOfRange(f"modulus must satisfy 0 <= p < 1, got {p!r}")


def _agm_sequence(p):
    """AGM iterates (a_n, b_n, c_n) starting from (1, sqrt(1-p^2), p)."""
    a, b, c = 1.0, math.sqrt((1.0 - p) * (1.0 + p)), p
    seq = [(a, b, c)]
    while abs(c) > 1e-17 * a and len(seq) < 64:
        a, b, c = 0.5 * (a + b), math.sqrt(a * b), 0.5 * (a - b)
        seq.append((a, b, c))
    return seq


def complete_K(p: float) -> float:
    _check_modulus(p)
    a = _agm_sequence(p)[-1][0]
    return math.pi / (2.0 * a)


def complete_E(p: float) -> float:
    _check_modulus(p)
    seq = _agm_sequence(p)
    total = 0.0
    for n, (_, _, c) in enumerate(seq):
        total += 2.0 ** (n - 1) * c * c
    return math.pi / (2.0 * seq[-1][0]) * (1.0 - total)


def _amplitude(u, p):
    # descending Landen transformation, DLMF 22.20(ii)
    seq = _agm_sequence(p)
    n = len(seq) - 1
    a_n = seq[-1][0]
    phi = (2.0 ** n) * a_n * np.asarray(u, dtype=float)
    for k in range(n, 0, -1):
        a, _, c = seq[k]
        prev = phi
        phi = 0.5 * (phi + np.arcsin(np.clip(c / a * np.sin(phi), -1.0, 1.0)))
    return phi, prev if n > 0 else phi


def jacobi_cn(u, p: float):
    """Jacobi elliptic ``cn(u, p)``; accepts scalars or arrays ``u``."""
    _check_modulus(p)
    phi, _ = _amplitude(u, p)
    out = np.cos(phi)
    return float(out) if np.ndim(out) == 0 else out


def jacobi_sn_cn_dn(u, p: float):
    """``(sn, cn, dn)`` at ``u``; internal helper for derivative identities."""
    _check_modulus(p)
    phi0, phi1 = _amplitude(u, p)
    sn, cn = np.sin(phi0), np.cos(phi0)
    dn = np.sqrt(1.0 - p * p * sn * sn)
    return sn, cn, dn


def f_of_p(p: float) -> float:
    """``(2E(p) - K(p)) / sqrt(1 - 2 p^2)`` on ``0 <= p < 1/sqrt(2) - 1e-9``."""
    if not (0.0 <= p < SQRT_HALF - F_EDGE) or not math.isfinite(p):
        raise ModulusOutOfRange(f"f(p) needs 0 <= p < 1/sqrt(2) - 1e-9, got {p!r}")
    return (2.0 * complete_E(p) - complete_K(p)) / math.sqrt(1.0 - 2.0 * p * p)
