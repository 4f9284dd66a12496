"""Time integration of the elastic energy flow with a monotonicity guard.

Each step moves every vertex along its normal by ``dt * w_hat``, where
``w = -(2 k'' + k^3 + k)`` is the normal speed and ``w_hat`` solves::

    (1 + dt * sigma * D^4) w_hat = w

with ``D^4`` the periodic fourth difference at the mean edge length.  The
preconditioner only rescales the descent direction mode by mode, so fixed
points are still the discrete critical points and energy still decreases to
first order; it removes the ``dt ~ h^4`` restriction of the plain explicit
step, which is recovered with ``sigma = 0``.  A step is rejected and ``dt``
halved whenever the energy rises by more than ``increase_tol * energy``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, NamedTuple, Optional

import numpy as np

from .discrete_elastic import curvature_data, elastic_energy, normal_speed
from .errors import BlowUp, InconsistentTrace, IoFailure, StepSizeUnderflow
from .ind2 import ind2
from .sphere_geom import DiscreteCurve, curve_length, exp_map, resample_uniform, save_curve
from .sphere_geom import self_intersection_count

SINGLE_CIRCLE = "SingleCircle"
DOUBLE_CIRCLE = "DoubleCircle"
NON_GEODESIC = "NonGeodesicElastica"
UNRESOLVED = "Unresolved"


@dataclass(frozen=True)
class FlowConfig:
    N: int = 512
    dt_init: float = 0.25
    dt_min: float = 1e-9
    dt_max: float = 2.0
    energy_tol: float = 1e-13
    velocity_tol: float = 1e-5
    max_steps: int = 5000
    resample_every: int = 25
    snapshot_every: int = 50
    stabilization: float = 2.0
    increase_tol: float = 1e-9  # relative energy rise tolerated per step
    plateau_window: int = 200
    grow_factor: float = 1.2
    grow_after: int = 5
    count_intersections: bool = True

    def __post_init__(self):
        if not (0.0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise ValueError("need 0 < dt_min <= dt_init <= dt_max")
        if self.energy_tol <= 0.0 or self.velocity_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.N < 32 or self.max_steps < 0 or self.stabilization < 0.0:
            raise ValueError("invalid N, max_steps or stabilization")


@dataclass(frozen=True, eq=False)
class FlowState:
    t: float
    curve: DiscreteCurve
    energy: float
    step_count: int = 0
    dt: float = 0.25
    streak: int = 0  # accepted steps since the last dt change

    @classmethod
    def initial(cls, curve: DiscreteCurve, cfg: FlowConfig):
        return cls(0.0, curve, elastic_energy(curve), 0, cfg.dt_init, 0)


class FlowSample(NamedTuple):
    t: float
    energy: float
    dt: float
    ind2: Optional[int] = None
    self_intersections: Optional[int] = None
    curve: Optional[DiscreteCurve] = None


@dataclass
class FlowTrace:
    samples: List[FlowSample] = field(default_factory=list)

    def times(self):
        return np.array([s.t for s in self.samples])

    def energies(self):
        return np.array([s.energy for s in self.samples])

    def snapshots(self):
        return [s for s in self.samples if s.curve is not None]

    def ind2_values(self):
        return [s.ind2 for s in self.samples if s.ind2 is not None]

    @property
    def final(self) -> FlowSample:
        return self.samples[-1]

    def write_csv(self, path):
        try:
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["t", "energy", "dt", "ind2", "self_intersections"])
                for s in self.samples:
                    w.writerow([repr(float(s.t)), repr(float(s.energy)), repr(float(s.dt)),
                                "" if s.ind2 is None else s.ind2,
                                "" if s.self_intersections is None else s.self_intersections])
        except OSError as exc:
            raise IoFailure(str(exc)) from exc
        return Path(path)

    def write_snapshots(self, directory, stem):
        directory = Path(directory)
        paths = []
        for i, s in enumerate(self.snapshots()):
            paths.append(save_curve(s.curve, directory / f"{stem}-snap{i:04d}.json"))
        return paths


class LimitClass(NamedTuple):
    tag: str
    residual: float


def preconditioned_speed(w, mean_edge, dt, sigma):
    """Solve ``(1 + dt sigma D^4) x = w`` on the periodic grid by FFT."""
    n = len(w)
    if sigma == 0.0:
        return w
    j = np.arange(n // 2 + 1)
    d2 = (2.0 - 2.0 * np.cos(2.0 * math.pi * j / n)) / mean_edge ** 2
    return np.fft.irfft(np.fft.rfft(w) / (1.0 + dt * sigma * d2 * d2), n)


def _advance(p, normal, speed, dt):
    moved = exp_map(p, dt * speed[:, None] * normal)
    if not np.all(np.isfinite(moved)):
        raise BlowUp("non-finite vertex after a step")
    return moved / np.linalg.norm(moved, axis=1, keepdims=True)


def step(s: FlowState, cfg: FlowConfig) -> FlowState:
    """One accepted step of the flow, halving ``dt`` until the energy does not rise."""
    d = curvature_data(s.curve)
    w = normal_speed(s.curve, d)
    if not np.all(np.isfinite(w)):
        raise BlowUp("non-finite velocity")
    mean_edge = float(d.edges.mean())
    slack = cfg.increase_tol * s.energy
    dt = s.dt
    while True:
        speed = preconditioned_speed(w, mean_edge, dt, cfg.stabilization)
        moved = _advance(s.curve.vertices, d.normal, speed, dt)
        try:
            cand = DiscreteCurve(moved)
            energy = elastic_energy(cand)
        except ValueError:
            energy = math.inf  # a collapsed edge counts as a rejected step
        if not math.isfinite(energy) and energy != math.inf:
            raise BlowUp("non-finite energy")
        if energy <= s.energy + slack:
            break
        dt *= 0.5
        if dt < cfg.dt_min:
            raise StepSizeUnderflow(f"dt fell below {cfg.dt_min:g} with the energy still rising")
    t = s.t + dt
    count = s.step_count + 1
    streak = s.streak + 1
    next_dt = dt
    if streak >= cfg.grow_after:
        next_dt, streak = min(dt * cfg.grow_factor, cfg.dt_max), 0
    if cfg.resample_every and count % cfg.resample_every == 0:
        # redistribute only if that does not push the energy up
        r = resample_uniform(cand, len(cand))
        e_r = elastic_energy(r)
        if e_r <= energy + cfg.increase_tol * energy:
            cand, energy = r, e_r
    return FlowState(t, cand, energy, count, next_dt, streak)


def _sample(state: FlowState, dt: float, snapshot: bool, cfg: FlowConfig) -> FlowSample:
    if not snapshot:
        return FlowSample(state.t, state.energy, dt)
    si = self_intersection_count(state.curve) if cfg.count_intersections else None
    return FlowSample(state.t, state.energy, dt, ind2(state.curve), si, state.curve)


def velocity_residual(c: DiscreteCurve) -> float:
    return float(np.max(np.abs(normal_speed(c))))


def classify_limit(c: DiscreteCurve, cfg: FlowConfig) -> LimitClass:
    """Tag a (near-)stationary curve by its curvature and winding."""
    residual = velocity_residual(c)
    if residual >= cfg.velocity_tol:
        return LimitClass(UNRESOLVED, residual)
    kmax = float(np.max(np.abs(curvature_data(c).k)))
    if kmax < 10.0 * cfg.velocity_tol:
        winding = round(curve_length(c) / (2.0 * math.pi))
        if winding == 1:
            return LimitClass(SINGLE_CIRCLE, residual)
        if winding == 2:
            return LimitClass(DOUBLE_CIRCLE, residual)
        return LimitClass(UNRESOLVED, residual)
    return LimitClass(NON_GEODESIC, residual)


def run_to_convergence(c0: DiscreteCurve, cfg: FlowConfig, state_hook=None):
    """Flow ``c0`` until it is stationary or the energy plateaus.

    Returns ``(FlowTrace, LimitClass)``.  Snapshots (with ``ind2`` and the
    self-intersection count) are taken at the start, every
    ``cfg.snapshot_every`` steps, and at the end.
    """
    curve = c0 if len(c0) == cfg.N else resample_uniform(c0, cfg.N)
    state = FlowState.initial(curve, cfg)
    trace = FlowTrace([_sample(state, 0.0, True, cfg)])
    energies = [state.energy]
    while state.step_count < cfg.max_steps:
        if velocity_residual(state.curve) < cfg.velocity_tol:
            break
        w = cfg.plateau_window
        if len(energies) > w and energies[-w - 1] - energies[-1] < cfg.energy_tol * energies[-1]:
            break
        prev_t = state.t
        state = step(state, cfg)
        energies.append(state.energy)
        snap = cfg.snapshot_every and state.step_count % cfg.snapshot_every == 0
        trace.samples.append(_sample(state, state.t - prev_t, bool(snap), cfg))
        if state_hook is not None:
            state_hook(state)
    last = trace.samples[-1]
    if last.curve is None:
        trace.samples[-1] = _sample(state, last.dt, True, cfg)
    return trace, classify_limit(state.curve, cfg)


@dataclass
class DichotomyReport:
    alternative: str  # "A" (single circle, 2 pi) or "B" (double circle, 4 pi)
    final_energy: float
    monotone: bool
    ind2_values: list
    ind2_constant: bool
    ind2_expected: int

    @property
    def passed(self):
        return self.monotone and self.ind2_constant and self.ind2_values[0] == self.ind2_expected

    def as_dict(self):
        out = dict(self.__dict__)
        out["passed"] = self.passed
        return out


def verify_dichotomy(trace: FlowTrace, tol: float = 1e-3, slack: float = 1e-9) -> DichotomyReport:
    """Decide which terminal alternative a completed trace realizes.

    Raises :class:`InconsistentTrace` when the energy ever rises by more than
    ``slack`` relative, or the final energy is near neither 2 pi nor 4 pi.
    """
    e = trace.energies()
    if len(e) == 0:
        raise InconsistentTrace("empty trace")
    if np.any(np.diff(trace.times()) <= 0.0):
        raise InconsistentTrace("flow times are not strictly increasing")
    rises = np.diff(e) > slack * e[:-1]
    if np.any(rises):
        i = int(np.argmax(rises))
        raise InconsistentTrace(f"energy increases at sample {i + 1}: {e[i]!r} -> {e[i + 1]!r}")
    final = float(e[-1])
    if abs(final - 2.0 * math.pi) < tol:
        alt, expected = "A", 1
    elif abs(final - 4.0 * math.pi) < tol:
        alt, expected = "B", 0
    else:
        raise InconsistentTrace(f"final energy {final} is near neither 2 pi nor 4 pi")
    vals = trace.ind2_values()
    return DichotomyReport(alt, final, True, vals, len(set(vals)) <= 1, expected)


def trace_to_json(trace: FlowTrace, limit: LimitClass) -> str:
    return json.dumps({
        "limit": limit.tag,
        "residual": limit.residual,
        "samples": [{"t": s.t, "energy": s.energy, "dt": s.dt, "ind2": s.ind2,
                     "self_intersections": s.self_intersections} for s in trace.samples],
    })


def with_overrides(cfg: FlowConfig, **kw) -> FlowConfig:
    return replace(cfg, **kw)
