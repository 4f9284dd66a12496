import math

import numpy as np
import pytest

from hopf_elastica import elastica
from hopf_elastica.flow import FlowConfig, run_to_convergence
from hopf_elastica.second_variation import eps_for_energy_window, perturbed_double_circle
from hopf_elastica.sphere_geom import DiscreteCurve, great_circle, normal_graph


def figure_eight(rho=0.5, n=256):
    """Two circles of angular radius rho touching at (1, 0, 0), run in opposite senses."""
    x = np.array([1.0, 0.0, 0.0])
    s = 2.0 * np.pi * np.arange(n // 2) / (n // 2)

    def loop(axis, sense):
        # rotate x about axis (Rodrigues), so each loop starts at x heading to +y
        a = sense * s[:, None]
        return (x * np.cos(a) + np.cross(axis, x) * np.sin(a)
                + axis * np.dot(axis, x) * (1.0 - np.cos(a)))

    up = np.array([np.cos(rho), 0.0, np.sin(rho)])
    down = np.array([np.cos(rho), 0.0, -np.sin(rho)])
    return DiscreteCurve(np.vstack([loop(up, 1.0), loop(down, -1.0)]))


@pytest.fixture(scope="session")
def elastica_12():
    return elastica.synthesize(1, 2, 2048)


@pytest.fixture(scope="session")
def counterexample_curve():
    eps = eps_for_energy_window(0.1, 512)
    return eps, perturbed_double_circle(eps, 512)


@pytest.fixture(scope="session")
def counterexample_run(counterexample_curve):
    _, c0 = counterexample_curve
    cfg = FlowConfig(N=512, snapshot_every=5)
    trace, limit = run_to_convergence(c0, cfg)
    return c0, cfg, trace, limit


def perturbed_single_circle(n=512, amp=0.05):
    s = 2.0 * math.pi * np.arange(n) / n
    return normal_graph(great_circle(n), amp * (np.cos(3.0 * s) + 0.6 * np.sin(2.0 * s)))


@pytest.fixture(scope="session")
def single_circle_run():
    c0 = perturbed_single_circle()
    cfg = FlowConfig(N=512, snapshot_every=5)
    trace, limit = run_to_convergence(c0, cfg)
    return c0, cfg, trace, limit
