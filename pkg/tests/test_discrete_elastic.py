import math

import numpy as np
import pytest

from hopf_elastica.discrete_elastic import (elastic_energy, flow_velocity, geodesic_curvature,
                                            gradient_consistency_check, curvature_data)
from hopf_elastica.errors import DegenerateEdge
from hopf_elastica.second_variation import perturbed_double_circle
from hopf_elastica.sphere_geom import curve_length, great_circle, latitude_circle, normal_graph

from test_sphere_geom import random_rotation


def wobbly_latitude(n=512, theta=1.0):
    s = 2 * math.pi * np.arange(n) / n
    return normal_graph(latitude_circle(theta, n), 0.04 * np.cos(3 * s) + 0.02 * np.sin(5 * s))


class TestCurvature:
    def test_great_circle(self):
        assert np.max(np.abs(geodesic_curvature(great_circle(256)))) < 1e-6

    @pytest.mark.parametrize("theta", [0.4, 1.0, 2.2])
    def test_latitude(self, theta):
        k = geodesic_curvature(latitude_circle(theta, 256))
        assert np.max(np.abs(k - 1.0 / math.tan(theta))) < 1e-3

    def test_second_order(self):
        err = [np.max(np.abs(geodesic_curvature(latitude_circle(0.6, n)) - 1 / math.tan(0.6)))
               for n in (64, 128)]
        assert err[1] < 0.3 * err[0]

    def test_orientation_flip(self):
        c = wobbly_latitude()
        k = geodesic_curvature(c)
        kr = geodesic_curvature(c.reversed())[::-1]
        assert np.allclose(kr, -k, atol=1e-10)
        assert abs(elastic_energy(c.reversed()) - elastic_energy(c)) < 1e-10

    def test_elastica_profile(self, elastica_12):
        ce = elastica_12
        n = len(ce.curve)
        s = 2 * ce.profile.period * np.arange(n) / n
        k = geodesic_curvature(ce.curve)
        assert np.max(np.abs(k - ce.profile.curvature(s))) < 1e-3

    def test_fold_back(self):
        pts = great_circle(64).vertices.copy()
        pts[10] = pts[8]
        pts[9] = great_circle(64).vertices[9]
        with pytest.raises(DegenerateEdge):
            curvature_data(type(great_circle(64))(pts))


class TestEnergy:
    def test_circles(self):
        assert abs(elastic_energy(great_circle(256)) - 2 * math.pi) < 1e-4
        assert abs(elastic_energy(great_circle(256, covers=2)) - 4 * math.pi) < 1e-4

    def test_latitude_closed_form(self):
        theta = 0.8
        exact = 2 * math.pi * math.sin(theta) * (1 + 1 / math.tan(theta) ** 2)
        assert abs(elastic_energy(latitude_circle(theta, 512)) - exact) < 1e-3

    def test_bounds(self):
        c = wobbly_latitude()
        assert elastic_energy(c) >= curve_length(c)
        assert elastic_energy(c) >= 2 * math.pi

    def test_rotation_invariance(self):
        c = wobbly_latitude()
        R = random_rotation(np.random.default_rng(5))
        assert abs(elastic_energy(c.rotated(R)) - elastic_energy(c)) < 1e-12

    def test_elastica_quadrature(self, elastica_12):
        rel = abs(elastica_12.energy_quadrature - elastica_12.energy_closed_form)
        assert rel / elastica_12.energy_closed_form < 1e-4


class TestVelocity:
    def test_critical_circles(self):
        assert np.max(np.abs(flow_velocity(great_circle(512)))) < 1e-6
        assert np.max(np.abs(flow_velocity(great_circle(512, covers=2)))) < 1e-6

    def test_tangent_and_normal(self):
        c = wobbly_latitude()
        d = curvature_data(c)
        v = flow_velocity(c)
        assert np.max(np.abs(np.einsum("ij,ij->i", v, c.vertices))) < 1e-10
        assert np.max(np.abs(np.einsum("ij,ij->i", v, d.tangent))) < 1e-8 * max(1, np.abs(v).max())

    def test_equivariance(self):
        c = wobbly_latitude()
        R = random_rotation(np.random.default_rng(9))
        assert np.allclose(flow_velocity(c.rotated(R)), flow_velocity(c) @ R.T, atol=1e-8)

    def test_elastica_is_critical(self):
        from hopf_elastica.elastica import synthesize
        c = synthesize(1, 2, 1024).curve
        assert np.max(np.abs(flow_velocity(c))) < 1e-3

    def test_gradient_check_counterexample(self):
        c = perturbed_double_circle(0.05, 512)
        res = gradient_consistency_check(c, flow_velocity(c), 1e-4)
        assert not res.near_critical and res.defect < 5e-2

    def test_gradient_check_latitude(self):
        c = wobbly_latitude()
        res = gradient_consistency_check(c, flow_velocity(c), 1e-4)
        assert not res.near_critical and res.defect < 5e-2

    def test_gradient_check_near_critical(self, elastica_12):
        c = elastica_12.curve
        res = gradient_consistency_check(c, flow_velocity(c), 1e-4)
        assert res.near_critical and math.isnan(res.defect)

    def test_gradient_check_step_range(self):
        c = great_circle(64)
        with pytest.raises(ValueError):
            gradient_consistency_check(c, flow_velocity(c), 1e-2)
