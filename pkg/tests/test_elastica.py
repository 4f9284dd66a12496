import math

import numpy as np
import pytest
from scipy.integrate import quad, solve_ivp
from scipy.special import ellipj, ellipk

from hopf_elastica import elastica
from hopf_elastica.elliptic import f_of_p
from hopf_elastica.errors import ModulusOutOfRange, NotCoprime, RatioOutOfRange
from hopf_elastica.sphere_geom import self_intersection_count

# values from the independent oracle below, frozen at 1e-9
P_12 = 0.43779504814956
ENERGY_12 = 19.1574978467577


def oracle_monodromy(p):
    """Wavelength from the curve itself, with scipy's cn and an LSODA integrator.

    The angle is read off from how far gamma turns about the conserved axis
    over one period, instead of from the rotation matrix.
    """
    q = 1 - 2 * p * p
    k0, r = math.sqrt(2 * p * p / q), math.sqrt(1 / (2 * q))
    period = 4 * ellipk(p * p) / r

    def rhs(s, y):
        k = k0 * ellipj(r * s, p * p)[1]
        g, t = y[:3], y[3:]
        return np.concatenate([t, k * np.cross(g, t) - g])

    sol = solve_ivp(rhs, (0, period), [1, 0, 0, 0, 1, 0], method="LSODA", rtol=1e-12, atol=1e-13)
    g0, g1 = np.array([1.0, 0, 0]), sol.y[:3, -1]
    axis = np.array([2 * k0, 0, 1 - k0 ** 2])
    axis /= np.linalg.norm(axis)
    a = g0 - np.dot(g0, axis) * axis
    b = g1 - np.dot(g1, axis) * axis
    about_axis = math.atan2(np.dot(np.cross(a, b), axis), np.dot(a, b)) % (2 * math.pi)
    return 2 * math.pi - about_axis


def oracle_energy(m, n):
    p = elastica.modulus_for_ratio(m, n)
    prof = elastica.profile_from_modulus(p)
    per = quad(lambda s: 1 + (prof.k0 * ellipj(prof.r * s, p * p)[1]) ** 2, 0, prof.period,
               epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    return n * per


class TestProfile:
    def test_constants(self):
        for p in (0.1, 0.3, 0.6):
            prof = elastica.profile_from_modulus(p)
            assert abs(prof.k0 ** 2 - 2 * p * p / (1 - 2 * p * p)) < 1e-12
            assert abs(prof.r ** 2 - 1 / (2 * (1 - 2 * p * p))) < 1e-12

    def test_small_p_limit(self):
        prof = elastica.profile_from_modulus(1e-8)
        assert prof.k0 < 1e-7
        assert abs(prof.r - 1 / math.sqrt(2)) < 1e-12

    @pytest.mark.parametrize("p", [0.3, 0.6])
    def test_stationary_equation(self, p):
        prof = elastica.profile_from_modulus(p)
        s = np.linspace(0, 2 * prof.period, 100)
        assert np.max(np.abs(prof.stationary_residual(s))) < 1e-8

    def test_stationary_equation_by_differences(self):
        prof = elastica.profile_from_modulus(0.5)
        s = np.linspace(0, prof.period, 100)
        h = 1e-4
        kpp = (prof.curvature(s + h) - 2 * prof.curvature(s) + prof.curvature(s - h)) / h ** 2
        k = prof.curvature(s)
        assert np.max(np.abs(2 * kpp + k ** 3 + k)) < 1e-6

    @pytest.mark.parametrize("p", [0.0, -0.1, 1 / math.sqrt(2)])
    def test_range(self, p):
        with pytest.raises(ModulusOutOfRange):
            elastica.profile_from_modulus(p)


class TestMonodromy:
    def test_decreasing(self):
        vals = [elastica.monodromy_angle(p) for p in np.arange(0.05, 0.651, 0.05)]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert all(0 < v < 2 * math.pi for v in vals)

    def test_small_p_limit(self):
        assert abs(elastica.monodromy_angle(1e-3) / (2 * math.pi) - (2 - math.sqrt(2))) < 1e-3

    @pytest.mark.parametrize("p", [0.2, 0.45, 0.68])
    def test_against_oracle(self, p):
        assert abs(elastica.monodromy_angle(p) - oracle_monodromy(p)) < 1e-8

    def test_orthonormal_frame(self):
        prof = elastica.profile_from_modulus(0.5)
        m = elastica.integrate_frame(prof, prof.period).y[:, -1].reshape(3, 3)
        assert np.max(np.abs(m.T @ m - np.eye(3))) < 1e-9

    def test_axis_is_fixed(self):
        prof = elastica.profile_from_modulus(0.4)
        rot, _ = elastica.monodromy(0.4)
        axis = elastica.killing_axis(prof)
        assert np.allclose(rot @ axis, axis, atol=1e-9)


class TestModulusForRatio:
    @pytest.mark.parametrize("m,n", [(1, 2), (1, 3), (2, 5), (1, 7)])
    def test_root(self, m, n):
        p = elastica.modulus_for_ratio(m, n)
        assert abs(elastica.monodromy_angle(p) - 2 * math.pi * m / n) < 1e-10

    def test_frozen_and_oracle(self):
        p = elastica.modulus_for_ratio(1, 2)
        assert abs(p - P_12) < 1e-9
        assert abs(oracle_monodromy(p) / (2 * math.pi) - 0.5) < 1e-8

    def test_closure_of_composed_monodromies(self):
        for m, n in [(1, 2), (1, 3), (2, 7)]:
            rot, _ = elastica.monodromy(elastica.modulus_for_ratio(m, n))
            assert np.max(np.abs(np.linalg.matrix_power(rot, n) - np.eye(3))) < 1e-8

    def test_errors(self):
        with pytest.raises(RatioOutOfRange):
            elastica.modulus_for_ratio(2, 3)
        with pytest.raises(NotCoprime):
            elastica.modulus_for_ratio(2, 4)
        with pytest.raises(RatioOutOfRange):
            elastica.WaveIndex(0, 3)


class TestEnergy:
    def test_frozen(self):
        assert abs(elastica.energy_closed_form(1, 2) - ENERGY_12) < 1e-9

    @pytest.mark.parametrize("m,n", [(1, 2), (1, 3), (2, 5)])
    def test_against_quadrature_oracle(self, m, n):
        e = elastica.energy_closed_form(m, n)
        assert abs(e - oracle_energy(m, n)) / e < 1e-10

    def test_lower_bound_chain(self):
        for m, n in elastica.admissible_pairs(12):
            p = elastica.modulus_for_ratio(m, n)
            e = elastica.energy_closed_form(m, n)
            middle = 8 * 1.5 * m / math.sqrt(2) * f_of_p(p)
            assert e > middle >= 6 * m * math.pi / math.sqrt(2) >= 6 * math.pi / math.sqrt(2)
            assert e > 13.32865
        assert round(6 * math.pi / math.sqrt(2), 5) == 13.32865

    def test_all_above_window(self):
        for pair in elastica.admissible_pairs(12):
            assert elastica.energy_closed_form(*pair) > 8 * math.pi / math.sqrt(2)


class TestSynthesis:
    def test_elastica_12(self, elastica_12):
        ce = elastica_12
        assert ce.closure_gap < 1e-6
        assert self_intersection_count(elastica.synthesize(1, 2, 512).curve) > 0
        assert abs(ce.energy_quadrature - ce.energy_closed_form) / ce.energy_closed_form < 1e-4

    def test_three_lobes(self):
        ce = elastica.synthesize(1, 3, 768)
        from hopf_elastica.discrete_elastic import geodesic_curvature
        k = geodesic_curvature(ce.curve)
        peaks = (k > np.roll(k, 1)) & (k >= np.roll(k, -1)) & (k > 0.5 * k.max())
        assert peaks.sum() == 3

    def test_closed_form_independent_of_resolution(self):
        a = elastica.synthesize(1, 3, 192).energy_closed_form
        b = elastica.synthesize(1, 3, 1536).energy_closed_form
        assert a == b

    def test_too_coarse(self):
        with pytest.raises(ValueError):
            elastica.synthesize(1, 3, 100)


class TestGapScan:
    def test_n_max_12(self):
        rep = elastica.critical_gap_scan(12)
        assert rep.passed
        assert rep.geodesic_values_in_window == [4 * math.pi]
        assert rep.min_pair == (1, 2)
        assert rep.min_energy > rep.window_top

    def test_n_max_2(self):
        rep = elastica.critical_gap_scan(2)
        assert rep.passed and list(rep.energies) == [(1, 2)]

    def test_pairs(self):
        pairs = elastica.admissible_pairs(6)
        assert sorted(pairs) == [(1, 2), (1, 3), (1, 4), (1, 5), (1, 6), (2, 5)]
