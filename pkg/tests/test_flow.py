import csv
import math

import numpy as np
import pytest

from hopf_elastica import flow
from hopf_elastica.discrete_elastic import elastic_energy
from hopf_elastica.errors import InconsistentTrace, StepSizeUnderflow
from hopf_elastica.flow import FlowConfig, FlowSample, FlowState, FlowTrace
from hopf_elastica.sphere_geom import great_circle, self_intersection_count

from conftest import perturbed_single_circle


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(dt_min=0.0), dict(dt_init=5.0), dict(velocity_tol=0.0),
                                    dict(N=8), dict(stabilization=-1.0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            FlowConfig(**kw)

    def test_overrides(self):
        assert flow.with_overrides(FlowConfig(), N=256).N == 256


class TestPreconditioner:
    def test_identity_without_stabilization(self):
        w = np.random.default_rng(0).normal(size=64)
        assert flow.preconditioned_speed(w, 0.1, 0.5, 0.0) is w

    def test_damps_high_modes_only(self):
        n = 128
        s = np.arange(n)
        low, high = np.cos(2 * math.pi * s / n), np.cos(math.pi * s)
        h = 2 * math.pi / n
        out_low = flow.preconditioned_speed(low, h, 0.25, 2.0)
        out_high = flow.preconditioned_speed(high, h, 0.25, 2.0)
        lam = (2 - 2 * math.cos(2 * math.pi / n)) / h ** 2
        assert np.allclose(out_low, low / (1 + 0.5 * lam * lam), atol=1e-12)
        assert np.max(np.abs(out_high)) < 1e-6


class TestStep:
    def test_great_circle_is_stationary(self):
        c = great_circle(256)
        s = FlowState.initial(c, FlowConfig(N=256))
        n = flow.step(s, FlowConfig(N=256))
        assert abs(n.energy - s.energy) < 1e-10
        assert np.max(np.abs(n.curve.vertices - c.vertices)) < 1e-10

    def test_energy_decreases(self, counterexample_curve):
        _, c = counterexample_curve
        cfg = FlowConfig()
        s = FlowState.initial(c, cfg)
        n = flow.step(s, cfg)
        assert n.energy < s.energy and n.t > 0 and n.step_count == 1
        assert np.allclose(np.linalg.norm(n.curve.vertices, axis=1), 1.0, atol=1e-12)

    def test_underflow(self, counterexample_curve):
        _, c = counterexample_curve
        cfg = FlowConfig(increase_tol=-1.0, dt_min=1e-3)
        with pytest.raises(StepSizeUnderflow):
            flow.step(FlowState.initial(c, cfg), cfg)

    def test_step_grows_after_streak(self):
        cfg = FlowConfig(N=256, grow_after=2)
        s = FlowState.initial(perturbed_single_circle(256), cfg)
        s = flow.step(flow.step(s, cfg), cfg)
        assert s.dt == pytest.approx(cfg.dt_init * cfg.grow_factor)


class TestCounterexampleRun:
    def test_limit(self, counterexample_run):
        c0, cfg, trace, limit = counterexample_run
        assert limit.tag == flow.DOUBLE_CIRCLE
        assert abs(trace.final.energy - 4 * math.pi) < 1e-3
        assert 4 * math.pi < trace.energies()[0] < 4 * math.pi + 0.1

    def test_monotone(self, counterexample_run):
        e = counterexample_run[2].energies()
        assert np.all(np.diff(e) <= 1e-9 * e[:-1])

    def test_snapshots(self, counterexample_run):
        _, cfg, trace, _ = counterexample_run
        snaps = trace.snapshots()
        assert snaps[0].t == 0.0 and snaps[-1] is trace.final
        assert set(trace.ind2_values()) == {0}
        assert snaps[0].self_intersections == 1
        for s in snaps:
            assert np.allclose(np.linalg.norm(s.curve.vertices, axis=1), 1.0, atol=1e-12)
            assert len(s.curve) == cfg.N

    def test_dichotomy(self, counterexample_run):
        rep = flow.verify_dichotomy(counterexample_run[2])
        assert rep.alternative == "B" and rep.passed and rep.ind2_expected == 0

    def test_resolution_independence(self, counterexample_curve, counterexample_run):
        _, c0 = counterexample_curve
        fine, _ = flow.run_to_convergence(c0, FlowConfig(N=1024, snapshot_every=0))
        assert abs(fine.final.energy - counterexample_run[2].final.energy) < 5e-4


class TestSingleCircleRun:
    def test_limit(self, single_circle_run):
        _, _, trace, limit = single_circle_run
        assert limit.tag == flow.SINGLE_CIRCLE
        assert abs(trace.final.energy - 2 * math.pi) < 1e-3

    def test_dichotomy(self, single_circle_run):
        rep = flow.verify_dichotomy(single_circle_run[2])
        assert rep.alternative == "A" and rep.passed and set(rep.ind2_values) == {1}


class TestTrace:
    def test_injected_increase(self, counterexample_run):
        samples = list(counterexample_run[2].samples)
        k = len(samples) // 2
        samples[k] = samples[k]._replace(energy=samples[k - 1].energy + 1e-3)
        with pytest.raises(InconsistentTrace):
            flow.verify_dichotomy(FlowTrace(samples))

    def test_wrong_final_energy(self):
        tr = FlowTrace([FlowSample(0.0, 10.0, 0.0), FlowSample(1.0, 9.0, 1.0)])
        with pytest.raises(InconsistentTrace):
            flow.verify_dichotomy(tr)
        with pytest.raises(InconsistentTrace):
            flow.verify_dichotomy(FlowTrace())

    def test_stationary_start(self):
        cfg = FlowConfig(N=512)
        trace, limit = flow.run_to_convergence(great_circle(512, covers=2), cfg)
        assert len(trace.samples) == 1 and limit.tag == flow.DOUBLE_CIRCLE
        assert trace.final.ind2 == 0

    def test_resamples_input(self):
        cfg = FlowConfig(N=256, max_steps=3)
        trace, limit = flow.run_to_convergence(perturbed_single_circle(400), cfg)
        assert len(trace.final.curve) == 256
        assert len(trace.samples) == 4 and limit.tag == flow.UNRESOLVED

    def test_hook(self):
        seen = []
        flow.run_to_convergence(perturbed_single_circle(256), FlowConfig(N=256, max_steps=4),
                                state_hook=lambda s: seen.append(s.step_count))
        assert seen == [1, 2, 3, 4]

    def test_csv_and_json(self, counterexample_run, tmp_path):
        trace, limit = counterexample_run[2], counterexample_run[3]
        path = trace.write_csv(tmp_path / "t.csv")
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["t", "energy", "dt", "ind2", "self_intersections"]
        assert len(rows) == len(trace.samples) + 1
        assert float(rows[-1][1]) == trace.final.energy
        assert '"limit": "DoubleCircle"' in flow.trace_to_json(trace, limit)
        snaps = trace.write_snapshots(tmp_path, "run")
        assert len(snaps) == len(trace.snapshots())


class TestClassify:
    def test_non_geodesic(self, elastica_12):
        from hopf_elastica.sphere_geom import resample_uniform
        tag = flow.classify_limit(resample_uniform(elastica_12.curve, 1024), FlowConfig(velocity_tol=1e-2))
        assert tag.tag == flow.NON_GEODESIC

    def test_moving_curve(self, counterexample_curve):
        assert flow.classify_limit(counterexample_curve[1], FlowConfig()).tag == flow.UNRESOLVED

    def test_triple_circle(self):
        assert flow.classify_limit(great_circle(384, covers=3), FlowConfig()).tag == flow.UNRESOLVED

    def test_limit_is_embedded_or_double(self, single_circle_run, counterexample_run):
        assert self_intersection_count(single_circle_run[2].final.curve) == 0
        assert elastic_energy(counterexample_run[2].final.curve) == pytest.approx(4 * math.pi, abs=1e-3)
