"""Scenario runner: configures the experiments, checks their assertions, writes outputs."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List

import numpy as np

from . import elastica, hopf
from . import second_variation as sv
from .discrete_elastic import elastic_energy
from .errors import ElasticaError, EpsOutOfRange, InconsistentTrace, IoFailure, ScenarioFailure
from .flow import DOUBLE_CIRCLE, SINGLE_CIRCLE, FlowConfig, run_to_convergence, trace_to_json
from .flow import verify_dichotomy
from .sphere_geom import great_circle, latitude_circle, normal_graph

KINDS = ("flow_counterexample", "flow_single_circle", "catalog_scan",
         "second_variation_suite", "hopf_thresholds")

DEFAULTS: Dict[str, Dict[str, Any]] = {
    "flow_counterexample": {"N": 512, "delta": 0.1, "eps": None, "eps_max": sv.EPS_MAX,
                            "velocity_tol": 1e-5, "max_steps": 5000, "snapshot_every": 10},
    "flow_single_circle": {"N": 512, "amplitude": 0.05, "velocity_tol": 1e-5,
                           "max_steps": 5000, "snapshot_every": 10},
    "catalog_scan": {"n_max": 12, "quadrature_n_max": 6, "samples_per_lobe": 2048},
    "second_variation_suite": {"N": 1024, "samples": 1024, "perturbations": 50},
    "hopf_thresholds": {"N": 512, "N_f": 128, "delta": 0.1, "mesh": False,
                        "stereo_pole": [0.0, 0.0, 0.0, 1.0]},
}


@dataclass
class Scenario:
    name: str
    kind: str
    parameters: Dict[str, Any] = field(default_factory=dict)
    output_dir: str = "out"

    def resolved(self) -> Dict[str, Any]:
        if self.kind not in DEFAULTS:
            raise ScenarioFailure("valid_kind", f"unknown scenario kind {self.kind!r}")
        params = dict(DEFAULTS[self.kind])
        unknown = set(self.parameters) - set(params)
        if unknown:
            raise ScenarioFailure("valid_parameters", f"unknown parameters {sorted(unknown)}")
        params.update({k: v for k, v in self.parameters.items() if v is not None})
        return params

    def digest(self) -> str:
        """Hash of the kind and resolved parameters; independent of the clock."""
        blob = json.dumps({"kind": self.kind, "parameters": self.resolved()}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


@dataclass
class RunReport:
    scenario: str
    kind: str
    assertions: Dict[str, bool] = field(default_factory=dict)
    metrics: Dict[str, Any] = field(default_factory=dict)
    artifacts: List[str] = field(default_factory=list)
    tables: Dict[str, Any] = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return all(self.assertions.values())

    def first_failure(self):
        return next((k for k, ok in self.assertions.items() if not ok), None)

    def check(self, name, ok):
        if name in self.assertions:
            raise ValueError(f"assertion {name!r} declared twice")
        self.assertions[name] = bool(ok)

    def to_json(self) -> str:
        return json.dumps({"scenario": self.scenario, "kind": self.kind, "passed": self.passed,
                           "assertions": self.assertions, "metrics": self.metrics,
                           "artifacts": self.artifacts}, indent=2, sort_keys=True, default=float)


def _alternative(trace):
    try:
        rep = verify_dichotomy(trace)
    except InconsistentTrace:
        return None
    return rep.alternative if rep.passed else None


def _flow_counterexample(p, report):
    N = int(p["N"])
    if p["eps"] is not None:
        eps = float(p["eps"])
        if not (0.0 < eps <= p["eps_max"]):
            raise ScenarioFailure("eps_in_range", f"eps = {eps} outside (0, {p['eps_max']}]")
    else:
        eps = sv.eps_for_energy_window(float(p["delta"]), N, p["eps_max"])
    c0 = sv.perturbed_double_circle(eps, N, p["eps_max"])
    cfg = FlowConfig(N=N, velocity_tol=p["velocity_tol"], max_steps=int(p["max_steps"]),
                     snapshot_every=int(p["snapshot_every"]))
    trace, limit = run_to_convergence(c0, cfg)
    e = trace.energies()
    four_pi = 4.0 * math.pi
    report.metrics.update(eps=eps, initial_energy=float(e[0]), final_energy=float(e[-1]),
                          steps=len(e) - 1, flow_time=float(trace.final.t),
                          limit=limit.tag, residual=limit.residual)
    report.check("energy_start_in_window", four_pi < e[0] < four_pi + p["delta"])
    report.check("energy_monotone", bool(np.all(np.diff(e) <= 1e-9 * e[:-1])))
    report.check("final_energy_4pi", abs(e[-1] - four_pi) < 1e-3)
    report.check("limit_double_circle", limit.tag == DOUBLE_CIRCLE)
    report.check("ind2_constant_zero", all(v == 0 for v in trace.ind2_values()))
    report.check("initial_self_intersections_one", trace.samples[0].self_intersections == 1)
    report.check("dichotomy_alternative_B", _alternative(trace) == "B")
    report.tables.update(trace=trace, limit=limit)


def _flow_single_circle(p, report):
    N = int(p["N"])
    s = 2.0 * math.pi * np.arange(N) / N
    amp = float(p["amplitude"])
    c0 = normal_graph(great_circle(N), amp * (np.cos(3.0 * s) + 0.6 * np.sin(2.0 * s)))
    cfg = FlowConfig(N=N, velocity_tol=p["velocity_tol"], max_steps=int(p["max_steps"]),
                     snapshot_every=int(p["snapshot_every"]))
    trace, limit = run_to_convergence(c0, cfg)
    e = trace.energies()
    report.metrics.update(initial_energy=float(e[0]), final_energy=float(e[-1]),
                          steps=len(e) - 1, limit=limit.tag, residual=limit.residual)
    report.check("energy_monotone", bool(np.all(np.diff(e) <= 1e-9 * e[:-1])))
    report.check("final_energy_2pi", abs(e[-1] - 2.0 * math.pi) < 1e-3)
    report.check("limit_single_circle", limit.tag == SINGLE_CIRCLE)
    report.check("ind2_constant_one", all(v == 1 for v in trace.ind2_values()))
    report.check("dichotomy_alternative_A", _alternative(trace) == "A")
    report.tables.update(trace=trace, limit=limit)


def _catalog_scan(p, report):
    gap = elastica.critical_gap_scan(int(p["n_max"]))
    rows = []
    worst = 0.0
    for (m, n), energy in sorted(gap.energies.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        row = {"m": m, "n": n, "p": elastica.modulus_for_ratio(m, n),
               "energy_closed_form": energy, "energy_quadrature": None, "closure_gap": None}
        if n <= p["quadrature_n_max"]:
            ce = elastica.synthesize(m, n, int(p["samples_per_lobe"]) * n)
            row["energy_quadrature"] = ce.energy_quadrature
            row["closure_gap"] = ce.closure_gap
            worst = max(worst, abs(energy - ce.energy_quadrature) / energy)
        rows.append(row)
    bound = 6.0 * math.pi / math.sqrt(2.0)
    report.metrics.update(pairs=len(rows), min_energy=gap.min_energy, min_pair=list(gap.min_pair),
                          max_quadrature_defect=worst,
                          geodesic_values_in_window=gap.geodesic_values_in_window)
    report.check("gap_scan_pass", gap.passed)
    report.check("lower_bound_13_32865", all(r["energy_closed_form"] > bound for r in rows))
    report.check("above_8pi_over_sqrt2", all(r["energy_closed_form"] > gap.window_top for r in rows))
    report.check("closed_form_matches_quadrature", worst < 1e-4)
    report.tables.update(catalog=rows)


def smooth_closing_family(count, M):
    """Deterministic family of smoothly closing perturbations.

    Each profile is the bump times a trigonometric polynomial whose
    coefficients come from a fixed quasi-random sequence.
    """
    t = np.linspace(0.0, sv.TWO_PI, M + 1)
    base = sv._bump(t)
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    out = []
    for i in range(count):
        profs = []
        for side in range(2):
            poly = np.zeros_like(t)
            for k in range(6):
                u = ((i * 12 + side * 6 + k + 1) * golden) % 1.0
                poly += (2.0 * u - 1.0) * (np.cos(k * t) if k % 2 == 0 else np.sin(k * t))
            profs.append(base * poly)
        out.append(sv.NormalPerturbation(*profs))
    return out


def _second_variation_suite(p, report):
    M = int(p["samples"])
    forms = [sv.second_variation_form(q) for q in smooth_closing_family(int(p["perturbations"]), M)]
    bump = sv.bump_phi(M)
    pair = sv.NormalPerturbation(bump.values, -bump.values)
    full = sv.second_variation_form(pair)
    left, right = sv.split_form(pair)
    fd = sv.finite_difference_second_variation(sv._bump_pair, int(p["N"]))
    eps_grid = [0.01, 0.03, 0.05, 0.1]
    energies = [elastic_energy(sv.perturbed_double_circle(e, int(p["N"]))) for e in eps_grid]
    report.metrics.update(min_random_form=min(forms), bump_form=full, split=[left, right],
                          finite_difference=fd, window_energies=energies)
    report.check("form_nonnegative", min(forms) >= -1e-8)
    report.check("split_identity", abs(left + right - full) <= 1e-8 * abs(full))
    report.check("bump_split_positive", left > 0.0 and right > 0.0)
    report.check("finite_difference_match", abs(fd - full) / abs(full) < 0.05)
    report.check("energy_window", all(4.0 * math.pi < e < 13.0 for e in energies))
    report.check("energy_increasing_in_eps", bool(np.all(np.diff(energies) > 0.0)))


def _hopf_thresholds(p, report):
    N, N_f = int(p["N"]), int(p["N_f"])
    clifford = hopf.willmore_energy(hopf.lift_curve(great_circle(256), 64))
    eps = sv.eps_for_energy_window(float(p["delta"]), N)
    counterexample = sv.perturbed_double_circle(eps, N)
    corpus = {
        "great_circle": great_circle(256),
        "double_circle": great_circle(512, covers=2),
        "latitude_0.6": latitude_circle(0.6, 256),
        "counterexample": counterexample,
        "elastica_1_2": elastica.synthesize(1, 2, 512).curve,
    }
    reports = {k: hopf.threshold_report(c, N_f) for k, c in corpus.items()}
    will_ce = reports["counterexample"].willmore
    four_pi2 = 4.0 * math.pi ** 2
    report.metrics.update(clifford=clifford, eps=eps,
                          thresholds={k: r.as_dict() for k, r in reports.items()})
    report.check("clifford_2pi2", abs(clifford - 2.0 * math.pi ** 2) < 1e-2 * 2.0 * math.pi ** 2)
    report.check("pi_factor_law", all(r.pi_factor_defect < 2e-2 for r in reports.values()))
    report.check("counterexample_window",
                 four_pi2 < will_ce < four_pi2 + math.pi * float(p["delta"]))
    report.check("elastica_above_8pi2_over_sqrt2", not reports["elastica_1_2"].below_8pi2_over_sqrt2)
    if p["mesh"]:
        report.tables["mesh"] = (hopf.lift_curve(counterexample, N_f), list(p["stereo_pole"]))


RUNNERS = {
    "flow_counterexample": _flow_counterexample,
    "flow_single_circle": _flow_single_circle,
    "catalog_scan": _catalog_scan,
    "second_variation_suite": _second_variation_suite,
    "hopf_thresholds": _hopf_thresholds,
}


def run_scenario(s: Scenario, strict: bool = True) -> RunReport:
    """Run a scenario and check its assertions.

    With ``strict`` a failed assertion raises :class:`ScenarioFailure` naming
    the first one (the report is attached as ``.report``).
    """
    params = s.resolved()
    report = RunReport(s.name, s.kind)
    report.metrics["digest"] = s.digest()
    try:
        RUNNERS[s.kind](params, report)
    except ScenarioFailure:
        raise
    except EpsOutOfRange as exc:
        raise ScenarioFailure("eps_in_range", str(exc)) from exc
    except ElasticaError as exc:
        raise ScenarioFailure(f"{s.kind}_completed", str(exc)) from exc
    if strict and not report.passed:
        err = ScenarioFailure(report.first_failure())
        err.report = report
        raise err
    return report


def _write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(["" if r[h] is None else repr(r[h]) if isinstance(r[h], float) else r[h]
                        for h in header])


def emit_outputs(r: RunReport, s: Scenario) -> List[Path]:
    """Write the report JSON plus the scenario's traces, tables, snapshots and meshes.

    File names are ``<scenario>-<hash>.<ext>`` with the hash of the resolved
    configuration, so identical runs overwrite identical files.
    """
    out = Path(s.output_dir)
    stem = f"{s.name}-{s.digest()}"
    paths: List[Path] = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        if "trace" in r.tables:
            trace = r.tables["trace"]
            paths.append(trace.write_csv(out / f"{stem}.csv"))
            (out / f"{stem}-trace.json").write_text(trace_to_json(trace, r.tables["limit"]))
            paths.append(out / f"{stem}-trace.json")
            paths.extend(trace.write_snapshots(out, stem))
        if "catalog" in r.tables:
            _write_table(out / f"{stem}.csv",
                         ["m", "n", "p", "energy_closed_form", "energy_quadrature", "closure_gap"],
                         r.tables["catalog"])
            paths.append(out / f"{stem}.csv")
        if "mesh" in r.tables:
            torus, pole = r.tables["mesh"]
            paths.append(Path(hopf.write_obj(torus, out / f"{stem}.obj", pole)))
        r.artifacts = [str(p) for p in paths] + [str(out / f"{stem}.json")]
        (out / f"{stem}.json").write_text(r.to_json())
        paths.append(out / f"{stem}.json")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return paths
