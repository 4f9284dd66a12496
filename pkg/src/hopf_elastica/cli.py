"""Command line entry point.

Subcommands map onto scenario kinds::

    flow       flow_counterexample (or flow_single_circle with --initial single-circle)
    catalog    catalog_scan
    variation  second_variation_suite
    hopf       hopf_thresholds
    report     all five scenarios

A TOML file given with --config supplies the same keys as the flags
(``eps``, ``delta``, ``n``, ``n_max``, ``out``, ``mesh``, ``stereo_pole``,
``parallel``); a table named after the subcommand overrides top-level keys
and explicit flags override both.  The exit code is 0 iff every assertion
passes.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ScenarioFailure
from .experiments import Scenario, emit_outputs, run_scenario

FLAG_KEYS = ("eps", "delta", "n", "n_max", "out", "mesh", "stereo_pole", "parallel", "initial")


def _pole(text):
    vals = [float(v) for v in str(text).split(",")]
    if len(vals) != 4:
        raise argparse.ArgumentTypeError("stereo pole needs four comma-separated numbers")
    return vals


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hopf-elastica", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML file with default settings")
    common.add_argument("--out", help="output directory (default: out)")
    common.add_argument("--n", type=int, help="vertex count of the base curve")
    common.add_argument("--parallel", action="store_true", default=None,
                        help="run independent scenarios in separate processes")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("flow", parents=[common], help="flow a perturbed double or single circle")
    p.add_argument("--eps", type=float, help="perturbation size (default: solved from --delta)")
    p.add_argument("--delta", type=float, help="target energy window above 4 pi")
    p.add_argument("--initial", choices=["counterexample", "single-circle"])

    p = sub.add_parser("catalog", parents=[common], help="closed elastica energies and gaps")
    p.add_argument("--n-max", dest="n_max", type=int, help="largest lobe count")

    sub.add_parser("variation", parents=[common], help="second variation at the double circle")

    p = sub.add_parser("hopf", parents=[common], help="Willmore energies of Hopf tori")
    p.add_argument("--delta", type=float)
    p.add_argument("--mesh", action="store_true", default=None, help="write an OBJ mesh")
    p.add_argument("--stereo-pole", dest="stereo_pole", type=_pole,
                   help="projection pole in S^3, e.g. 0,0,0,1")

    p = sub.add_parser("report", parents=[common], help="run every scenario")
    p.add_argument("--eps", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--mesh", action="store_true", default=None)
    p.add_argument("--stereo-pole", dest="stereo_pole", type=_pole)
    return parser


def load_config(path) -> dict:
    if path is None:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def merged_settings(args) -> dict:
    cfg = load_config(args.config)
    settings = {k: v for k, v in cfg.items() if not isinstance(v, dict)}
    settings.update(cfg.get(args.command, {}))
    for key in FLAG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            settings[key] = val
    if isinstance(settings.get("stereo_pole"), str):
        settings["stereo_pole"] = _pole(settings["stereo_pole"])
    return settings


def scenarios_for(command: str, st: dict):
    out = st.get("out", "out")
    n = st.get("n")
    flow_params = {"N": n, "eps": st.get("eps"), "delta": st.get("delta")}
    single = {"N": n}
    catalog = {"n_max": st.get("n_max")}
    variation = {"N": n}
    hopf = {"N": n, "delta": st.get("delta"), "mesh": st.get("mesh"),
            "stereo_pole": st.get("stereo_pole")}
    table = {
        "counterexample": ("counterexample", "flow_counterexample", flow_params),
        "single": ("single-circle", "flow_single_circle", single),
        "catalog": ("catalog", "catalog_scan", catalog),
        "variation": ("variation", "second_variation_suite", variation),
        "hopf": ("hopf", "hopf_thresholds", hopf),
    }
    if command == "flow":
        keys = ["single"] if st.get("initial") == "single-circle" else ["counterexample"]
    elif command == "report":
        keys = list(table)
    else:
        keys = [command]
    picked = []
    for key in keys:
        name, kind, params = table[key]
        params = {k: v for k, v in params.items() if v is not None}
        picked.append(Scenario(name, kind, params, out))
    return picked


def execute(s: Scenario) -> dict:
    """Run and emit one scenario; returns a JSON-friendly summary."""
    try:
        report = run_scenario(s, strict=False)
    except ScenarioFailure as exc:
        return {"scenario": s.name, "passed": False, "failed": exc.assertion, "error": str(exc)}
    paths = emit_outputs(report, s)
    return {"scenario": s.name, "passed": report.passed, "failed": report.first_failure(),
            "assertions": report.assertions, "artifacts": [str(p) for p in paths]}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    st = merged_settings(args)
    scenarios = scenarios_for(args.command, st)
    if st.get("parallel") and len(scenarios) > 1:
        with ProcessPoolExecutor(max_workers=len(scenarios)) as pool:
            results = list(pool.map(execute, scenarios))
    else:
        results = [execute(s) for s in scenarios]
    for r in results:
        status = "PASS" if r["passed"] else f"FAIL ({r['failed']})"
        print(f"{r['scenario']:<16} {status}")
        for name, ok in r.get("assertions", {}).items():
            print(f"    {'ok  ' if ok else 'FAIL'} {name}")
        if "error" in r:
            print(f"    {r['error']}")
    if args.command == "report":
        out = Path(st.get("out", "out"))
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.json").write_text(json.dumps(results, indent=2, sort_keys=True))
    return 0 if all(r["passed"] for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
