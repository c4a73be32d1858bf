"""Command-line front end.

Subcommands: ``check`` (structure axioms), ``integrate`` (trajectory + monitor
CSV), ``frenet`` (curvature CSV + constancy report), ``verify`` (closed-form
verification battery).  JSON in, CSV/JSON out; numbers are written with 17
significant digits so doubles round-trip exactly.

Exit codes: 0 success, 1 failed checks / blow-up / failed claims,
2 configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import verify as verify_mod
from .errors import (
    BundleFlowError,
    ConstraintError,
    IntegrationBlowUp,
    ParameterError,
    ScenarioError,
    SignatureError,
    UnknownEntryError,
    VerticalCurveError,
)
from .frenet import arc_length_reparam, constancy_check, covariant_jets, frenet_curvatures
from .geometry import check_curvature_purity, check_norden, check_parallel_phi
from .integrate import integrate
from .scenario import Scenario, load_scenario

_CONFIG_ERRORS = (ScenarioError, UnknownEntryError, ParameterError)


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _out_path(scenario: Scenario, out_dir: Path, key: str, default: str) -> Path:
    name = scenario.outputs.get(key, default)
    path = Path(name)
    if not path.is_absolute():
        path = out_dir / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _write_rows(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_trajectory_csv(path: Path, dim: int, traj=None) -> None:
    header = (
        ["t"]
        + [f"x{i}" for i in range(1, dim + 1)]
        + [f"xdot{i}" for i in range(1, dim + 1)]
        + [f"xi{i}" for i in range(1, dim + 1)]
        + [f"xidot{i}" for i in range(1, dim + 1)]
    )
    rows = []
    if traj is not None:
        blocks = np.hstack([traj.times[:, None], traj.x, traj.xdot, traj.xi, traj.xidot])
        rows = blocks.tolist()
    _write_rows(path, header, rows)


def _write_monitors_csv(path: Path, traj=None) -> None:
    header = ["t", "unit_norm", "rho_sq", "speed_sq"]
    rows = []
    if traj is not None:
        rows = np.stack(
            [
                traj.monitor_times,
                traj.monitors["unit_norm"],
                traj.monitors["rho_sq"],
                traj.monitors["speed_sq"],
            ],
            axis=1,
        ).tolist()
    _write_rows(path, header, rows)


def _apply_overrides(scenario: Scenario, args) -> Scenario:
    if args.seed is not None:
        scenario.seed = int(args.seed)
    if getattr(args, "step", None) is None and getattr(args, "tspan", None) is None:
        return scenario
    from .integrate import IntegratorConfig

    cfg = scenario.integrator
    step = args.step if args.step is not None else (cfg.step if cfg else None)
    span = cfg.t_span if cfg else None
    if args.tspan is not None:
        parts = args.tspan.split(",")
        if len(parts) != 2:
            raise ScenarioError("--tspan expects 't0,t1'")
        try:
            span = (float(parts[0]), float(parts[1]))
        except ValueError:
            raise ScenarioError("--tspan expects numeric 't0,t1'") from None
    if step is None or span is None:
        raise ScenarioError("no integrator config; provide both --step and --tspan")
    if span[0] == span[1]:
        scenario.outputs["_zero_span"] = True
        scenario.integrator = None
        return scenario
    try:
        scenario.integrator = IntegratorConfig(
            step=float(step),
            t_span=span,
            method=cfg.method if cfg else "rk4",
            monitor_every=cfg.monitor_every if cfg else 1,
        )
    except ValueError as exc:
        raise ScenarioError(f"bad integrator override: {exc}") from None
    scenario.outputs.pop("_zero_span", None)
    return scenario


def cmd_check(args) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    M = scenario.structure
    runners = {
        "norden": lambda: check_norden(M, n_points=scenario.check_points, seed=scenario.seed),
        "parallel_phi": lambda: check_parallel_phi(
            M, n_points=scenario.check_points, seed=scenario.seed
        ),
        "curvature_purity": lambda: check_curvature_purity(
            M, n_points=min(scenario.check_points, 20), seed=scenario.seed
        ),
    }
    reports = [runners[name]() for name in scenario.checks]
    for rep in reports:
        mark = "PASS" if rep.passed else "FAIL"
        print(
            f"{mark}  {rep.name:<18s} max_residual={rep.max_residual:.3e}"
            f"  tol={rep.tol:.1e}  points={rep.n_points}"
        )
    passed = all(r.passed for r in reports)
    out_dir = Path(args.out)
    report_path = _out_path(scenario, out_dir, "report", "check_report.json")
    report_path.write_text(
        json.dumps(
            {
                "scenario": scenario.name,
                "manifold": M.name or "inline",
                "seed": scenario.seed,
                "checks": [r.as_dict() for r in reports],
                "passed": passed,
            },
            indent=2,
        )
        + "\n"
    )
    print(("all checks passed" if passed else "checks FAILED") + f" -> {report_path}")
    return 0 if passed else 1


def _integrate_scenario(scenario: Scenario):
    if scenario.system is None:
        raise ScenarioError("scenario has no 'system'")
    if scenario.initial is None:
        raise ScenarioError("scenario has no 'initial' state")
    if scenario.integrator is None and not scenario.zero_span:
        raise ScenarioError("scenario has no 'integrator' config")
    return integrate(
        scenario.structure, scenario.system, scenario.initial, scenario.integrator
    )


def cmd_integrate(args) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    out_dir = Path(args.out)
    traj_path = _out_path(scenario, out_dir, "trajectory", "trajectory.csv")
    mon_path = _out_path(scenario, out_dir, "monitors", "monitors.csv")
    if scenario.zero_span:
        _write_trajectory_csv(traj_path, scenario.structure.dim, None)
        _write_monitors_csv(mon_path, None)
        print(f"zero-length span: wrote headers -> {traj_path}, {mon_path}")
        return 0
    try:
        traj = _integrate_scenario(scenario)
    except IntegrationBlowUp as exc:
        _write_trajectory_csv(traj_path, scenario.structure.dim, exc.trajectory)
        _write_monitors_csv(mon_path, exc.trajectory)
        print(f"integration blew up at t = {exc.time:g}; partial output written", file=sys.stderr)
        return 1
    _write_trajectory_csv(traj_path, scenario.structure.dim, traj)
    _write_monitors_csv(mon_path, traj)
    print(f"wrote {traj.n} samples -> {traj_path}")
    return 0


def cmd_frenet(args) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    if scenario.zero_span:
        raise ScenarioError("frenet analysis needs a non-degenerate t_span")
    M = scenario.structure
    traj = _integrate_scenario(scenario)
    try:
        arc = arc_length_reparam(M, traj)
        jets = covariant_jets(M, traj, scenario.frenet_order)
        result = frenet_curvatures(M, jets)
    except (VerticalCurveError, SignatureError) as exc:
        print(f"frenet analysis failed: {exc}", file=sys.stderr)
        return 1
    report = constancy_check(result, scenario.constancy_tol)
    out_dir = Path(args.out)
    csv_path = _out_path(scenario, out_dir, "frenet", "frenet.csv")
    # map arc length onto the jets' (possibly trimmed) sample window
    idx = np.searchsorted(traj.times, jets.times)
    header = ["s"] + [f"k{i}" for i in range(1, result.frame_rank + 1)]
    _write_rows(csv_path, header, np.hstack([arc.s[idx][:, None], result.curvatures]))
    for i, dev in zip(report.index, report.max_deviation):
        mark = "PASS" if dev < report.tol else "FAIL"
        print(
            f"{mark}  k{i}: mean={result.means[i - 1]:.8g}"
            f"  max_deviation={dev:.3e}  tol={report.tol:.1e}"
        )
    report_path = _out_path(scenario, out_dir, "report", "frenet_report.json")
    report_path.write_text(
        json.dumps(
            {
                "scenario": scenario.name,
                "frame_rank": result.frame_rank,
                "curvature_means": [float(v) for v in result.means],
                "speed": {"min": float(np.min(arc.speed)), "max": float(np.max(arc.speed))},
                "constancy": report.as_dict(),
            },
            indent=2,
        )
        + "\n"
    )
    print(f"wrote curvature table -> {csv_path}")
    return 0  # constancy is reported, not enforced


def cmd_verify(args) -> int:
    target = args.target
    seed = int(args.seed) if args.seed is not None else verify_mod.DEFAULT_SEED
    if target == "all":
        claims = verify_mod.run_all(seed)
    else:
        claims = verify_mod.run_group(target, seed)
    print(verify_mod.format_claims(claims))
    if args.out is not None:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "verify_report.json").write_text(
            json.dumps(
                {
                    "target": target,
                    "seed": seed,
                    "claims": [c.as_dict() for c in claims],
                    "passed": all(c.passed for c in claims),
                },
                indent=2,
            )
            + "\n"
        )
    return 0 if all(c.passed for c in claims) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bundleflow",
        description="Geodesic and F-geodesic flows on tangent bundles "
        "over para-Kahler-Norden manifolds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario_required=True):
        if scenario_required:
            p.add_argument("--scenario", required=True, help="scenario JSON path")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--step", type=float, default=None, help="step override")
        p.add_argument("--tspan", default=None, help="time span override 't0,t1'")

    p_check = sub.add_parser("check", help="run the structure axiom checks")
    common(p_check)
    p_check.set_defaults(func=cmd_check)

    p_int = sub.add_parser("integrate", help="integrate a scenario to CSV")
    common(p_int)
    p_int.set_defaults(func=cmd_integrate)

    p_fre = sub.add_parser("frenet", help="curvature analysis of the projected curve")
    common(p_fre)
    p_fre.set_defaults(func=cmd_frenet)

    p_ver = sub.add_parser("verify", help="run the closed-form verification battery")
    p_ver.add_argument(
        "target",
        nargs="?",
        default="all",
        help=f"'all' or one of {', '.join(verify_mod.group_names())}",
    )
    p_ver.add_argument("--out", default=None, help="directory for the JSON report")
    p_ver.add_argument("--seed", type=int, default=None, help="seed override")
    p_ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (ConstraintError, SignatureError, VerticalCurveError, BundleFlowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
