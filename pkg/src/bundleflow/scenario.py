"""Scenario configuration: JSON documents describing a manifold, a system,
an initial state, integrator settings and requested outputs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import catalog
from .bundle import BundleState, BundleSystem, FPlanarCoefficients, FTensor
from .errors import (
    BundleFlowError,
    ExprSyntaxError,
    ScenarioError,
    UnknownEntryError,
)
from .geometry import FieldArray3, FieldMatrix, MetricStructure
from .integrate import IntegratorConfig

__all__ = ["Scenario", "load_scenario"]

_CHECK_NAMES = ("norden", "parallel_phi", "curvature_purity")


@dataclass
class Scenario:
    name: str
    structure: MetricStructure
    system: BundleSystem | None
    initial: BundleState | None
    integrator: IntegratorConfig | None
    checks: tuple[str, ...]
    seed: int
    check_points: int
    frenet_order: int
    constancy_tol: float
    outputs: dict = field(default_factory=dict)

    @property
    def zero_span(self) -> bool:
        return bool(self.outputs.get("_zero_span", False))


def _fail(msg: str) -> ScenarioError:
    return ScenarioError(msg)


def _vector(raw, dim: int, what: str) -> np.ndarray:
    try:
        vec = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise _fail(f"{what} must be a numeric vector") from None
    if vec.shape != (dim,):
        raise _fail(f"{what} must have length {dim}, got shape {vec.shape}")
    return vec


def _build_structure(spec) -> tuple[MetricStructure, FTensor | None]:
    if isinstance(spec, str):
        try:
            ent = catalog.entry(spec)
        except UnknownEntryError as exc:
            raise _fail(str(exc)) from None
        return ent.structure, ent.f_tensor
    if not isinstance(spec, dict):
        raise _fail("manifold must be a catalog name or an inline object")
    try:
        dim = int(spec["dim"])
    except (KeyError, TypeError, ValueError):
        raise _fail("inline manifold needs an integer 'dim'") from None
    try:
        g = FieldMatrix.from_spec(spec["g"], dim)
        phi = FieldMatrix.from_spec(spec["phi"], dim)
        christoffel = None
        if "christoffel" in spec:
            christoffel = FieldArray3.from_spec(spec["christoffel"], dim)
        f_tensor = None
        if "F" in spec:
            f_tensor = FTensor.from_spec(spec["F"], dim)
    except (ExprSyntaxError, ValueError, KeyError) as exc:
        raise _fail(f"bad inline manifold: {exc}") from None
    try:
        structure = MetricStructure(
            dim,
            g,
            phi,
            christoffel=christoffel,
            fd_step=float(spec.get("fd_step", 1e-5)),
            chart_box=spec.get("chart_box"),
            name=str(spec.get("name", "inline")),
        )
    except ValueError as exc:
        raise _fail(f"bad inline manifold: {exc}") from None
    return structure, f_tensor


def _build_system(doc, structure, default_f) -> BundleSystem | None:
    kind = doc.get("system")
    if kind is None:
        return None
    if kind not in ("geodesic_tm", "geodesic_unit", "f_geodesic_tm",
                    "f_geodesic_unit", "f_planar_tm", "f_planar_unit"):
        raise _fail(f"unknown system kind {kind!r}")
    f_tensor = default_f
    if "F" in doc:
        try:
            f_tensor = FTensor.from_spec(doc["F"], structure.dim)
        except (ExprSyntaxError, ValueError) as exc:
            raise _fail(f"bad F tensor: {exc}") from None
    coeffs = None
    if kind.startswith("f_planar"):
        if "rho1" not in doc or "rho2" not in doc:
            raise _fail("f_planar systems need rho1 and rho2 expressions in t")
        try:
            coeffs = FPlanarCoefficients.parse(str(doc["rho1"]), str(doc["rho2"]))
        except ExprSyntaxError as exc:
            raise _fail(f"bad coefficient expression: {exc}") from None
    if kind.startswith("f_") and f_tensor is None:
        raise _fail(f"system {kind!r} needs an F tensor (inline or catalog default)")
    try:
        return BundleSystem(
            kind,
            f_tensor=f_tensor if kind.startswith("f_") else None,
            coefficients=coeffs,
        )
    except ValueError as exc:
        raise _fail(str(exc)) from None


def _build_initial(doc, structure) -> BundleState | None:
    raw = doc.get("initial")
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise _fail("'initial' must be an object")
    dim = structure.dim
    x = _vector(raw.get("x"), dim, "initial.x")
    xdot = _vector(raw.get("xdot"), dim, "initial.xdot")
    xi = _vector(raw.get("xi"), dim, "initial.xi")
    has_dot = "xidot" in raw
    has_prime = "xi_prime" in raw
    if has_dot == has_prime:
        raise _fail("initial state needs exactly one of 'xidot' or 'xi_prime'")
    if has_dot:
        xidot = _vector(raw["xidot"], dim, "initial.xidot")
    else:
        xi_prime = _vector(raw["xi_prime"], dim, "initial.xi_prime")
        gam = structure.christoffel_at(x)
        xidot = xi_prime - np.einsum("lij,i,j->l", gam, xi, xdot)
    return BundleState(x, xdot, xi, xidot)


def _build_integrator(doc) -> tuple[IntegratorConfig | None, bool]:
    raw = doc.get("integrator")
    if raw is None:
        return None, False
    try:
        t0, t1 = (float(v) for v in raw["t_span"])
        step = float(raw["step"])
    except (KeyError, TypeError, ValueError):
        raise _fail("integrator needs numeric 'step' and 't_span': [t0, t1]") from None
    if t1 == t0:
        return None, True  # degenerate span: emit headers only
    try:
        cfg = IntegratorConfig(
            step=step,
            t_span=(t0, t1),
            method=str(raw.get("method", "rk4")),
            monitor_every=int(raw.get("monitor_every", 1)),
        )
    except ValueError as exc:
        raise _fail(f"bad integrator config: {exc}") from None
    return cfg, False


def scenario_from_dict(doc: dict, *, name: str = "scenario") -> Scenario:
    if not isinstance(doc, dict):
        raise _fail("scenario document must be a JSON object")
    if "manifold" not in doc:
        raise _fail("scenario needs a 'manifold'")
    structure, default_f = _build_structure(doc["manifold"])
    system = _build_system(doc, structure, default_f)
    try:
        initial = _build_initial(doc, structure)
    except BundleFlowError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise _fail(f"bad initial state: {exc}") from None
    integrator, zero_span = _build_integrator(doc)
    checks = doc.get("checks", list(_CHECK_NAMES))
    if not isinstance(checks, list) or any(c not in _CHECK_NAMES for c in checks):
        raise _fail(f"'checks' must be a subset of {_CHECK_NAMES}")
    outputs = dict(doc.get("output", {}))
    if zero_span:
        outputs["_zero_span"] = True
    try:
        seed = int(doc.get("seed", 12345))
        check_points = int(doc.get("check_points", 100))
        frenet_opts = doc.get("frenet", {}) or {}
        # default jet order adapts to the chart dimension
        frenet_order = int(frenet_opts.get("order", min(3, structure.dim)))
        constancy_tol = float(frenet_opts.get("constancy_tol", 1e-4))
    except (TypeError, ValueError):
        raise _fail("seed/check_points/frenet options must be numeric") from None
    return Scenario(
        name=str(doc.get("name", name)),
        structure=structure,
        system=system,
        initial=initial,
        integrator=integrator,
        checks=tuple(checks),
        seed=seed,
        check_points=check_points,
        frenet_order=frenet_order,
        constancy_tol=constancy_tol,
        outputs=outputs,
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise _fail(f"scenario file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise _fail(f"scenario file {path} is not valid JSON: {exc}") from None
    return scenario_from_dict(doc, name=path.stem)
