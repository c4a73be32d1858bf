"""Tangent-bundle layer: lifts, bundle metric, and geodesic-type ODE systems.

A curve on the bundle is a pair (gamma(t), xi(t)) of a base curve and a
fiber vector along it.  The ODE state keeps the coordinate derivative
``xidot = d xi / dt``; the covariant fiber velocity

    xi'^l = xidot^l + Gamma^l_{ij} xdot^j xi^i

is a derived view.  Every system supported here prescribes covariant targets

    gamma'' = R(xi', phi xi) gamma' + rho1 gamma' + rho2 F gamma'
    xi''    = rho1 xi' + rho2 F xi'            (tangent bundle)
    xi''    = ... - g(xi', phi xi') xi         (phi-unit bundle)

with (rho1, rho2) = (0, 0) for plain geodesics and (0, 1) for F-geodesics,
and expands them to coordinate second derivatives for the integrator.

On the phi-unit bundle {g(xi, phi xi) = 1} the constraints are monitored,
never projected during integration; initial states are normalized once so
the constraints hold exactly at t0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstraintError
from .expressions import ScalarField
from .geometry import FieldMatrix, MetricStructure

__all__ = [
    "BundlePoint",
    "BundleState",
    "FTensor",
    "FPlanarCoefficients",
    "BundleSystem",
    "SYSTEM_KINDS",
    "phi_pairing",
    "unit_defect",
    "sasaki_metric_eval",
    "lift_tangential",
    "covariant_deriv_along",
    "unit_fiber_acceleration",
    "covariant_targets",
    "make_rhs",
    "normalized_unit_state",
    "lorentz_force",
    "geodesic_residual",
    "ResidualReport",
    "phi_mirror",
]

SYSTEM_KINDS = (
    "geodesic_tm",
    "geodesic_unit",
    "f_geodesic_tm",
    "f_geodesic_unit",
    "f_planar_tm",
    "f_planar_unit",
)
_UNIT_KINDS = frozenset(k for k in SYSTEM_KINDS if k.endswith("_unit"))
_F_KINDS = frozenset(k for k in SYSTEM_KINDS if k.startswith("f_"))
_PLANAR_KINDS = frozenset(k for k in SYSTEM_KINDS if k.startswith("f_planar"))


@dataclass(frozen=True)
class BundlePoint:
    """A point (x, xi) of the tangent bundle over a single chart."""

    x: np.ndarray
    xi: np.ndarray


@dataclass
class BundleState:
    """ODE state (x, xdot, xi, xidot); xidot is the coordinate derivative."""

    x: np.ndarray
    xdot: np.ndarray
    xi: np.ndarray
    xidot: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.xdot = np.asarray(self.xdot, dtype=float)
        self.xi = np.asarray(self.xi, dtype=float)
        self.xidot = np.asarray(self.xidot, dtype=float)
        sizes = {a.shape for a in (self.x, self.xdot, self.xi, self.xidot)}
        if len(sizes) != 1:
            raise ValueError("state blocks must share one shape")

    @property
    def dim(self) -> int:
        return self.x.size

    def flat(self) -> np.ndarray:
        return np.concatenate([self.x, self.xdot, self.xi, self.xidot])

    @classmethod
    def from_flat(cls, y: np.ndarray, dim: int) -> "BundleState":
        return cls(y[:dim], y[dim : 2 * dim], y[2 * dim : 3 * dim], y[3 * dim :])

    def copy(self) -> "BundleState":
        return BundleState(
            self.x.copy(), self.xdot.copy(), self.xi.copy(), self.xidot.copy()
        )


class FTensor:
    """A (1,1)-tensor field F^i_j; either explicit components or phi reused."""

    __slots__ = ("matrix", "is_phi", "func")

    def __init__(self, matrix: FieldMatrix | None = None, *, is_phi: bool = False, func=None):
        if sum(x is not None for x in (matrix, func)) + int(is_phi) != 1:
            raise ValueError("provide exactly one of matrix, func or is_phi")
        self.matrix = matrix
        self.is_phi = is_phi
        self.func = func

    @classmethod
    def from_spec(cls, rows, dim: int) -> "FTensor":
        return cls(FieldMatrix.from_spec(rows, dim))

    def at(self, M: MetricStructure, point) -> np.ndarray:
        if self.is_phi:
            return M.phi_at(point)
        if self.func is not None:
            return np.asarray(self.func(point), dtype=float)
        return self.matrix.at(point)


@dataclass(frozen=True)
class FPlanarCoefficients:
    """Coefficient functions rho1(t), rho2(t) of an F-planar system."""

    rho1: ScalarField
    rho2: ScalarField

    @classmethod
    def parse(cls, rho1: str, rho2: str) -> "FPlanarCoefficients":
        return cls(ScalarField.parse(rho1, 1), ScalarField.parse(rho2, 1))

    @classmethod
    def constant(cls, rho1: float, rho2: float) -> "FPlanarCoefficients":
        return cls(ScalarField.constant(rho1, 1), ScalarField.constant(rho2, 1))

    def at(self, t: float) -> tuple[float, float]:
        point = (t,)
        return self.rho1(point), self.rho2(point)


@dataclass(frozen=True)
class BundleSystem:
    """One of the supported covariant second-order systems on TM or T1^phi M."""

    kind: str
    f_tensor: FTensor | None = None
    coefficients: FPlanarCoefficients | None = None

    def __post_init__(self):
        if self.kind not in SYSTEM_KINDS:
            raise ValueError(f"unknown system kind {self.kind!r}")
        if self.kind in _F_KINDS and self.f_tensor is None:
            raise ValueError(f"system {self.kind!r} needs an F tensor")
        if self.kind in _PLANAR_KINDS and self.coefficients is None:
            raise ValueError(f"system {self.kind!r} needs coefficient functions")

    @property
    def on_unit_bundle(self) -> bool:
        return self.kind in _UNIT_KINDS

    def rho_at(self, t: float) -> tuple[float, float]:
        if self.kind in _PLANAR_KINDS:
            return self.coefficients.at(t)
        if self.kind in _F_KINDS:
            return 0.0, 1.0
        return 0.0, 0.0


# -- pointwise bundle algebra ------------------------------------------------


def phi_pairing(M: MetricStructure, point, u, v) -> float:
    """The twin pairing g(u, phi v) at a chart point."""
    g = M.metric_at(point)
    phi = M.phi_at(point)
    return float(u @ g @ (phi @ v))


def unit_defect(M: MetricStructure, bp: BundlePoint) -> float:
    """g(xi, phi xi) - 1; zero exactly on the phi-unit bundle."""
    return phi_pairing(M, bp.x, bp.xi, bp.xi) - 1.0


def is_unit_point(M: MetricStructure, bp: BundlePoint, tol: float = 1e-8) -> bool:
    return abs(unit_defect(M, bp)) <= tol


def sasaki_metric_eval(M: MetricStructure, bp: BundlePoint, A, B) -> float:
    """Bundle metric of two (horizontal, vertical) component pairs at bp.

    Horizontal blocks pair with g, vertical blocks with the twin metric
    G(U, V) = g(U, phi V); cross terms vanish by construction.
    """
    a_h, a_v = (np.asarray(v, dtype=float) for v in A)
    b_h, b_v = (np.asarray(v, dtype=float) for v in B)
    g = M.metric_at(bp.x)
    twin = M.twin_metric_at(bp.x)
    return float(a_h @ g @ b_h + a_v @ twin @ b_v)


def lift_tangential(M: MetricStructure, bp: BundlePoint, Y, *, tol: float = 1e-6):
    """Vertical part of the tangential lift of Y at a phi-unit point.

    Removes the component along the unit normal: Y - g(Y, phi xi) xi.  The
    output pairs to zero with phi xi.
    """
    defect = unit_defect(M, bp)
    if abs(defect) > tol:
        raise ConstraintError(
            f"point is not on the phi-unit bundle (defect {defect:g})"
        )
    Y = np.asarray(Y, dtype=float)
    return Y - phi_pairing(M, bp.x, Y, bp.xi) * bp.xi


def covariant_deriv_along(M: MetricStructure, state: BundleState, xddot=None):
    """Covariant data along the curve: (gamma'' if xddot given else None, xi').

    gamma''^l = xddot^l + Gamma^l_{ij} xdot^i xdot^j
    xi'^l     = xidot^l + Gamma^l_{ij} xdot^j xi^i
    """
    gam = M.christoffel_at(state.x)
    xi_prime = state.xidot + np.einsum("lij,i,j->l", gam, state.xi, state.xdot)
    gamma_dd = None
    if xddot is not None:
        gamma_dd = np.asarray(xddot, dtype=float) + np.einsum(
            "lij,i,j->l", gam, state.xdot, state.xdot
        )
    return gamma_dd, xi_prime


def unit_fiber_acceleration(g_mat, phi_mat, xi, xi_prime) -> np.ndarray:
    """Fiber acceleration -g(xi', phi xi') xi forced by the unit constraint."""
    rho_sq = float(xi_prime @ g_mat @ (phi_mat @ xi_prime))
    return -rho_sq * xi


def covariant_targets(
    M: MetricStructure,
    system: BundleSystem,
    t: float,
    x,
    xdot,
    xi,
    xi_prime,
    *,
    g_mat=None,
    phi_mat=None,
):
    """Covariant right-hand sides (gamma'' target, xi'' target) of a system."""
    if g_mat is None:
        g_mat = M.metric_at(x)
    if phi_mat is None:
        phi_mat = M.phi_at(x)
    accel = M.riemann_at(x, xi_prime, phi_mat @ xi, xdot)
    fiber = np.zeros(M.dim)
    rho1, rho2 = system.rho_at(t)
    if system.kind in _F_KINDS:
        f_mat = system.f_tensor.at(M, x)
        accel = accel + rho1 * xdot + rho2 * (f_mat @ xdot)
        fiber = rho1 * xi_prime + rho2 * (f_mat @ xi_prime)
    if system.on_unit_bundle:
        fiber = fiber + unit_fiber_acceleration(g_mat, phi_mat, xi, xi_prime)
    return accel, fiber


def make_rhs(M: MetricStructure, system: BundleSystem):
    """First-order right-hand side for the flattened state (x, xdot, xi, xidot)."""
    dim = M.dim

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        x = y[:dim]
        xdot = y[dim : 2 * dim]
        xi = y[2 * dim : 3 * dim]
        xidot = y[3 * dim :]
        gam = M.christoffel_at(x)
        xi_prime = xidot + np.einsum("lij,i,j->l", gam, xi, xdot)
        accel, fiber = covariant_targets(M, system, t, x, xdot, xi, xi_prime)
        xddot = accel - np.einsum("lij,i,j->l", gam, xdot, xdot)
        dgam = M.christoffel_grad_at(x)
        xiddot = (
            fiber
            - np.einsum("lij,i,j->l", gam, xi_prime, xdot)
            - np.einsum("klij,k,i,j->l", dgam, xdot, xi, xdot)
            - np.einsum("lij,i,j->l", gam, xi, xddot)
            - np.einsum("lij,i,j->l", gam, xidot, xdot)
        )
        return np.concatenate([xdot, xddot, xidot, xiddot])

    return rhs


def normalized_unit_state(
    M: MetricStructure, state: BundleState, *, tol: float = 1e-6
) -> BundleState:
    """Rescale and project an initial state onto the phi-unit constraints.

    xi is rescaled so g(xi, phi xi) = 1 exactly and the g(xi', phi xi)
    component is removed from the fiber velocity.  Violations beyond ``tol``
    raise :class:`ConstraintError` instead of being silently repaired.
    """
    g = M.metric_at(state.x)
    phi = M.phi_at(state.x)
    norm = float(state.xi @ g @ (phi @ state.xi))
    if abs(norm - 1.0) > tol:
        raise ConstraintError(
            f"initial fiber has g(xi, phi xi) = {norm:.6g}, expected 1"
        )
    if norm <= 0.0:
        raise ConstraintError("initial fiber has non-positive phi-norm")
    gam = M.christoffel_at(state.x)
    xi_prime = state.xidot + np.einsum("lij,i,j->l", gam, state.xi, state.xdot)
    scale = float(np.sqrt(norm))
    xi = state.xi / scale
    xi_prime = xi_prime / scale
    ortho = float(xi_prime @ g @ (phi @ xi))
    if abs(ortho) > tol:
        raise ConstraintError(
            f"initial fiber velocity has g(xi', phi xi) = {ortho:.6g}, expected 0"
        )
    xi_prime = xi_prime - ortho * xi
    xidot = xi_prime - np.einsum("lij,i,j->l", gam, xi, state.xdot)
    return BundleState(state.x.copy(), state.xdot.copy(), xi, xidot)


def lorentz_force(
    M: MetricStructure,
    omega: FieldMatrix,
    strength: float = 1.0,
    *,
    n_check: int = 8,
    seed: int = 0,
) -> FTensor:
    """Force tensor Phi^i_j = g^{ik} Omega_{kj} of an antisymmetric 2-form.

    Scaled by ``strength`` so that feeding the result to an F-geodesic system
    integrates the magnetic-curve equation gamma'' = q Phi gamma'.
    """
    from .geometry import sample_chart_points

    rng = np.random.default_rng(seed)
    for p in sample_chart_points(M, n_check, rng):
        w = omega.at(p)
        scale = max(1.0, float(np.max(np.abs(w))))
        if float(np.max(np.abs(w + w.T))) > 1e-10 * scale:
            raise ValueError(f"2-form is not antisymmetric at {p}")

    def components(point):
        return strength * (M.metric_inverse_at(point) @ omega.at(point))

    return FTensor(func=components)


# -- residuals and the phi-mirror --------------------------------------------


@dataclass(frozen=True)
class ResidualReport:
    """Max norm of the defining covariant equations over trajectory samples."""

    max_residual: float
    times: np.ndarray
    residuals: np.ndarray

    def as_dict(self) -> dict:
        return {"max_residual": float(self.max_residual)}


def _xi_prime_series(M, traj):
    n = traj.times.size
    out = np.empty_like(traj.xi)
    gammas = []
    for i in range(n):
        gam = M.christoffel_at(traj.x[i])
        gammas.append(gam)
        out[i] = traj.xidot[i] + np.einsum("lij,i,j->l", gam, traj.xi[i], traj.xdot[i])
    return out, gammas


def _second_derivatives(M, traj, gammas, xi_prime):
    """Per-sample covariant (gamma'', xi''); exact when stored coordinate
    second derivatives are present, centered differences of the stored
    series otherwise."""
    n = traj.times.size
    gamma_dd = np.empty_like(traj.x)
    xi_dd = np.empty_like(traj.xi)
    fd = traj.xddot is None or traj.xiddot is None
    if fd:
        if n < 5:
            raise ValueError("too few samples for residual differencing")
        dxdot = np.gradient(traj.xdot, traj.times, axis=0)
        dxi_prime = np.gradient(xi_prime, traj.times, axis=0)
        for i in range(n):
            gam = gammas[i]
            gamma_dd[i] = dxdot[i] + np.einsum(
                "lij,i,j->l", gam, traj.xdot[i], traj.xdot[i]
            )
            xi_dd[i] = dxi_prime[i] + np.einsum(
                "lij,i,j->l", gam, xi_prime[i], traj.xdot[i]
            )
        return gamma_dd, xi_dd, True
    for i in range(n):
        gam = gammas[i]
        dgam = M.christoffel_grad_at(traj.x[i])
        gamma_dd[i] = traj.xddot[i] + np.einsum(
            "lij,i,j->l", gam, traj.xdot[i], traj.xdot[i]
        )
        dxi_prime = (
            traj.xiddot[i]
            + np.einsum("klij,k,i,j->l", dgam, traj.xdot[i], traj.xi[i], traj.xdot[i])
            + np.einsum("lij,i,j->l", gam, traj.xi[i], traj.xddot[i])
            + np.einsum("lij,i,j->l", gam, traj.xidot[i], traj.xdot[i])
        )
        xi_dd[i] = dxi_prime + np.einsum(
            "lij,i,j->l", gam, xi_prime[i], traj.xdot[i]
        )
    return gamma_dd, xi_dd, False


def geodesic_residual(M: MetricStructure, system: BundleSystem, traj) -> ResidualReport:
    """Plug a trajectory back into its covariant equations and report the gap.

    Analytically sampled trajectories carry coordinate second derivatives and
    are evaluated exactly; integrator output is differenced with centered
    second-order stencils and judged on interior samples only.
    """
    if traj.times.size == 0:
        raise ValueError("empty trajectory")
    xi_prime, gammas = _xi_prime_series(M, traj)
    gamma_dd, xi_dd, used_fd = _second_derivatives(M, traj, gammas, xi_prime)
    n = traj.times.size
    res = np.empty(n)
    for i in range(n):
        accel, fiber = covariant_targets(
            M,
            system,
            float(traj.times[i]),
            traj.x[i],
            traj.xdot[i],
            traj.xi[i],
            xi_prime[i],
        )
        res[i] = float(
            np.sqrt(np.sum((gamma_dd[i] - accel) ** 2) + np.sum((xi_dd[i] - fiber) ** 2))
        )
    window = slice(1, -1) if used_fd and n > 2 else slice(None)
    return ResidualReport(float(np.max(res[window])), traj.times, res)


def phi_mirror(M: MetricStructure, traj, *, check_parallel: bool = True):
    """Map a phi-unit trajectory (gamma, xi) to its mirror (gamma, phi xi).

    Uses the parallelism of phi: the mirrored covariant fiber velocity is
    phi xi', which fixes the mirrored coordinate derivative without
    differentiating phi.  Applying the map twice returns the original
    trajectory up to floating point.
    """
    from .geometry import check_parallel_phi
    from .integrate import Trajectory, compute_monitors

    if check_parallel:
        report = check_parallel_phi(M, n_points=4, seed=7, tol=1e-4)
        if not report.passed:
            raise ConstraintError(
                f"phi is not parallel (residual {report.max_residual:g}); "
                "the mirror map needs nabla phi = 0"
            )
    n = traj.times.size
    xi = np.empty_like(traj.xi)
    xidot = np.empty_like(traj.xidot)
    xiddot = None if traj.xiddot is None else np.empty_like(traj.xiddot)
    for i in range(n):
        x = traj.x[i]
        phi = M.phi_at(x)
        gam = M.christoffel_at(x)
        mu = phi @ traj.xi[i]
        xi_prime = traj.xidot[i] + np.einsum(
            "lij,i,j->l", gam, traj.xi[i], traj.xdot[i]
        )
        mu_prime = phi @ xi_prime
        xi[i] = mu
        xidot[i] = mu_prime - np.einsum("lij,i,j->l", gam, mu, traj.xdot[i])
        if xiddot is not None:
            dgam = M.christoffel_grad_at(x)
            dxi_prime = (
                traj.xiddot[i]
                + np.einsum(
                    "klij,k,i,j->l", dgam, traj.xdot[i], traj.xi[i], traj.xdot[i]
                )
                + np.einsum("lij,i,j->l", gam, traj.xi[i], traj.xddot[i])
                + np.einsum("lij,i,j->l", gam, traj.xidot[i], traj.xdot[i])
            )
            xi_dd = dxi_prime + np.einsum("lij,i,j->l", gam, xi_prime, traj.xdot[i])
            mu_dd = phi @ xi_dd
            dmu_prime = mu_dd - np.einsum("lij,i,j->l", gam, mu_prime, traj.xdot[i])
            xiddot[i] = (
                dmu_prime
                - np.einsum("klij,k,i,j->l", dgam, traj.xdot[i], mu, traj.xdot[i])
                - np.einsum("lij,i,j->l", gam, mu, traj.xddot[i])
                - np.einsum("lij,i,j->l", gam, xidot[i], traj.xdot[i])
            )
    mirrored = Trajectory(
        times=traj.times.copy(),
        x=traj.x.copy(),
        xdot=traj.xdot.copy(),
        xi=xi,
        xidot=xidot,
        xddot=None if traj.xddot is None else traj.xddot.copy(),
        xiddot=xiddot,
        meta=dict(traj.meta, mirrored=not traj.meta.get("mirrored", False)),
    )
    compute_monitors(M, mirrored)
    return mirrored
