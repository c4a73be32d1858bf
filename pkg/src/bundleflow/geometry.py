"""Base-manifold tensor calculus.

A :class:`MetricStructure` bundles a metric ``g``, an almost para-complex
structure ``phi`` (phi^2 = id with balanced eigenbundles) and, optionally,
analytic Christoffel symbols or a curvature override.  Everything is
evaluated pointwise; derivatives of the component fields are taken by
central finite differences.

Conventions:

* Christoffel arrays are indexed ``gamma[k, i, j] = Gamma^k_{ij}``.
* The curvature sign follows ``R(X, Y)Z = [nabla_X, nabla_Y]Z - nabla_[X,Y] Z``.
* The twin metric is ``G(X, Y) = g(phi X, Y)``, symmetric whenever g is pure;
  it may be indefinite, so "norms" computed against G are signed quadratic
  form values and square roots are only taken where the geodesic theory
  requires them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PurityError, SingularMetricError
from .expressions import ScalarField

__all__ = [
    "FieldMatrix",
    "FieldArray3",
    "MetricStructure",
    "CurvatureOperator",
    "CheckReport",
    "sample_chart_points",
    "check_norden",
    "check_parallel_phi",
    "check_curvature_purity",
    "curvature_power",
    "curvature_power_closed",
]


def _as_field(entry, dim: int) -> ScalarField:
    if isinstance(entry, ScalarField):
        return entry
    if isinstance(entry, str):
        return ScalarField.parse(entry, dim)
    return ScalarField.constant(float(entry), dim)


class FieldMatrix:
    """A dim x dim matrix of scalar fields with a constant fast path."""

    __slots__ = ("dim", "fields", "_const")

    def __init__(self, fields):
        self.dim = len(fields)
        self.fields = [list(row) for row in fields]
        for row in self.fields:
            if len(row) != self.dim:
                raise ValueError("field matrix must be square")
        self._const: np.ndarray | None = None
        if all(f.const_value is not None for row in self.fields for f in row):
            self._const = np.array(
                [[f.const_value for f in row] for row in self.fields], dtype=float
            )

    @classmethod
    def from_spec(cls, rows, dim: int) -> "FieldMatrix":
        if len(rows) != dim:
            raise ValueError(f"expected {dim} rows, got {len(rows)}")
        return cls([[_as_field(e, dim) for e in row] for row in rows])

    @property
    def is_constant(self) -> bool:
        return self._const is not None

    def at(self, point) -> np.ndarray:
        if self._const is not None:
            return self._const.copy()
        return np.array(
            [[f(point) for f in row] for row in self.fields], dtype=float
        )


class FieldArray3:
    """A dim^3 array of scalar fields; used for analytic Christoffel symbols."""

    __slots__ = ("dim", "fields", "_const")

    def __init__(self, fields):
        self.dim = len(fields)
        self.fields = fields
        self._const: np.ndarray | None = None
        if all(
            f.const_value is not None
            for block in self.fields
            for row in block
            for f in row
        ):
            self._const = np.array(
                [[[f.const_value for f in row] for row in block] for block in self.fields],
                dtype=float,
            )

    @classmethod
    def from_spec(cls, blocks, dim: int) -> "FieldArray3":
        if len(blocks) != dim:
            raise ValueError(f"expected {dim} blocks, got {len(blocks)}")
        return cls(
            [[[_as_field(e, dim) for e in row] for row in block] for block in blocks]
        )

    @classmethod
    def zeros(cls, dim: int) -> "FieldArray3":
        zero = ScalarField.constant(0.0, dim)
        return cls([[[zero] * dim for _ in range(dim)] for _ in range(dim)])

    @property
    def is_constant(self) -> bool:
        return self._const is not None

    def at(self, point) -> np.ndarray:
        if self._const is not None:
            return self._const.copy()
        return np.array(
            [[[f(point) for f in row] for row in block] for block in self.fields],
            dtype=float,
        )


class MetricStructure:
    """Metric + para-structure on a single chart, with optional analytic data.

    Parameters
    ----------
    dim:
        Chart dimension; must be even and >= 2 (the para-structure needs
        eigenbundles of equal rank).
    g, phi:
        Component matrices ``g_ij`` and ``phi^i_j`` as expression strings,
        numbers or :class:`ScalarField` objects.
    christoffel:
        Optional analytic ``Gamma^k_{ij}``; when absent, Christoffel symbols
        come from central differences of g with step ``fd_step``.
    riemann:
        Optional curvature override ``(p, X, Y, Z) -> R(X, Y)Z``; used for
        synthetic constant-curvature structures.
    chart_box:
        Per-coordinate sampling box for the structure checks.
    """

    def __init__(
        self,
        dim: int,
        g,
        phi,
        *,
        christoffel=None,
        riemann=None,
        fd_step: float = 1e-5,
        chart_box=None,
        name: str = "",
    ):
        if dim < 2 or dim % 2 != 0:
            raise ValueError(f"dimension must be even and >= 2, got {dim}")
        if fd_step <= 0 or fd_step < 1e-12:
            raise ValueError(f"finite-difference step underflow: {fd_step}")
        self.dim = dim
        self.g = g if isinstance(g, FieldMatrix) else FieldMatrix.from_spec(g, dim)
        self.phi = (
            phi if isinstance(phi, FieldMatrix) else FieldMatrix.from_spec(phi, dim)
        )
        if christoffel is None or isinstance(christoffel, FieldArray3):
            self.christoffel = christoffel
        else:
            self.christoffel = FieldArray3.from_spec(christoffel, dim)
        self.riemann_override = riemann
        self.fd_step = float(fd_step)
        if chart_box is None:
            chart_box = [(-1.0, 1.0)] * dim
        self.chart_box = np.asarray(chart_box, dtype=float).reshape(dim, 2)
        self.name = name

    # -- pointwise evaluation ------------------------------------------------

    def metric_at(self, point) -> np.ndarray:
        mat = self.g.at(point)
        mat = 0.5 * (mat + mat.T)
        det = float(np.linalg.det(mat))
        scale = max(1.0, float(np.max(np.abs(mat))))
        if abs(det) < 1e-12 * scale**self.dim:
            raise SingularMetricError(f"metric singular at {point}: det = {det:g}")
        return mat

    def metric_inverse_at(self, point) -> np.ndarray:
        return np.linalg.inv(self.metric_at(point))

    def phi_at(self, point) -> np.ndarray:
        return self.phi.at(point)

    def twin_metric_at(self, point, *, tol: float = 1e-10) -> np.ndarray:
        """Twin metric G_ij = g_ik phi^k_j, symmetrized after a purity check."""
        g = self.metric_at(point)
        twin = g @ self.phi_at(point)
        scale = max(1.0, float(np.max(np.abs(twin))))
        asym = float(np.max(np.abs(twin - twin.T)))
        if asym > tol * scale:
            raise PurityError(
                f"twin metric asymmetry {asym:g} exceeds tolerance at {point}"
            )
        return 0.5 * (twin + twin.T)

    def christoffel_at(self, point) -> np.ndarray:
        if self.christoffel is not None:
            return self.christoffel.at(point)
        d, h = self.dim, self.fd_step
        point = np.asarray(point, dtype=float)
        dg = np.empty((d, d, d))
        for l in range(d):
            shift = np.zeros(d)
            shift[l] = h
            dg[l] = (self.g.at(point + shift) - self.g.at(point - shift)) / (2.0 * h)
        ginv = self.metric_inverse_at(point)
        # Gamma^k_ij = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)
        sym = dg + dg.transpose(1, 0, 2) - dg.transpose(1, 2, 0)
        return 0.5 * np.einsum("kl,ijl->kij", ginv, sym)

    @property
    def _dgamma_step(self) -> float:
        # differentiating finite-difference Christoffels is noisier, so a
        # coarser step balances truncation against the inherited roundoff
        return self.fd_step if self.christoffel is not None else 1e-4

    def christoffel_grad_at(self, point) -> np.ndarray:
        """d_m Gamma^k_{ij}, indexed [m, k, i, j]."""
        d = self.dim
        if self.christoffel is not None and self.christoffel.is_constant:
            return np.zeros((d, d, d, d))
        h = self._dgamma_step
        point = np.asarray(point, dtype=float)
        out = np.empty((d, d, d, d))
        for m in range(d):
            shift = np.zeros(d)
            shift[m] = h
            out[m] = (
                self.christoffel_at(point + shift) - self.christoffel_at(point - shift)
            ) / (2.0 * h)
        return out

    def riemann_tensor_at(self, point) -> np.ndarray:
        """Full curvature R^l_{kij} such that (R(X,Y)Z)^l = R^l_{kij} X^i Y^j Z^k."""
        gam = self.christoffel_at(point)
        dgam = self.christoffel_grad_at(point)
        return (
            np.einsum("iljk->lkij", dgam)
            - np.einsum("jlik->lkij", dgam)
            + np.einsum("lim,mjk->lkij", gam, gam)
            - np.einsum("ljm,mik->lkij", gam, gam)
        )

    def riemann_at(self, point, X, Y, Z) -> np.ndarray:
        if self.riemann_override is not None:
            return np.asarray(self.riemann_override(point, X, Y, Z), dtype=float)
        tensor = self.riemann_tensor_at(point)
        return np.einsum("lkij,i,j,k->l", tensor, X, Y, Z)


@dataclass(frozen=True)
class CurvatureOperator:
    """Evaluator for R(X, Y)Z, either metric-derived or synthetic.

    The synthetic kind implements the constant-curvature rule
    ``R(X, Y)Z = c (g(Y, Z) X - g(X, Z) Y)`` exactly; it is not derived from
    any metric and is used to exercise curvature-power identities.
    """

    kind: str  # "constant" | "from_metric"
    c: float = 0.0
    structure: MetricStructure | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "from_metric"):
            raise ValueError(f"unknown curvature operator kind {self.kind!r}")
        if self.kind == "from_metric" and self.structure is None:
            raise ValueError("from_metric operator needs a structure")

    def apply(self, X, Y, Z, *, g_mat=None, point=None) -> np.ndarray:
        if self.kind == "constant":
            if g_mat is None:
                raise ValueError("constant-curvature operator needs g at the point")
            gY = g_mat @ np.asarray(Y, dtype=float)
            gX = g_mat @ np.asarray(X, dtype=float)
            return self.c * (float(gY @ Z) * np.asarray(X) - float(gX @ Z) * np.asarray(Y))
        return self.structure.riemann_at(point, X, Y, Z)

    def as_override(self, structure: MetricStructure):
        """Package a constant operator as a structure-level curvature override."""
        if self.kind != "constant":
            raise ValueError("only constant operators can act as overrides")

        def override(point, X, Y, Z):
            return self.apply(X, Y, Z, g_mat=structure.metric_at(point))

        return override


def curvature_power(op: CurvatureOperator, power: int, X, Y, Z, *, g_mat=None, point=None):
    """Iterated curvature operator R^p(X, Y)Z = R^{p-1}(X, Y)(R(X, Y)Z)."""
    if power < 1:
        raise ValueError(f"power must be >= 1, got {power}")
    out = np.asarray(Z, dtype=float)
    for _ in range(power):
        out = op.apply(X, Y, out, g_mat=g_mat, point=point)
    return out


def curvature_power_closed(op: CurvatureOperator, power: int, X, Y, Z, *, g_mat):
    """Closed form of R^p for a constant-curvature operator.

    With b^2 = |X|^2 |Y|^2 - g(X, Y)^2 the iterates collapse to
    (-b^2 c^2)^(k-1) R for p = 2k - 1 and (-b^2 c^2)^(k-1) R^2 for p = 2k.
    """
    if op.kind != "constant":
        raise ValueError("closed form applies to constant-curvature operators only")
    if power < 1:
        raise ValueError(f"power must be >= 1, got {power}")
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    b_sq = float(X @ g_mat @ X) * float(Y @ g_mat @ Y) - float(X @ g_mat @ Y) ** 2
    scale = -(b_sq * op.c**2)
    base = op.apply(X, Y, Z, g_mat=g_mat)
    if power % 2 == 1:  # p = 2k - 1
        k = (power + 1) // 2
    else:  # p = 2k, one more application
        k = power // 2
        base = op.apply(X, Y, base, g_mat=g_mat)
    return scale ** (k - 1) * base


# -- sampled structure checks ----------------------------------------------


@dataclass(frozen=True)
class CheckReport:
    name: str
    passed: bool
    max_residual: float
    tol: float
    n_points: int
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "max_residual": float(self.max_residual),
            "tol": float(self.tol),
            "n_points": int(self.n_points),
            "details": {k: float(v) for k, v in self.details.items()},
        }


def sample_chart_points(M: MetricStructure, n: int, rng) -> np.ndarray:
    lo = M.chart_box[:, 0]
    hi = M.chart_box[:, 1]
    return lo + (hi - lo) * rng.random((n, M.dim))


def check_norden(
    M: MetricStructure, *, n_points: int = 100, seed: int = 12345, tol: float = 1e-8
) -> CheckReport:
    """Check phi^2 = id and purity g(phi X, Y) = g(X, phi Y) at sampled points."""
    rng = np.random.default_rng(seed)
    pts = sample_chart_points(M, n_points, rng)
    eye = np.eye(M.dim)
    purity = 0.0
    phi_sq = 0.0
    for p in pts:
        g = M.metric_at(p)
        phi = M.phi_at(p)
        twin = g @ phi
        purity = max(purity, float(np.max(np.abs(twin - twin.T))))
        phi_sq = max(phi_sq, float(np.max(np.abs(phi @ phi - eye))))
    residual = max(purity, phi_sq)
    return CheckReport(
        "norden",
        residual < tol,
        residual,
        tol,
        n_points,
        {"purity": purity, "phi_square": phi_sq},
    )


def check_parallel_phi(
    M: MetricStructure,
    *,
    n_points: int = 100,
    seed: int = 12345,
    tol: float | None = None,
) -> CheckReport:
    """Check nabla phi = 0 for the Levi-Civita connection at sampled points."""
    if tol is None:
        tol = 1e-8 if M.christoffel is not None else 1e-5
    rng = np.random.default_rng(seed)
    pts = sample_chart_points(M, n_points, rng)
    d, h = M.dim, M.fd_step
    worst = 0.0
    for p in pts:
        dphi = np.empty((d, d, d))
        for l in range(d):
            shift = np.zeros(d)
            shift[l] = h
            dphi[l] = (M.phi_at(p + shift) - M.phi_at(p - shift)) / (2.0 * h)
        gam = M.christoffel_at(p)
        phi = M.phi_at(p)
        # (nabla_i phi)^k_j = d_i phi^k_j + Gamma^k_il phi^l_j - Gamma^l_ij phi^k_l
        nabla = (
            dphi
            + np.einsum("kil,lj->ikj", gam, phi)
            - np.einsum("lij,kl->ikj", gam, phi)
        )
        worst = max(worst, float(np.max(np.abs(nabla))))
    return CheckReport("parallel_phi", worst < tol, worst, tol, n_points)


def check_curvature_purity(
    M: MetricStructure,
    *,
    n_points: int = 20,
    seed: int = 12345,
    tol: float | None = None,
) -> CheckReport:
    """Check g(R(phi X, Y)Z, W) = g(R(X, phi Y)Z, W) on basis tuples."""
    if tol is None:
        tol = 1e-6 if M.christoffel is not None else 1e-4
    rng = np.random.default_rng(seed)
    pts = sample_chart_points(M, n_points, rng)
    d = M.dim
    eye = np.eye(d)
    worst = 0.0
    for p in pts:
        g = M.metric_at(p)
        phi = M.phi_at(p)
        if M.riemann_override is not None:
            for i in range(d):
                for j in range(d):
                    for k in range(d):
                        left = M.riemann_at(p, phi[:, i], eye[j], eye[k])
                        right = M.riemann_at(p, eye[i], phi[:, j], eye[k])
                        worst = max(worst, float(np.max(np.abs(g @ (left - right)))))
            continue
        tensor = M.riemann_tensor_at(p)
        left = np.einsum("lkmj,mi->lkij", tensor, phi)
        right = np.einsum("lkim,mj->lkij", tensor, phi)
        worst = max(
            worst, float(np.max(np.abs(np.einsum("hl,lkij->hkij", g, left - right))))
        )
    return CheckReport("curvature_purity", worst < tol, worst, tol, n_points)
