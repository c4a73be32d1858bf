import numpy as np
import pytest

from bundleflow import catalog
from bundleflow.errors import PurityError, SingularMetricError
from bundleflow.geometry import (
    CurvatureOperator,
    MetricStructure,
    check_curvature_purity,
    check_norden,
    check_parallel_phi,
    curvature_power,
    curvature_power_closed,
    sample_chart_points,
)

EXP2D = catalog.entry("exp2d").structure
FLAT = catalog.entry("flat_diag").structure
POLY = catalog.entry("poly2d").structure


def fd_variant(M: MetricStructure) -> MetricStructure:
    return MetricStructure(M.dim, M.g, M.phi, fd_step=M.fd_step, chart_box=M.chart_box)


# -- metric and twin metric ----------------------------------------------------


def test_metric_values():
    np.testing.assert_allclose(EXP2D.metric_at((0.0, 0.0)), np.eye(2), atol=1e-15)
    np.testing.assert_allclose(FLAT.metric_at((0.7, -0.3)), np.eye(2))
    np.testing.assert_allclose(
        POLY.metric_at((2.0, 3.0)), np.diag([4.0, 9.0]), atol=1e-15
    )


def test_singular_metric_raises():
    M = MetricStructure(2, [["x1", "0"], ["0", "1"]], [["1", "0"], ["0", "-1"]])
    with pytest.raises(SingularMetricError):
        M.metric_at((0.0, 0.5))


def test_twin_metric_values():
    np.testing.assert_allclose(
        EXP2D.twin_metric_at((0.0, 0.0)), np.array([[0.0, 1.0], [1.0, 0.0]]), atol=1e-15
    )
    np.testing.assert_allclose(FLAT.twin_metric_at((0.1, 0.2)), np.diag([1.0, -1.0]))
    # algebraic sanity only: phi = id gives the twin equal to g itself
    sane = MetricStructure(2, [["2", "0"], ["0", "3"]], [["1", "0"], ["0", "1"]])
    np.testing.assert_allclose(sane.twin_metric_at((0.0, 0.0)), np.diag([2.0, 3.0]))


def test_twin_metric_purity_violation():
    bad = MetricStructure(2, [["1", "0"], ["0", "1"]], [["0", "1"], ["2", "0"]])
    with pytest.raises(PurityError):
        bad.twin_metric_at((0.0, 0.0))


# -- christoffel symbols -------------------------------------------------------


def test_christoffel_analytic_values():
    gam = EXP2D.christoffel_at((0.37, -0.6))
    expected = np.zeros((2, 2, 2))
    expected[0, 0, 0] = 1.0
    expected[1, 1, 1] = 1.0
    np.testing.assert_allclose(gam, expected)

    np.testing.assert_allclose(FLAT.christoffel_at((0.5, 0.5)), np.zeros((2, 2, 2)))

    gam = POLY.christoffel_at((2.0, 0.8))
    expected = np.zeros((2, 2, 2))
    expected[0, 0, 0] = 0.5
    expected[1, 1, 1] = 1.25
    np.testing.assert_allclose(gam, expected)


@pytest.mark.parametrize("M", [EXP2D, POLY], ids=["exp2d", "poly2d"])
def test_finite_difference_matches_analytic(M):
    fd = fd_variant(M)
    rng = np.random.default_rng(3)
    for p in sample_chart_points(M, 10, rng):
        np.testing.assert_allclose(
            fd.christoffel_at(p), M.christoffel_at(p), atol=1e-6
        )


def test_christoffel_symmetry_and_compatibility():
    fd = fd_variant(POLY)
    rng = np.random.default_rng(11)
    h = fd.fd_step
    for p in sample_chart_points(fd, 10, rng):
        gam = fd.christoffel_at(p)
        np.testing.assert_allclose(gam, gam.transpose(0, 2, 1), atol=1e-12)
        # nabla g = 0: d_k g_ij - Gamma^l_ki g_lj - Gamma^l_kj g_il
        dg = np.empty((2, 2, 2))
        for k in range(2):
            shift = np.zeros(2)
            shift[k] = h
            dg[k] = (fd.g.at(p + shift) - fd.g.at(p - shift)) / (2 * h)
        g = fd.metric_at(p)
        compat = (
            dg
            - np.einsum("lki,lj->kij", gam, g)
            - np.einsum("lkj,il->kij", gam, g)
        )
        assert np.max(np.abs(compat)) < 1e-9


def test_fd_step_underflow_rejected():
    with pytest.raises(ValueError):
        MetricStructure(2, [["1", "0"], ["0", "1"]], [["1", "0"], ["0", "-1"]], fd_step=1e-14)


# -- curvature ------------------------------------------------------------------

# non-flat conformal metric for curvature identities (phi plays no role here)
CURVED = MetricStructure(
    2,
    [["exp(2*x1^2)", "0"], ["0", "exp(2*x1^2)"]],
    [["1", "0"], ["0", "-1"]],
    chart_box=[(-0.8, 0.8), (-0.8, 0.8)],
)


def test_riemann_flat_is_zero():
    rng = np.random.default_rng(5)
    for p in sample_chart_points(FLAT, 5, rng):
        X, Y, Z = rng.normal(size=(3, 2))
        np.testing.assert_allclose(FLAT.riemann_at(p, X, Y, Z), 0.0, atol=1e-14)
    # exp2d is flat as well: a product of one-dimensional metrics
    for p in sample_chart_points(EXP2D, 5, rng):
        X, Y, Z = rng.normal(size=(3, 2))
        np.testing.assert_allclose(EXP2D.riemann_at(p, X, Y, Z), 0.0, atol=1e-12)


def test_constant_curvature_operator_example():
    op = CurvatureOperator("constant", c=1.0)
    e1, e2 = np.eye(2)
    np.testing.assert_allclose(op.apply(e1, e2, e2, g_mat=np.eye(2)), e1)


def test_riemann_antisymmetry_and_bianchi_on_curved_metric():
    rng = np.random.default_rng(17)
    for p in sample_chart_points(CURVED, 4, rng):
        X, Y, Z = rng.normal(size=(3, 2))
        r_xy = CURVED.riemann_at(p, X, Y, Z)
        r_yx = CURVED.riemann_at(p, Y, X, Z)
        np.testing.assert_allclose(r_xy, -r_yx, atol=1e-8)
        bianchi = (
            CURVED.riemann_at(p, X, Y, Z)
            + CURVED.riemann_at(p, Y, Z, X)
            + CURVED.riemann_at(p, Z, X, Y)
        )
        np.testing.assert_allclose(bianchi, 0.0, atol=1e-6)
    # sanity: the metric is actually curved
    p = np.array([0.5, 0.1])
    assert np.max(np.abs(CURVED.riemann_tensor_at(p))) > 1e-2


# -- structure checks ------------------------------------------------------------


@pytest.mark.parametrize("M", [EXP2D, FLAT, POLY], ids=["exp2d", "flat_diag", "poly2d"])
def test_catalog_structures_pass_axioms(M):
    assert check_norden(M, n_points=50).passed
    assert check_parallel_phi(M, n_points=50).passed
    assert check_curvature_purity(M, n_points=5).passed


def test_flat_constant_phi_parallel_residual_is_exactly_zero():
    rep = check_parallel_phi(FLAT, n_points=30)
    assert rep.max_residual == 0.0


def test_random_phi_fails_norden():
    rng = np.random.default_rng(0)
    bad = MetricStructure(2, [["1", "0"], ["0", "1"]], rng.uniform(-1, 1, (2, 2)).tolist())
    rep = check_norden(bad, n_points=30)
    assert not rep.passed
    assert rep.max_residual > 1e-2


def test_nonparallel_phi_fails_parallel_check_but_passes_norden():
    # symmetric involutive phi depending on position: pure, but not parallel
    M = MetricStructure(
        2,
        [["1", "0"], ["0", "1"]],
        [["cos(x1)", "sin(x1)"], ["sin(x1)", "-cos(x1)"]],
    )
    assert check_norden(M, n_points=30).passed
    rep = check_parallel_phi(M, n_points=30)
    assert not rep.passed
    assert rep.max_residual > 0.1


def test_synthetic_override_fails_curvature_purity():
    ent = catalog.entry("const_curv(1.0)")
    rep = check_curvature_purity(ent.structure, n_points=3)
    assert not rep.passed


# -- curvature powers -------------------------------------------------------------


def test_from_metric_operator_wraps_the_structure():
    op = CurvatureOperator("from_metric", structure=CURVED)
    p = np.array([0.5, 0.1])
    rng = np.random.default_rng(8)
    X, Y, Z = rng.normal(size=(3, 2))
    np.testing.assert_allclose(
        op.apply(X, Y, Z, point=p), CURVED.riemann_at(p, X, Y, Z)
    )
    with pytest.raises(ValueError):
        CurvatureOperator("from_metric")  # needs a structure
    with pytest.raises(ValueError):
        CurvatureOperator("constant", c=1.0).apply(X, Y, Z)  # needs g at the point


def test_curvature_power_base_case():
    op = CurvatureOperator("constant", c=2.0)
    g = np.eye(4)
    X = np.array([1.0, 0.0, 0.0, 0.0])
    Y = np.array([0.0, 1.0, 0.0, 0.0])
    Z = np.array([0.3, 0.7, -0.2, 0.1])
    np.testing.assert_allclose(
        curvature_power(op, 1, X, Y, Z, g_mat=g), op.apply(X, Y, Z, g_mat=g)
    )
    with pytest.raises(ValueError):
        curvature_power(op, 0, X, Y, Z, g_mat=g)


def test_curvature_power_odd_closed_form():
    # orthonormal pair, c = 1: R^3 = -R
    op = CurvatureOperator("constant", c=1.0)
    g = np.eye(4)
    e = np.eye(4)
    Z = np.array([0.2, -0.4, 1.0, 0.5])
    r1 = curvature_power(op, 1, e[0], e[1], Z, g_mat=g)
    r3 = curvature_power(op, 3, e[0], e[1], Z, g_mat=g)
    np.testing.assert_allclose(r3, -r1, atol=1e-15)


def test_curvature_power_even_closed_form():
    # orthonormal pair, c = 2: R^4 = -4 R^2
    op = CurvatureOperator("constant", c=2.0)
    g = np.eye(4)
    e = np.eye(4)
    Z = np.array([0.2, -0.4, 1.0, 0.5])
    r2 = curvature_power(op, 2, e[0], e[1], Z, g_mat=g)
    r4 = curvature_power(op, 4, e[0], e[1], Z, g_mat=g)
    np.testing.assert_allclose(r4, -4.0 * r2, atol=1e-12)
    np.testing.assert_allclose(
        curvature_power_closed(op, 4, e[0], e[1], Z, g_mat=g), r4, atol=1e-12
    )


def test_curvature_power_closed_matches_iteration_generic():
    g = np.eye(4)
    rng = np.random.default_rng(2)
    X = 0.6 * rng.normal(size=4)
    Y = 0.6 * rng.normal(size=4)
    Z = rng.normal(size=4)
    for c in (-2.0, 1.0, 3.0):
        op = CurvatureOperator("constant", c=c)
        for p in range(1, 9):
            naive = curvature_power(op, p, X, Y, Z, g_mat=g)
            closed = curvature_power_closed(op, p, X, Y, Z, g_mat=g)
            scale = max(1.0, float(np.max(np.abs(naive))))
            np.testing.assert_allclose(closed, naive, atol=1e-12 * scale)
