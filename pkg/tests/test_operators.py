import numpy as np
import pytest

from toda_harmonic import operators as ops
from toda_harmonic.grid import PolarGrid, ScalarField


def test_metric_density_values():
    # 4/(1-rho^2)^2: equals 4 at the origin and 4/(3/4)^2 = 64/9 at rho = 1/2
    assert ops.metric_density(0.0) == pytest.approx(4.0, rel=1e-15)
    assert ops.metric_density(0.5) == pytest.approx(64.0 / 9.0, rel=1e-15)
    arr = ops.metric_density(np.array([0.0, 0.5]))
    assert arr == pytest.approx([4.0, 64.0 / 9.0])
    with pytest.raises(ValueError):
        ops.metric_density(1.0)


def _max_interior_error(grid, values, target):
    lap = ops.apply_laplacian(grid, values)
    return float(np.max(np.abs(lap[grid.interior_mask] - target)))


def test_laplacian_annihilates_constants():
    g = PolarGrid(0.875, 33, 64)
    err = _max_interior_error(g, np.full(g.n_nodes, 3.7), 0.0)
    # pure rounding: entries scale like 1/d_rho^2
    assert err < 1e-9


def test_laplacian_log_identity_and_order():
    # ln(1 - rho^2) has constant hyperbolic Laplacian -1
    max_errs = []
    origin_errs = []
    for n_r, n_t in ((17, 32), (33, 64), (65, 128)):
        g = PolarGrid(0.875, n_r, n_t)
        u = np.log(1.0 - g.rho**2)
        max_errs.append(_max_interior_error(g, u, -1.0))
        origin_errs.append(abs(float(ops.apply_laplacian(g, u)[0]) + 1.0))
    assert max_errs[-1] < 5e-3
    # second order convergence at the origin, a node shared by every grid
    assert 3.7 < origin_errs[0] / origin_errs[1] < 4.3
    assert 3.7 < origin_errs[1] / origin_errs[2] < 4.3
    # global error still shrinks by at least 2.8x per doubling
    assert max_errs[0] / max_errs[1] > 2.8
    assert max_errs[1] / max_errs[2] > 2.8


def test_laplacian_of_log_metric_is_two():
    # log(4/(1-rho^2)^2) = log 4 - 2 log(1-rho^2), so its Laplacian is 2
    g = PolarGrid(0.75, 65, 128)
    v = np.log(ops.metric_density(g.rho))
    assert _max_interior_error(g, v, 2.0) < 5e-3


def test_laplacian_resolves_angular_modes():
    # u = rho^2 cos(2 theta) is harmonic for the euclidean Laplacian, so
    # Delta_g u = 0 as well (conformal factor scales, does not shift, zero)
    g = PolarGrid(0.8, 65, 128)
    u = g.rho**2 * np.cos(2.0 * g.theta)
    assert _max_interior_error(g, u, 0.0) < 2e-3


def test_assemble_operator_m_matrix_pattern():
    g = PolarGrid(0.875, 17, 32)
    a = ops.assemble_operator(g, 2.5).tocoo()
    interior = g.interior_mask
    for i, j, v in zip(a.row, a.col, a.data):
        if not interior[i]:
            continue
        if i == j:
            assert v < 0.0
        else:
            assert v >= 0.0
    # row sums of (Delta - c) on constants: exactly -c up to rounding
    ones = np.ones(g.n_nodes)
    rs = (a @ ones)[interior]
    assert np.max(np.abs(rs + 2.5)) < 1e-9


def test_assemble_operator_rejects_negative_c():
    g = PolarGrid(0.5, 9, 16)
    c = np.zeros(g.n_nodes)
    c[3] = -1.0
    with pytest.raises(ValueError):
        ops.assemble_operator(g, c)


def test_boundary_rows_are_identity():
    g = PolarGrid(0.6, 9, 16)
    a = ops.assemble_operator(g, 1.0).tocsr()
    for i in np.flatnonzero(g.boundary_mask):
        row = a.getrow(i)
        assert row.nnz == 1
        assert row.indices[0] == i
        assert row.data[0] == 1.0


def test_laplace_beltrami_field_wrapper():
    g = PolarGrid(0.7, 17, 32)
    f = ScalarField(g, np.log(1.0 - g.rho**2))
    lap = ops.laplace_beltrami(f)
    assert lap.grid is g
    assert np.all(lap.values[g.boundary_mask] == 0.0)
    assert np.max(np.abs(lap.values[g.interior_mask] + 1.0)) < 0.02


class TestFirstEigenpair:
    def test_positivity_normalisation_residual(self):
        g = PolarGrid(0.875, 33, 64)
        lam, phi = ops.first_eigenpair(g)
        assert lam > 0.0
        assert phi.values.max() == pytest.approx(1.0)
        assert np.all(phi.values[g.interior_mask] > 0.0)
        assert np.all(phi.values[g.boundary_mask] == 0.0)
        res = -ops.apply_laplacian(g, phi.values) - lam * phi.values
        assert np.max(np.abs(res[g.interior_mask])) <= 1e-8 * lam

    def test_domain_monotonicity(self):
        # smaller disk, larger principal eigenvalue
        lam_small, _ = ops.first_eigenpair(PolarGrid(0.6, 33, 64))
        lam_big, _ = ops.first_eigenpair(PolarGrid(0.875, 33, 64))
        assert lam_small > lam_big > 0.0

    def test_deterministic(self):
        g = PolarGrid(0.7, 17, 32)
        lam1, phi1 = ops.first_eigenpair(g)
        lam2, phi2 = ops.first_eigenpair(g)
        assert lam1 == lam2
        assert np.array_equal(phi1.values, phi2.values)


class TestTorsionFunction:
    def test_residual_positivity_boundary(self):
        g = PolarGrid(0.875, 33, 64)
        eta = ops.torsion_function(g)
        assert np.all(eta.values[g.interior_mask] > 0.0)
        assert np.all(eta.values[g.boundary_mask] == 0.0)
        r = ops.apply_laplacian(g, eta.values)
        assert np.max(np.abs(r[g.interior_mask] + 1.0)) < 1e-9

    def test_scales_with_domain(self):
        # eta grows with the domain (comparison principle)
        small = ops.torsion_function(PolarGrid(0.5, 17, 32))
        big = ops.torsion_function(PolarGrid(0.9, 17, 32))
        assert big.values.max() > small.values.max()
