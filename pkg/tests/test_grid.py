import math

import numpy as np
import pytest

from toda_harmonic.grid import (
    DiskDomain,
    PolarGrid,
    ScalarField,
    hyperbolic_radius,
    shrink_radius,
)


def test_hyperbolic_radius_values():
    assert hyperbolic_radius(0.0) == 0.0
    # ln((1+r)/(1-r)) at r = 0.5 is ln 3
    assert math.isclose(hyperbolic_radius(0.5), math.log(3.0), rel_tol=1e-15)
    assert math.isclose(hyperbolic_radius(0.75), math.log(7.0), rel_tol=1e-15)
    with pytest.raises(ValueError):
        hyperbolic_radius(1.0)
    with pytest.raises(ValueError):
        hyperbolic_radius(-0.1)


def test_shrink_radius_inverts_hyperbolic_offset():
    r = 0.9
    eps = 0.4
    s = shrink_radius(r, eps)
    # shrinking by eps reduces the hyperbolic radius by exactly eps
    assert math.isclose(hyperbolic_radius(s), hyperbolic_radius(r) - eps, rel_tol=1e-12)
    assert shrink_radius(r, 0.0) == pytest.approx(r, rel=1e-15)
    with pytest.raises(ValueError):
        shrink_radius(0.5, 10.0)


def test_disk_domain_validation():
    d = DiskDomain(0.875)
    assert d.hyperbolic_radius() == pytest.approx(math.log(15.0), rel=1e-14)
    assert d.shrink(0.2).radius < d.radius
    for bad in (0.0, 1.0, 1.5, -0.3):
        with pytest.raises(ValueError):
            DiskDomain(bad)


class TestPolarGrid:
    def test_layout(self):
        g = PolarGrid(0.5, 5, 8)
        assert g.n_nodes == 1 + 4 * 8
        assert g.rho[0] == 0.0
        assert g.ring_slice(0) == slice(0, 1)
        assert g.ring_slice(1) == slice(1, 9)
        # last ring sits exactly on the boundary circle
        assert np.allclose(g.rho[g.boundary_mask], 0.5)
        assert g.boundary_mask.sum() == 8
        assert g.interior_mask.sum() == g.n_nodes - 8

    def test_node_index_round_trip(self):
        g = PolarGrid(0.7, 7, 12)
        for k in range(1, g.n_r):
            for l in (0, 3, g.n_theta - 1):
                i = g.node_index(k, l)
                assert g.rho[i] == pytest.approx(g.ring_rho[k])
                assert g.theta[i] == pytest.approx(l * g.d_theta)

    def test_validation(self):
        with pytest.raises(ValueError):
            PolarGrid(1.0, 9, 16)
        with pytest.raises(ValueError):
            PolarGrid(0.5, 2, 16)
        with pytest.raises(ValueError):
            PolarGrid(0.5, 9, 6)
        with pytest.raises(ValueError):
            PolarGrid(0.5, 9, 15)  # odd angular count

    def test_truncate_is_prefix(self):
        g = PolarGrid(0.9, 17, 16)
        t = g.truncate(10)
        assert t.d_rho == g.d_rho
        assert t.n_theta == g.n_theta
        assert t.radius == pytest.approx(g.ring_rho[10])
        # truncated node i coincides with parent node i
        assert np.array_equal(t.rho, g.rho[: t.n_nodes])
        assert np.array_equal(t.theta, g.theta[: t.n_nodes])
        with pytest.raises(ValueError):
            g.truncate(1)
        with pytest.raises(ValueError):
            g.truncate(17)

    def test_interpolate_reproduces_smooth_field(self):
        g = PolarGrid(0.8, 65, 64)
        f = g.rho**2 * np.cos(g.theta)  # smooth, 2*pi periodic
        pts_rho = np.array([0.0, 0.123, 0.456, 0.79, 0.8])
        pts_theta = np.array([0.1, 2.0, 4.0, 6.2, 1.0])
        exact = pts_rho**2 * np.cos(pts_theta)
        got = g.interpolate(f, pts_rho, pts_theta)
        assert np.max(np.abs(got - exact)) < 5e-4
        with pytest.raises(ValueError):
            g.interpolate(f, np.array([0.81]), np.array([0.0]))

    def test_interpolate_exact_on_nodes(self):
        g = PolarGrid(0.6, 9, 16)
        f = np.sin(3 * g.theta) + g.rho
        got = g.interpolate(f, g.rho, g.theta)
        assert np.max(np.abs(got - f)) < 1e-13


class TestScalarField:
    def test_shape_and_finiteness_checks(self):
        g = PolarGrid(0.5, 5, 8)
        with pytest.raises(ValueError):
            ScalarField(g, np.zeros(3))
        bad = np.zeros(g.n_nodes)
        bad[2] = np.nan
        with pytest.raises(ValueError):
            ScalarField(g, bad)

    def test_csv_round_trip_is_bit_exact(self, tmp_path):
        g = PolarGrid(0.875, 9, 16)
        rng = np.random.default_rng(7)
        f = ScalarField(g, rng.standard_normal(g.n_nodes) * 17.3)
        path = tmp_path / "field.csv"
        f.to_csv(path)
        back = ScalarField.from_csv(path)
        assert back.grid.same_layout(g)
        assert back.grid.radius == g.radius
        assert np.array_equal(back.values, f.values)

    def test_from_csv_rejects_malformed_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n0,0,1\n")
        with pytest.raises(ValueError):
            ScalarField.from_csv(path)
