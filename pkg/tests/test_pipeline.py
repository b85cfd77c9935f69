import json

import numpy as np
import pytest

from toda_harmonic import pipeline as pl
from toda_harmonic.grid import PolarGrid
from toda_harmonic.solver import ConsistencyError
from toda_harmonic.system import (
    TodaCoefficients,
    TodaState,
    bubble_value,
    growth_weights,
)


def _fuchsian_source(n):
    weights = [float(w) for w in growth_weights(n)]
    return lambda g: TodaCoefficients.constant(g, n, weights)


class TestExhaustionPlan:
    def test_defaults(self):
        plan = pl.ExhaustionPlan()
        assert plan.radii[0] == 0.75
        assert plan.radii[-1] == 1.0 - 2.0**-7
        assert plan.eps_stages[-1] == 0.0
        assert plan.truncate_radius == 0.75

    def test_grid_policy_doubles_toward_the_rim(self):
        plan = pl.ExhaustionPlan(
            radii=(0.75, 0.875, 0.9375), anchor_n_r=257, min_n_r=33, n_theta=64
        )
        sizes = [plan.grid_for(j).n_r for j in range(3)]
        assert sizes == [65, 129, 257]
        assert plan.grid_for(2).radius == 0.9375
        # the floor engages once halving would go below it
        plan2 = pl.ExhaustionPlan(
            radii=(0.75, 0.875, 0.9375), anchor_n_r=65, min_n_r=33, n_theta=64
        )
        assert [plan2.grid_for(j).n_r for j in range(3)] == [33, 33, 65]

    def test_validation(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            pl.ExhaustionPlan(radii=(0.8, 0.8))
        with pytest.raises(ValueError, match="in \\(0, 1\\)"):
            pl.ExhaustionPlan(radii=(0.5, 1.0))
        with pytest.raises(ValueError, match="end at 0"):
            pl.ExhaustionPlan(eps_stages=(0.4, 0.2))
        with pytest.raises(ValueError, match="decrease"):
            pl.ExhaustionPlan(eps_stages=(0.2, 0.4, 0.0))
        with pytest.raises(ValueError, match="truncation radius"):
            pl.ExhaustionPlan(truncate_radius=0.9)
        with pytest.raises(ValueError, match="tolerance"):
            pl.ExhaustionPlan(tol=-1.0)


class TestAdmissibleRadii:
    def test_constant_coefficients_keep_everything(self):
        g = PolarGrid(0.9, 33, 64)
        coeffs = TodaCoefficients.constant(g, 3, [2.0, 2.0])
        cand = [0.3, 0.6, 0.875]
        assert pl.admissible_radii(coeffs, cand) == cand

    def test_vanishing_at_origin_only_is_admissible(self):
        g = PolarGrid(0.9, 33, 64)
        k = 2.0 * g.rho**2
        coeffs = TodaCoefficients(g, 2, k[None, :])
        assert pl.admissible_radii(coeffs, [0.25, 0.5, 0.75]) == [0.25, 0.5, 0.75]

    def test_blocking_zero_is_reported(self):
        # d_rho = 1/64 puts a node exactly on the coefficient zero at z = 0.5
        g = PolarGrid(0.875, 57, 64)
        z = g.rho * np.exp(1j * g.theta)
        k = 2.0 * np.abs(z - 0.5) ** 2
        coeffs = TodaCoefficients(g, 2, k[None, :])
        kept = pl.admissible_radii(coeffs, [0.4, 0.5, 0.6])
        assert kept == [0.4, 0.6]
        with pytest.raises(ValueError, match="k_1"):
            pl.admissible_radii(coeffs, [0.5])

    def test_candidate_validation(self):
        g = PolarGrid(0.5, 17, 32)
        coeffs = TodaCoefficients.constant(g, 2, [1.0])
        with pytest.raises(ValueError, match="no candidate"):
            pl.admissible_radii(coeffs, [])
        with pytest.raises(ValueError, match="increasing"):
            pl.admissible_radii(coeffs, [0.4, 0.3])
        with pytest.raises(ValueError, match="outside the sampled grid"):
            pl.admissible_radii(coeffs, [0.7])

    def test_holomorphic_source_zero_proximity(self):
        class Gamma:
            n = 2

            def evaluate(self, i, z):
                return np.asarray(z) - 0.5

            def zeros(self, i):
                return [0.5 + 0.0j]

        kept = pl.admissible_radii(Gamma(), [0.4, 0.5, 0.6])
        assert kept == [0.4, 0.6]
        with pytest.raises(ValueError, match="gamma_1 zero"):
            pl.admissible_radii(Gamma(), [0.4995, 0.5005])


class TestMaximalOnDomain:
    def test_limit_matches_bubble(self):
        g = PolarGrid(0.5, 65, 128)
        coeffs = TodaCoefficients.constant(g, 2, [1.0])
        log = []
        state = pl.maximal_on_domain(g, coeffs, stage_log=log)
        assert state.grid is g
        core = g.rho <= 0.4 + 1e-12
        exact = bubble_value(2, 0.5, 1.0, g.rho[core])[0]
        assert np.max(np.abs(state.values[0][core] - exact)) < 8e-2
        assert len(log) == 4
        # shrinking eps enlarges the domain and lowers the state
        for entry in log[1:]:
            assert entry["drop_prev"] >= -1e-8
            assert entry["delta_core"] > 0.0
        assert [e["eps"] for e in log] == [0.8, 0.4, 0.2, 0.0]
        radii = [e["radius"] for e in log]
        assert all(b > a for a, b in zip(radii, radii[1:]))

    def test_too_small_grid_rejected(self):
        g = PolarGrid(0.5, 9, 32)
        coeffs = TodaCoefficients.constant(g, 2, [1.0])
        with pytest.raises(ValueError, match="fewer than 3 rings"):
            pl.maximal_on_domain(g, coeffs, eps_stages=(0.9, 0.0))


class TestMaximalSolution:
    def test_fuchsian_rank_two(self):
        plan = pl.ExhaustionPlan(
            radii=tuple(1.0 - 2.0 ** (-j - 1) for j in range(1, 5)),
            anchor_n_r=129,
            n_theta=64,
            min_n_r=33,
        )
        state, trace = pl.maximal_solution(_fuchsian_source(2), plan)
        centers = trace.center_values()
        assert all(b < a for a, b in zip(centers, centers[1:]))
        for c, r in zip(centers, plan.radii):
            assert abs(c - (-np.log(r))) < 2.5e-2
        assert trace.final["classify"] == "solution"
        assert trace.final["probe"]["below"]
        assert state.grid.radius <= 0.75 + 1e-12
        for rec in trace.per_radius:
            assert rec["sub_barrier_gap"] >= -1e-8
        for rec in trace.per_radius[1:]:
            assert rec["min_gap_prev"] >= -1e-8
            assert rec["center_drop_prev"] >= -1e-10

    def test_fuchsian_rank_three_components_decrease(self):
        plan = pl.ExhaustionPlan(
            radii=(0.75, 0.875, 0.9375),
            anchor_n_r=65,
            n_theta=64,
            min_n_r=33,
            probe=False,
        )
        state, trace = pl.maximal_solution(_fuchsian_source(3), plan)
        for comp in range(2):
            centers = trace.center_values(comp)
            assert all(b < a for a, b in zip(centers, centers[1:]))
            assert centers[-1] < 0.2
        assert state.n == 3

    def test_trace_json(self, tmp_path):
        plan = pl.ExhaustionPlan(
            radii=(0.75, 0.875), anchor_n_r=33, n_theta=32, min_n_r=17, probe=False
        )
        _, trace = pl.maximal_solution(_fuchsian_source(2), plan)
        path = tmp_path / "trace.json"
        trace.to_json(str(path))
        loaded = json.loads(path.read_text())
        assert loaded["n"] == 2
        assert len(loaded["per_radius"]) == 2
        assert loaded["per_radius"][1]["min_gap_prev"] >= -1e-8
        assert loaded["final"]["classify"] == "solution"
        assert "runtime_s" in loaded["final"]

    def test_source_errors(self):
        plan = pl.ExhaustionPlan(
            radii=(0.75, 0.875), anchor_n_r=33, n_theta=32, min_n_r=17, probe=False
        )
        with pytest.raises(ValueError, match="on the given grid"):
            pl.maximal_solution(
                lambda g: TodaCoefficients.constant(PolarGrid(0.5, 17, 32), 2, [1.0]),
                plan,
            )
        ranks = iter((2, 3))

        def flip(g):
            n = next(ranks)
            return TodaCoefficients.constant(g, n, [1.0] * (n - 1))

        with pytest.raises(ValueError, match="rank changed"):
            pl.maximal_solution(flip, plan)

    def test_inadmissible_radius_rejected(self):
        plan = pl.ExhaustionPlan(
            radii=(0.75, 0.875), anchor_n_r=33, n_theta=32, min_n_r=17, probe=False
        )

        def vanishing(g):
            z = g.rho * np.exp(1j * g.theta)
            return TodaCoefficients(g, 2, (2.0 * np.abs(z - 0.875) ** 2)[None, :])

        with pytest.raises(ValueError, match="not admissible"):
            pl.maximal_solution(vanishing, plan)


class TestDominationDichotomy:
    def _zero(self, g, n):
        return TodaState(g, n, np.zeros((n - 1, g.n_nodes)))

    def test_identical_and_strict(self):
        g = PolarGrid(0.5, 17, 32)
        zero = self._zero(g, 2)
        assert pl.domination_dichotomy(zero, zero.copy(), 1e-10) == "identical"
        below = TodaState(g, 2, np.full((1, g.n_nodes), -0.5))
        assert pl.domination_dichotomy(below, zero, 1e-8) == "strict"

    def test_mixed_verdict_raises(self):
        g = PolarGrid(0.5, 17, 32)
        sub = self._zero(g, 3)
        upper = TodaState(g, 3, np.stack([np.zeros(g.n_nodes), np.ones(g.n_nodes)]))
        with pytest.raises(ConsistencyError, match="dichotomy"):
            pl.domination_dichotomy(sub, upper, 1e-8)

    def test_precondition_errors(self):
        g = PolarGrid(0.5, 17, 32)
        zero = self._zero(g, 2)
        above = TodaState(g, 2, np.full((1, g.n_nodes), 0.5))
        with pytest.raises(ValueError, match="exceeds"):
            pl.domination_dichotomy(above, zero, 1e-8)
        other = self._zero(PolarGrid(0.5, 17, 64), 2)
        with pytest.raises(ValueError, match="grids"):
            pl.domination_dichotomy(zero, other, 1e-8)
        with pytest.raises(ValueError, match="tolerance"):
            pl.domination_dichotomy(zero, zero, 0.0)


def test_probe_on_the_fuchsian_fixed_point():
    g = PolarGrid(0.6, 33, 64)
    coeffs = TodaCoefficients.constant(g, 2, [1.0])
    zero = TodaState(g, 2, np.zeros((1, g.n_nodes)))
    probe = pl.maximality_probe(zero, coeffs, tol=1e-8)
    assert probe["below"]
    assert probe["min_gap"] >= -1e-8
    assert abs(probe["dirichlet_center"][0]) < 1e-7
