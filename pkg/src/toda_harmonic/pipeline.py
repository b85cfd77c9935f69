"""Maximal solutions: shrinking-domain limit, disk exhaustion, domination.

The bounded-domain object is the limit of blow-up solutions on a family of
shrunken prefixes; the global object is the decreasing limit of those over
an exhaustion by growing disks.  Both limits are certified by monotonicity
witnesses rather than a priori rates, so every stage records the quantities
a test can assert on.
"""

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .grid import PolarGrid
from .solver import (
    BlowupSchedule,
    ConsistencyError,
    DirichletProblem,
    solve_blowup,
    solve_dirichlet,
    torsion_supersolution,
)
from .system import (
    TodaCoefficients,
    TodaState,
    classify,
    constant_subsolution,
    residual,
)
from .operators import _cached_l0  # row magnitudes set the classify floor


DEFAULT_RADII = tuple(1.0 - 2.0 ** (-j - 1) for j in range(1, 7))
DEFAULT_EPS_STAGES = (0.8, 0.4, 0.2, 0.0)


def _row_scale(grid: PolarGrid) -> float:
    mat = _cached_l0(grid)
    sums = np.add.reduceat(np.abs(mat.data), mat.indptr[:-1])
    return float(np.max(sums[grid.interior_mask]))


def _slice_coeffs(coeffs: TodaCoefficients, grid: PolarGrid) -> TodaCoefficients:
    return TodaCoefficients(grid, coeffs.n, coeffs.values[:, : grid.n_nodes].copy())


@dataclass
class ExhaustionPlan:
    """Radii, per-radius grid sizes, and shrink stages for the exhaustion.

    The radial count doubles with each radius (fixed hyperbolic node density
    at the rim, so the blow-up layer is equally resolved at every stage) up
    to ``anchor_n_r`` on the final disk.
    """

    radii: tuple = DEFAULT_RADII
    eps_stages: tuple = DEFAULT_EPS_STAGES
    anchor_n_r: int = 257
    n_theta: int = 128
    min_n_r: int = 65
    levels: tuple = (4.0, 8.0)
    tol: float = 1e-8
    max_sweeps: int = 4000
    probe: bool = True
    truncate_radius: float | None = None

    def __post_init__(self):
        r = tuple(float(x) for x in self.radii)
        if len(r) == 0 or any(b <= a for a, b in zip(r, r[1:])):
            raise ValueError("radii must be strictly increasing")
        if r[0] <= 0.0 or r[-1] >= 1.0:
            raise ValueError("radii must lie in (0, 1)")
        self.radii = r
        eps = tuple(float(x) for x in self.eps_stages)
        if len(eps) == 0 or eps[-1] != 0.0:
            raise ValueError("shrink stages must end at 0")
        if any(b >= a for a, b in zip(eps, eps[1:])) or eps[0] >= 1.0 or eps[0] < 0.0:
            raise ValueError("shrink stages must decrease from inside [0, 1) to 0")
        self.eps_stages = eps
        if self.min_n_r < 9 or self.anchor_n_r < self.min_n_r:
            raise ValueError("grid size policy needs anchor_n_r >= min_n_r >= 9")
        if self.tol <= 0.0:
            raise ValueError("tolerance must be positive")
        if self.truncate_radius is None:
            self.truncate_radius = r[0]
        if not 0.0 < self.truncate_radius <= r[0]:
            raise ValueError("truncation radius must sit inside the first disk")

    def grid_for(self, j: int) -> PolarGrid:
        halvings = len(self.radii) - 1 - j
        n_r = max(self.min_n_r, (self.anchor_n_r - 1) // 2**halvings + 1)
        return PolarGrid(self.radii[j], n_r, self.n_theta)


def admissible_radii(
    source,
    candidates,
    *,
    floor_factor: float = 1e-10,
    zero_proximity: float = 1e-3,
    n_samples: int = 256,
) -> list:
    """Candidates whose circles keep every coefficient strictly positive.

    ``source`` is either a TodaCoefficients (circles sampled by bilinear
    interpolation, so candidates must stay inside its grid) or any object
    with the HiggsData evaluation surface (``n``, ``evaluate(i, z)``,
    ``zeros(i)``); the latter is additionally screened against zeros of the
    holomorphic data near a candidate circle.
    """
    cand = [float(r) for r in candidates]
    if len(cand) == 0:
        raise ValueError("no candidate radii supplied")
    if any(not 0.0 < r < 1.0 for r in cand):
        raise ValueError("candidate radii must lie in (0, 1)")
    if any(b <= a for a, b in zip(cand, cand[1:])):
        raise ValueError("candidate radii must be strictly increasing")

    theta = np.linspace(0.0, 2.0 * np.pi, n_samples, endpoint=False)
    blockers: dict = {}

    if isinstance(source, TodaCoefficients):
        grid = source.grid
        floors = floor_factor * np.max(source.values, axis=1)
        kept = []
        for r in cand:
            if r > grid.radius * (1.0 + 1e-12):
                blockers[r] = "outside the sampled grid"
                continue
            bad = []
            for i in range(source.n - 1):
                ring = grid.interpolate(source.values[i], np.full_like(theta, r), theta)
                if np.min(ring) <= floors[i]:
                    bad.append(f"k_{i + 1} min {np.min(ring):.3e}")
            if bad:
                blockers[r] = "; ".join(bad)
            else:
                kept.append(r)
    else:
        n = source.n
        z_rings = [r * np.exp(1j * theta) for r in cand]
        k_rings = [
            np.stack([2.0 * np.abs(source.evaluate(i, z)) ** 2 for i in range(1, n)])
            for z in z_rings
        ]
        floors = floor_factor * np.max(np.stack([k.max(axis=1) for k in k_rings]), axis=0)
        kept = []
        for r, k in zip(cand, k_rings):
            bad = []
            for i in range(n - 1):
                if np.min(k[i]) <= floors[i]:
                    bad.append(f"k_{i + 1} min {np.min(k[i]):.3e}")
                for z0 in source.zeros(i + 1):
                    if abs(z0) < 1.0 and abs(r - abs(z0)) < zero_proximity:
                        bad.append(f"gamma_{i + 1} zero at |z| = {abs(z0):.6f}")
            if bad:
                blockers[r] = "; ".join(bad)
            else:
                kept.append(r)

    if not kept:
        detail = "; ".join(f"r = {r:g}: {why}" for r, why in blockers.items())
        raise ValueError(f"no admissible radius among the candidates ({detail})")
    return kept


def maximal_on_domain(
    grid: PolarGrid,
    coeffs: TodaCoefficients,
    eps_stages=DEFAULT_EPS_STAGES,
    *,
    levels=(4.0, 8.0),
    tol: float = 1e-8,
    max_sweeps: int = 4000,
    stage_log: list | None = None,
) -> TodaState:
    """Decreasing limit of blow-up solutions over shrunken prefix domains.

    Stage m runs the blow-up ladder on the (1 - eps_m)-prefix of the grid;
    the states must decrease in m on shared nodes.  The eps = 0 stage is the
    returned limit (stages before it certify the monotone approach; the run
    returns early if they already agree on the 0.8-interior to tol).
    """
    n_r = grid.n_r
    rings = []
    for eps in eps_stages:
        k = n_r - 1 if eps == 0.0 else int(round((1.0 - eps) * (n_r - 1)))
        if k < 2:
            raise ValueError(f"shrink stage eps = {eps:g} leaves fewer than 3 rings")
        rings.append(k)
    if any(b <= a for a, b in zip(rings, rings[1:])):
        raise ValueError("shrink stages collapse onto equal grids at this resolution")

    prev_state = None
    prev_grid = None
    state = None
    for eps, k_ring in zip(eps_stages, rings):
        stage_grid = grid if k_ring == n_r - 1 else grid.truncate(k_ring)
        stage_coeffs = coeffs if stage_grid is grid else _slice_coeffs(coeffs, stage_grid)
        schedule = BlowupSchedule(levels=levels, max_sweeps=max_sweeps)
        state, report = solve_blowup(stage_grid, stage_coeffs, schedule)

        entry = {
            "eps": eps,
            "radius": stage_grid.radius,
            "n_r": stage_grid.n_r,
            "center": state.values[:, 0].tolist(),
            "sweeps": sum(lv["sweeps"] for lv in report.levels),
            "residual": report.final_residual,
            "residual_scaled": report.final_residual_scaled,
        }
        if prev_state is not None:
            shared = prev_grid.n_nodes
            gap = prev_state.values - state.values[:, :shared]
            drop = float(np.min(gap))
            if drop < -1e-8:
                raise ConsistencyError(
                    f"shrink stage eps = {eps:g} rose above the previous stage "
                    f"by {-drop:.3e}"
                )
            core = prev_grid.rho <= 0.8 * prev_grid.radius + 1e-12
            entry["drop_prev"] = drop
            entry["delta_core"] = float(np.max(np.abs(gap[:, core])))
        if stage_log is not None:
            stage_log.append(entry)
        if (
            prev_state is not None
            and eps != 0.0
            and entry["delta_core"] <= tol
        ):
            return state
        prev_state, prev_grid = state, stage_grid
    return state


@dataclass
class PipelineTrace:
    """Per-radius record of the exhaustion run."""

    n: int = 0
    radii: list = field(default_factory=list)
    per_radius: list = field(default_factory=list)
    final: dict = field(default_factory=dict)

    def center_values(self, component: int = 0) -> list:
        return [rec["center"][component] for rec in self.per_radius]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "radii": self.radii,
            "per_radius": self.per_radius,
            "final": self.final,
        }

    def to_json(self, path: str | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def maximality_probe(
    state: TodaState, coeffs: TodaCoefficients, tol: float = 1e-8
) -> dict:
    """Solve the zero-boundary Dirichlet problem and compare it from below.

    Any solution with f = 0 must sit under the maximal state; the returned
    record carries the worst gap so callers can assert it is >= -tol.
    """
    grid = state.grid
    prob = DirichletProblem(
        grid,
        coeffs,
        0.0,
        constant_subsolution(coeffs),
        torsion_supersolution(grid, coeffs.n, 1.0),
        tol=tol,
    )
    dirichlet, report = solve_dirichlet(prob, polish_sweeps=1)
    gap = state.values - dirichlet.values
    return {
        "min_gap": float(np.min(gap[:, grid.interior_mask])),
        "sweeps": report.n_sweeps,
        "dirichlet_center": dirichlet.values[:, 0].tolist(),
        "below": bool(np.min(gap[:, grid.interior_mask]) >= -tol),
    }


def maximal_solution(k_of_grid, plan: ExhaustionPlan | None = None):
    """Exhaustion limit of bounded-domain maximal solutions over growing disks.

    ``k_of_grid`` maps a PolarGrid to the coefficients sampled on it, which
    lets one coefficient law be evaluated on every per-radius grid.  Returns
    the limit state restricted to the common interior (the first disk) and
    the full trace.  Cross-radius decrease, the subsolution barrier, and the
    final residual classification are enforced, not just reported.
    """
    if plan is None:
        plan = ExhaustionPlan()
    trace = PipelineTrace()
    t0 = time.perf_counter()

    prev_state = None
    prev_grid = None
    state = None
    grid = None
    coeffs = None
    for j, r in enumerate(plan.radii):
        grid = plan.grid_for(j)
        coeffs = k_of_grid(grid)
        if not isinstance(coeffs, TodaCoefficients) or not coeffs.grid.same_layout(grid):
            raise ValueError("k_of_grid must return coefficients on the given grid")
        if trace.n == 0:
            trace.n = coeffs.n
        elif coeffs.n != trace.n:
            raise ValueError("coefficient rank changed between radii")

        bnd = grid.ring_slice(grid.n_r - 1)
        floors = 1e-10 * np.max(coeffs.values, axis=1)
        k_bnd_min = np.min(coeffs.values[:, bnd], axis=1)
        if np.any(k_bnd_min <= floors):
            bad = [i + 1 for i in range(coeffs.n - 1) if k_bnd_min[i] <= floors[i]]
            raise ValueError(
                f"radius {r:g} is not admissible: k_{bad} fall below the "
                "positivity floor on the boundary circle"
            )

        stages: list = []
        state = maximal_on_domain(
            grid,
            coeffs,
            plan.eps_stages,
            levels=plan.levels,
            tol=plan.tol,
            max_sweeps=plan.max_sweeps,
            stage_log=stages,
        )
        # an early shrink-stage return may live on a prefix of the planned grid
        grid = state.grid
        coeffs = _slice_coeffs(coeffs, grid) if coeffs.grid.n_nodes > grid.n_nodes else coeffs

        sub = constant_subsolution(coeffs)
        barrier = float(np.min(state.values - sub.values))
        if barrier < -1e-8:
            raise ConsistencyError(
                f"state at radius {r:g} fell below the constant subsolution "
                f"by {-barrier:.3e}"
            )

        record = {
            "radius": r,
            "n_r": grid.n_r,
            "n_theta": grid.n_theta,
            "center": state.values[:, 0].tolist(),
            "sub_barrier_gap": barrier,
            "stages": stages,
            "residual": stages[-1]["residual"],
            "residual_scaled": stages[-1]["residual_scaled"],
        }
        if prev_state is not None:
            probe_mask = prev_grid.rho <= prev_grid.radius * (1.0 - 1e-12)
            rho_p = prev_grid.rho[probe_mask]
            theta_p = prev_grid.theta[probe_mask]
            interp = np.stack(
                [
                    grid.interpolate(state.values[i], rho_p, theta_p)
                    for i in range(trace.n - 1)
                ]
            )
            gap = prev_state.values[:, probe_mask] - interp
            drop = float(np.min(gap))
            if drop < -1e-8:
                raise ConsistencyError(
                    f"exhaustion rose between radii {prev_grid.radius:g} and "
                    f"{r:g} by {-drop:.3e}"
                )
            record["sup_delta_prev"] = float(np.max(np.abs(gap)))
            record["min_gap_prev"] = drop
            # the origin is a shared node of every grid: compare it exactly
            record["center_drop_prev"] = float(
                np.min(prev_state.values[:, 0] - state.values[:, 0])
            )
        trace.per_radius.append(record)
        trace.radii.append(r)
        prev_state, prev_grid = state, grid

    k_trunc = int(np.floor(plan.truncate_radius / grid.d_rho * (1.0 + 1e-12)))
    k_trunc = min(max(k_trunc, 2), grid.n_r - 1)
    limit = state.truncate(k_trunc)
    limit_coeffs = _slice_coeffs(coeffs, limit.grid)

    # plain-residual classification floor grows with the stencil rows: the
    # level solves converge to scaled residual ~1e-11, so the attainable
    # plain residual is that times the largest interior row magnitude
    cls_tol = max(10.0 * plan.tol, 1e-10 * (1.0 + _row_scale(limit.grid)))
    verdict = classify(limit, limit_coeffs, cls_tol)
    res = residual(limit, limit_coeffs)[:, limit.grid.interior_mask]
    trace.final = {
        "truncated_radius": limit.grid.radius,
        "classify": verdict,
        "classify_tol": cls_tol,
        "residual_inf": float(np.max(np.abs(res))),
    }
    if verdict != "solution":
        raise ConsistencyError(
            f"limit state classifies as {verdict!r} at tolerance {cls_tol:.3e}"
        )
    if plan.probe:
        probe = maximality_probe(limit, limit_coeffs, plan.tol)
        trace.final["probe"] = probe
        if not probe["below"]:
            raise ConsistencyError(
                "zero-boundary Dirichlet solution rose above the maximal state "
                f"by {-probe['min_gap']:.3e}"
            )
    trace.final["runtime_s"] = time.perf_counter() - t0
    return limit, trace


def domination_dichotomy(sub: TodaState, max_state: TodaState, tol: float) -> str:
    """'identical' or 'strict' per-component verdict; anything mixed raises.

    A pair of ordered solutions must either coincide in every component or
    be strictly separated in every component on the interior; a mixture
    violates the dichotomy and is reported as an inconsistency.
    """
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    if not sub.grid.same_layout(max_state.grid):
        raise ValueError("states live on different grids")
    if sub.n != max_state.n:
        raise ValueError("states have different rank")
    diff = max_state.values - sub.values
    if np.min(diff) < -tol:
        raise ValueError(f"first state exceeds the second by {-float(np.min(diff)):.3e}")
    interior = sub.grid.interior_mask
    per_comp_sup = np.max(np.abs(diff), axis=1)
    per_comp_min = np.min(diff[:, interior], axis=1)
    identical = per_comp_sup <= tol
    strict = per_comp_min > tol
    if np.all(identical):
        return "identical"
    if np.all(strict):
        return "strict"
    raise ConsistencyError(
        "domination dichotomy violated: component-wise verdicts are "
        f"identical = {identical.tolist()}, strict = {strict.tolist()}"
    )
