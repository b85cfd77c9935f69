"""Numbered verification suite over the whole library.

Each criterion runs a fixed, deterministic configuration (seeds and grids
are hard-coded) and reports one pass/fail verdict with its measured
quantities, so two consecutive runs print identical tables.  A shared
context dict caches the expensive exhaustion runs; the norm and ratio
checks reuse the states computed for the maximality check.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .grid import PolarGrid
from .higgs import (
    HiggsData,
    bergman_integral,
    coefficients_from_higgs,
    fuchsian_data,
    higgs_norm,
    norm_bound,
    pullback_density,
    pullback_ratio,
)
from .pipeline import ExhaustionPlan, domination_dichotomy, maximal_solution
from .solver import BlowupSchedule, DirichletProblem, solve_blowup, solve_dirichlet, torsion_supersolution
from .system import (
    CouplingMatrixField,
    TodaCoefficients,
    TodaState,
    bubble_coefficients,
    bubble_value,
    exact_bubble,
    growth_weights,
    linearized_coupling,
    residual,
    validate_coupling,
)

# depth (number of exhaustion radii 1 - 2^{-j-1}) and shrink stages per rank;
# the rank-4 run keeps a single shrink witness to stay inside the runtime
# budget, which leaves its limit state unchanged
FUCHSIAN_DEPTHS = {2: 9, 3: 10, 4: 11}
FUCHSIAN_STAGES = {
    2: (0.8, 0.4, 0.2, 0.0),
    3: (0.8, 0.4, 0.2, 0.0),
    4: (0.4, 0.0),
}
SUITE_SEED = 20260816


@dataclass
class CriterionResult:
    index: int
    name: str
    passed: bool
    runtime_s: float
    details: list = field(default_factory=list)

    def line(self) -> str:
        """Verdict line without wall-clock numbers, so repeated runs of the
        same configuration print identical tables."""
        verdict = "PASS" if self.passed else "FAIL"
        body = "; ".join(self.details)
        return f"criterion {self.index} [{self.name}]: {verdict} | {body}"

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "name": self.name,
            "passed": self.passed,
            "runtime_s": self.runtime_s,
            "details": list(self.details),
        }


def _interior_sup(state: TodaState, rho_cap: float) -> float:
    mask = state.grid.rho <= rho_cap + 1e-12
    return float(np.max(np.abs(state.values[:, mask])))


def _fuchsian_case(ctx: dict, n: int) -> dict:
    key = ("fuchsian", n)
    if key not in ctx:
        depth = FUCHSIAN_DEPTHS[n]
        radii = tuple(1.0 - 2.0 ** (-j - 1) for j in range(1, depth + 1))
        plan = ExhaustionPlan(
            radii=radii,
            eps_stages=FUCHSIAN_STAGES[n],
            anchor_n_r=1025,
            n_theta=256,
            min_n_r=129,
            levels=(4.0, 8.0),
            tol=1e-8,
        )
        data = fuchsian_data(n)
        t0 = time.perf_counter()
        limit, trace = maximal_solution(lambda g: coefficients_from_higgs(data, g), plan)
        ctx[key] = {
            "limit": limit,
            "trace": trace,
            "radii": radii,
            "runtime": time.perf_counter() - t0,
        }
    return ctx[key]


def _gamma_z_case(ctx: dict) -> dict:
    if "gamma_z" not in ctx:
        radii = tuple(1.0 - 2.0 ** (-j - 1) for j in range(1, 10))
        plan = ExhaustionPlan(
            radii=radii,
            anchor_n_r=1025,
            n_theta=256,
            min_n_r=129,
            levels=(4.0, 8.0),
            tol=1e-8,
            truncate_radius=0.5,
        )
        data = HiggsData(2, [{"kind": "poly", "coeffs": [0.0, 1.0]}])
        t0 = time.perf_counter()
        limit, trace = maximal_solution(lambda g: coefficients_from_higgs(data, g), plan)
        ctx["gamma_z"] = {
            "limit": limit,
            "trace": trace,
            "coeffs": coefficients_from_higgs(data, limit.grid),
            "runtime": time.perf_counter() - t0,
        }
    return ctx["gamma_z"]


def _comparison_suite(ctx: dict) -> list:
    """Randomized ordered Dirichlet pairs shared by criteria 4 and 5.

    Each case solves the same problem under two ordered boundary data sets
    from the same supersolution start and records both reports.
    """
    if "comparison_suite" in ctx:
        return ctx["comparison_suite"]
    rng = np.random.default_rng(SUITE_SEED)
    grid = PolarGrid(0.8, 33, 64)
    cases = []
    for n in (2, 3):
        gw = growth_weights(n)
        for _ in range(10):
            a = rng.uniform(0.6, 1.8, size=n - 1)
            b = rng.uniform(0.0, 0.8, size=n - 1)
            phi = rng.uniform(0.0, 2 * np.pi, size=n - 1)
            scaled = (grid.rho / grid.radius) ** 2
            k = (
                a[:, None]
                + b[:, None] * scaled[None, :]
                + 0.8 * b[:, None] * scaled[None, :] * np.cos(grid.theta[None, :] - phi[:, None])
            )
            coeffs = TodaCoefficients(grid, n, k)

            base = rng.uniform(-0.4, 0.2, size=n - 1)
            amp = rng.uniform(0.0, 0.15, size=n - 1)
            psi = rng.uniform(0.0, 2 * np.pi, size=n - 1)
            theta_b = np.linspace(0.0, 2 * np.pi, grid.n_theta, endpoint=False)
            f1 = base[:, None] + amp[:, None] * np.cos(theta_b[None, :] + psi[:, None])
            bump = rng.uniform(0.0, 0.3, size=n - 1)
            chi = rng.uniform(0.0, 2 * np.pi, size=n - 1)
            f2 = f1 + 0.5 * bump[:, None] * (1.0 + np.cos(theta_b[None, :] + chi[:, None]))

            c0 = max(1.0 + 1e-6, float(np.max(k)))
            level_sub = min(-0.5 * np.log(c0), float(np.min(f1)) - 0.05)
            sub = TodaState(grid, n, np.tile((gw * level_sub)[:, None], (1, grid.n_nodes)))
            level_super = max(0.1, float(np.max(f2)) + 0.05)
            super_ = torsion_supersolution(grid, n, level_super)

            solved = []
            for f in (f1, f2):
                problem = DirichletProblem(grid, coeffs, f, sub, super_, tol=1e-9)
                state, report = solve_dirichlet(problem, start="super")
                solved.append((state, report, problem))
            cases.append({"n": n, "pair": solved})
    ctx["comparison_suite"] = cases
    return cases


def criterion_1(ctx: dict) -> CriterionResult:
    t0 = time.perf_counter()
    details = []
    passed = True
    total_runtime = 0.0
    for n in (2, 3, 4):
        case = _fuchsian_case(ctx, n)
        total_runtime += case["runtime"]
        limit, trace, radii = case["limit"], case["trace"], case["radii"]
        finest = trace.per_radius[-1]
        if finest["n_r"] < 129 or limit.grid.n_theta < 256:
            passed = False
            details.append(f"n={n} finest grid {finest['n_r']}x{limit.grid.n_theta} below 128x256")
        if radii[-1] < 63.0 / 64.0:
            passed = False
            details.append(f"n={n} exhaustion stops at r={radii[-1]:.6f} short of 63/64")
        sup_u = _interior_sup(limit, 0.5)
        ok_sup = sup_u <= 5e-3
        passed = passed and ok_sup
        details.append(f"n={n} sup|u| on rho<=0.5 = {sup_u:.2e} (<= 5e-3: {ok_sup})")
        for comp in range(n - 1):
            centers = trace.center_values(comp)
            decreasing = all(b < a for a, b in zip(centers, centers[1:]))
            positive = all(c > 0.0 for c in centers)
            if not (decreasing and positive):
                passed = False
                details.append(f"n={n} u_{comp + 1} centers not decreasing toward 0")
        if n == 2:
            centers = trace.center_values(0)
            track = max(abs(c + np.log(r)) for c, r in zip(centers, radii))
            ok_track = track <= 1e-2
            passed = passed and ok_track
            details.append(f"n=2 center vs -ln r: max gap {track:.2e} (<= 1e-2: {ok_track})")
    ok_time = total_runtime <= 300.0
    passed = passed and ok_time
    # wall-clock seconds stay out of the detail text so the printed table is
    # reproducible; the measured value is kept on the result record
    details.append(f"exhaustion fits the 300s budget: {ok_time}")
    return CriterionResult(1, "fuchsian maximality", passed, time.perf_counter() - t0, details)


def criterion_2(ctx: dict) -> CriterionResult:
    t0 = time.perf_counter()
    sups = []
    for n_r, n_theta in ((65, 128), (129, 256), (257, 512)):
        grid = PolarGrid(0.4, n_r, n_theta)
        state = exact_bubble(grid, 3, 0.5, 1.0)
        coeffs = bubble_coefficients(grid, 3, 1.0)
        res = residual(state, coeffs)
        interior = ~grid.boundary_mask
        sups.append(float(np.max(np.abs(res[:, interior]))))
    ratios = [sups[i] / sups[i + 1] for i in range(2)]
    passed = all(3.2 <= r <= 4.8 for r in ratios)
    details = [
        "residual sups " + ", ".join(f"{s:.3e}" for s in sups),
        "doubling ratios " + ", ".join(f"{r:.2f}" for r in ratios) + " (target [3.2, 4.8])",
    ]
    return CriterionResult(2, "bubble oracle convergence", passed, time.perf_counter() - t0, details)


def criterion_3(ctx: dict) -> CriterionResult:
    t0 = time.perf_counter()
    schedule = BlowupSchedule(levels=(4.0, 8.0, 16.0, 32.0, 64.0))
    states = {}
    reports = {}
    for n_r in (129, 257):
        grid = PolarGrid(0.5, n_r, 256)
        coeffs = TodaCoefficients(grid, 2, np.ones((1, grid.n_nodes)))
        states[n_r], reports[n_r] = solve_blowup(grid, coeffs, schedule)

    fine, coarse = states[257], states[129]
    nt = fine.grid.n_theta
    rings = np.arange(1, coarse.grid.n_r)
    fine_idx = np.concatenate(
        [[0]] + [1 + (2 * j - 1) * nt + np.arange(nt) for j in rings]
    )
    core = coarse.grid.rho <= 0.4 + 1e-12
    d_h = 2.0 * float(np.max(np.abs(coarse.values[:, core] - fine.values[:, fine_idx][:, core])))

    fine_core = fine.grid.rho <= 0.4 + 1e-12
    exact = bubble_value(2, 0.5, 1.0, fine.grid.rho[fine_core])
    err = float(np.max(np.abs(fine.values[:, fine_core] - exact)))
    tol = max(1e-3, 5.0 * d_h)
    ok_err = err <= tol

    centers = [lv["center"][0] for lv in reports[257].levels]
    steps = np.diff(centers)
    ok_mono = bool(np.all(steps >= -1e-10))
    ok_sweeps = all(lv["monotone_violation_max"] <= 1e-10 for lv in reports[257].levels)

    passed = ok_err and ok_mono and ok_sweeps
    details = [
        f"sup|v - bubble| on rho<=0.4 = {err:.3e} (<= max(1e-3, 5*d_h) = {tol:.3e}: {ok_err})",
        f"two-grid discretization gap d_h = {d_h:.3e}",
        f"center ladder nondecreasing: {ok_mono} (min step {float(np.min(steps)):.2e})",
        f"per-level monotone witnesses <= 1e-10: {ok_sweeps}",
    ]
    return CriterionResult(3, "blow-up reconstruction", passed, time.perf_counter() - t0, details)


def criterion_4(ctx: dict) -> CriterionResult:
    t0 = time.perf_counter()
    cases = _comparison_suite(ctx)
    worst_violation = 0.0
    worst_sandwich = 0.0
    n_solves = 0
    all_ok = True
    for case in cases:
        for state, report, problem in case["pair"]:
            n_solves += 1
            worst_violation = max(worst_violation, report.monotone_violation_max)
            all_ok = all_ok and report.sandwich_ok and report.mode == "descent"
            worst_sandwich = max(
                worst_sandwich,
                float(np.max(state.values - problem.super_.values)),
                float(np.max(problem.sub.values - state.values)),
            )
    ok_mono = worst_violation <= 1e-10
    ok_sandwich = all_ok and worst_sandwich <= 1e-12
    passed = ok_mono and ok_sandwich
    details = [
        f"{n_solves} supersolution-start solves",
        f"worst sweep monotonicity violation {worst_violation:.2e} (<= 1e-10: {ok_mono})",
        f"worst sandwich excess {worst_sandwich:.2e} (sandwich held: {ok_sandwich})",
    ]
    return CriterionResult(4, "monotone iteration contract", passed, time.perf_counter() - t0, details)


def criterion_5(ctx: dict) -> CriterionResult:
    t0 = time.perf_counter()
    cases = _comparison_suite(ctx)
    worst_gap = -np.inf
    for case in cases:
        (u1, _, _), (u2, _, _) = case["pair"]
        worst_gap = max(worst_gap, float(np.max(u1.values - u2.values)))
    passed = len(cases) >= 20 and worst_gap <= 1e-10
    details = [
        f"{len(cases)} randomized (K, f) pairs over n in (2, 3)",
        f"max(u1 - u2) = {worst_gap:.2e} (<= 1e-10: {worst_gap <= 1e-10})",
    ]
    return CriterionResult(5, "discrete comparison principle", passed, time.perf_counter() - t0, details)


def criterion_6(ctx: dict) -> CriterionResult:
    t0 = time.perf_counter()
    details = []
    passed = True
    for n in (2, 3, 4):
        case = _fuchsian_case(ctx, n)
        limit = case["limit"]
        coeffs = coefficients_from_higgs(fuchsian_data(n), limit.grid)
        norm = higgs_norm(limit, coeffs)
        mask = limit.grid.rho <= 0.9 * limit.grid.radius + 1e-12
        excess = float(np.max(norm.values[mask]) - norm_bound(n))
        ok = excess <= 1e-3
        passed = passed and ok
        details.append(f"fuchsian n={n} max excess over bound {excess:.2e} (<= 1e-3: {ok})")

    case = _gamma_z_case(ctx)
    limit = case["limit"]
    norm = higgs_norm(limit, case["coeffs"])
    mask = limit.grid.rho <= 0.9 * limit.grid.radius + 1e-12
    excess = float(np.max(norm.values[mask]) - norm_bound(2))
    ok = excess <= 1e-3
    passed = passed and ok
    details.append(f"gamma(z)=z max excess over bound {excess:.2e} (<= 1e-3: {ok})")

    grid = PolarGrid(0.9, 65, 128)
    for n in (2, 3, 4):
        zero = TodaState(grid, n, np.zeros((n - 1, grid.n_nodes)))
        coeffs = coefficients_from_higgs(fuchsian_data(n), grid)
        gap = float(np.max(np.abs(higgs_norm(zero, coeffs).values - norm_bound(n))))
        ok = gap <= 1e-3
        passed = passed and ok
        details.append(f"fuchsian equality at u=0, n={n}: gap {gap:.2e} (<= 1e-3: {ok})")
    return CriterionResult(6, "higgs norm bound", passed, time.perf_counter() - t0, details)


def criterion_7(ctx: dict) -> CriterionResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(SUITE_SEED + 7)
    grid = PolarGrid(0.8, 17, 32)
    details = []
    passed = True

    for n in (2, 3, 4):
        k = rng.uniform(0.2, 2.0, size=(n - 1, grid.n_nodes))
        coeffs = TodaCoefficients(grid, n, k)
        u = TodaState(grid, n, rng.normal(0.0, 0.3, size=(n - 1, grid.n_nodes)))
        v = TodaState(grid, n, rng.normal(0.0, 0.3, size=(n - 1, grid.n_nodes)))
        report = validate_coupling(linearized_coupling(u, v, coeffs))
        ok = report.cooperative and report.row_sums_nonpositive and report.fully_coupled
        passed = passed and ok
        details.append(f"n={n} random pair passes (a),(b),(c): {ok}")

    zero3 = TodaState(grid, 3, np.zeros((2, grid.n_nodes)))
    fuch = coefficients_from_higgs(fuchsian_data(3), grid)
    coupling = linearized_coupling(zero3, zero3, fuch)
    hand = float(np.max(np.abs(coupling.c - 2.0)))
    sums = coupling.row_sums()
    hand_sum = float(np.max(np.abs(sums + 2.0)))
    ok_hand = hand <= 1e-12 and hand_sum <= 1e-12
    passed = passed and ok_hand
    details.append(f"hand-computed n=3 fuchsian rows (c_i=2, row sum -2): {ok_hand}")

    # an identically vanishing k_2 cannot enter through TodaCoefficients, so
    # the decoupled pattern is constructed at the coupling-field level
    decoupled = CouplingMatrixField(
        grid, 3, np.vstack([np.ones(grid.n_nodes), np.zeros(grid.n_nodes)])
    )
    report = validate_coupling(decoupled)
    ok_dec = (not report.fully_coupled) and report.cooperative and report.row_sums_nonpositive
    passed = passed and ok_dec
    details.append(f"decoupled pattern fails (c) while keeping (a),(b): {ok_dec}")
    return CriterionResult(7, "cooperative structure validators", passed, time.perf_counter() - t0, details)


def criterion_8(ctx: dict) -> CriterionResult:
    t0 = time.perf_counter()
    worst = 0.0
    diverged = False
    for m in (0, 1, 2, 5):
        coeffs = [0.0] * m + [1.0]
        report = bergman_integral(coeffs, radius=0.999)
        expected = np.pi / ((m + 1) * (m + 2))
        worst = max(worst, abs(report["value"] - expected))
        diverged = diverged or report["diverging"]
    passed = worst <= 1e-6 and not diverged
    details = [
        f"worst |value - pi/((m+1)(m+2))| over m in (0,1,2,5): {worst:.2e} (<= 1e-6: {worst <= 1e-6})",
        f"no spurious divergence flags: {not diverged}",
    ]
    return CriterionResult(8, "bergman quadrature oracle", passed, time.perf_counter() - t0, details)


def criterion_9(ctx: dict) -> CriterionResult:
    t0 = time.perf_counter()
    case = _gamma_z_case(ctx)
    limit, coeffs = case["limit"], case["coeffs"]
    grid = limit.grid
    details = []

    # independent closed form: u = ln(sqrt(2)/(1 + rho^2)) solves the n = 2
    # system with k = 2 rho^2 and has the maximal rim asymptotics
    oracle = np.log(np.sqrt(2.0) / (1.0 + grid.rho**2))
    oracle_gap = float(np.max(np.abs(limit.values[0] - oracle)))
    ok_oracle = oracle_gap <= 2e-2
    details.append(f"limit vs closed form sup gap {oracle_gap:.2e} (<= 2e-2: {ok_oracle})")

    n = 2
    gw = growth_weights(n)
    c0 = max(1.0 + 1e-6, float(np.max(coeffs.values)))
    sub = TodaState(grid, n, np.tile((gw * -0.5 * np.log(c0))[:, None], (1, grid.n_nodes)))
    super_ = torsion_supersolution(grid, n, 0.5)
    problem = DirichletProblem(grid, coeffs, 0.0, sub, super_, tol=1e-9)
    dirichlet, report = solve_dirichlet(problem, start="super")

    verdict = domination_dichotomy(dirichlet, limit, 1e-6)
    ok_verdict = verdict == "strict"
    details.append(f"dichotomy of (dirichlet f=0, maximal): {verdict}")

    ratio = pullback_ratio(dirichlet, limit, coeffs, tol=1e-6)
    gap = limit.values[0] - dirichlet.values[0]
    off_equality = gap > 1e-6
    ok_ratio = (
        float(np.min(ratio.values)) > 0.0
        and float(np.max(ratio.values)) <= 1.0
        and float(np.max(ratio.values[off_equality])) < 1.0
    )
    details.append(
        f"ratio range [{float(np.min(ratio.values)):.4f}, {float(np.max(ratio.values)):.4f}]"
        f" inside (0, 1) off equality: {ok_ratio}"
    )

    density = pullback_density(limit, coeffs)
    off_origin = np.min(density.values[1:])
    ok_density = density.values[0] == 0.0 and off_origin > 0.0
    details.append(
        f"pullback density zero at origin and > 0 elsewhere (min off origin {off_origin:.2e}): {ok_density}"
    )

    passed = ok_oracle and ok_verdict and ok_ratio and ok_density
    return CriterionResult(9, "rank-2 ratio and branch points", passed, time.perf_counter() - t0, details)


CRITERIA = {
    1: ("fuchsian maximality", criterion_1),
    2: ("bubble oracle convergence", criterion_2),
    3: ("blow-up reconstruction", criterion_3),
    4: ("monotone iteration contract", criterion_4),
    5: ("discrete comparison principle", criterion_5),
    6: ("higgs norm bound", criterion_6),
    7: ("cooperative structure validators", criterion_7),
    8: ("bergman quadrature oracle", criterion_8),
    9: ("rank-2 ratio and branch points", criterion_9),
}


def run_criterion(index: int, ctx: dict) -> CriterionResult:
    if index not in CRITERIA:
        raise ValueError(f"unknown criterion {index}; choose from 1..9")
    return CRITERIA[index][1](ctx)


def run_criteria(indices=None, ctx: dict | None = None) -> list:
    if ctx is None:
        ctx = {}
    if indices is None:
        indices = sorted(CRITERIA)
    results = []
    for index in indices:
        try:
            results.append(run_criterion(index, ctx))
        except Exception as exc:  # a crashed criterion is a failed criterion
            results.append(
                CriterionResult(index, CRITERIA[index][0], False, 0.0, [f"error: {exc}"])
            )
    return results


def summary_table(results) -> str:
    lines = [result.line() for result in results]
    n_pass = sum(1 for r in results if r.passed)
    lines.append(f"{n_pass}/{len(results)} criteria passed")
    return "\n".join(lines)
