"""Monotone iteration for the coupled Dirichlet problem and blow-up limits.

The Dirichlet solver runs the classical supersolution descent: linearize the
reaction with a nonnegative zeroth order coefficient c, solve
(Delta_g - c) delta = -residual per component, and step.  Convexity of the
exponential makes each accepted sweep nonincreasing and supersolution
preserving, which is checked after every sweep rather than assumed.  The
boundary blow-up driver feeds the solver a ladder of boundary levels and warm
starts each level by shifting the previous solution.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .grid import PolarGrid
from .operators import assemble_operator, first_eigenpair, torsion_function, _cached_l0
from .system import (
    TodaCoefficients,
    TodaState,
    constant_subsolution,
    bubble_value,
    growth_weights,
    interaction_exponents,
    residual,
    EXPONENT_LIMIT,
)

# Accepted nodewise ascent per descent sweep (mirrored for ascent runs).
MONOTONE_TOL = 1e-10
# Relative linear-solve verification threshold; scaled by row magnitudes.
LINEAR_VERIFY_TOL = 1e-12
# ln-margin added to the linearization coefficient: c = 2 k e^E * e^(2 s).
C_MARGIN = 0.35
# Each retry multiplies c by e^2; give up after this many.
MAX_RETRIES = 4
# Cap on c; keeps retry inflation finite near the exponent limit.
C_CAP = 1e280
# Relative per-ring spread below which c may be replaced by its ring means.
# Must stay below e^(2*C_MARGIN) - 1 so the averaged coefficient still
# dominates the mean-value bound of the reaction.
RADIAL_GATE = 0.3
# Exact ring constancy required to enter the FFT solver.
FFT_GATE = 1e-13


class ConsistencyError(RuntimeError):
    """An internal monotonicity or ordering witness failed beyond tolerance."""


class IterationBudgetError(RuntimeError):
    """Sweep budget exhausted before the tolerance was met."""

    def __init__(self, message: str, residual: float, report: "SolverReport | None" = None):
        super().__init__(message)
        self.residual = residual
        self.report = report


class LinearSolveError(RuntimeError):
    """Both linear paths failed the residual verification."""


def _row_abs(grid: PolarGrid) -> np.ndarray:
    """Absolute row sums of the c = 0 operator, cached on the grid."""
    cached = getattr(grid, "_l0_rowabs", None)
    if cached is None:
        mat = _cached_l0(grid)
        cached = np.add.reduceat(np.abs(mat.data), mat.indptr[:-1])
        cached[np.diff(mat.indptr) == 0] = 0.0
        grid._l0_rowabs = cached
    return cached


def _fft_stencil(grid: PolarGrid):
    """Radial stencil coefficients shared by every angular Fourier mode."""
    cached = getattr(grid, "_fft_stencil", None)
    if cached is None:
        rho = grid.ring_rho
        with np.errstate(divide="ignore", invalid="ignore"):
            w = (1.0 - rho * rho) ** 2 / 4.0
            c_out = w * (1.0 / grid.d_rho**2 + 1.0 / (2.0 * rho * grid.d_rho))
            c_in = w * (1.0 / grid.d_rho**2 - 1.0 / (2.0 * rho * grid.d_rho))
            c_ang = w / (rho * rho * grid.d_theta**2)
        for arr in (c_out, c_in, c_ang):
            arr[0] = 0.0
            arr[grid.n_r - 1] = 0.0
        d_rad = -w * 2.0 / grid.d_rho**2 - 2.0 * c_ang
        d_rad[0] = 0.0
        d_rad[grid.n_r - 1] = 0.0
        w0 = 0.25 * 4.0 / grid.d_rho**2
        cached = (w0, c_in, c_out, c_ang, d_rad)
        grid._fft_stencil = cached
    return cached


def _ring_view(grid: PolarGrid, values: np.ndarray) -> np.ndarray:
    return values[1:].reshape(grid.n_r - 1, grid.n_theta)


def _fft_tridiagonal(grid: PolarGrid, cbar: np.ndarray, c0: float, b: np.ndarray) -> np.ndarray:
    """Direct solve of (Delta_g - c) x = b for ring-constant c.

    The DFT in theta block-diagonalizes the stencil into one tridiagonal
    system per angular mode; those are solved by the Thomas algorithm,
    vectorized across modes.  cbar holds the per-ring value of c (index 0
    unused), c0 the value at the origin.
    """
    w0, c_in, c_out, c_ang, d_rad = _fft_stencil(grid)
    n_r, n_theta = grid.n_r, grid.n_theta
    n_modes = n_theta // 2 + 1

    bhat = np.fft.rfft(_ring_view(grid, b), axis=1)
    rhs = np.zeros((n_r, n_modes), dtype=complex)
    rhs[1:] = bhat
    rhs[0, 0] = n_theta * b[0]

    cos_m = np.cos(grid.d_theta * np.arange(n_modes))
    dia = np.ones((n_r, n_modes))
    inner = slice(1, n_r - 1)
    dia[inner] = (
        (d_rad[inner] - cbar[inner])[:, None]
        + 2.0 * c_ang[inner][:, None] * cos_m[None, :]
    )
    dia[0, 0] = -(w0 + c0)
    # rows 0 (modes >= 1) and n_r-1 stay identity

    low = np.zeros((n_r, n_modes))
    low[2 : n_r - 1] = c_in[2 : n_r - 1, None]
    low[1, 0] = c_in[1]
    up = np.zeros((n_r, n_modes))
    up[inner] = c_out[inner, None]
    up[0, 0] = w0

    # Thomas forward elimination / back substitution, vector ops across modes
    for kk in range(1, n_r):
        m = low[kk] / dia[kk - 1]
        dia[kk] = dia[kk] - m * up[kk - 1]
        rhs[kk] = rhs[kk] - m * rhs[kk - 1]
    x = np.empty_like(rhs)
    x[n_r - 1] = rhs[n_r - 1] / dia[n_r - 1]
    for kk in range(n_r - 2, -1, -1):
        x[kk] = (rhs[kk] - up[kk] * x[kk + 1]) / dia[kk]

    out = np.empty(grid.n_nodes)
    out[0] = x[0, 0].real / n_theta
    out[1:] = np.fft.irfft(x[1:], n=n_theta, axis=1).ravel()
    return out


def _linear_residual_scale(grid: PolarGrid, c: np.ndarray, b: np.ndarray, x: np.ndarray) -> np.ndarray:
    scale = _row_abs(grid).copy()
    scale[grid.interior_mask] += c[grid.interior_mask]
    return 1.0 + np.abs(b) + scale * np.max(np.abs(x))


def radialize_coefficient(grid: PolarGrid, c: np.ndarray) -> tuple[np.ndarray, bool]:
    """Replace c by its per-ring means when every ring is nearly constant.

    Any zeroth order coefficient above the reaction's mean-value bound yields
    a monotone sweep, so averaging within the linearization margin changes
    the scheme, not the fixed point.  Returns (c, False) unchanged when some
    ring spreads beyond the gate.
    """
    rings = _ring_view(grid, c)[: grid.n_r - 2]
    means = rings.mean(axis=1)
    spread = rings.max(axis=1) - rings.min(axis=1)
    if np.any(spread > RADIAL_GATE * means + 1e-14):
        return c, False
    out = c.copy()
    out[1 : 1 + rings.size] = np.repeat(means, grid.n_theta)
    return out, True


def _solve_linear(grid: PolarGrid, c: np.ndarray, b: np.ndarray):
    """Solve (Delta_g - c) x = b with identity boundary rows.

    Returns (x, path).  The FFT path handles ring-constant c and is always
    verified against the assembled operator; on rejection or verification
    failure the sparse direct factorization takes over.
    """
    l0 = _cached_l0(grid)
    interior = grid.interior_mask

    def verify(x: np.ndarray) -> bool:
        r = l0 @ x
        r[interior] -= c[interior] * x[interior]
        r -= b
        r[grid.boundary_mask] = 0.0  # boundary values are imposed exactly
        return bool(np.max(np.abs(r) / _linear_residual_scale(grid, c, b, x)) <= LINEAR_VERIFY_TOL)

    rings = _ring_view(grid, c)[: grid.n_r - 2]  # interior rings; nonempty since n_r >= 3
    spread = rings.max(axis=1) - rings.min(axis=1)
    if np.all(spread <= FFT_GATE * (1.0 + np.abs(rings[:, 0]))):
        cbar = np.zeros(grid.n_r)
        cbar[1 : grid.n_r - 1] = rings[:, 0]
        x = _fft_tridiagonal(grid, cbar, float(c[0]), b)
        x[grid.boundary_mask] = b[grid.boundary_mask]
        if verify(x):
            return x, "fft"

    mat = assemble_operator(grid, c).tocsc()
    lu = spla.splu(mat)
    x = lu.solve(b)
    x[grid.boundary_mask] = b[grid.boundary_mask]
    if verify(x):
        return x, "splu"
    # strongly coupled angular rows can leave the factorization a few times
    # above the verification floor; one refinement step reuses it and pulls
    # the residual back down
    x = x - lu.solve(mat @ x - b)
    x[grid.boundary_mask] = b[grid.boundary_mask]
    if verify(x):
        return x, "splu"
    raise LinearSolveError("linear solve failed verification on both paths")


@dataclass
class DirichletProblem:
    """Dirichlet data for the coupled system on one grid.

    ``boundary`` accepts a scalar, one value per component, or a full
    (n-1, n_theta) array; it is normalized to the latter.  ``sub`` and
    ``super_`` sandwich the admissible boundary data and every iterate.
    """

    grid: PolarGrid
    coeffs: TodaCoefficients
    boundary: np.ndarray
    sub: TodaState
    super_: TodaState
    tol: float = 1e-8
    max_sweeps: int = 500

    def __post_init__(self):
        n = self.coeffs.n
        if self.sub.n != n or self.super_.n != n:
            raise ValueError("ordered pair rank does not match the coefficients")
        for state in (self.sub, self.super_):
            if not state.grid.same_layout(self.grid):
                raise ValueError("ordered pair lives on a different grid")
        if not self.coeffs.grid.same_layout(self.grid):
            raise ValueError("coefficients live on a different grid")
        f = np.asarray(self.boundary, dtype=float)
        if f.ndim == 0:
            f = np.full((n - 1, self.grid.n_theta), float(f))
        elif f.ndim == 1:
            if f.shape != (n - 1,):
                raise ValueError(f"expected {n - 1} per-component boundary values, got {f.shape}")
            f = np.repeat(f[:, None], self.grid.n_theta, axis=1)
        elif f.shape != (n - 1, self.grid.n_theta):
            raise ValueError(f"boundary data must have shape {(n - 1, self.grid.n_theta)}, got {f.shape}")
        self.boundary = f
        if self.tol <= 0.0:
            raise ValueError("tolerance must be positive")
        if np.any(self.sub.values > self.super_.values):
            raise ValueError("ordered pair is not ordered: sub exceeds super somewhere")
        bnd = self.grid.boundary_mask
        if np.any(f < self.sub.values[:, bnd]) or np.any(f > self.super_.values[:, bnd]):
            raise ValueError("boundary data leaves the ordered interval")


@dataclass
class SolverReport:
    """Per-sweep and per-level diagnostics of a monotone run."""

    mode: str
    sweeps: list = field(default_factory=list)
    converged: bool = False
    final_residual: float = float("nan")
    final_residual_scaled: float = float("nan")
    monotone_violation_max: float = 0.0
    sandwich_ok: bool = True
    levels: list = field(default_factory=list)
    flags: dict = field(default_factory=dict)

    @property
    def n_sweeps(self) -> int:
        return len(self.sweeps)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "converged": self.converged,
            "n_sweeps": self.n_sweeps,
            "final_residual": self.final_residual,
            "final_residual_scaled": self.final_residual_scaled,
            "monotone_violation_max": self.monotone_violation_max,
            "sandwich_ok": self.sandwich_ok,
            "sweeps": self.sweeps,
            "levels": self.levels,
            "flags": self.flags,
        }

    def to_json(self, path: str | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _scaled_residual(
    grid: PolarGrid,
    res: np.ndarray,
    coeffs: TodaCoefficients,
    exponents: np.ndarray,
    c_rows: np.ndarray,
    u_scale: float,
) -> float:
    """Residual sup-norm with every row divided by its natural magnitude.

    The scale per row is 1 + |operator row| + reaction size + c * |iterate|;
    against it the rounding floor of a verified linear solve is a few 1e-12
    uniformly in the boundary level, so a fixed target stays meaningful.
    """
    scale = 1.0 + _row_abs(grid)[None, :] + coeffs.values * np.exp(exponents) + c_rows * u_scale
    return float(np.max(np.abs(res) / scale))


def _residual_state(state: TodaState, coeffs: TodaCoefficients) -> np.ndarray:
    return residual(state, coeffs)


def solve_dirichlet(
    problem: DirichletProblem,
    start: str = "super",
    *,
    residual_target: float | None = None,
    polish_sweeps: int = 0,
) -> tuple[TodaState, SolverReport]:
    """Monotone iteration from one end of the ordered pair.

    start = "super" descends from problem.super_, start = "sub" ascends from
    problem.sub.  Terminates once the sup-norm step and the row-scaled
    residual both fall below tolerance, then runs the optional polish sweeps.
    Raises IterationBudgetError when max_sweeps is hit, ConsistencyError when
    a monotonicity or sandwich witness fails beyond its tolerance.
    """
    if start not in ("super", "sub"):
        raise ValueError(f"start must be 'super' or 'sub', got {start!r}")
    grid = problem.grid
    coeffs = problem.coeffs
    n = coeffs.n
    descent = start == "super"
    u = (problem.super_ if descent else problem.sub).values.copy()
    bnd = grid.boundary_mask
    u[:, bnd] = problem.boundary
    state = TodaState(grid, n, u)

    weights = growth_weights(n)
    target = problem.tol if residual_target is None else residual_target
    report = SolverReport(mode="descent" if descent else "ascent")
    row_abs = _row_abs(grid)

    res = _residual_state(state, coeffs)
    # Seed slack: a warm-started seed may miss being a super/subsolution by
    # the previous solve's rounding floor; widen the preservation envelope.
    defect = np.maximum(res, 0.0) if descent else np.maximum(-res, 0.0)

    converged_at = None
    sweeps_left = problem.max_sweeps
    polish_left = polish_sweeps
    last_scaled = float("inf")
    last_res = float(np.max(np.abs(res)))

    while sweeps_left > 0:
        sweeps_left -= 1
        exponents = interaction_exponents(state)
        margin = C_MARGIN
        accepted = None
        u_scale = 1.0 + float(np.max(np.abs(u)))
        for attempt in range(MAX_RETRIES + 1):
            c_rows = np.minimum(2.0 * coeffs.values * np.exp(np.minimum(exponents + 2.0 * margin, 700.0)), C_CAP)
            # rounding floor of the linear solves, scaled by row magnitudes
            preserve_env = (
                MONOTONE_TOL
                + 2e-12 * (1.0 + row_abs[None, :] + c_rows * u_scale)
                + 2.0 * defect
            )
            cand = np.empty_like(u)
            paths = []
            for i in range(n - 1):
                c_eff, _ = radialize_coefficient(grid, c_rows[i])
                b = coeffs.values[i] * np.exp(exponents[i]) - weights[i] - c_eff * u[i]
                b[bnd] = problem.boundary[i]
                x, path = _solve_linear(grid, c_eff, b)
                cand[i] = x
                paths.append(path)
            step = cand - u
            ascent = float(np.max(step)) if descent else float(-np.min(step))
            cand_state = TodaState(grid, n, cand)
            cand_res = _residual_state(cand_state, coeffs)
            drift = cand_res - preserve_env if descent else -cand_res - preserve_env
            preserved = bool(np.max(drift) <= 0.0)
            if ascent <= MONOTONE_TOL and preserved:
                accepted = (cand, cand_state, cand_res, step, ascent, paths, attempt)
                break
            margin += 1.0
        if accepted is None:
            raise ConsistencyError(
                f"sweep violated monotonicity by {ascent:.3e} (tolerance {MONOTONE_TOL:.0e}) "
                f"after {MAX_RETRIES} retries"
            )
        cand, cand_state, cand_res, step, ascent, paths, retries = accepted

        if descent:
            sandwich = float(np.min(cand - problem.sub.values))
        else:
            sandwich = float(np.min(problem.super_.values - cand))
        if sandwich < -MONOTONE_TOL:
            report.sandwich_ok = False
            raise ConsistencyError(f"iterate left the ordered interval by {-sandwich:.3e}")

        u, state, res = cand, cand_state, cand_res
        delta = float(np.max(np.abs(step)))
        last_res = float(np.max(np.abs(res)))
        last_scaled = _scaled_residual(
            grid, res, coeffs, interaction_exponents(state), c_rows, u_scale
        )
        report.monotone_violation_max = max(report.monotone_violation_max, ascent)
        report.sweeps.append(
            {
                "residual": last_res,
                "residual_scaled": last_scaled,
                "delta": delta,
                "ascent": ascent,
                "retries": retries,
                "path": "+".join(sorted(set(paths))),
            }
        )
        if converged_at is None and delta <= problem.tol and last_scaled <= target:
            converged_at = len(report.sweeps)
        if converged_at is not None:
            if polish_left <= 0:
                break
            polish_left -= 1

    report.final_residual = last_res
    report.final_residual_scaled = last_scaled
    report.converged = converged_at is not None
    report.flags["polish_sweeps"] = polish_sweeps - polish_left
    if converged_at is None:
        raise IterationBudgetError(
            f"no convergence within {problem.max_sweeps} sweeps "
            f"(last scaled residual {last_scaled:.3e}, target {target:.3e})",
            residual=last_res,
            report=report,
        )
    return state, report


def torsion_supersolution(grid: PolarGrid, n: int, level: float) -> TodaState:
    """Supersolution with exact boundary value ``level`` for any coefficients.

    u_i = level + a * eta with a = max_i i(n-i) and eta the torsion function,
    so Delta u_i = -a <= -(i(n-i)) up to the torsion rounding floor.
    """
    if level <= 0.0:
        raise ValueError("boundary level must be positive")
    eta = torsion_function(grid).values
    a = float(np.max(growth_weights(n)))
    one = level + a * eta
    if 2.0 * np.max(one) > EXPONENT_LIMIT:
        raise ValueError(
            f"boundary level {level} overflows the exponent guard on this grid"
        )
    return TodaState(grid, n, np.repeat(one[None, :], n - 1, axis=0))


def eigen_supersolution(
    outer_grid: PolarGrid, grid: PolarGrid, n: int, level: float
) -> TodaState:
    """Supersolution from the principal eigenfunction of a larger disk.

    Requires the grid's closed disk to sit strictly inside the outer one and
    level >= n(n-1)/lambda.  All components equal level * phi / min_Omega phi,
    so the field is at least ``level`` everywhere and scales exactly linearly
    in ``level``.
    """
    if grid.radius >= outer_grid.radius:
        raise ValueError(
            f"domain radius {grid.radius} must be strictly inside the outer radius {outer_grid.radius}"
        )
    lam, phi = first_eigenpair(outer_grid)
    threshold = n * (n - 1) / lam
    if level < threshold:
        raise ValueError(
            f"level {level} is below the required minimum {threshold:.12g} = n(n-1)/lambda"
        )
    nested = (
        grid.n_theta == outer_grid.n_theta
        and grid.n_r <= outer_grid.n_r
        and abs(grid.d_rho - outer_grid.d_rho) <= 1e-12 * outer_grid.d_rho
    )
    if nested:
        restricted = phi.values[: grid.n_nodes].copy()
    else:
        restricted = outer_grid.interpolate(phi.values, grid.rho, grid.theta)
    c1 = float(np.min(restricted))
    if c1 <= 0.0:
        raise ValueError("principal eigenfunction is not positive on the domain")
    one = (level / c1) * restricted
    return TodaState(grid, n, np.repeat(one[None, :], n - 1, axis=0))


@dataclass
class BlowupSchedule:
    """Boundary-level ladder for the blow-up limit.

    Levels double from 4; the run stops early once the interior change
    between consecutive levels drops below stop_tol.  Snapshots of per-level
    center values (and, optionally, full per-level states) are filled in by
    solve_blowup, as is the interior ceiling detected from the coefficients.
    """

    levels: tuple = (4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0)
    stop_tol: float = 1e-8
    level_tol: float = 1e-11
    polish_sweeps: int = 2
    max_sweeps: int = 500
    interior_fraction: float = 0.9
    keep_snapshots: bool = False
    snapshots: list = field(default_factory=list)
    center_values: list = field(default_factory=list)
    ceiling: np.ndarray | None = None

    def __post_init__(self):
        lv = tuple(float(x) for x in self.levels)
        if len(lv) == 0 or any(b <= a for a, b in zip(lv, lv[1:])) or lv[0] <= 0:
            raise ValueError("levels must be a positive strictly increasing sequence")
        self.levels = lv


def _detect_ceiling(grid: PolarGrid, coeffs: TodaCoefficients, fraction: float):
    """Interior ceiling from the blow-up profile of the outer annulus.

    delta is the worst ratio k_i / i(n-i) on the outer (1-fraction) annulus,
    clipped to (0, 1]; d is the annulus width.  Returns (ceiling, delta, d)
    or (None, None, d) when the annulus ratio is not positive.
    """
    annulus = grid.rho >= fraction * grid.radius
    weights = growth_weights(coeffs.n)
    ratio = float(np.min(coeffs.values[:, annulus] / weights[:, None]))
    d = (1.0 - fraction) * grid.radius
    if ratio <= 0.0:
        return None, None, d
    delta = min(ratio, 1.0)
    ceiling = bubble_value(coeffs.n, d, delta, np.array([0.0]))[:, 0]
    return ceiling, delta, d


def solve_blowup(
    grid: PolarGrid, coeffs: TodaCoefficients, schedule: BlowupSchedule | None = None
) -> tuple[TodaState, SolverReport]:
    """Increasing-boundary-level limit of Dirichlet solutions.

    Every level starts from a supersolution: the torsion seed at the first
    level, the previous solution shifted by the level increment afterwards.
    Levels must be nodewise nondecreasing; the detected interior ceiling is
    checked at the center after every level.
    """
    if schedule is None:
        schedule = BlowupSchedule()
    n = coeffs.n
    bnd_ring = grid.ring_slice(grid.n_r - 1)
    k_bnd = coeffs.values[:, bnd_ring]
    if np.min(k_bnd) <= 0.0:
        bad = [i + 1 for i in range(n - 1) if np.min(k_bnd[i]) <= 0.0]
        raise ValueError(
            f"coefficients k_{bad} are not strictly positive on the boundary ring; "
            "the blow-up limit needs a positive boundary coefficient"
        )

    schedule.snapshots.clear()
    schedule.center_values.clear()
    ceiling, delta, d_ann = _detect_ceiling(grid, coeffs, schedule.interior_fraction)
    schedule.ceiling = ceiling
    sub = constant_subsolution(coeffs)
    interior_core = grid.rho <= schedule.interior_fraction * grid.radius
    report = SolverReport(mode="blowup")
    report.flags["boundary_layer_nodes"] = int(np.sum(~interior_core & grid.interior_mask))
    report.flags["ceiling_delta"] = delta
    report.flags["ceiling_width"] = d_ann

    prev: TodaState | None = None
    state = None
    for m, level in enumerate(schedule.levels):
        if prev is None:
            seed = torsion_supersolution(grid, n, level)
        else:
            seed = TodaState(grid, n, prev.values + (level - schedule.levels[m - 1]))
        problem = DirichletProblem(
            grid,
            coeffs,
            np.full((n - 1,), level),
            sub,
            seed,
            tol=schedule.level_tol,
            max_sweeps=schedule.max_sweeps,
        )
        state, level_report = solve_dirichlet(
            problem, "super", polish_sweeps=schedule.polish_sweeps
        )

        if prev is not None:
            drop = float(np.min(state.values - prev.values))
            if drop < -MONOTONE_TOL:
                raise ConsistencyError(
                    f"level {level:g} fell below level {schedule.levels[m - 1]:g} "
                    f"by {-drop:.3e}"
                )
            interior_delta = float(
                np.max(np.abs(state.values[:, interior_core] - prev.values[:, interior_core]))
            )
        else:
            interior_delta = float("inf")

        center = state.values[:, 0].copy()
        if ceiling is not None and np.any(center > ceiling + 1e-6):
            worst = int(np.argmax(center - ceiling))
            raise ConsistencyError(
                f"center value {center[worst]:.6f} of component {worst + 1} exceeds "
                f"the interior ceiling {ceiling[worst]:.6f} at level {level:g}"
            )
        schedule.center_values.append(center)
        if schedule.keep_snapshots:
            schedule.snapshots.append(state.copy())
        report.levels.append(
            {
                "level": level,
                "sweeps": level_report.n_sweeps,
                "interior_delta": interior_delta,
                "center": center.tolist(),
                "residual": level_report.final_residual,
                "residual_scaled": level_report.final_residual_scaled,
                "monotone_violation_max": level_report.monotone_violation_max,
            }
        )
        report.monotone_violation_max = max(
            report.monotone_violation_max, level_report.monotone_violation_max
        )
        prev = state
        if interior_delta <= schedule.stop_tol:
            report.flags["early_stop_level"] = level
            break

    report.converged = report.levels[-1]["interior_delta"] <= schedule.stop_tol
    report.final_residual = report.levels[-1]["residual"]
    report.final_residual_scaled = report.levels[-1]["residual_scaled"]
    report.flags["ceiling"] = None if ceiling is None else ceiling.tolist()
    return state, report
