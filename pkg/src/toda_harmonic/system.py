"""Coupled curvature system on hyperbolic disk grids.

The unknowns u_1 .. u_{n-1} satisfy

    L u_i + i(n-i) - k_i * exp(E_i(u)) = 0,      E_i(u) = 2 u_i - u_{i-1} - u_{i+1},

with the convention u_0 = u_n = 0, where L is the hyperbolic Laplacian of
``operators`` and the k_i are nonnegative coefficient fields, none of them
identically zero.  This module holds the field bundles, the residual and its
classification, the linearized coupling used by comparison arguments, and the
closed-form radial reference solution together with the constant subsolution.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .grid import PolarGrid, ScalarField
from .operators import apply_laplacian

# exp() overflows doubles near 709; anything past this is a diverged iterate,
# not a representable state.
EXPONENT_LIMIT = 700.0


class ExponentOverflowError(ValueError):
    """An interaction exponent left the representable range."""


def growth_weights(n: int) -> np.ndarray:
    """The constants i(n-i), i = 1 .. n-1."""
    if int(n) != n or n < 2:
        raise ValueError(f"rank must be an integer >= 2, got {n}")
    i = np.arange(1, n)
    return (i * (n - i)).astype(float)


def _validate_bundle(grid: PolarGrid, n: int, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if int(n) != n or n < 2:
        raise ValueError(f"rank must be an integer >= 2, got {n}")
    if values.shape != (n - 1, grid.n_nodes):
        raise ValueError(
            f"expected component array of shape {(n - 1, grid.n_nodes)}, got {values.shape}"
        )
    if not np.all(np.isfinite(values)):
        raise ValueError("component values must be finite")
    return values


class TodaCoefficients:
    """Nonnegative coefficient fields k_1 .. k_{n-1} on a shared grid."""

    def __init__(self, grid: PolarGrid, n: int, values: np.ndarray):
        values = _validate_bundle(grid, n, values)
        if np.any(values < 0.0):
            raise ValueError("coefficient fields must be nonnegative")
        sup = values.max(axis=1)
        if np.any(sup == 0.0):
            dead = int(np.nonzero(sup == 0.0)[0][0]) + 1
            raise ValueError(f"coefficient k_{dead} is identically zero")
        self.grid = grid
        self.n = int(n)
        self.values = values

    @classmethod
    def constant(cls, grid: PolarGrid, n: int, consts) -> "TodaCoefficients":
        consts = np.asarray(consts, dtype=float).reshape(-1)
        if consts.shape != (n - 1,):
            raise ValueError(f"expected {n - 1} constants, got {consts.shape[0]}")
        return cls(grid, n, np.repeat(consts[:, None], grid.n_nodes, axis=1))

    def component(self, i: int) -> ScalarField:
        """k_i as a ScalarField, i in 1 .. n-1."""
        return ScalarField(self.grid, self.values[i - 1])

    def save(self, directory: str, stem: str = "k") -> str:
        return save_fields(directory, stem, self.grid, self.n, self.values)

    @classmethod
    def load(cls, manifest_path: str) -> "TodaCoefficients":
        grid, n, values = load_fields(manifest_path)
        return cls(grid, n, values)


class TodaState:
    """Candidate solution components u_1 .. u_{n-1} on a shared grid."""

    def __init__(self, grid: PolarGrid, n: int, values: np.ndarray):
        self.grid = grid
        self.n = int(n)
        self.values = _validate_bundle(grid, n, values)

    def copy(self) -> "TodaState":
        return TodaState(self.grid, self.n, self.values.copy())

    def component(self, i: int) -> ScalarField:
        return ScalarField(self.grid, self.values[i - 1])

    def exponents(self) -> np.ndarray:
        return interaction_exponents(self)

    def truncate(self, k_boundary: int) -> "TodaState":
        """Restrict to the prefix sub-grid with boundary ring k_boundary."""
        sub = self.grid.truncate(k_boundary)
        return TodaState(sub, self.n, self.values[:, : sub.n_nodes].copy())

    def save(self, directory: str, stem: str = "u") -> str:
        return save_fields(directory, stem, self.grid, self.n, self.values)

    @classmethod
    def load(cls, manifest_path: str) -> "TodaState":
        grid, n, values = load_fields(manifest_path)
        return cls(grid, n, values)


def save_fields(directory: str, stem: str, grid: PolarGrid, n: int, values: np.ndarray) -> str:
    """Write one CSV per component plus a JSON manifest; returns the manifest path."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for i in range(1, n):
        name = f"{stem}_{i}.csv"
        ScalarField(grid, values[i - 1]).to_csv(os.path.join(directory, name))
        paths.append(name)
    manifest = {
        "n": int(n),
        "r": grid.radius,
        "n_r": grid.n_r,
        "n_theta": grid.n_theta,
        "fields": paths,
    }
    manifest_path = os.path.join(directory, f"{stem}_manifest.json")
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2)
    return manifest_path


def load_fields(manifest_path: str):
    """Read a manifest written by save_fields; returns (grid, n, values)."""
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    n = int(manifest["n"])
    grid = PolarGrid(float(manifest["r"]), int(manifest["n_r"]), int(manifest["n_theta"]))
    base = os.path.dirname(manifest_path)
    rows = []
    for name in manifest["fields"]:
        field = ScalarField.from_csv(os.path.join(base, name))
        if not field.grid.same_layout(grid):
            raise ValueError(f"field {name} does not match the manifest grid")
        rows.append(field.values)
    values = np.vstack(rows)
    if values.shape[0] != n - 1:
        raise ValueError(f"manifest lists {values.shape[0]} fields for rank {n}")
    return grid, n, values


def interaction_exponents(state: TodaState) -> np.ndarray:
    """E_i = 2 u_i - u_{i-1} - u_{i+1} with u_0 = u_n = 0, guarded against overflow."""
    u = state.values
    padded = np.vstack([np.zeros(u.shape[1]), u, np.zeros(u.shape[1])])
    exponents = 2.0 * padded[1:-1] - padded[:-2] - padded[2:]
    if exponents.max(initial=-np.inf) > EXPONENT_LIMIT:
        comp, node = np.unravel_index(int(np.argmax(exponents)), exponents.shape)
        grid = state.grid
        raise ExponentOverflowError(
            f"exponent E_{comp + 1} = {exponents[comp, node]:.3g} exceeds "
            f"{EXPONENT_LIMIT:g} at node {node} "
            f"(rho = {grid.rho[node]:.6g}, theta = {grid.theta[node]:.6g})"
        )
    return exponents


def residual(state: TodaState, coeffs: TodaCoefficients) -> np.ndarray:
    """R_i = L u_i + i(n-i) - k_i exp(E_i) on interior nodes; boundary entries zero."""
    if not state.grid.same_layout(coeffs.grid):
        raise ValueError("state and coefficients live on different grids")
    if state.n != coeffs.n:
        raise ValueError("state and coefficients have different ranks")
    weights = growth_weights(state.n)
    exponents = interaction_exponents(state)
    out = np.empty_like(state.values)
    for idx in range(state.n - 1):
        out[idx] = apply_laplacian(state.grid, state.values[idx])
    out += weights[:, None] - coeffs.values * np.exp(exponents)
    out[:, state.grid.boundary_mask] = 0.0
    return out


def classify(state: TodaState, coeffs: TodaCoefficients, tol: float) -> str:
    """One of 'solution' / 'subsolution' / 'supersolution' / 'none' at tolerance tol."""
    if tol <= 0.0:
        raise ValueError("classification tolerance must be positive")
    res = residual(state, coeffs)[:, state.grid.interior_mask]
    is_sub = res.min() >= -tol
    is_super = res.max() <= tol
    if is_sub and is_super:
        return "solution"
    if is_sub:
        return "subsolution"
    if is_super:
        return "supersolution"
    return "none"


@dataclass
class CouplingMatrixField:
    """Per-node tridiagonal coupling rows.

    Row i of the (n-1) x (n-1) matrix at a node has diagonal -2 c_i and
    off-diagonal entries +c_i toward i-1 and i+1 (dropped past the ends).
    """

    grid: PolarGrid
    n: int
    c: np.ndarray  # shape (n-1, n_nodes), nonnegative for admissible data

    def row_sums(self) -> np.ndarray:
        """Row sums per node: -2c_i plus one c_i for each in-range neighbor."""
        n_rows = self.n - 1
        sums = -2.0 * self.c.copy()
        for i in range(n_rows):
            if i - 1 >= 0:
                sums[i] += self.c[i]
            if i + 1 < n_rows:
                sums[i] += self.c[i]
        return sums


def linearized_coupling(u: TodaState, v: TodaState, coeffs: TodaCoefficients) -> CouplingMatrixField:
    """Mean-value coupling c_i = k_i (e^{a} - e^{b})/(a - b) for a = E_i(u), b = E_i(v).

    Evaluated as k_i e^{lo} expm1(hi - lo)/(hi - lo) with (lo, hi) sorted
    elementwise, which keeps the field exactly symmetric in (u, v); the
    degenerate branch k_i e^{a} applies when |a - b| < 1e-12.
    """
    for other in (v.grid, coeffs.grid):
        if not u.grid.same_layout(other):
            raise ValueError("coupling arguments live on different grids")
    if not (u.n == v.n == coeffs.n):
        raise ValueError("coupling arguments have different ranks")
    a = interaction_exponents(u)
    b = interaction_exponents(v)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    gap = hi - lo
    near = gap < 1e-12
    safe_gap = np.where(near, 1.0, gap)
    slope = np.where(near, np.exp(lo), np.exp(lo) * np.expm1(gap) / safe_gap)
    return CouplingMatrixField(u.grid, u.n, coeffs.values * slope)


@dataclass
class CouplingReport:
    cooperative: bool            # (a) off-diagonal entries nonnegative
    row_sums_nonpositive: bool   # (b)
    fully_coupled: bool          # (c) pattern graph strongly connected
    has_strict_row: bool         # (e) some row sum strictly negative somewhere
    min_offdiagonal: float
    max_row_sum: float

    @property
    def all_hold(self) -> bool:
        return self.cooperative and self.row_sums_nonpositive and self.fully_coupled


def validate_coupling(coupling: CouplingMatrixField) -> CouplingReport:
    """Check the cooperative-system witnesses on a coupling field."""
    c = coupling.c
    n_rows = coupling.n - 1
    sums = coupling.row_sums()
    # Pattern graph on components: edges i -> i+-1 iff c_i is not identically 0.
    from scipy.sparse import lil_matrix
    from scipy.sparse.csgraph import connected_components

    pattern = lil_matrix((n_rows, n_rows))
    nonzero_row = c.max(axis=1) > 0.0
    for i in range(n_rows):
        if nonzero_row[i]:
            if i - 1 >= 0:
                pattern[i, i - 1] = 1.0
            if i + 1 < n_rows:
                pattern[i, i + 1] = 1.0
    n_comp, _ = connected_components(pattern.tocsr(), directed=True, connection="strong")
    return CouplingReport(
        cooperative=bool(c.min() >= 0.0),
        row_sums_nonpositive=bool(sums.max() <= 0.0),
        fully_coupled=bool(n_comp == 1),
        has_strict_row=bool(sums.min() < 0.0),
        min_offdiagonal=float(c.min()),
        max_row_sum=float(sums.max()),
    )


def bubble_value(n: int, r: float, delta: float, rho) -> np.ndarray:
    """Closed-form radial blow-up solution for k_i = i(n-i)*delta on the disk of radius r.

    Returns shape (n-1, len(rho)); requires rho < r elementwise.  The shared
    radial profile is w(rho) = ln(r^2 (1-rho^2)^2 / (delta (r^2-rho^2)^2)) and
    u_i = (i(n-i)/2) w.
    """
    if not (0.0 < r <= 1.0):
        raise ValueError(f"bubble radius must lie in (0, 1], got {r}")
    if delta <= 0.0:
        raise ValueError(f"bubble coefficient scale must be positive, got {delta}")
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0.0) or np.any(rho >= r):
        raise ValueError("bubble profile requires 0 <= rho < r")
    w = np.log(r * r * (1.0 - rho * rho) ** 2 / (delta * (r * r - rho * rho) ** 2))
    return 0.5 * growth_weights(n)[:, None] * w[None, :]


def exact_bubble(grid: PolarGrid, n: int, r: float, delta: float) -> TodaState:
    """The bubble sampled on a grid strictly inside the blow-up disk."""
    if grid.radius >= r:
        raise ValueError(
            f"grid radius {grid.radius} must be strictly less than the blow-up radius {r}"
        )
    return TodaState(grid, n, bubble_value(n, r, delta, grid.rho))


def bubble_coefficients(grid: PolarGrid, n: int, delta: float) -> TodaCoefficients:
    """The coefficient fields k_i = i(n-i)*delta matching bubble_value."""
    return TodaCoefficients.constant(grid, n, delta * growth_weights(n))


def constant_subsolution(coeffs: TodaCoefficients) -> TodaState:
    """u_i = -(i(n-i)/2) ln C0 with C0 = max(1 + 1e-6, sup k_i): a subsolution for any k >= 0.

    The reaction inequality is exact: k_i exp(E_i) = k_i / C0 <= 1 <= i(n-i),
    and the Laplacian of a constant vanishes.
    """
    c0 = max(1.0 + 1e-6, float(coeffs.values.max()))
    levels = -0.5 * growth_weights(coeffs.n) * np.log(c0)
    values = np.repeat(levels[:, None], coeffs.grid.n_nodes, axis=1)
    return TodaState(coeffs.grid, coeffs.n, values)
