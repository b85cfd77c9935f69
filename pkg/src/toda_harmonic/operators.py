"""Discrete Laplace-Beltrami operator of the hyperbolic metric on polar grids.

The metric is g(z) = 4/(1-|z|^2)^2 |dz|^2, so the Laplace-Beltrami operator
acting on a function u is ((1-rho^2)^2/4) * (u_rr + u_r/rho + u_tt/rho^2).
Interior rows use second order central differences; the origin uses the
mean-over-first-ring stencil; boundary rows are identity (Dirichlet).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import PolarGrid, ScalarField


class EigenSolveError(RuntimeError):
    """Inverse iteration for the principal eigenpair failed to converge."""


def metric_density(rho):
    """Conformal density 4/(1-rho^2)^2 of the hyperbolic metric at |z| = rho."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho >= 1.0) or np.any(rho < 0.0):
        raise ValueError("metric density requires 0 <= rho < 1")
    out = 4.0 / (1.0 - rho * rho) ** 2
    return out if out.ndim else float(out)


def _laplacian_parts(grid: PolarGrid):
    """COO data of the Laplace-Beltrami matrix with identity boundary rows.

    Returns (rows, cols, vals, diag_pos) where diag_pos[i] locates the
    diagonal entry of row i inside vals.  Cached on the grid instance.
    """
    if grid._lap is not None:
        return grid._lap

    rows, cols, vals = [], [], []
    diag_entry = np.zeros(grid.n_nodes)

    # origin: Delta_g u(0) ~ (mean over ring 1 - u0) / d_rho^2, metric weight 1/4
    w0 = 0.25 * 4.0 / grid.d_rho**2
    ring1 = grid.ring_slice(1)
    rows.extend([0] * grid.n_theta)
    cols.extend(range(ring1.start, ring1.stop))
    vals.extend([w0 / grid.n_theta] * grid.n_theta)
    diag_entry[0] = -w0

    for k in range(1, grid.n_r - 1):
        rho = grid.ring_rho[k]
        w = (1.0 - rho * rho) ** 2 / 4.0
        sl = grid.ring_slice(k)
        idx = np.arange(sl.start, sl.stop)
        c_out = w * (1.0 / grid.d_rho**2 + 1.0 / (2.0 * rho * grid.d_rho))
        c_in = w * (1.0 / grid.d_rho**2 - 1.0 / (2.0 * rho * grid.d_rho))
        c_ang = w / (rho * rho * grid.d_theta**2)
        diag_entry[idx] = -w * 2.0 / grid.d_rho**2 - 2.0 * c_ang

        outer = np.arange(grid.ring_slice(k + 1).start, grid.ring_slice(k + 1).stop)
        rows.extend(idx)
        cols.extend(outer)
        vals.extend([c_out] * grid.n_theta)

        if k == 1:
            rows.extend(idx)
            cols.extend([0] * grid.n_theta)
            vals.extend([c_in] * grid.n_theta)
        else:
            inner = np.arange(grid.ring_slice(k - 1).start, grid.ring_slice(k - 1).stop)
            rows.extend(idx)
            cols.extend(inner)
            vals.extend([c_in] * grid.n_theta)

        left = sl.start + (np.arange(grid.n_theta) - 1) % grid.n_theta
        right = sl.start + (np.arange(grid.n_theta) + 1) % grid.n_theta
        rows.extend(idx)
        cols.extend(left)
        vals.extend([c_ang] * grid.n_theta)
        rows.extend(idx)
        cols.extend(right)
        vals.extend([c_ang] * grid.n_theta)

    diag_entry[grid.boundary_mask] = 1.0

    rows = np.concatenate([np.asarray(rows, dtype=np.int64), np.arange(grid.n_nodes)])
    cols = np.concatenate([np.asarray(cols, dtype=np.int64), np.arange(grid.n_nodes)])
    vals = np.concatenate([np.asarray(vals, dtype=float), diag_entry])
    diag_pos = np.arange(len(vals) - grid.n_nodes, len(vals))
    grid._lap = (rows, cols, vals, diag_pos)
    return grid._lap


def assemble_operator(grid: PolarGrid, c: np.ndarray | float | None = None) -> sp.csr_matrix:
    """Sparse matrix of (Laplace-Beltrami - c) with identity boundary rows.

    ``c`` may be a scalar or a per-node array; it is applied on interior rows
    only.  With c >= 0 interior rows have nonnegative off-diagonal entries and
    nonpositive row sums (M-matrix pattern).
    """
    rows, cols, vals, diag_pos = _laplacian_parts(grid)
    vals = vals.copy()
    if c is not None:
        c_arr = np.broadcast_to(np.asarray(c, dtype=float), (grid.n_nodes,))
        if np.any(c_arr[grid.interior_mask] < 0.0):
            raise ValueError("zeroth order coefficient c must be nonnegative")
        interior = grid.interior_mask
        vals[diag_pos[interior]] -= c_arr[interior]
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(grid.n_nodes, grid.n_nodes))
    mat.sum_duplicates()
    return mat


def laplacian_diagonal(grid: PolarGrid) -> np.ndarray:
    """Diagonal entries of the c = 0 operator (boundary rows hold 1)."""
    _, _, vals, diag_pos = _laplacian_parts(grid)
    return vals[diag_pos].copy()


def laplace_beltrami(field: ScalarField) -> ScalarField:
    """Apply the hyperbolic Laplacian; boundary entries of the result are 0."""
    mat = _cached_l0(field.grid)
    out = mat @ field.values
    out[field.grid.boundary_mask] = 0.0
    return ScalarField(field.grid, out)


def apply_laplacian(grid: PolarGrid, values: np.ndarray) -> np.ndarray:
    """Matrix-vector product with the c = 0 operator, boundary rows zeroed."""
    out = _cached_l0(grid) @ values
    out[grid.boundary_mask] = 0.0
    return out


def _cached_l0(grid: PolarGrid) -> sp.csr_matrix:
    if getattr(grid, "_l0_csr", None) is None:
        grid._l0_csr = assemble_operator(grid)
    return grid._l0_csr


def _interior_lu(grid: PolarGrid):
    """splu factorisation of -(L0 restricted to interior nodes), cached."""
    if getattr(grid, "_l0_lu", None) is None:
        interior = np.flatnonzero(grid.interior_mask)
        a = (-_cached_l0(grid))[interior][:, interior].tocsc()
        grid._l0_lu = (spla.splu(a), a, interior)
    return grid._l0_lu


def first_eigenpair(grid: PolarGrid, tol: float = 5e-9, max_iter: int = 400):
    """Principal Dirichlet eigenpair of -Laplace_g on the grid's disk.

    Returns (lam, phi) with phi > 0 in the interior, phi = 0 on the boundary,
    normalised to max phi = 1, and || -L0 phi - lam phi ||_inf <= 1e-8 * lam.
    Deterministic inverse power iteration.
    """
    lu, a, interior = _interior_lu(grid)
    x = np.ones(interior.size)
    lam = 0.0
    for _ in range(max_iter):
        y = lu.solve(x)
        y /= np.max(np.abs(y))
        ay = a @ y
        lam = float(np.dot(y, ay) / np.dot(y, y))
        res = float(np.max(np.abs(ay - lam * y)) / np.max(np.abs(y)))
        x = y
        if res <= tol * lam:
            break
    else:
        raise EigenSolveError(
            f"eigen iteration stalled at residual {res:.3e} (target {tol * lam:.3e})"
        )
    if lam <= 0.0:
        raise EigenSolveError(f"principal eigenvalue came out nonpositive: {lam}")
    phi = np.zeros(grid.n_nodes)
    phi[interior] = y / np.max(y)
    if np.any(phi[interior] <= 0.0):
        raise EigenSolveError("principal eigenfunction is not positive in the interior")
    return lam, ScalarField(grid, phi)


def torsion_function(grid: PolarGrid) -> ScalarField:
    """Solve Laplace_g eta = -1 with eta = 0 on the boundary; eta > 0 inside.

    One step of iterative refinement pushes the discrete residual to the
    rounding floor, so fields built from eta satisfy exact inequalities.
    The right side is radial, so the angular-mode tridiagonal solver applies;
    it is cheap enough to run on grids where a sparse factorization is not.
    """
    from .solver import _solve_linear

    c = np.zeros(grid.n_nodes)
    b = np.full(grid.n_nodes, -1.0)
    b[grid.boundary_mask] = 0.0
    y, _ = _solve_linear(grid, c, b)
    r = b - _cached_l0(grid) @ y
    r[grid.boundary_mask] = 0.0
    dy, _ = _solve_linear(grid, c, r)
    y = y + dy
    y[grid.boundary_mask] = 0.0
    if np.any(y[grid.interior_mask] <= 0.0):
        raise RuntimeError("discrete torsion function is not positive")
    return ScalarField(grid, y)
