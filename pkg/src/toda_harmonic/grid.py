"""Polar grids on hyperbolic disks and scalar fields living on them.

The computational domains are Euclidean disks D_r = {|z| < r}, r < 1, inside
the unit disk carrying the complete hyperbolic metric.  A grid is a tensor
product of uniform radial and angular subdivisions, with the origin collapsed
to a single logical node so that fields are single-valued there.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def hyperbolic_radius(r: float) -> float:
    """Hyperbolic distance from the origin to the circle |z| = r."""
    if not 0.0 <= r < 1.0:
        raise ValueError(f"radius must lie in [0, 1), got {r}")
    return math.log((1.0 + r) / (1.0 - r))


def shrink_radius(r: float, eps: float) -> float:
    """Euclidean radius of the set of points at hyperbolic distance > eps
    from the boundary circle |z| = r."""
    if eps < 0.0:
        raise ValueError(f"shrink distance must be nonnegative, got {eps}")
    half = math.atanh(r) - 0.5 * eps
    if half <= 0.0:
        raise ValueError(f"shrink eps={eps} exhausts the disk of radius {r}")
    return math.tanh(half)


@dataclass(frozen=True)
class DiskDomain:
    """Open Euclidean disk of radius ``radius`` < 1 centred at the origin."""

    radius: float

    def __post_init__(self) -> None:
        if not 0.0 < self.radius < 1.0:
            raise ValueError(f"disk radius must lie in (0, 1), got {self.radius}")

    def hyperbolic_radius(self) -> float:
        return hyperbolic_radius(self.radius)

    def shrink(self, eps: float) -> "DiskDomain":
        return DiskDomain(shrink_radius(self.radius, eps))


class PolarGrid:
    """Uniform polar grid over the closed disk of radius ``radius``.

    Radial nodes rho_k = k * radius/(n_r - 1) for k = 0..n_r-1, angular nodes
    theta_l = 2*pi*l/n_theta.  The origin (k = 0) is one logical node; rings
    k >= 1 contribute n_theta nodes each, stored ring by ring.  The outermost
    ring k = n_r - 1 is the Dirichlet boundary.
    """

    def __init__(self, radius: float, n_r: int, n_theta: int):
        if not 0.0 < radius < 1.0:
            raise ValueError(f"grid radius must lie in (0, 1), got {radius}")
        if n_r < 3:
            raise ValueError(f"need at least 3 radial nodes, got {n_r}")
        if n_theta < 8 or n_theta % 2 != 0:
            raise ValueError(f"need an even number >= 8 of angular nodes, got {n_theta}")
        self.radius = float(radius)
        self.n_r = int(n_r)
        self.n_theta = int(n_theta)
        self.d_rho = self.radius / (self.n_r - 1)
        self.d_theta = TWO_PI / self.n_theta
        self.ring_rho = self.d_rho * np.arange(self.n_r)
        self.n_nodes = 1 + (self.n_r - 1) * self.n_theta

        theta_ring = self.d_theta * np.arange(self.n_theta)
        self.rho = np.concatenate([[0.0], np.repeat(self.ring_rho[1:], self.n_theta)])
        self.theta = np.concatenate([[0.0], np.tile(theta_ring, self.n_r - 1)])
        self.boundary_mask = np.zeros(self.n_nodes, dtype=bool)
        self.boundary_mask[self.ring_slice(self.n_r - 1)] = True
        self.interior_mask = ~self.boundary_mask
        self._lap = None

    # -- indexing ----------------------------------------------------------

    def ring_slice(self, k: int) -> slice:
        """Slice of node indices for ring k >= 1 (ring 0 is the single node 0)."""
        if k == 0:
            return slice(0, 1)
        if not 1 <= k < self.n_r:
            raise ValueError(f"ring index {k} out of range [0, {self.n_r - 1}]")
        start = 1 + (k - 1) * self.n_theta
        return slice(start, start + self.n_theta)

    def node_index(self, k: int, l: int) -> int:
        if k == 0:
            return 0
        return 1 + (k - 1) * self.n_theta + (l % self.n_theta)

    def same_layout(self, other: "PolarGrid") -> bool:
        return (
            self.radius == other.radius
            and self.n_r == other.n_r
            and self.n_theta == other.n_theta
        )

    def truncate(self, k_boundary: int) -> "PolarGrid":
        """Subgrid with the same spacing whose boundary is ring ``k_boundary``.

        Node indices of the subgrid are a prefix of this grid's indices, so
        fields restrict by slicing with ``grid.truncate(k).n_nodes``.
        """
        if not 2 <= k_boundary <= self.n_r - 1:
            raise ValueError(
                f"truncation ring must lie in [2, {self.n_r - 1}], got {k_boundary}"
            )
        sub = PolarGrid.__new__(PolarGrid)
        PolarGrid.__init__(
            sub, self.d_rho * k_boundary, k_boundary + 1, self.n_theta
        )
        return sub

    # -- interpolation -----------------------------------------------------

    def interpolate(self, values: np.ndarray, rho: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """Bilinear interpolation in (rho, theta), periodic in theta.

        Targets with rho > radius are rejected; rho = radius evaluates on the
        boundary ring.
        """
        rho = np.asarray(rho, dtype=float)
        theta = np.asarray(theta, dtype=float)
        if np.any(rho > self.radius * (1.0 + 1e-12)) or np.any(rho < 0.0):
            raise ValueError("interpolation target outside the grid disk")
        t = np.clip(rho / self.d_rho, 0.0, self.n_r - 1)
        k0 = np.minimum(t.astype(int), self.n_r - 2)
        fr = t - k0

        ang = np.mod(theta, TWO_PI) / self.d_theta
        l0 = np.minimum(ang.astype(int), self.n_theta - 1)
        fa = ang - l0
        l1 = (l0 + 1) % self.n_theta

        def ring_val(k: np.ndarray, l: np.ndarray) -> np.ndarray:
            idx = np.where(k == 0, 0, 1 + (k - 1) * self.n_theta + l)
            return values[idx]

        v00 = ring_val(k0, l0)
        v01 = ring_val(k0, l1)
        v10 = ring_val(k0 + 1, l0)
        v11 = ring_val(k0 + 1, l1)
        low = v00 * (1.0 - fa) + v01 * fa
        high = v10 * (1.0 - fa) + v11 * fa
        return low * (1.0 - fr) + high * fr


@dataclass
class ScalarField:
    """One real value per logical grid node."""

    grid: PolarGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_nodes,):
            raise ValueError(
                f"field shape {self.values.shape} does not match the grid "
                f"({self.grid.n_nodes} nodes)"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def to_csv(self, path) -> None:
        """Write ``rho,theta,value`` rows, origin first, then ring by ring.

        Values are printed with 17 significant digits so the round trip is
        bit exact for IEEE doubles.
        """
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["rho", "theta", "value"])
            g = self.grid
            for i in range(g.n_nodes):
                writer.writerow(
                    [f"{g.rho[i]:.17g}", f"{g.theta[i]:.17g}", f"{self.values[i]:.17g}"]
                )

    @staticmethod
    def from_csv(path) -> "ScalarField":
        rows = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if [h.strip() for h in header] != ["rho", "theta", "value"]:
                raise ValueError(f"unexpected field header {header!r} in {path}")
            for row in reader:
                rows.append((float(row[0]), float(row[1]), float(row[2])))
        if not rows or rows[0][0] != 0.0:
            raise ValueError(f"field file {path} must start with the origin node")
        rho = np.array([r[0] for r in rows])
        distinct = np.unique(rho)
        n_r = distinct.size
        if n_r < 3:
            raise ValueError(f"field file {path} has fewer than 3 rings")
        n_theta = int(np.count_nonzero(rho == distinct[1]))
        grid = PolarGrid(distinct[-1], n_r, n_theta)
        if len(rows) != grid.n_nodes:
            raise ValueError(f"row count {len(rows)} does not match grid layout")
        values = np.array([r[2] for r in rows])
        if not np.allclose(rho, grid.rho, rtol=0.0, atol=1e-12):
            raise ValueError(f"non uniform radial layout in {path}")
        return ScalarField(grid, values)
