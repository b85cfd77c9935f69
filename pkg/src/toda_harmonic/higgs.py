"""Holomorphic bundle data and the metric quantities derived from a state.

Everything is trivialized over the disk: the input is a list of holomorphic
functions gamma_i (polynomials, finite Blaschke products, or the constant
rank-weight values), the background is the diagonal hyperbolic one, and the
translation to reaction coefficients is k_i = 2|gamma_i|^2.  The reverse
direction turns a solved state into conformal factors, metric densities,
field norms, and the n = 2 pullback quantities.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .grid import PolarGrid, ScalarField
from .operators import metric_density
from .pipeline import domination_dichotomy
from .system import TodaCoefficients, TodaState, interaction_exponents

BERGMAN_PARTIAL_RADII = (0.9, 0.99, 0.999)


def _to_complex(entry) -> complex:
    if isinstance(entry, (list, tuple)):
        if len(entry) != 2:
            raise ValueError(f"complex entries are [re, im] pairs, got {entry!r}")
        return complex(float(entry[0]), float(entry[1]))
    return complex(entry)


def _encode_complex(value: complex) -> list:
    return [float(value.real), float(value.imag)]


def blaschke(zeros, z):
    """Finite Blaschke product with the standard normalizing prefactors.

    Each factor (conj(z_j)/|z_j|) (z_j - z)/(1 - conj(z_j) z) fixes the
    modulus to 1 on the unit circle, so zeros at the origin are excluded
    (their factor degenerates) and zeros must sit inside the open disk.
    """
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    for z0 in zeros:
        z0 = complex(z0)
        if z0 == 0:
            raise ValueError("Blaschke zeros must avoid the origin")
        if abs(z0) >= 1.0:
            raise ValueError(f"Blaschke zero {z0} lies outside the open disk")
    if np.any(np.abs(z) > 1.0 + 1e-12):
        raise ValueError("Blaschke products are evaluated on the closed disk only")
    out = np.ones_like(z)
    for z0 in zeros:
        z0 = complex(z0)
        out = out * (np.conj(z0) / abs(z0)) * (z0 - z) / (1.0 - np.conj(z0) * z)
    return complex(out) if scalar else np.asarray(out)


class HiggsData:
    """Rank n with holomorphic descriptors gamma_1 .. gamma_{n-1}.

    Each descriptor is a dict: {"kind": "poly", "coeffs": [...ascending...]},
    {"kind": "blaschke", "zeros": [...], "prefactor": c with |c| = 1}, or
    {"kind": "fuchsian"} whose constant value sqrt(i(n-i)/2) depends on the
    slot it occupies.
    """

    def __init__(self, n: int, gammas: list):
        if n < 2:
            raise ValueError("rank must be at least 2")
        if len(gammas) != n - 1:
            raise ValueError(f"expected {n - 1} descriptors, got {len(gammas)}")
        self.n = n
        self.gammas = []
        for i, desc in enumerate(gammas, start=1):
            self.gammas.append(self._normalize(desc, i))

    def _normalize(self, desc: dict, i: int) -> dict:
        kind = desc.get("kind")
        if kind == "fuchsian":
            return {"kind": "fuchsian"}
        if kind == "poly":
            coeffs = [_to_complex(c) for c in desc.get("coeffs", [])]
            if not coeffs or all(c == 0 for c in coeffs):
                raise ValueError(f"gamma_{i} is identically zero")
            return {"kind": "poly", "coeffs": coeffs}
        if kind == "blaschke":
            zeros = [_to_complex(z) for z in desc.get("zeros", [])]
            for z0 in zeros:
                if z0 == 0 or abs(z0) >= 1.0:
                    raise ValueError(
                        f"gamma_{i} Blaschke zeros must lie in the punctured open disk"
                    )
            pre = _to_complex(desc.get("prefactor", 1.0))
            if abs(abs(pre) - 1.0) > 1e-12:
                raise ValueError(f"gamma_{i} prefactor must be unimodular")
            return {"kind": "blaschke", "zeros": zeros, "prefactor": pre}
        raise ValueError(f"unknown descriptor kind {kind!r} for gamma_{i}")

    def fuchsian_value(self, i: int) -> float:
        return float(np.sqrt(i * (self.n - i) / 2.0))

    def evaluate(self, i: int, z):
        """gamma_i(z) for 1 <= i <= n-1 on scalar or array z."""
        if not 1 <= i <= self.n - 1:
            raise ValueError(f"component index {i} outside 1..{self.n - 1}")
        desc = self.gammas[i - 1]
        z = np.asarray(z, dtype=complex)
        scalar = z.ndim == 0
        if desc["kind"] == "fuchsian":
            out = np.full_like(z, self.fuchsian_value(i))
        elif desc["kind"] == "poly":
            out = np.polyval(list(reversed(desc["coeffs"])), z)
        else:
            out = desc["prefactor"] * blaschke(desc["zeros"], z)
        out = np.asarray(out, dtype=complex)
        if not np.all(np.isfinite(out)):
            raise ValueError(f"gamma_{i} evaluation overflowed")
        return complex(out) if scalar else out

    def zeros(self, i: int) -> list:
        """Zeros of gamma_i (exact for Blaschke data, numerical for polynomials)."""
        desc = self.gammas[i - 1]
        if desc["kind"] == "fuchsian":
            return []
        if desc["kind"] == "blaschke":
            return list(desc["zeros"])
        coeffs = list(desc["coeffs"])
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        if len(coeffs) <= 1:
            return []
        return [complex(r) for r in np.roots(list(reversed(coeffs)))]

    def to_dict(self) -> dict:
        gammas = []
        for desc in self.gammas:
            if desc["kind"] == "fuchsian":
                gammas.append({"kind": "fuchsian"})
            elif desc["kind"] == "poly":
                gammas.append(
                    {"kind": "poly", "coeffs": [_encode_complex(c) for c in desc["coeffs"]]}
                )
            else:
                gammas.append(
                    {
                        "kind": "blaschke",
                        "zeros": [_encode_complex(z) for z in desc["zeros"]],
                        "prefactor": _encode_complex(desc["prefactor"]),
                    }
                )
        return {"n": self.n, "gammas": gammas}

    def to_json(self, path: str | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_dict(cls, data: dict) -> "HiggsData":
        return cls(int(data["n"]), list(data["gammas"]))

    @classmethod
    def from_json(cls, text_or_path: str) -> "HiggsData":
        if text_or_path.lstrip().startswith("{"):
            return cls.from_dict(json.loads(text_or_path))
        with open(text_or_path) as fh:
            return cls.from_dict(json.load(fh))


def fuchsian_data(n: int) -> HiggsData:
    """Constant data gamma_i = sqrt(i(n-i)/2) whose coefficients are i(n-i)."""
    return HiggsData(n, [{"kind": "fuchsian"}] * (n - 1))


def coefficients_from_higgs(higgs: HiggsData, grid: PolarGrid) -> TodaCoefficients:
    """Nodal samples k_i = 2|gamma_i|^2 in the hyperbolic trivialization."""
    z = grid.rho * np.exp(1j * grid.theta)
    values = np.stack(
        [2.0 * np.abs(higgs.evaluate(i, z)) ** 2 for i in range(1, higgs.n)]
    )
    return TodaCoefficients(grid, higgs.n, values)


@dataclass
class MetricSolution:
    """Conformal factors and diagonal metric densities derived from a state.

    w_i = u_{i-1} - u_i for i = 1..n (with u_0 = u_n = 0) telescopes to zero,
    which is the unit-determinant constraint; the densities multiply the
    background h~_i = (g_X/2)^{-(n+1-2i)/2}.
    """

    state: TodaState
    w: np.ndarray = field(init=False)
    densities: np.ndarray = field(init=False)

    def __post_init__(self):
        u = self.state.values
        n = self.state.n
        padded = np.vstack([np.zeros(u.shape[1]), u, np.zeros(u.shape[1])])
        self.w = padded[:-1] - padded[1:]
        half_gx = 0.5 * metric_density(self.state.grid.rho)
        exps = np.array([-(n + 1 - 2 * i) / 2.0 for i in range(1, n + 1)])
        self.densities = np.exp(self.w) * half_gx[None, :] ** exps[:, None]

    def factor(self, i: int) -> ScalarField:
        return ScalarField(self.state.grid, self.w[i - 1])

    def density(self, i: int) -> ScalarField:
        return ScalarField(self.state.grid, self.densities[i - 1])


def metric_from_state(state: TodaState) -> MetricSolution:
    return MetricSolution(state)


def detline_densities(state: TodaState) -> np.ndarray:
    """Determinant densities of the filtration lines: e^{u_k} times background.

    Used to cross-check that ordering states by u_k and by these densities
    give the same domination verdicts.
    """
    n = state.n
    half_gx = 0.5 * metric_density(state.grid.rho)
    exps = np.array([-(n + 1 - 2 * i) / 2.0 for i in range(1, n)])
    prefix = np.cumsum(exps)
    background = half_gx[None, :] ** prefix[:, None]
    return np.exp(state.values) * background


def higgs_norm(state: TodaState, coeffs: TodaCoefficients) -> ScalarField:
    """Squared field norm sum_i (1/2) k_i e^{E_i(u)} as a nodal field."""
    if not state.grid.same_layout(coeffs.grid):
        raise ValueError("state and coefficients live on different grids")
    if state.n != coeffs.n:
        raise ValueError("state and coefficients have different rank")
    e = interaction_exponents(state)
    return ScalarField(state.grid, 0.5 * np.sum(coeffs.values * np.exp(e), axis=0))


def norm_bound(n: int) -> float:
    """The rank-n ceiling n(n^2-1)/12 = sum_i i(n-i)/2."""
    return n * (n * n - 1) / 12.0


def weak_domination(first: TodaState, second: TodaState, tol: float) -> str:
    """Order the filtration determinants: 'dominates', 'dominated',
    'incomparable', or 'equal' (both directions within tol)."""
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    if not first.grid.same_layout(second.grid):
        raise ValueError("states live on different grids")
    if first.n != second.n:
        raise ValueError("states have different rank")
    above = bool(np.all(first.values >= second.values - tol))
    below = bool(np.all(second.values >= first.values - tol))
    if above and below:
        return "equal"
    if above:
        return "dominates"
    if below:
        return "dominated"
    return "incomparable"


def _as_evaluator(f):
    if callable(f):
        return f
    if isinstance(f, HiggsData):
        raise ValueError("pass one component, e.g. lambda z: data.evaluate(1, z)")
    if isinstance(f, dict):
        probe = HiggsData(2, [f])
        return lambda z: probe.evaluate(1, z)
    coeffs = [complex(c) for c in np.atleast_1d(np.asarray(f))]
    return lambda z: np.polyval(list(reversed(coeffs)), np.asarray(z, dtype=complex))


def bergman_integral(f, radius: float = 0.999, resolution: int = 64):
    """Weighted square integral of |f|^2 (1 - |z|^2) over growing disks.

    Gauss-Legendre panels in r (refined toward the rim) times a trapezoid
    rule in theta, evaluated at each partial radius up to ``radius``.  The
    returned value extrapolates the rim tail, which scales like
    (1 - R^2)^2, from the last two partials; the divergence flag trips when
    the partial increments stop decaying.
    """
    if not 0.0 < radius < 1.0:
        raise ValueError("quadrature radius must lie in (0, 1)")
    if resolution < 8:
        raise ValueError("resolution must be at least 8")
    fn = _as_evaluator(f)
    radii = sorted({r for r in BERGMAN_PARTIAL_RADII if r < radius} | {radius})

    n_theta = 4 * resolution
    theta = np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False)
    nodes, weights = np.polynomial.legendre.leggauss(resolution)

    def disk_integral(R: float) -> float:
        cuts = [0.0] + [c * R for c in (0.5, 0.8, 0.95, 0.99)] + [R]
        total = 0.0
        for a, b in zip(cuts, cuts[1:]):
            r = 0.5 * (b - a) * nodes + 0.5 * (a + b)
            w = 0.5 * (b - a) * weights
            z = r[:, None] * np.exp(1j * theta)[None, :]
            vals = np.abs(fn(z)) ** 2
            if not np.all(np.isfinite(vals)):
                raise ValueError("integrand evaluation failed inside the disk")
            ang = vals.mean(axis=1) * 2.0 * np.pi
            total += float(np.sum(w * r * (1.0 - r * r) * ang))
        return total

    partials = [disk_integral(R) for R in radii]

    value = partials[-1]
    if len(partials) >= 2:
        x = [(1.0 - R * R) ** 2 for R in radii]
        i1, i2 = partials[-2], partials[-1]
        x1, x2 = x[-2], x[-1]
        if x1 > x2:
            value = i2 + (i2 - i1) * x2 / (x1 - x2)

    diverging = False
    if len(partials) >= 3:
        inc1 = partials[-2] - partials[-3]
        inc2 = partials[-1] - partials[-2]
        diverging = inc2 > 0.0 and inc2 >= 0.5 * inc1

    return {
        "value": value,
        "partials": dict(zip(radii, partials)),
        "diverging": diverging,
    }


def pullback_density(u_max: TodaState, coeffs: TodaCoefficients) -> ScalarField:
    """Density (1/2) k e^{2 u_1} of the harmonic map attached to a rank-2 state.

    Vanishes exactly where k does, which is where the map branches.
    """
    if u_max.n != 2 or coeffs.n != 2:
        raise ValueError("pullback quantities are rank-2 only")
    return ScalarField(
        u_max.grid, 0.5 * coeffs.values[0] * np.exp(2.0 * u_max.values[0])
    )


def pullback_ratio(
    u: TodaState, u_max: TodaState, coeffs: TodaCoefficients, tol: float = 1e-8
) -> ScalarField:
    """Ratio e^{2(u_1 - u_max,1)} of pullback densities for an ordered pair.

    The pair must satisfy the domination dichotomy (identical or strictly
    ordered in every component); a mixed or reversed pair raises.  Values
    land in (0, 1], strictly below 1 when the dichotomy is strict.
    """
    if u.n != 2 or u_max.n != 2:
        raise ValueError("pullback quantities are rank-2 only")
    if coeffs.n != 2 or not coeffs.grid.same_layout(u.grid):
        raise ValueError("coefficients do not match the states")
    domination_dichotomy(u, u_max, tol)
    return ScalarField(u.grid, np.exp(2.0 * (u.values[0] - u_max.values[0])))
