"""Command line front end.

One invocation drives one pipeline: an exhaustion run (``fuchsian``,
``maximal``), a single bounded-domain solve (``dirichlet``), the internal
verification suite (``verify``), a weighted Bergman integral (``bergman``),
or the rank-2 comparison of the zero-boundary and maximal solutions
(``minimal-disk``).  Configuration is a single JSON document merged with
flag overrides; artifacts are CSV field files plus JSON reports in the
output directory.

Exit codes: 0 when every internal consistency witness held, 1 for a
numerical failure (a failure report is written next to the artifacts),
2 for a configuration error.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from .grid import PolarGrid
from .higgs import (
    HiggsData,
    _to_complex,
    bergman_integral,
    blaschke,
    coefficients_from_higgs,
    fuchsian_data,
    higgs_norm,
    norm_bound,
    pullback_density,
    pullback_ratio,
)
from .pipeline import ExhaustionPlan, domination_dichotomy, maximal_solution
from .solver import (
    ConsistencyError,
    DirichletProblem,
    solve_dirichlet,
    torsion_supersolution,
)
from .system import TodaCoefficients, TodaState, constant_subsolution, residual
from .verify import run_criteria, summary_table

COMMANDS = ("fuchsian", "maximal", "dirichlet", "verify", "bergman", "minimal-disk")


class ConfigError(ValueError):
    """The run configuration violates its contract."""


def dyadic_radii(depth: int) -> tuple:
    """Exhaustion radii 1 - 2**-(j+1) for j = 1 .. depth."""
    if int(depth) != depth or depth < 1:
        raise ConfigError(f"radii count must be a positive integer, got {depth}")
    return tuple(1.0 - 2.0 ** (-(j + 1)) for j in range(1, depth + 1))


def emit_profile(
    state: TodaState, axis: str, *, ring: int | None = None, path: str | None = None
) -> str:
    """CSV profile of a state along the theta = 0 ray or one grid circle.

    Columns are ``coord,u_1,..,u_{n-1}``.  Values print with %.17g, so a
    parsed-back profile reproduces the source arrays bit for bit.
    """
    grid = state.grid
    if axis == "radial":
        idx = np.concatenate(([0], 1 + (np.arange(1, grid.n_r) - 1) * grid.n_theta))
        coords = grid.rho[idx]
    elif axis == "angular":
        if ring is None:
            ring = (grid.n_r - 1) // 2
        if not 1 <= ring <= grid.n_r - 1:
            raise ValueError(f"ring must lie in [1, {grid.n_r - 1}], got {ring}")
        sl = grid.ring_slice(ring)
        idx = np.arange(sl.start, sl.stop)
        coords = grid.theta[idx]
    else:
        raise ValueError("axis must be 'radial' or 'angular'")
    lines = ["coord," + ",".join(f"u_{i}" for i in range(1, state.n))]
    for pos, node in enumerate(idx):
        vals = ",".join(f"{state.values[c, node]:.17g}" for c in range(state.n - 1))
        lines.append(f"{coords[pos]:.17g},{vals}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def read_profile(path: str):
    """Parse an emit_profile CSV back into (coords, values) arrays."""
    with open(path) as fh:
        rows = [line.strip().split(",") for line in fh if line.strip()]
    data = np.array([[float(x) for x in row] for row in rows[1:]])
    return data[:, 0], data[:, 1:].T


@dataclass
class RunConfig:
    """One JSON-serializable document describing a single pipeline run."""

    command: str
    n: int | None = None
    higgs: dict | None = None
    explicit_k: list | None = None
    radii: tuple | None = None
    depth: int = 6
    n_r: int = 257
    n_theta: int = 128
    min_n_r: int = 65
    eps_stages: tuple = (0.8, 0.4, 0.2, 0.0)
    levels: tuple = (4.0, 8.0)
    tol: float = 1e-8
    max_sweeps: int = 4000
    truncate_radius: float | None = None
    grid_radius: float = 0.8
    boundary: object = 0.0
    start: str = "super"
    poly: list | None = None
    zeros: list | None = None
    component: int = 1
    bergman_radius: float = 0.999
    resolution: int = 64
    criteria: tuple | None = None
    profile_rho: float | None = None
    output_dir: str = "toda-out"
    threads: int = 0
    higgs_data: HiggsData | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_document(cls, doc: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)} - {"higgs_data"}
        bad = sorted(set(doc) - known)
        if bad:
            raise ConfigError(f"unknown config keys: {', '.join(bad)}")
        if "command" not in doc:
            raise ConfigError("config document needs a 'command' entry")
        cfg = cls(**doc)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        for name in ("tol", "bergman_radius", "grid_radius"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and np.isfinite(val) and val > 0):
                raise ConfigError(f"{name} must be a positive number, got {val!r}")
        if self.tol >= 1.0:
            raise ConfigError("tol must be below 1")
        if not (0.0 < self.bergman_radius < 1.0):
            raise ConfigError("bergman radius must lie in (0, 1)")
        if not (0.0 < self.grid_radius < 1.0):
            raise ConfigError("grid radius must lie in (0, 1)")
        for name in ("depth", "n_r", "n_theta", "min_n_r", "max_sweeps", "resolution"):
            val = getattr(self, name)
            if int(val) != val or val < 1:
                raise ConfigError(f"{name} must be a positive integer, got {val!r}")
        if self.threads < 0 or int(self.threads) != self.threads:
            raise ConfigError("threads must be a nonnegative integer")

        if self.radii is not None:
            r = tuple(float(x) for x in self.radii)
            if not r or any(b <= a for a, b in zip(r, r[1:])):
                raise ConfigError("radii must be strictly increasing")
            if r[0] <= 0.0 or r[-1] >= 1.0:
                raise ConfigError("radii must lie in (0, 1)")
            self.radii = r
        eps = tuple(float(x) for x in self.eps_stages)
        if not eps or eps[-1] != 0.0 or any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigError("eps_stages must decrease strictly to 0")
        self.eps_stages = eps
        lv = tuple(float(x) for x in self.levels)
        if not lv or lv[0] <= 0.0 or any(b <= a for a, b in zip(lv, lv[1:])):
            raise ConfigError("levels must be positive and strictly increasing")
        self.levels = lv
        if self.start not in ("super", "sub"):
            raise ConfigError("start must be 'super' or 'sub'")
        if self.criteria is not None:
            try:
                idx = sorted({int(i) for i in self.criteria})
            except (TypeError, ValueError):
                raise ConfigError("criteria must be a list of integers") from None
            if not idx or idx[0] < 1 or idx[-1] > 9:
                raise ConfigError("criteria indices must lie in 1 .. 9")
            self.criteria = tuple(idx)
        if self.profile_rho is not None and not self.profile_rho > 0.0:
            raise ConfigError("profile_rho must be positive")

        self._resolve_sources()
        self._check_boundary()

    def _check_boundary(self) -> None:
        b = self.boundary
        if isinstance(b, (int, float)) and not isinstance(b, bool):
            vals = [float(b)]
        elif isinstance(b, (list, tuple)):
            try:
                vals = [float(x) for x in b]
            except (TypeError, ValueError):
                raise ConfigError("boundary entries must be numbers") from None
            if len(vals) != self.n - 1:
                raise ConfigError(f"boundary needs {self.n - 1} values, got {len(vals)}")
        else:
            raise ConfigError("boundary must be a number or a per-component list")
        if not all(np.isfinite(vals)):
            raise ConfigError("boundary values must be finite")

    def _resolve_sources(self) -> None:
        if self.command == "minimal-disk" and self.n not in (None, 2):
            raise ConfigError("minimal-disk studies the rank-2 system")
        # minimal-disk takes its bundle through --poly; fold that in first
        if self.command == "minimal-disk" and self.poly is not None and self.higgs is None:
            self.higgs = {"n": 2, "gammas": [{"kind": "poly", "coeffs": list(self.poly)}]}
            self.poly = None

        given = [
            name
            for name, val in (("higgs", self.higgs), ("explicit-k", self.explicit_k))
            if val is not None
        ]
        if self.command in ("fuchsian", "verify"):
            if given:
                raise ConfigError(
                    f"{self.command} supplies its own coefficient data; drop {given[0]}"
                )
        elif self.command in ("maximal", "dirichlet"):
            if len(given) != 1:
                raise ConfigError(
                    "exactly one coefficient source (higgs | explicit-k) is required, "
                    f"got {given or 'none'}"
                )
        elif self.command == "minimal-disk":
            if self.explicit_k is not None:
                raise ConfigError("minimal-disk takes bundle data, not explicit coefficients")
            if self.higgs is None:
                self.higgs = {"n": 2, "gammas": [{"kind": "poly", "coeffs": [0.0, 1.0]}]}
        elif self.command == "bergman":
            picks = [
                name
                for name, val in (
                    ("poly", self.poly),
                    ("zeros", self.zeros),
                    ("higgs", self.higgs),
                )
                if val is not None
            ]
            if len(picks) != 1:
                raise ConfigError(
                    f"bergman needs exactly one of poly | zeros | higgs, got {picks or 'none'}"
                )
            if self.zeros is not None:
                try:
                    self.zeros = [
                        complex(z) if isinstance(z, str) else _to_complex(z)
                        for z in self.zeros
                    ]
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"bad Blaschke zero list: {exc}") from None

        if self.higgs is not None:
            try:
                self.higgs_data = HiggsData.from_dict(self.higgs)
            except (TypeError, ValueError, KeyError) as exc:
                raise ConfigError(f"bad bundle data: {exc}") from None

        if self.explicit_k is not None:
            self.explicit_k = [_check_k_descriptor(i, d) for i, d in enumerate(self.explicit_k, 1)]
            if len(self.explicit_k) < 1:
                raise ConfigError("explicit-k needs at least one component")

        self._resolve_rank()

    def _resolve_rank(self) -> None:
        implied = None
        if self.higgs_data is not None:
            implied = self.higgs_data.n
        elif self.explicit_k is not None:
            implied = len(self.explicit_k) + 1
        if self.n is None:
            self.n = implied if implied is not None else (2 if self.command == "minimal-disk" else 3)
        elif int(self.n) != self.n or self.n < 2:
            raise ConfigError(f"rank must be an integer >= 2, got {self.n!r}")
        elif implied is not None and implied != self.n:
            raise ConfigError(
                f"rank {self.n} disagrees with the coefficient source (rank {implied})"
            )
        self.n = int(self.n)
        if self.command == "minimal-disk" and self.n != 2:
            raise ConfigError("minimal-disk studies the rank-2 system")
        if self.command == "bergman" and self.higgs_data is not None:
            if not 1 <= self.component <= self.n - 1:
                raise ConfigError(
                    f"component must lie in 1 .. {self.n - 1}, got {self.component}"
                )

    def exhaustion_radii(self) -> tuple:
        return self.radii if self.radii is not None else dyadic_radii(self.depth)

    def plan(self) -> ExhaustionPlan:
        return ExhaustionPlan(
            radii=self.exhaustion_radii(),
            eps_stages=self.eps_stages,
            anchor_n_r=self.n_r,
            n_theta=self.n_theta,
            min_n_r=self.min_n_r,
            levels=self.levels,
            tol=self.tol,
            max_sweeps=self.max_sweeps,
            truncate_radius=self.truncate_radius,
        )

    def k_of_grid(self):
        """Coefficient law for per-radius grids, from whichever source is set."""
        if self.higgs_data is not None:
            data = self.higgs_data
            return lambda grid: coefficients_from_higgs(data, grid)
        descs = self.explicit_k
        n = self.n

        def build(grid: PolarGrid) -> TodaCoefficients:
            vals = np.empty((n - 1, grid.n_nodes))
            for i, desc in enumerate(descs):
                if desc["kind"] == "constant":
                    vals[i] = desc["value"]
                else:
                    vals[i] = np.polynomial.polynomial.polyval(
                        grid.rho**2, desc["coeffs"]
                    )
            return TodaCoefficients(grid, n, vals)

        return build


def _check_k_descriptor(i: int, desc) -> dict:
    if isinstance(desc, (int, float)) and not isinstance(desc, bool):
        desc = {"kind": "constant", "value": float(desc)}
    if not isinstance(desc, dict):
        raise ConfigError(
            f"explicit k_{i} must be a number or a constant/radial descriptor"
        )
    kind = desc.get("kind")
    if kind == "constant":
        val = desc.get("value")
        if not (isinstance(val, (int, float)) and np.isfinite(val) and val > 0):
            raise ConfigError(f"explicit k_{i} constant must be positive, got {val!r}")
        return {"kind": "constant", "value": float(val)}
    if kind == "radial":
        coeffs = desc.get("coeffs")
        if not isinstance(coeffs, (list, tuple)) or not coeffs:
            raise ConfigError(f"explicit k_{i} radial descriptor needs 'coeffs'")
        arr = [float(c) for c in coeffs]
        if not all(np.isfinite(arr)) or not any(arr):
            raise ConfigError(f"explicit k_{i} radial coefficients must be finite, not all zero")
        return {"kind": "radial", "coeffs": arr}
    raise ConfigError(f"explicit k_{i} has unknown kind {kind!r}")


def _write_json(path: str, payload: dict) -> str:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return path


def _write_profiles(state: TodaState, out: str, stem: str, profile_rho) -> list:
    ring = None
    if profile_rho is not None:
        ring = int(round(profile_rho / state.grid.d_rho))
        ring = min(max(ring, 1), state.grid.n_r - 1)
    paths = []
    for axis in ("radial", "angular"):
        path = os.path.join(out, f"{stem}_{axis}.csv")
        emit_profile(state, axis, ring=ring if axis == "angular" else None, path=path)
        paths.append(path)
    return paths


def _core_sup(state: TodaState, cap: float = 0.5) -> list:
    mask = state.grid.rho <= min(cap, state.grid.radius) + 1e-12
    return np.max(np.abs(state.values[:, mask]), axis=1).tolist()


def _run_exhaustion(cfg: RunConfig, stem: str, k_of_grid) -> int:
    limit, trace = maximal_solution(k_of_grid, cfg.plan())
    out = cfg.output_dir
    manifest = limit.save(out, stem)
    trace_path = os.path.join(out, f"{stem}_trace.json")
    trace.to_json(trace_path)
    profiles = _write_profiles(limit, out, stem, cfg.profile_rho)

    sup_core = _core_sup(limit)
    norm = higgs_norm(limit, k_of_grid(limit.grid))
    report = {
        "command": cfg.command,
        "n": cfg.n,
        "radii": list(trace.radii),
        "center": limit.values[:, 0].tolist(),
        "sup_abs_core": sup_core,
        "higgs_norm_max": float(np.max(norm.values)),
        "higgs_norm_bound": norm_bound(cfg.n),
        "final": trace.final,
        "artifacts": {"fields": manifest, "trace": trace_path, "profiles": profiles},
    }
    path = _write_json(os.path.join(out, f"{stem}_report.json"), report)

    print(
        f"{cfg.command} n={cfg.n}: {len(trace.radii)} radii up to {trace.radii[-1]:g}, "
        f"sup|u| on rho<=0.5 = {max(sup_core):.3e}, "
        f"classification {trace.final['classify']!r}"
    )
    print(f"report written to {path}")
    return 0


def _cmd_fuchsian(cfg: RunConfig) -> int:
    data = fuchsian_data(cfg.n)
    return _run_exhaustion(cfg, f"fuchsian_n{cfg.n}", lambda g: coefficients_from_higgs(data, g))


def _cmd_maximal(cfg: RunConfig) -> int:
    return _run_exhaustion(cfg, "maximal", cfg.k_of_grid())


def _boundary_array(cfg: RunConfig) -> np.ndarray:
    b = cfg.boundary
    if isinstance(b, (int, float)) and not isinstance(b, bool):
        return np.full(cfg.n - 1, float(b))
    return np.asarray([float(x) for x in b], dtype=float)


def _sandwich(grid: PolarGrid, coeffs: TodaCoefficients, bnd: np.ndarray):
    """Constant subsolution and torsion supersolution bracketing the data."""
    sub = constant_subsolution(coeffs)
    slack = float(np.min(bnd) - np.max(sub.values))
    if slack < 0.0:
        # a uniform downward shift only increases the edge reaction terms,
        # so the shifted state is still a subsolution
        sub = TodaState(grid, coeffs.n, sub.values + (slack - 1e-9))
    level = max(0.1, float(np.max(bnd)) + 0.05)
    return sub, torsion_supersolution(grid, coeffs.n, level)


def _cmd_dirichlet(cfg: RunConfig) -> int:
    bnd = _boundary_array(cfg)
    grid = PolarGrid(cfg.grid_radius, cfg.n_r, cfg.n_theta)
    coeffs = cfg.k_of_grid()(grid)
    sub, super_ = _sandwich(grid, coeffs, bnd)
    problem = DirichletProblem(
        grid, coeffs, bnd, sub, super_, tol=cfg.tol, max_sweeps=cfg.max_sweeps
    )
    state, rep = solve_dirichlet(problem, start=cfg.start)

    out = cfg.output_dir
    manifest = state.save(out, "dirichlet")
    rep_path = os.path.join(out, "dirichlet_solver.json")
    rep.to_json(rep_path)
    profiles = _write_profiles(state, out, "dirichlet", cfg.profile_rho)
    res = residual(state, coeffs)[:, grid.interior_mask]
    report = {
        "command": "dirichlet",
        "n": cfg.n,
        "grid": {"radius": grid.radius, "n_r": grid.n_r, "n_theta": grid.n_theta},
        "boundary": bnd.tolist(),
        "center": state.values[:, 0].tolist(),
        "residual_inf": float(np.max(np.abs(res))),
        "solver": rep.to_dict(),
        "artifacts": {"fields": manifest, "solver": rep_path, "profiles": profiles},
    }
    path = _write_json(os.path.join(out, "dirichlet_report.json"), report)

    print(
        f"dirichlet n={cfg.n} on radius {grid.radius:g}: {rep.n_sweeps} sweeps, "
        f"residual {report['residual_inf']:.3e}, "
        f"monotone violation {rep.monotone_violation_max:.2e}"
    )
    print(f"report written to {path}")
    if not (rep.converged and rep.sandwich_ok and rep.monotone_violation_max <= 1e-10):
        raise ConsistencyError(
            "solve finished without its witnesses: "
            f"converged={rep.converged}, sandwich={rep.sandwich_ok}, "
            f"monotone violation {rep.monotone_violation_max:.3e}"
        )
    return 0


def _cmd_verify(cfg: RunConfig) -> int:
    indices = list(cfg.criteria) if cfg.criteria is not None else None
    results = run_criteria(indices)
    table = summary_table(results)
    print(table)
    payload = {"command": "verify", "results": [r.to_dict() for r in results]}
    path = _write_json(os.path.join(cfg.output_dir, "verify_report.json"), payload)
    print(f"report written to {path}")
    return 0 if all(r.passed for r in results) else 1


def _cmd_bergman(cfg: RunConfig) -> int:
    if cfg.poly is not None:
        f = [float(c) for c in cfg.poly]
        source = {"poly": f}
    elif cfg.zeros is not None:
        zeros = list(cfg.zeros)
        source = {"zeros": [[z.real, z.imag] for z in zeros]}

        def f(z):
            return blaschke(zeros, z)

    else:
        data = cfg.higgs_data
        i = cfg.component
        source = {"higgs_component": i}

        def f(z):
            return data.evaluate(i, z)

    rep = bergman_integral(f, radius=cfg.bergman_radius, resolution=cfg.resolution)
    print(f"bergman integral = {rep['value']:.12g}")
    for r in sorted(rep["partials"]):
        print(f"  partial over |z| <= {r:g}: {rep['partials'][r]:.12g}")
    if rep["diverging"]:
        print("  partial sums still increasing: flagged as diverging")

    payload = {
        "command": "bergman",
        "source": source,
        "radius": cfg.bergman_radius,
        "value": rep["value"],
        "partials": {f"{r:g}": v for r, v in rep["partials"].items()},
        "diverging": rep["diverging"],
    }
    path = _write_json(os.path.join(cfg.output_dir, "bergman_report.json"), payload)
    print(f"report written to {path}")
    return 0


def _cmd_minimal_disk(cfg: RunConfig) -> int:
    limit, trace = maximal_solution(cfg.k_of_grid(), cfg.plan())
    grid = limit.grid
    coeffs = cfg.k_of_grid()(grid)

    sub, super_ = _sandwich(grid, coeffs, np.zeros(1))
    problem = DirichletProblem(
        grid, coeffs, 0.0, sub, super_, tol=cfg.tol, max_sweeps=cfg.max_sweeps
    )
    dirichlet, rep = solve_dirichlet(problem, polish_sweeps=1)

    verdict = domination_dichotomy(dirichlet, limit, tol=1e-6)
    ratio = pullback_ratio(dirichlet, limit, coeffs)
    density = pullback_density(limit, coeffs)
    gap = limit.values[0] - dirichlet.values[0]
    off = gap > 1e-6
    ratio_off = ratio.values[off]
    zero_nodes = np.nonzero(density.values == 0.0)[0]

    out = cfg.output_dir
    artifacts = {
        "maximal": limit.save(out, "maximal"),
        "dirichlet": dirichlet.save(out, "dirichlet"),
    }
    trace.to_json(os.path.join(out, "maximal_trace.json"))
    ratio.to_csv(os.path.join(out, "pullback_ratio.csv"))
    density.to_csv(os.path.join(out, "pullback_density.csv"))
    artifacts["trace"] = os.path.join(out, "maximal_trace.json")
    artifacts["ratio"] = os.path.join(out, "pullback_ratio.csv")
    artifacts["density"] = os.path.join(out, "pullback_density.csv")
    artifacts["profiles"] = _write_profiles(limit, out, "maximal", cfg.profile_rho)

    report = {
        "command": "minimal-disk",
        "dichotomy": verdict,
        "ratio_min": float(np.min(ratio.values)),
        "ratio_max_off_equality": float(np.max(ratio_off)) if ratio_off.size else None,
        "equality_node_count": int(np.count_nonzero(~off)),
        "density_zero_nodes": [
            {"rho": float(grid.rho[j]), "theta": float(grid.theta[j])}
            for j in zero_nodes[:8]
        ],
        "density_max": float(np.max(density.values)),
        "dirichlet_sweeps": rep.n_sweeps,
        "artifacts": artifacts,
    }
    path = _write_json(os.path.join(out, "minimal_disk_report.json"), report)

    print(
        f"minimal-disk: dichotomy {verdict!r}, pullback ratio in "
        f"[{report['ratio_min']:.4f}, "
        f"{report['ratio_max_off_equality'] if ratio_off.size else float('nan'):.4f}] "
        f"off equality nodes, {zero_nodes.size} density zero(s)"
    )
    print(f"report written to {path}")

    ok = (
        verdict in ("strict", "identical")
        and np.all(ratio.values > 0.0)
        and np.all(ratio.values <= 1.0 + 1e-12)
        and np.all(density.values >= 0.0)
    )
    if not ok:
        raise ConsistencyError(
            f"comparison witnesses failed: dichotomy {verdict!r}, "
            f"ratio range [{np.min(ratio.values):.3e}, {np.max(ratio.values):.3e}]"
        )
    return 0


_RUNNERS = {
    "fuchsian": _cmd_fuchsian,
    "maximal": _cmd_maximal,
    "dirichlet": _cmd_dirichlet,
    "verify": _cmd_verify,
    "bergman": _cmd_bergman,
    "minimal-disk": _cmd_minimal_disk,
}


def _floats(text: str) -> list:
    return [float(x) for x in text.split(",")]


def _ints(text: str) -> list:
    return [int(x) for x in text.split(",")]


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON configuration document")
    common.add_argument("--output-dir", metavar="DIR", help="artifact directory")
    common.add_argument("--tol", type=float, help="solver tolerance")
    common.add_argument(
        "--threads", type=int, help="cap for BLAS/OpenMP worker pools (0 = library default)"
    )

    grids = argparse.ArgumentParser(add_help=False)
    grids.add_argument("--n-r", type=int, dest="n_r", help="radial points on the anchor grid")
    grids.add_argument("--n-theta", type=int, dest="n_theta", help="angular points")

    exhaust = argparse.ArgumentParser(add_help=False)
    exhaust.add_argument(
        "--radii", type=int, help="number of dyadic exhaustion radii 1 - 2^-(j+1)"
    )
    exhaust.add_argument("--min-n-r", type=int, dest="min_n_r", help="radial floor on small disks")
    exhaust.add_argument(
        "--truncate", type=float, dest="truncate_radius", help="radius of the reported limit state"
    )

    parser = argparse.ArgumentParser(
        prog="toda-harmonic",
        description="maximal solutions of the coupled Toda-type curvature system",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "fuchsian", parents=[common, grids, exhaust], help="constant-curvature exhaustion run"
    )
    p.add_argument("--n", type=int, help="rank of the system")

    p = sub.add_parser(
        "maximal", parents=[common, grids, exhaust], help="exhaustion run for a given bundle"
    )
    p.add_argument("--n", type=int, help="rank of the system")
    p.add_argument("--higgs", metavar="PATH", help="bundle data JSON file")
    p.add_argument("--k", metavar="C1,..", help="constant coefficients, one per component")

    p = sub.add_parser(
        "dirichlet", parents=[common, grids], help="single bounded-domain solve"
    )
    p.add_argument("--n", type=int, help="rank of the system")
    p.add_argument("--higgs", metavar="PATH", help="bundle data JSON file")
    p.add_argument("--k", metavar="C1,..", help="constant coefficients, one per component")
    p.add_argument("--radius", type=float, dest="grid_radius", help="disk radius")
    p.add_argument("--boundary", metavar="B1,..", help="boundary value(s)")
    p.add_argument("--start", choices=("super", "sub"), help="iteration starting end")

    p = sub.add_parser("verify", parents=[common], help="run the internal check suite")
    p.add_argument("--criteria", metavar="I,J,..", help="subset of criteria 1 .. 9")

    p = sub.add_parser("bergman", parents=[common], help="weighted square-integral of a section")
    p.add_argument("--poly", metavar="C0,C1,..", help="polynomial coefficients, ascending")
    p.add_argument("--zeros", metavar="Z1,..", help="Blaschke zeros, complex literals")
    p.add_argument("--higgs", metavar="PATH", help="bundle data JSON file")
    p.add_argument("--component", type=int, help="bundle component to integrate")
    p.add_argument("--radius", type=float, dest="bergman_radius", help="outer integration radius")
    p.add_argument("--resolution", type=int, help="quadrature resolution")

    p = sub.add_parser(
        "minimal-disk",
        parents=[common, grids, exhaust],
        help="rank-2 comparison of zero-boundary and maximal solutions",
    )
    p.add_argument("--poly", metavar="C0,C1,..", help="bundle section coefficients, ascending")
    p.add_argument("--higgs", metavar="PATH", help="bundle data JSON file")

    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    doc: dict = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}")
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
    doc["command"] = args.command

    plain = (
        "n",
        "n_r",
        "n_theta",
        "min_n_r",
        "truncate_radius",
        "grid_radius",
        "bergman_radius",
        "resolution",
        "component",
        "start",
        "output_dir",
        "tol",
        "threads",
    )
    for name in plain:
        val = getattr(args, name, None)
        if val is not None:
            doc[name] = val
    if getattr(args, "radii", None) is not None:
        # a dyadic count from the flag overrides an explicit list in the file
        doc["depth"] = args.radii
        doc.pop("radii", None)
    try:
        if getattr(args, "k", None) is not None:
            doc["explicit_k"] = _floats(args.k)
        if getattr(args, "poly", None) is not None:
            doc["poly"] = _floats(args.poly)
        if getattr(args, "zeros", None) is not None:
            doc["zeros"] = [z.strip() for z in args.zeros.split(",")]
        if getattr(args, "boundary", None) is not None:
            vals = _floats(args.boundary)
            doc["boundary"] = vals[0] if len(vals) == 1 else vals
        if getattr(args, "criteria", None) is not None:
            doc["criteria"] = _ints(args.criteria)
    except ValueError as exc:
        raise ConfigError(f"bad flag value: {exc}") from None
    if getattr(args, "higgs", None) is not None:
        try:
            with open(args.higgs) as fh:
                doc["higgs"] = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read bundle file: {exc}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bundle file is not valid JSON: {exc}")

    return RunConfig.from_document(doc)


def _thread_cap(threads: int):
    if threads and threads > 0:
        from threadpoolctl import threadpool_limits

        return threadpool_limits(limits=threads)
    return contextlib.nullcontext()


def main(argv: list | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    os.makedirs(cfg.output_dir, exist_ok=True)
    try:
        with _thread_cap(cfg.threads):
            return _RUNNERS[cfg.command](cfg)
    except (RuntimeError, ValueError, FloatingPointError) as exc:
        path = _write_json(
            os.path.join(cfg.output_dir, "failure_report.json"),
            {"command": cfg.command, "error": type(exc).__name__, "message": str(exc)},
        )
        print(f"numerical failure: {exc}", file=sys.stderr)
        print(f"report written to {path}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
