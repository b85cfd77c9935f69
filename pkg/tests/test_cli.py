"""End-to-end checks of the command line front end."""

import json
import math

import numpy as np
import pytest

from toda_harmonic.cli import (
    ConfigError,
    RunConfig,
    dyadic_radii,
    emit_profile,
    main,
    read_profile,
)
from toda_harmonic.grid import PolarGrid
from toda_harmonic.system import TodaState, load_fields


def random_state(grid, n, seed=7):
    rng = np.random.default_rng(seed)
    return TodaState(grid, n, rng.normal(scale=0.3, size=(n - 1, grid.n_nodes)))


class TestConfig:
    def test_maximal_needs_one_source(self):
        with pytest.raises(ConfigError, match="exactly one coefficient source"):
            RunConfig.from_document({"command": "maximal"})

    def test_two_sources_rejected(self):
        doc = {
            "command": "maximal",
            "higgs": {"n": 2, "gammas": [{"kind": "poly", "coeffs": [0, 1]}]},
            "explicit_k": [1.0],
        }
        with pytest.raises(ConfigError, match="exactly one coefficient source"):
            RunConfig.from_document(doc)

    def test_fuchsian_rejects_sources(self):
        with pytest.raises(ConfigError, match="supplies its own"):
            RunConfig.from_document({"command": "fuchsian", "explicit_k": [1.0]})

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            RunConfig.from_document({"command": "verify", "tolerance": 1e-8})

    def test_rank_mismatch(self):
        doc = {"command": "maximal", "n": 3, "explicit_k": [1.0]}
        with pytest.raises(ConfigError, match="disagrees"):
            RunConfig.from_document(doc)

    def test_minimal_disk_is_rank_two(self):
        with pytest.raises(ConfigError, match="rank-2"):
            RunConfig.from_document({"command": "minimal-disk", "n": 3})

    def test_boundary_length(self):
        doc = {
            "command": "dirichlet",
            "explicit_k": [1.0, 1.0],
            "boundary": [0.1],
        }
        with pytest.raises(ConfigError, match="boundary needs 2"):
            RunConfig.from_document(doc)

    def test_radii_ordering(self):
        doc = {"command": "fuchsian", "radii": [0.5, 0.5]}
        with pytest.raises(ConfigError, match="strictly increasing"):
            RunConfig.from_document(doc)

    def test_negative_tol(self):
        with pytest.raises(ConfigError, match="tol"):
            RunConfig.from_document({"command": "verify", "tol": -1.0})

    def test_nonpositive_constant(self):
        doc = {"command": "maximal", "explicit_k": [-1.0]}
        with pytest.raises(ConfigError, match="must be positive"):
            RunConfig.from_document(doc)

    def test_bergman_needs_single_source(self):
        with pytest.raises(ConfigError, match="exactly one of poly"):
            RunConfig.from_document({"command": "bergman"})
        doc = {"command": "bergman", "poly": [0, 1], "zeros": ["0.5"]}
        with pytest.raises(ConfigError, match="exactly one of poly"):
            RunConfig.from_document(doc)

    def test_minimal_disk_defaults_to_identity_section(self):
        cfg = RunConfig.from_document({"command": "minimal-disk"})
        assert cfg.n == 2
        assert cfg.higgs_data is not None
        assert cfg.higgs_data.evaluate(1, 0.25 + 0.0j) == pytest.approx(0.25)

    def test_dyadic_radii(self):
        assert dyadic_radii(3) == (0.75, 0.875, 0.9375)

    def test_missing_source_exits_2(self, capsys):
        assert main(["maximal"]) == 2
        assert "config error" in capsys.readouterr().err

    def test_unreadable_config_exits_2(self, tmp_path, capsys):
        assert main(["verify", "--config", str(tmp_path / "absent.json")]) == 2
        assert "cannot read config file" in capsys.readouterr().err


class TestProfiles:
    def test_radial_round_trip(self, tmp_path):
        grid = PolarGrid(0.8, 9, 8)
        state = random_state(grid, 3)
        path = tmp_path / "radial.csv"
        emit_profile(state, "radial", path=str(path))
        coords, values = read_profile(str(path))
        idx = np.concatenate(([0], 1 + (np.arange(1, grid.n_r) - 1) * grid.n_theta))
        assert np.array_equal(coords, grid.rho[idx])
        assert np.array_equal(values, state.values[:, idx])

    def test_angular_round_trip(self, tmp_path):
        grid = PolarGrid(0.8, 9, 8)
        state = random_state(grid, 2, seed=11)
        path = tmp_path / "angular.csv"
        emit_profile(state, "angular", ring=3, path=str(path))
        coords, values = read_profile(str(path))
        sl = grid.ring_slice(3)
        assert np.array_equal(coords, grid.theta[sl.start : sl.stop])
        assert np.array_equal(values, state.values[:, sl.start : sl.stop])

    def test_axis_and_ring_validation(self):
        grid = PolarGrid(0.8, 9, 8)
        state = random_state(grid, 2)
        with pytest.raises(ValueError, match="axis"):
            emit_profile(state, "diagonal")
        with pytest.raises(ValueError, match="ring"):
            emit_profile(state, "angular", ring=0)

    def test_header_names_components(self, tmp_path):
        grid = PolarGrid(0.8, 5, 8)
        text = emit_profile(random_state(grid, 4), "radial")
        assert text.splitlines()[0] == "coord,u_1,u_2,u_3"


class TestCommands:
    def test_bergman_monomial(self, tmp_path, capsys):
        code = main(["bergman", "--poly", "0,1", "--output-dir", str(tmp_path)])
        assert code == 0
        report = json.loads((tmp_path / "bergman_report.json").read_text())
        assert abs(report["value"] - math.pi / 6) <= 1e-6
        assert set(report["partials"]) == {"0.9", "0.99", "0.999"}
        assert not report["diverging"]
        assert "bergman integral" in capsys.readouterr().out

    def test_dirichlet_run_and_bit_exact_artifacts(self, tmp_path):
        code = main(
            [
                "dirichlet",
                "--n", "3",
                "--k", "1.0,1.5",
                "--radius", "0.7",
                "--n-r", "17",
                "--n-theta", "32",
                "--boundary", "0.1",
                "--output-dir", str(tmp_path),
            ]
        )
        assert code == 0
        report = json.loads((tmp_path / "dirichlet_report.json").read_text())
        assert report["solver"]["converged"]
        assert report["solver"]["sandwich_ok"]
        assert report["residual_inf"] < 1e-6

        # the saved fields and the emitted profile must reproduce the same bits
        grid, n, values = load_fields(report["artifacts"]["fields"])
        reread = TodaState(grid, n, values)
        again = emit_profile(reread, "radial")
        assert again == (tmp_path / "dirichlet_radial.csv").read_text()

    def test_fuchsian_small_run(self, tmp_path):
        code = main(
            [
                "fuchsian",
                "--n", "2",
                "--radii", "2",
                "--n-r", "33",
                "--n-theta", "32",
                "--min-n-r", "17",
                "--output-dir", str(tmp_path),
            ]
        )
        assert code == 0
        trace = json.loads((tmp_path / "fuchsian_n2_trace.json").read_text())
        centers = [rec["center"][0] for rec in trace["per_radius"]]
        assert centers == sorted(centers, reverse=True)
        report = json.loads((tmp_path / "fuchsian_n2_report.json").read_text())
        assert report["final"]["classify"] == "solution"
        assert report["higgs_norm_bound"] == pytest.approx(0.5)

    def test_minimal_disk_small_run(self, tmp_path):
        code = main(
            [
                "minimal-disk",
                "--radii", "2",
                "--n-r", "33",
                "--n-theta", "32",
                "--min-n-r", "17",
                "--output-dir", str(tmp_path),
            ]
        )
        assert code == 0
        report = json.loads((tmp_path / "minimal_disk_report.json").read_text())
        assert report["dichotomy"] == "strict"
        assert 0.0 < report["ratio_min"]
        assert report["ratio_max_off_equality"] <= 1.0
        assert len(report["density_zero_nodes"]) == 1
        assert report["density_zero_nodes"][0]["rho"] == 0.0

    def test_numerical_failure_exits_1(self, tmp_path, capsys):
        config = tmp_path / "run.json"
        config.write_text(
            json.dumps(
                {
                    "n": 2,
                    "explicit_k": [{"kind": "radial", "coeffs": [0.25, -1.0]}],
                    "depth": 2,
                    "n_r": 17,
                    "n_theta": 16,
                    "min_n_r": 17,
                    "output_dir": str(tmp_path),
                }
            )
        )
        code = main(["maximal", "--config", str(config)])
        assert code == 1
        failure = json.loads((tmp_path / "failure_report.json").read_text())
        assert "nonnegative" in failure["message"]
        assert "numerical failure" in capsys.readouterr().err

    def test_verify_subset(self, tmp_path, capsys):
        code = main(["verify", "--criteria", "7", "--output-dir", str(tmp_path)])
        out = capsys.readouterr().out
        assert code == 0
        assert "criterion 7" in out
        report = json.loads((tmp_path / "verify_report.json").read_text())
        assert report["results"][0]["index"] == 7
        assert report["results"][0]["passed"]
