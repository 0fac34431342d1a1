"""Spec validation, experiment runners, persistence and the CLI."""

import json
import math

import numpy as np
import pytest

from roughnls.cli import main as cli_main
from roughnls.experiments import (
    ExperimentKind,
    SpecError,
    load_spec,
    run_experiment,
    validate_spec,
    write_results,
)
from roughnls.presets import get_preset, preset_names


def minimal_regularity(**over):
    raw = {
        "kind": "regularity",
        "grid_size": 64,
        "t_final": 0.01,
        "seed": 3,
        "potential": {"type": "delta_comb", "centers": [0.0], "amplitude": -0.2},
        "initial": {"type": "smooth"},
        "regularity": {"tau": 1e-3},
    }
    raw.update(over)
    return raw


def small_convergence(**over):
    raw = {
        "kind": "convergence",
        "name": "tiny-conv",
        "grid_size": 64,
        "lambda": -2.0,
        "t_final": 0.5,
        "seed": 4,
        "potential": {"type": "delta_comb", "centers": [0.0], "amplitude": -0.2},
        "initial": {"type": "rough", "decay": 2.55, "amp_re": [0.0, 1.0]},
        "convergence": {"taus": [0.05, 0.025, 0.0125], "ref_divider": 8},
    }
    raw.update(over)
    return raw


class TestValidateSpec:
    def test_defaults_echoed(self):
        spec = validate_spec(minimal_regularity())
        resolved = spec.to_dict()
        assert resolved["regularity"] == {"tau": 1e-3, "k_min": 8, "k_max": 16}
        assert resolved["lambda"] == 1.0
        assert resolved["initial"] == {"type": "smooth"}
        assert resolved["potential"]["centers"] == [0.0]

    def test_unknown_top_level_key(self):
        with pytest.raises(SpecError):
            validate_spec(minimal_regularity(bogus=1))

    def test_unknown_section_key(self):
        raw = minimal_regularity()
        raw["regularity"]["window"] = 3
        with pytest.raises(SpecError):
            validate_spec(raw)

    def test_increasing_taus_rejected(self):
        raw = small_convergence()
        raw["convergence"]["taus"] = [1e-2, 2e-2, 4e-2]
        with pytest.raises(SpecError):
            validate_spec(raw)

    def test_non_divisor_tau_rejected(self):
        raw = small_convergence(t_final=1.0)
        raw["convergence"]["taus"] = [0.3, 3e-3, 1.5e-3]
        with pytest.raises(SpecError):
            validate_spec(raw)

    def test_wrong_section_rejected(self):
        raw = minimal_regularity()
        raw["convergence"] = {"taus": [0.1, 0.05, 0.025]}
        with pytest.raises(SpecError):
            validate_spec(raw)

    def test_bad_scheme_rejected(self):
        raw = small_convergence()
        raw["convergence"]["scheme"] = "strang"
        with pytest.raises(SpecError):
            validate_spec(raw)

    def test_fingerprint_sensitivity(self):
        a = validate_spec(minimal_regularity())
        b = validate_spec(minimal_regularity())
        assert a.fingerprint == b.fingerprint
        c = validate_spec(minimal_regularity(seed=4))
        assert c.fingerprint != a.fingerprint

    def test_illposed_validation(self):
        raw = {
            "kind": "illposed",
            "illposed": {"family": "thm3-pinf", "eps": 0.1, "sweep": [10, 20]},
        }
        spec = validate_spec(raw)
        assert spec.section["t"] == pytest.approx(0.5 * math.pi / 100.0)
        raw["illposed"]["sweep"] = [20, 10]
        with pytest.raises(SpecError):
            validate_spec(raw)


class TestLoadSpec:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "exp.toml"
        path.write_text(
            'kind = "regularity"\n'
            "grid_size = 64\n"
            "t_final = 0.01\n"
            "seed = 3\n"
            "[potential]\n"
            'type = "delta_comb"\ncenters = [0.0]\namplitude = -0.2\n'
            "[initial]\n"
            'type = "smooth"\n'
            "[regularity]\n"
            "tau = 1e-3\n"
        )
        spec = load_spec(path)
        assert spec.kind is ExperimentKind.REGULARITY
        assert spec.grid_size == 64

    def test_parse_failure(self, tmp_path):
        path = tmp_path / "broken.toml"
        path.write_text("kind = [unterminated\n")
        with pytest.raises(SpecError):
            load_spec(path)


class TestRunners:
    def test_regularity_rows_sorted(self):
        spec = validate_spec(minimal_regularity())
        rec = run_experiment(spec)
        assert rec.columns == ["k", "abs_uk"]
        ks = [row[0] for row in rec.rows]
        assert ks == sorted(ks)
        assert len(ks) == 64
        assert "fitted_exponent" in rec.fits

    def test_convergence_record(self):
        spec = validate_spec(small_convergence())
        rec = run_experiment(spec)
        assert rec.columns == ["tau", "error", "order_pairwise"]
        assert len(rec.rows) == 3
        assert rec.rows[-1][2] == ""
        assert rec.metadata["reference"]["tau_ref"] == pytest.approx(0.0125 / 8)
        errors = [row[1] for row in rec.rows]
        assert all(e > 0 for e in errors)

    def test_comparison_shared_reference_and_divergence(self):
        raw = {
            "kind": "comparison",
            "name": "tiny-comp",
            "grid_size": 64,
            "lambda": -2.0,
            "t_final": 0.5,
            "seed": 6,
            # amplitude -60 makes the explicit EWI step unstable at tau = 0.25
            "potential": {"type": "delta_comb", "centers": [0.0], "amplitude": -60.0},
            "initial": {"type": "rough", "decay": 2.55, "amp_re": [0.0, 1.0]},
            "comparison": {"taus": [0.25, 0.125, 0.0625], "ref_divider": 8},
        }
        rec = run_experiment(validate_spec(raw))
        assert rec.columns == ["scheme", "tau", "error", "order_pairwise", "status"]
        statuses = {row[0]: [] for row in rec.rows}
        for row in rec.rows:
            statuses[row[0]].append(row[4])
        assert "diverged" in statuses["ewi"]
        assert all(s == "ok" for s in statuses["lie"])
        assert rec.metadata["reference"]["scheme"] == "lri"

    def test_illposed_record(self):
        raw = {
            "kind": "illposed",
            "name": "tiny-ill",
            "illposed": {"family": "thm3-pinf", "eps": 0.1, "sweep": [10, 20, 40]},
        }
        rec = run_experiment(validate_spec(raw))
        assert rec.columns == ["parameter", "norm"]
        assert [row[0] for row in rec.rows] == [10, 20, 40]
        assert rec.fits["corr_sqrt_log"] > 0.9
        assert rec.fits["exceeds_lower_bound"]


class TestPersistence:
    def test_byte_identical_reruns(self, tmp_path):
        spec = validate_spec(small_convergence())
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        write_results(run_experiment(spec), a)
        write_results(run_experiment(spec), b)
        assert a.read_bytes() == b.read_bytes()
        meta = json.loads((tmp_path / "a.meta.json").read_text())
        assert meta["fingerprint"] == spec.fingerprint

    def test_header_only_for_empty_record(self, tmp_path):
        from roughnls.experiments import ResultRecord

        rec = ResultRecord(
            fingerprint="x",
            kind=ExperimentKind.CONVERGENCE,
            columns=["tau", "error", "order_pairwise"],
            rows=[],
            fits={},
            metadata={},
        )
        path = tmp_path / "empty.csv"
        write_results(rec, path)
        assert path.read_bytes() == b"tau,error,order_pairwise\n"


class TestPresets:
    def test_all_presets_validate(self):
        for name in preset_names():
            spec = get_preset(name)
            assert spec.name == name

    def test_expected_names(self):
        expected = {
            "reg-6.1", "reg-6.2", "reg-6.3",
            "conv-1o4", "conv-3o4", "conv-1",
            "comp-delta", "comp-rough", "comp-L2data",
            "illposed-thm3", "illposed-thm5",
        }
        assert expected == set(preset_names())

    def test_unknown_preset(self):
        with pytest.raises(KeyError):
            get_preset("reg-zzz")


class TestCli:
    def test_preset_list(self, capsys):
        assert cli_main(["preset", "--list"]) == 0
        out = capsys.readouterr().out
        assert "conv-1o4" in out

    def test_validation_error_exit_code(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text('kind = "convergence"\n[convergence]\ntaus = [0.1]\n')
        assert cli_main(["converge", "--spec", str(path)]) == 2

    def test_regularity_run_writes_outputs(self, tmp_path, capsys):
        path = tmp_path / "reg.toml"
        path.write_text(
            'kind = "regularity"\nname = "cli-reg"\ngrid_size = 64\nt_final = 0.01\nseed = 3\n'
            '[potential]\ntype = "delta_comb"\ncenters = [0.0]\namplitude = -0.2\n'
            '[initial]\ntype = "smooth"\n'
            "[regularity]\ntau = 1e-3\n"
        )
        out_dir = tmp_path / "results"
        assert cli_main(["regularity", "--spec", str(path), "--out", str(out_dir)]) == 0
        assert (out_dir / "cli-reg.csv").exists()
        assert (out_dir / "cli-reg.meta.json").exists()

    def test_simulate_default_and_blowup(self, tmp_path):
        ok = cli_main(
            ["simulate", "--grid", "32", "--tau", "0.01", "--t-final", "0.05",
             "--out", str(tmp_path / "sim")]
        )
        assert ok == 0
        assert (tmp_path / "sim" / "simulate-final.csv").exists()
        assert (tmp_path / "sim" / "simulate-observables.csv").exists()

        blow = tmp_path / "blow.toml"
        blow.write_text(
            'name = "boom"\ngrid_size = 64\n'
            '[potential]\ntype = "delta_comb"\ncenters = [0.0]\namplitude = -60.0\n'
            '[initial]\ntype = "rough"\ndecay = 2.55\namp_re = [0.0, 1.0]\n'
        )
        code = cli_main(
            ["simulate", "--spec", str(blow), "--tau", "0.25", "--t-final", "10.0",
             "--scheme", "ewi", "--out", str(tmp_path / "sim2")]
        )
        assert code == 3

    def test_export_potential(self, tmp_path):
        out = tmp_path / "xi.csv"
        assert cli_main(["export-potential", "--preset", "conv-1o4", "--out", str(out)]) == 0
        text = out.read_text().splitlines()
        assert text[0] == "k,re,im"
        assert len(text) == 2049

    def test_illposed_cli(self, tmp_path):
        path = tmp_path / "ill.toml"
        path.write_text(
            'kind = "illposed"\nname = "cli-ill"\n'
            '[illposed]\nfamily = "thm3-pinf"\neps = 0.1\nsweep = [10, 20]\n'
        )
        out_dir = tmp_path / "res"
        assert cli_main(["illposed", "--spec", str(path), "--out", str(out_dir)]) == 0
        assert (out_dir / "cli-ill.csv").exists()
