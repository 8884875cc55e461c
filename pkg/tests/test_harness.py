import json
import math
from pathlib import Path

import numpy as np
import pytest

from isinglab.cli import main as cli_main
from isinglab.harness import (
    ConfigError,
    ExperimentConfig,
    InitialSpec,
    ReplicaResult,
    aggregate_replicas,
    binomial_interval,
    run_experiment,
    verify_report,
)


def tiny_config(stripes_spec, **overrides):
    base = dict(
        experiment="mesh",
        side=4,
        beta=0.6,
        horizon=2.0,
        replicas=2,
        master_seed=11,
        initial=InitialSpec("antisym", stripes_spec),
        deltas=(0.5, 1.0),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestExperimentConfig:
    def test_unknown_field_rejected(self):
        with pytest.raises(ConfigError, match="unknown config fields.*frobnicate"):
            ExperimentConfig.from_dict({"experiment": "mesh", "frobnicate": 1})

    def test_missing_fields_named(self):
        with pytest.raises(ConfigError, match="missing config fields"):
            ExperimentConfig.from_dict({"experiment": "mesh"})

    def test_unknown_experiment_named(self, stripes_spec):
        with pytest.raises(ConfigError, match="experiment"):
            tiny_config(stripes_spec, experiment="nonsense")

    def test_sample_times_beyond_horizon(self, stripes_spec):
        with pytest.raises(ConfigError, match="sample_times"):
            tiny_config(stripes_spec, sample_times=(5.0,))

    def test_incompatible_side_rejected(self, stripes_spec):
        with pytest.raises(ConfigError, match="side"):
            tiny_config(stripes_spec, side=5)

    def test_initial_spec_round_trip(self, stripes_spec):
        config = tiny_config(stripes_spec)
        back = ExperimentConfig.from_dict(config.to_json_dict())
        assert back == config

    def test_constant_initial_kinds(self):
        spec = InitialSpec.from_json("all_plus")
        assert spec.kind == "all_plus"
        with pytest.raises(ConfigError, match="initial.kind"):
            InitialSpec.from_json("diagonal")

    def test_antisym_requires_record(self):
        with pytest.raises(ConfigError, match="initial.record"):
            InitialSpec.from_json({"kind": "antisym"})

    def test_seed_env_override(self, stripes_spec, monkeypatch):
        data = tiny_config(stripes_spec).to_json_dict()
        monkeypatch.setenv("ISINGLAB_SEED", "123")
        assert ExperimentConfig.from_dict(data).master_seed == 123
        monkeypatch.setenv("ISINGLAB_SEED", "not-a-number")
        with pytest.raises(ConfigError, match="ISINGLAB_SEED"):
            ExperimentConfig.from_dict(data)

    def test_fingerprint_ignores_run_identity(self, stripes_spec, tmp_path):
        a = tiny_config(stripes_spec, output_dir=str(tmp_path / "a"), workers=1)
        b = tiny_config(stripes_spec, output_dir=str(tmp_path / "b"), workers=3)
        assert a.fingerprint() == b.fingerprint()


class TestAggregateReplicas:
    def test_single_replica_identity(self):
        result = ReplicaResult(0, "fp", {"rows": [(0, 1), (0, 2)]}, {})
        assert aggregate_replicas([result]) == {"rows": [(0, 1), (0, 2)]}

    def test_permutation_invariance(self):
        results = [
            ReplicaResult(i, "fp", {"rows": [(i, "x")]}, {}) for i in range(6)
        ]
        forward = aggregate_replicas(results)
        backward = aggregate_replicas(list(reversed(results)))
        assert forward == backward
        assert [row[0] for row in forward["rows"]] == list(range(6))

    def test_mixed_configs_rejected(self):
        results = [
            ReplicaResult(0, "fp-a", {}, {}),
            ReplicaResult(1, "fp-b", {}, {}),
        ]
        with pytest.raises(ValueError, match="different configs"):
            aggregate_replicas(results)

    def test_duplicate_ids_rejected(self):
        results = [ReplicaResult(0, "fp", {}, {}), ReplicaResult(0, "fp", {}, {})]
        with pytest.raises(ValueError, match="duplicate"):
            aggregate_replicas(results)


class TestBinomialInterval:
    def test_pinned_interval(self):
        # 4096000 trials at p = 1-exp(-0.05), central 99% interval
        lo, hi = binomial_interval(4096000, 1.0 - math.exp(-0.05))
        assert lo == pytest.approx(0.048497, abs=5e-6)
        assert hi == pytest.approx(0.049045, abs=5e-6)

    def test_contains_mean(self):
        lo, hi = binomial_interval(1000, 0.3)
        assert lo < 0.3 < hi


class TestRunExperiment:
    def test_mesh_tiny(self, stripes_spec, tmp_path):
        config = tiny_config(stripes_spec, output_dir=str(tmp_path))
        report = run_experiment(config)
        assert (tmp_path / "report.json").exists()
        assert (tmp_path / "mesh_audit.csv").exists()
        zero = [v for v in report.verdicts if v.criterion == "mesh_zero_violations"]
        assert zero and zero[0].passed

    def test_coupling_tiny(self, stripes_spec, tmp_path):
        config = tiny_config(
            stripes_spec,
            experiment="coupling",
            side=6,
            horizon=1.5,
            replicas=1,
            deltas=(),
            output_dir=str(tmp_path),
        )
        report = run_experiment(config)
        assert report.passed
        assert (tmp_path / "events_replica0.csv").exists()

    def test_centering_tiny(self, stripes_spec, tmp_path):
        config = tiny_config(
            stripes_spec,
            experiment="centering",
            replicas=8,
            deltas=(),
            sample_times=(0.5, 1.0),
            block_sizes=("full", 1),
            output_dir=str(tmp_path),
        )
        report = run_experiment(config)
        rows = (tmp_path / "coset_means.csv").read_text().strip().splitlines()
        assert len(rows) - 1 == 2 * 2  # |Q| x |sample_times|
        mag = (tmp_path / "magnetization.csv").read_text()
        assert ",full," in mag and ",1," in mag
        decomposition = [
            v for v in report.verdicts if v.criterion == "centering_decomposition_exact"
        ]
        assert decomposition[0].passed

    def test_pure_contrast_tiny(self, stripes_spec, tmp_path):
        config = tiny_config(
            stripes_spec,
            experiment="pure_contrast",
            side=8,
            beta=0.6,
            horizon=2.0,
            replicas=12,
            deltas=(),
            sample_times=(1.0, 2.0),
            pure_replicas=4,
            pure_horizon=2.0,
            output_dir=str(tmp_path),
        )
        report = run_experiment(config)
        assert "plus_tier" in report.measurements
        assert report.measurements["confinement"]["band"] == config.confinement_band
        labels = {row["label"] for row in report.measurements["anti_tier"]["sector"]}
        assert labels <= {"plus", "minus", "centered", "other"}

    def test_cesaro_tiny(self, checkerboard_spec, tmp_path):
        config = ExperimentConfig(
            experiment="cesaro",
            side=4,
            beta=0.5,
            horizon=1.0,
            replicas=25,
            master_seed=5,
            initial=InitialSpec("antisym", checkerboard_spec),
            sample_times=(1.0,),
            output_dir=str(tmp_path),
            tier_a_horizon=1000.0,
            tier_a_batches=10,
            proxy_replicas=4,
            proxy_horizon=64.0,
        )
        report = run_experiment(config)
        names = {v.criterion for v in report.verdicts}
        assert names == {
            "cesaro_enumeration_match",
            "cesaro_sign_symmetry_p",
            "cesaro_pure_proxy_match",
        }
        assert report.measurements["tier_a"]["n_events"] > 0

    def test_oracle_regen(self, tmp_path):
        config = ExperimentConfig.from_dict(
            {"experiment": "oracle_regen", "output_dir": str(tmp_path)}
        )
        report = run_experiment(config)
        assert report.passed
        assert (tmp_path / "oracles.json").exists()

    def test_rerun_byte_identical(self, stripes_spec, tmp_path):
        config = tiny_config(stripes_spec, output_dir=str(tmp_path))
        run_experiment(config)
        first = {
            name: (tmp_path / name).read_bytes()
            for name in ("mesh_audit.csv", "magnetization.csv")
        }
        first_report = json.loads((tmp_path / "report.json").read_text())
        run_experiment(config)
        for name, payload in first.items():
            assert (tmp_path / name).read_bytes() == payload
        second_report = json.loads((tmp_path / "report.json").read_text())
        for exempt in ("wall_time_seconds", "timings"):
            first_report.pop(exempt)
            second_report.pop(exempt)
        assert first_report == second_report

    def test_workers_do_not_change_output(self, stripes_spec, tmp_path):
        serial = tiny_config(
            stripes_spec, replicas=6, output_dir=str(tmp_path / "serial"), workers=1
        )
        parallel = tiny_config(
            stripes_spec, replicas=6, output_dir=str(tmp_path / "parallel"), workers=3
        )
        run_experiment(serial)
        run_experiment(parallel)
        assert (tmp_path / "serial/mesh_audit.csv").read_bytes() == (
            tmp_path / "parallel/mesh_audit.csv"
        ).read_bytes()


class TestVerifyReport:
    def test_accepts_clean_reports(self, stripes_spec, tmp_path):
        config = tiny_config(stripes_spec, output_dir=str(tmp_path))
        run_experiment(config)
        ok, messages = verify_report(tmp_path)
        assert ok
        assert any("mesh violations" in m for m in messages)

    def test_detects_tampered_csv(self, stripes_spec, tmp_path):
        config = tiny_config(stripes_spec, output_dir=str(tmp_path))
        run_experiment(config)
        path = tmp_path / "mesh_audit.csv"
        lines = path.read_text().splitlines()
        fields = lines[1].split(",")
        fields[5] = "0.0"  # break bound = 2 * ring_fraction
        fields[3] = "0.25"
        lines[1] = ",".join(fields)
        path.write_text("\n".join(lines) + "\n")
        ok, messages = verify_report(tmp_path)
        assert not ok
        assert any(m.startswith("FAIL") for m in messages)

    def test_detects_flipped_verdict(self, stripes_spec, tmp_path):
        config = tiny_config(stripes_spec, output_dir=str(tmp_path))
        run_experiment(config)
        path = tmp_path / "report.json"
        report = json.loads(path.read_text())
        report["verdicts"][0]["passed"] = not report["verdicts"][0]["passed"]
        path.write_text(json.dumps(report))
        ok, _ = verify_report(tmp_path)
        assert not ok

    def test_missing_report(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            verify_report(tmp_path)

    def test_cesaro_sign_p_recomputed_bitwise(self, checkerboard_spec, tmp_path):
        config = ExperimentConfig(
            experiment="cesaro",
            side=4,
            beta=0.5,
            horizon=1.0,
            replicas=25,
            master_seed=6,
            initial=InitialSpec("antisym", checkerboard_spec),
            sample_times=(1.0,),
            output_dir=str(tmp_path),
            tier_a_horizon=500.0,
            tier_a_batches=10,
            proxy_replicas=4,
            proxy_horizon=32.0,
        )
        run_experiment(config)
        ok, messages = verify_report(tmp_path)
        assert ok
        assert any("sign-symmetry p" in m for m in messages)


class TestCli:
    def write_config(self, stripes_spec, tmp_path, **overrides):
        data = tiny_config(stripes_spec, output_dir=str(tmp_path / "out")).to_json_dict()
        data.update(overrides)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(data))
        return path

    def test_run_and_verify(self, stripes_spec, tmp_path, capsys):
        path = self.write_config(stripes_spec, tmp_path)
        assert cli_main(["run", "--config", str(path)]) == 0
        out = capsys.readouterr().out
        assert "[PASS]" in out
        assert cli_main(["verify", "--report", str(tmp_path / "out")]) == 0

    def test_bad_config_exits_3(self, stripes_spec, tmp_path, capsys):
        path = self.write_config(stripes_spec, tmp_path, replicas=0)
        assert cli_main(["run", "--config", str(path)]) == 3
        assert "replicas" in capsys.readouterr().err

    def test_missing_config_exits_3(self, tmp_path):
        assert cli_main(["run", "--config", str(tmp_path / "absent.json")]) == 3

    def test_missing_report_exits_3(self, tmp_path):
        assert cli_main(["verify", "--report", str(tmp_path)]) == 3

    def test_oracle_regen(self, tmp_path, capsys):
        out_file = tmp_path / "oracles.json"
        rc = cli_main(
            ["oracle-regen", "--n", "3", "--beta", "0.6", "--out", str(out_file)]
        )
        assert rc == 0
        assert out_file.exists()
        assert "PASS" in capsys.readouterr().out

    def test_oracle_regen_side_limit(self, capsys):
        assert cli_main(["oracle-regen", "--n", "9"]) == 3
        assert "sides" in capsys.readouterr().err
