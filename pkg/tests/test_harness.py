import json
from pathlib import Path

import numpy as np
import pytest
import yaml
from click.testing import CliRunner

import rsisac
from rsisac import harness
from rsisac.cli import main as cli_main
from rsisac.harness import ConfigError, config_from_dict, dbm_to_watts, load_config

DESK_TRADEOFF = {
    "scenario": "terrestrial",
    "array": {"num_tx": 4, "num_rx": 5},
    "users": 2,
    "power_dbm": 6.02,
    "noise_dbm": 0.0,
    "target": {
        "angle_deg": 45.0,
        "speed": 8.0,
        "carrier_hz": 3.5e9,
        "symbol_period": 1e-3,
        "block_length": 64,
        "radar_snr_db": -10.0,
    },
    "strategies": ["rsma", "sdma"],
    "sweep": {"lambda_grid": [0.0, 1.0], "lambda_mode": "normalized"},
    "run": {"realizations": 2, "master_seed": 3, "jobs": 1},
    "solver": {"max_iter": 12, "obj_tol": 1e-3, "candidates": 30},
}


def write_config(tmp_path, data, name="config.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


# ---------------------------------------------------------------------------
# config parsing


def test_dbm_conversion():
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert dbm_to_watts(0.0) == pytest.approx(1e-3)
    assert dbm_to_watts(20.0) == pytest.approx(0.1)


def test_shipped_configs_parse():
    for name in ("terrestrial_tradeoff", "terrestrial_estimation", "satellite_tradeoff"):
        config = load_config(Path(__file__).resolve().parents[1] / "configs" / f"{name}.yaml")
        assert config.array.num_tx == 8


def test_config_validation_errors():
    with pytest.raises(ConfigError):
        config_from_dict({"scenario": "underwater"})
    with pytest.raises(ConfigError):
        config_from_dict({"strategies": ["rsma", "cdma"]})
    with pytest.raises(ConfigError):
        config_from_dict({"scenario": "satellite", "strategies": ["noma"]})
    with pytest.raises(ConfigError):
        config_from_dict({"sweep": {"lambda_grid": [1.0, 0.5]}})
    with pytest.raises(ConfigError):
        config_from_dict({"nonsense": 1})
    with pytest.raises(ConfigError):
        config_from_dict({"array": {"num_tx": 4, "bogus": 2}})


def test_build_scene_matches_radar_snr():
    config = config_from_dict(DESK_TRADEOFF)
    scene = harness.build_scene(config)
    power = dbm_to_watts(config.power_dbm)
    snr = abs(scene.reflection) ** 2 * power / scene.noise_power
    assert 10 * np.log10(snr) == pytest.approx(-10.0, abs=1e-9)


# ---------------------------------------------------------------------------
# trade-off experiment


@pytest.fixture(scope="module")
def tradeoff_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("tradeoff")
    config = config_from_dict(DESK_TRADEOFF)
    paths = harness.run_tradeoff(config, out)
    return config, paths


def test_tradeoff_outputs_exist_and_parse(tradeoff_run):
    config, paths = tradeoff_run
    records = harness._read_csv(paths["records"])
    lams, _ = harness.lambda_values(config)
    assert len(records) == 2 * 2 * len(lams)  # strategies x seeds x lambdas
    header = paths["records"].read_text().splitlines()[0]
    assert header == ",".join(harness.TRADEOFF_FIELDS)
    for strategy in ("rsma", "sdma"):
        for lam in lams:
            rows = [
                r
                for r in records
                if r["strategy"] == strategy and float(r["lam"]) == pytest.approx(lam)
            ]
            assert rows, f"missing rows for {strategy} lam={lam}"
            assert any(r["converged"] == "true" and r["mfr"] != "" for r in rows)


def test_tradeoff_records_sorted_canonically(tradeoff_run):
    _, paths = tradeoff_run
    records = harness._read_csv(paths["records"])
    keys = [(r["strategy"], float(r["lam"]), int(r["seed"])) for r in records]
    assert keys == sorted(keys)


def test_tradeoff_summary_consistent(tradeoff_run):
    _, paths = tradeoff_run
    records = harness._read_csv(paths["records"])
    summary = harness._read_csv(paths["summary"])
    for entry in summary:
        group = [
            r
            for r in records
            if r["strategy"] == entry["strategy"]
            and float(r["lam"]) == float(entry["lam"])
            and r["mfr"] != ""
        ]
        want = np.mean([float(r["mfr"]) for r in group])
        assert float(entry["mfr_mean"]) == pytest.approx(want, rel=1e-12)
        assert int(entry["n"]) == len(group)


def test_metadata_records_unit_conversions(tradeoff_run):
    _, paths = tradeoff_run
    meta = json.loads(paths["metadata"].read_text())
    assert meta["units"]["power_watts"] == pytest.approx(dbm_to_watts(6.02))
    assert meta["units"]["user_noise_watts"] == pytest.approx(1e-3)
    assert "lambda_raw" in meta and len(meta["lambda_raw"]) == 2
    assert meta["toolkit_version"] == rsisac.__version__


def test_worker_pool_matches_serial(tmp_path):
    config = config_from_dict(DESK_TRADEOFF)
    serial = harness.run_tradeoff(config, tmp_path / "serial", jobs=1)
    pooled = harness.run_tradeoff(config, tmp_path / "pooled", jobs=2)
    assert serial["records"].read_bytes() == pooled["records"].read_bytes()
    assert serial["summary"].read_bytes() == pooled["summary"].read_bytes()


def test_cli_tradeoff_determinism(tmp_path):
    config_path = write_config(tmp_path, DESK_TRADEOFF)
    runner = CliRunner()
    for out_name in ("run1", "run2"):
        result = runner.invoke(
            cli_main,
            ["run-tradeoff", "--config", str(config_path), "--out", str(tmp_path / out_name)],
        )
        assert result.exit_code == 0, result.output
    for name in ("tradeoff_records.csv", "tradeoff_summary.csv", "tradeoff_metadata.json"):
        a = (tmp_path / "run1" / name).read_bytes()
        b = (tmp_path / "run2" / name).read_bytes()
        assert a == b, f"{name} differs between identical runs"


# ---------------------------------------------------------------------------
# estimation experiment


def test_estimation_smoke_feasible_and_infeasible(tmp_path):
    config_data = dict(DESK_TRADEOFF)
    config_data = json.loads(json.dumps(config_data))  # deep copy
    config_data["strategies"] = ["rsma", "noma"]
    config_data["estimation"] = {
        "min_rate": 1.0,       # reachable for rsma at these settings
        "snr_grid_db": [0.0, 10.0],
        "trials": 5,
    }
    config_data["run"] = {"realizations": 1, "master_seed": 3, "jobs": 1}
    config = config_from_dict(config_data)
    paths = harness.run_estimation(config, tmp_path / "est")
    feas = harness._read_csv(paths["feasibility"])
    assert {r["strategy"]: r["feasible"] for r in feas} == {"rsma": "true", "noma": "true"}

    config_data["estimation"]["min_rate"] = 40.0  # absurd target: everyone infeasible
    config = config_from_dict(config_data)
    paths = harness.run_estimation(config, tmp_path / "est2")
    feas = harness._read_csv(paths["feasibility"])
    assert all(r["feasible"] == "false" for r in feas)
    assert all(r["achieved_mfr"] != "" and float(r["achieved_mfr"]) < 40.0 for r in feas)
    records = harness._read_csv(paths["records"])
    assert records == []


def test_estimation_records_schema(tmp_path):
    config_data = json.loads(json.dumps(DESK_TRADEOFF))
    config_data["strategies"] = ["rsma"]
    config_data["estimation"] = {"min_rate": 0.5, "snr_grid_db": [5.0], "trials": 4}
    config_data["run"] = {"realizations": 1, "master_seed": 4, "jobs": 1}
    config = config_from_dict(config_data)
    paths = harness.run_estimation(config, tmp_path / "est")
    header = paths["records"].read_text().splitlines()[0]
    assert header == ",".join(harness.ESTIMATION_RECORD_FIELDS)
    records = harness._read_csv(paths["records"])
    assert len(records) == 4  # one per parameter
    assert [r["parameter"] for r in records] == ["theta", "alpha_re", "alpha_im", "doppler"]


# ---------------------------------------------------------------------------
# satellite experiment


def test_satellite_smoke_groups_and_rates(tmp_path):
    config_data = json.loads(json.dumps(DESK_TRADEOFF))
    config_data["scenario"] = "satellite"
    config_data["strategies"] = ["rsma", "sdma"]
    config_data["satellite"] = {"users_per_beam": 2, "beam_width_deg": 12.0, "span_deg": 60.0}
    config_data["sweep"] = {"lambda_grid": [0.0], "lambda_mode": "normalized"}
    config_data["run"] = {"realizations": 1, "master_seed": 5, "jobs": 1}
    config = config_from_dict(config_data)
    paths = harness.run_satellite(config, tmp_path / "sat")
    meta = json.loads(paths["metadata"].read_text())
    assert meta["users"] == 8 and meta["multicast_groups"] == 4
    records = harness._read_csv(paths["records"])
    assert all(r["mfr"] != "" for r in records)

    # group min-rate never exceeds any member's own decode rate
    channels = harness.build_channels(config, 0)
    problem = rsisac.DesignProblem(
        channels=channels,
        scene=harness.build_scene(config),
        strategy="rsma",
        total_power=dbm_to_watts(config.power_dbm),
    )
    solution = rsisac.solve(problem, harness.solver_options(config, 0))
    powers = np.abs(channels.channels.conj() @ solution.precoder.as_matrix()) ** 2
    sigma = channels.noise_power
    streams = channels.stream_of_user()
    for user in range(channels.num_users):
        own = powers[user, 1 + streams[user]]
        interference = powers[user, 1:].sum() - own + sigma
        individual = np.log2(1 + own / interference)
        assert solution.rates.private_rates[user] <= individual + 1e-9


# ---------------------------------------------------------------------------
# report & gen-channels


def test_report_matches_hand_computed_mean(tmp_path):
    header = ",".join(harness.TRADEOFF_FIELDS)
    rows = [
        "rsma,0,0,1,2,0.5,4,0.1,0.2,0.3,0.4,5,true",
        "rsma,0,1,3,4,0.7,6,0.2,0.3,0.4,0.5,5,true",
        "rsma,0,2,5,6,0.9,8,0.3,0.4,0.5,0.6,5,true",
    ]
    (tmp_path / "tradeoff_records.csv").write_text(header + "\n" + "\n".join(rows) + "\n")
    paths = harness.report(tmp_path)
    summary = harness._read_csv(paths["tradeoff"])
    assert len(summary) == 1
    assert float(summary[0]["mfr_mean"]) == pytest.approx(3.0)  # (1+3+5)/3
    assert float(summary[0]["t_mean"]) == pytest.approx(6.0)
    assert int(summary[0]["n"]) == 3


def test_report_single_row_zero_std(tmp_path):
    header = ",".join(harness.TRADEOFF_FIELDS)
    (tmp_path / "tradeoff_records.csv").write_text(
        header + "\nrsma,0,0,1,2,0.5,4,0.1,0.2,0.3,0.4,5,true\n"
    )
    paths = harness.report(tmp_path)
    summary = harness._read_csv(paths["tradeoff"])
    assert float(summary[0]["mfr_std"]) == 0.0


def test_report_empty_dir_errors(tmp_path):
    with pytest.raises(FileNotFoundError, match="no results"):
        harness.report(tmp_path)
    runner = CliRunner()
    result = runner.invoke(cli_main, ["report", "--results", str(tmp_path)])
    assert result.exit_code != 0
    assert "no results" in result.output


def test_gen_channels_cli_round_trip(tmp_path):
    config_path = write_config(tmp_path, DESK_TRADEOFF)
    out = tmp_path / "chan.txt"
    runner = CliRunner()
    result = runner.invoke(
        cli_main, ["gen-channels", "--config", str(config_path), "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    loaded = rsisac.load_channels(out)
    config = config_from_dict(DESK_TRADEOFF)
    direct = harness.build_channels(config, 0)
    np.testing.assert_array_equal(loaded.channels, direct.channels)


def test_channel_file_override(tmp_path):
    config_data = json.loads(json.dumps(DESK_TRADEOFF))
    config = config_from_dict(config_data)
    chan_path = tmp_path / "fixed.txt"
    rsisac.save_channels(harness.build_channels(config, 1), chan_path)
    config_data["channel_file"] = str(chan_path)
    config2 = config_from_dict(config_data)
    loaded = harness.build_channels(config2, 99)  # realization ignored with a file
    np.testing.assert_array_equal(loaded.channels, harness.build_channels(config, 1).channels)
