import json

import numpy as np
import pytest

from nvmcs.cli import (
    CompareResult,
    ScenarioResult,
    compare_protocols,
    main,
    metrics_table,
    reanalyze_trace,
    run_scenario,
)
from nvmcs.config import SCHEMA_VERSION, ConfigError, ScenarioConfig, save_config

# small but non-trivial scenario so the whole file stays fast
FAST = ScenarioConfig(master_seed=11, M=128, n_runs=8, out_dir="unused")


def bundle_names(result):
    return {p.name for p in result.out_dir.iterdir()}


def test_run_scenario_writes_bundle(tmp_path):
    result = run_scenario(FAST, out_dir=tmp_path / "run")
    assert isinstance(result, ScenarioResult)
    assert bundle_names(result) >= {
        "config_used.yaml",
        "trace.csv",
        "trace.json",
        "psd.csv",
        "fits.json",
        "summary.json",
        "trace.png",
        "spectrum.png",
    }
    s = result.summary
    assert s["schema_version"] == SCHEMA_VERSION
    assert s["records"] == FAST.M
    assert s["expected_alias_hz"] == pytest.approx(4182.43, abs=0.5)
    assert s["counts_total"] > 0
    assert len(result.trace) == FAST.M
    # summary must round-trip through its JSON file
    on_disk = json.loads((result.out_dir / "summary.json").read_text())
    assert on_disk["master_seed"] == 11


def test_run_scenario_deterministic(tmp_path):
    a = run_scenario(FAST, out_dir=tmp_path / "a")
    b = run_scenario(FAST, out_dir=tmp_path / "b")
    assert (a.out_dir / "trace.csv").read_bytes() == (
        b.out_dir / "trace.csv"
    ).read_bytes()


def test_run_scenario_worker_count_invariant(tmp_path):
    a = run_scenario(FAST, workers=1, out_dir=tmp_path / "w1")
    b = run_scenario(FAST, workers=3, out_dir=tmp_path / "w3")
    assert np.array_equal(a.trace.counts, b.trace.counts)


def test_run_scenario_seed_changes_counts(tmp_path):
    a = run_scenario(FAST, out_dir=tmp_path / "s11")
    other = FAST.with_overrides(master_seed=12)
    b = run_scenario(other, out_dir=tmp_path / "s12")
    assert not np.array_equal(a.trace.counts, b.trace.counts)


def test_run_scenario_protocols(tmp_path):
    for proto in ("cs", "qdyne"):
        cfg = FAST.with_overrides(protocol=proto, M=64, n_runs=4)
        result = run_scenario(cfg, out_dir=tmp_path / proto)
        assert result.summary["protocol"] == proto
        assert len(result.trace) == 64


def test_run_scenario_qdyne_ensemble_readout(tmp_path):
    # summed ensemble detection: counts scale roughly with n_sensors
    small = FAST.with_overrides(protocol="qdyne", M=64, n_runs=4, noise="none")
    big = small.with_overrides(n_sensors=8)
    a = run_scenario(small, out_dir=tmp_path / "one")
    b = run_scenario(big, out_dir=tmp_path / "eight")
    assert b.trace.counts.sum() == pytest.approx(8.0 * a.trace.counts.sum(), rel=0.05)


def test_run_scenario_noiseless_matches_population_mean(tmp_path):
    cfg = FAST.with_overrides(noise="none", M=64, n_runs=4)
    result = run_scenario(cfg, out_dir=tmp_path / "clean")
    rp = cfg.build_readout_params()
    # noiseless counts stay inside the physically allowed photon band
    lo, hi = cfg.n_runs * rp.eta1, cfg.n_runs * rp.eta0
    assert np.all(result.trace.counts >= lo - 1e-12)
    assert np.all(result.trace.counts <= hi + 1e-12)


def test_compare_protocols_single_point(tmp_path):
    cfg = FAST.with_overrides(M=64, n_runs=2)
    result = compare_protocols(cfg, [1], reps=2, out_dir=tmp_path / "cmp")
    assert isinstance(result, CompareResult)
    assert len(result.rows) == 3
    assert {row["protocol"] for row in result.rows} == {"mcs", "cs", "qdyne"}
    # one grid point cannot define a slope
    assert all(s is None for s in result.slopes.values())
    names = {p.name for p in (tmp_path / "cmp").iterdir()}
    assert names >= {"compare.csv", "compare.json", "scaling.png"}


def test_compare_protocols_rows_and_predictions(tmp_path):
    cfg = FAST.with_overrides(M=64, n_runs=2)
    result = compare_protocols(cfg, [1, 4], reps=2, out_dir=tmp_path / "cmp2")
    by_key = {(r["protocol"], r["N"]): r for r in result.rows}
    assert by_key[("mcs", 4)]["fisher_ratio"] == pytest.approx(4.0)
    assert by_key[("qdyne", 4)]["fisher_ratio"] == pytest.approx(1.0)
    # prediction anchored at the measured N=1 point
    assert by_key[("mcs", 4)]["predicted_snr"] == pytest.approx(
        2.0 * by_key[("mcs", 1)]["snr"], rel=1e-9
    )
    payload = json.loads((tmp_path / "cmp2" / "compare.json").read_text())
    assert payload["n_list"] == [1, 4]


def test_compare_protocols_validation(tmp_path):
    with pytest.raises(ConfigError):
        compare_protocols(FAST, [], reps=2, out_dir=tmp_path)
    with pytest.raises(ConfigError):
        compare_protocols(FAST, [0, 4], reps=2, out_dir=tmp_path)
    with pytest.raises(ConfigError):
        compare_protocols(FAST, [1], reps=0, out_dir=tmp_path)


def test_reanalyze_trace_round_trip(tmp_path):
    run_dir = tmp_path / "run"
    result = run_scenario(FAST, out_dir=run_dir)
    out = tmp_path / "refit"
    report = reanalyze_trace(run_dir / "trace.csv", out)
    assert report["psd_peak_hz"] == pytest.approx(result.summary["psd_peak_hz"])
    assert (out / "refit.json").exists()
    assert (out / "psd.csv").exists()
    assert (out / "spectrum.png").exists()


def test_reanalyze_trace_rejects_other_schema(tmp_path):
    run_dir = tmp_path / "run"
    run_scenario(FAST, out_dir=run_dir)
    sidecar = run_dir / "trace.json"
    meta = json.loads(sidecar.read_text())
    meta["schema_version"] = SCHEMA_VERSION + 5
    sidecar.write_text(json.dumps(meta))
    with pytest.raises(ConfigError, match="schema_version"):
        reanalyze_trace(run_dir / "trace.csv", tmp_path / "refit")


def test_metrics_table_contents():
    rows = metrics_table(ScenarioConfig(), n_list=(1, 16))
    table = {r["quantity"]: r["value"] for r in rows}
    assert table["records_M"] == 1991
    assert table["advantage_factor_f_T"] == pytest.approx(31.6126, abs=5e-4)
    assert table["total_time_ratio_cs_over_mcs"] == pytest.approx(999.358, abs=5e-3)
    assert table["effective_memory_lifetime_seconds"] == pytest.approx(
        15.47e-3, abs=0.01e-3
    )
    assert table["memory_lifetime_at_field_seconds"] == pytest.approx(
        15.8e-3, abs=0.1e-3
    )
    assert table["laser_limited_readout_number"] == pytest.approx(1050.0, rel=1e-9)
    assert table["fisher_gain_mcs_N16"] == pytest.approx(16.0)
    assert table["fisher_gain_qdyne_N16"] == pytest.approx(1.0)


def test_main_run_and_fit(tmp_path, capsys):
    out = tmp_path / "cli_run"
    cfg_path = tmp_path / "scenario.yaml"
    save_config(FAST.with_overrides(M=64, n_runs=4), cfg_path)
    code = main(
        ["run", "--config", str(cfg_path), "--out", str(out), "--seed", "5"]
    )
    assert code == 0
    text = capsys.readouterr().out
    assert "alias" in text
    assert (out / "summary.json").exists()

    code = main(["fit", "--trace", str(out / "trace.csv"), "--out", str(tmp_path / "f")])
    assert code == 0
    assert (tmp_path / "f" / "refit.json").exists()


def test_main_tables(tmp_path, capsys):
    code = main(["tables", "--out", str(tmp_path / "tab")])
    assert code == 0
    assert (tmp_path / "tab" / "metrics.csv").exists()
    assert (tmp_path / "tab" / "metrics.json").exists()
    assert "advantage_factor_f_T" in capsys.readouterr().out


def test_main_compare(tmp_path, capsys):
    out = tmp_path / "cli_cmp"
    cfg_path = tmp_path / "scenario.yaml"
    save_config(FAST.with_overrides(M=64, n_runs=2, out_dir=str(out)), cfg_path)
    code = main(
        ["compare", "--config", str(cfg_path), "--n-list", "1", "--reps", "2"]
    )
    assert code == 0
    assert "slope[mcs]" in capsys.readouterr().out
    assert (out / "compare.csv").exists()


def test_main_error_paths(tmp_path, capsys):
    # unreadable config
    assert main(["run", "--config", str(tmp_path / "nope.yaml")]) == 2
    assert "error:" in capsys.readouterr().err
    # trace from a foreign schema version
    run_dir = tmp_path / "run"
    run_scenario(FAST.with_overrides(M=64, n_runs=2), out_dir=run_dir)
    meta_path = run_dir / "trace.json"
    meta = json.loads(meta_path.read_text())
    meta["schema_version"] = 999
    meta_path.write_text(json.dumps(meta))
    assert main(["fit", "--trace", str(run_dir / "trace.csv")]) == 2
    assert "schema_version" in capsys.readouterr().err
    # malformed n list
    assert main(["compare", "--n-list", "1,x"]) == 2
