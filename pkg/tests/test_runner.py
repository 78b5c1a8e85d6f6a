import json
import math
from dataclasses import replace

import numpy as np
import pytest

from jcthermo.cli import main
from jcthermo.jcdyn import ConfigError, ModelParams, NumericsConfig
from jcthermo.report import (
    CheckResult,
    _format_value,
    column,
    csv_text,
    run_divisibility,
    run_trace,
)
from jcthermo.scenarios import (
    CSV_COLUMNS,
    PRESETS,
    Scenario,
    load_scenario,
    preset,
    save_scenario,
    scenario_from_config,
    scenario_to_config,
)

EXPECTED_HEADER = ("t,gt,sigma_es,sigma_el,sigma_co,sigma_fp,di_ab,sdot_a,sdot_b,"
                   "edot_b,edot_int,pdot_a,beta_b_eff,gamma1,gamma2,gamma3,"
                   "omega_shift,big_gamma,cp_div,p_div,blp,sigma_min,sigma_map,masked")


@pytest.fixture()
def small_cold_scenario():
    # cold bath keeps the Fock space tiny, so runner tests stay fast
    return Scenario(
        name="small",
        params=ModelParams(omega_b=0.99, g=0.3, beta_b=3.0, beta_a=1.0),
        cfg=NumericsConfig(t_max=8.0, n_steps=40),
        initial_state="thermal")


class TestPresets:
    def test_catalog(self):
        assert set(PRESETS) == {"fig1", "fig2", "fig3", "fig4"}

    def test_preset_parameters(self):
        p1 = preset("fig1").params
        assert (p1.omega_b, p1.g, p1.beta_a, p1.beta_b) == (0.6, 0.03, 1.1, 0.3)
        assert p1.delta == pytest.approx(0.4)
        p2 = preset("fig2").params
        assert p2.g == 0.3
        p4 = preset("fig4").params
        assert (p4.omega_b, p4.g, p4.beta_b) == (0.99, 0.3, 3.0)
        assert p4.beta_a is None
        assert p4.delta == pytest.approx(0.01)

    def test_grid_presets_reject_trace(self):
        with pytest.raises(ConfigError):
            preset("fig4").resolve_initial_state()

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            preset("fig9")


class TestConfigRoundTrip:
    @pytest.mark.parametrize("name", ["fig1", "fig2", "fig3", "fig4"])
    def test_presets_round_trip(self, name):
        sc = preset(name)
        assert scenario_from_config(scenario_to_config(sc)) == sc

    def test_custom_round_trip(self, tmp_path):
        sc = Scenario(
            name="custom",
            params=ModelParams(omega_b=0.77, g=0.123456789, beta_b=2.5, beta_a=0.9),
            cfg=NumericsConfig(t_max=12.5, n_steps=77, fock_cutoff=31,
                               sign_band=2e-9, state_grid=16,
                               p_criterion_variant="alt_gamma2"),
            initial_state="bloch:0.1,-0.2,0.3")
        path = tmp_path / "custom.ini"
        save_scenario(sc, path)
        assert load_scenario(path) == sc

    def test_reload_reproduces_identical_run(self, tmp_path, small_cold_scenario):
        path = tmp_path / "sc.ini"
        save_scenario(small_cold_scenario, path)
        a = csv_text(run_trace(small_cold_scenario))
        b = csv_text(run_trace(load_scenario(path)))
        assert a == b

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            load_scenario("/nonexistent/path.ini")


class TestCsvEmission:
    def test_header_is_pinned(self, small_cold_scenario):
        text = csv_text(run_trace(small_cold_scenario))
        assert text.splitlines()[0] == EXPECTED_HEADER
        assert EXPECTED_HEADER == ",".join(CSV_COLUMNS)

    def test_run_is_deterministic(self, small_cold_scenario):
        assert csv_text(run_trace(small_cold_scenario)) == \
            csv_text(run_trace(small_cold_scenario))

    def test_thread_count_does_not_change_bytes(self, small_cold_scenario):
        assert csv_text(run_trace(small_cold_scenario, threads=1)) == \
            csv_text(run_trace(small_cold_scenario, threads=3))

    def test_zero_coupling_zeroes_rates(self, small_cold_scenario):
        sc = replace(small_cold_scenario,
                     params=replace(small_cold_scenario.params, g=0.0))
        rep = run_trace(sc)
        for name in ("sigma_es", "sigma_el", "sigma_co", "sigma_fp", "di_ab",
                     "gamma1", "gamma2", "gamma3"):
            vals = column(rep, name)
            assert np.nanmax(np.abs(vals)) <= 1e-12

    def test_value_formatting(self):
        assert _format_value(True) == "1"
        assert _format_value(False) == "0"
        assert _format_value(None) == "nan"
        assert _format_value(math.nan) == "nan"
        assert _format_value(math.inf) == "inf"
        assert _format_value(-math.inf) == "-inf"
        assert _format_value(0.1) == "0.1"
        assert float(_format_value(1.0 / 3.0)) == 1.0 / 3.0

    def test_trace_rows_leave_minimised_columns_empty(self, small_cold_scenario):
        rep = run_trace(small_cold_scenario)
        assert np.all(np.isnan(column(rep, "sigma_min")))
        assert np.all(np.isnan(column(rep, "sigma_map")))

    def test_divisibility_rows(self, small_cold_scenario):
        sc = replace(small_cold_scenario, initial_state="grid",
                     cfg=NumericsConfig(t_max=8.0, n_steps=40, state_grid=10))
        rep = run_divisibility(sc)
        assert np.all(np.isnan(column(rep, "sigma_es")))
        smin = column(rep, "sigma_min")
        assert np.isfinite(smin[~np.isnan(smin)]).all()
        assert rep.intervals["p_div"], "interval extraction produced nothing"


class TestCheckResult:
    def test_line_format(self):
        ok = CheckResult("demo", True, "1.0e-9", "1e-6")
        bad = CheckResult("demo", False, "0.1", "1e-6", detail="why")
        assert ok.line().startswith("[PASS] demo")
        assert bad.line().startswith("[FAIL] demo")
        assert "why" in bad.line()


class TestCli:
    def test_presets_listing(self, capsys):
        assert main(["presets"]) == 0
        out = capsys.readouterr().out
        for name in PRESETS:
            assert name in out

    def test_unknown_preset_is_config_error(self, capsys):
        assert main(["trace", "--preset", "nope", "--out", "/tmp"]) == 2

    def test_trace_outputs(self, tmp_path, small_cold_scenario, capsys):
        cfg_path = tmp_path / "sc.ini"
        save_scenario(small_cold_scenario, cfg_path)
        assert main(["trace", "--config", str(cfg_path), "--out", str(tmp_path)]) == 0
        csv_path = tmp_path / "small_trace.csv"
        manifest_path = tmp_path / "small_trace_manifest.json"
        assert csv_path.exists() and manifest_path.exists()
        manifest = json.loads(manifest_path.read_text())
        assert manifest["csv"] == "small_trace.csv"
        assert manifest["columns"] == list(CSV_COLUMNS)
        for fig in manifest["figures"]:
            fig_file = tmp_path / fig
            assert fig_file.exists() and fig_file.stat().st_size > 0
        assert len(manifest["figures"]) == 3

    def test_no_figures_flag(self, tmp_path, small_cold_scenario):
        cfg_path = tmp_path / "sc.ini"
        save_scenario(small_cold_scenario, cfg_path)
        assert main(["trace", "--config", str(cfg_path), "--out", str(tmp_path),
                     "--no-figures"]) == 0
        manifest = json.loads((tmp_path / "small_trace_manifest.json").read_text())
        assert manifest["figures"] == []

    def test_divisibility_outputs(self, tmp_path):
        assert main(["divisibility", "--preset", "fig4", "--tmax", "6", "--grid", "120",
                     "--out", str(tmp_path)]) == 0
        manifest = json.loads((tmp_path / "fig4_divisibility_manifest.json").read_text())
        assert manifest["intervals"]["p_div"]
        assert (tmp_path / "fig4_divisibility.csv").exists()

    def test_grid_preset_trace_rejected(self, tmp_path):
        assert main(["trace", "--preset", "fig4", "--out", str(tmp_path)]) == 2

    def test_verify_scenario_passes(self, tmp_path, small_cold_scenario, capsys):
        cfg_path = tmp_path / "sc.ini"
        save_scenario(small_cold_scenario, cfg_path)
        assert main(["verify", "--config", str(cfg_path)]) == 0
        out = capsys.readouterr().out
        assert "[PASS]" in out and "[FAIL]" not in out

    def test_verify_detects_forced_low_cutoff(self, tmp_path, small_cold_scenario, capsys):
        sc = replace(small_cold_scenario,
                     cfg=replace(small_cold_scenario.cfg, fock_cutoff=4))
        cfg_path = tmp_path / "lowcut.ini"
        save_scenario(sc, cfg_path)
        assert main(["verify", "--config", str(cfg_path)]) == 1
        out = capsys.readouterr().out
        assert "cutoff" in out and "[FAIL]" in out

    def test_verify_unknown_check_name(self, capsys):
        assert main(["verify", "--checks", "not_a_check"]) == 2
