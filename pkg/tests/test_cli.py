"""Command-line surfaces: config parsing, subcommands, CSV contract."""

import subprocess
import sys
from pathlib import Path

import pytest

from fdrelay.cli import (
    ConfigError,
    build_curve,
    fit_high_snr_slope,
    main,
    parse_run_config,
)


def write_config(tmp_path, name="run.cfg", **overrides):
    base = {
        "n_s": 2, "n_r1": 3, "n_r2": 2, "n_d": 1, "mode": "receive",
        "gamma_t_db": 10, "grid_start_db": 0, "grid_stop_db": 30,
        "grid_step_db": 5, "trials": 0, "seed": 9,
        "out_csv": str(tmp_path / "out.csv"),
    }
    base.update(overrides)
    lines = [f"{k} = {v}" for k, v in base.items() if v is not None]
    path = tmp_path / name
    path.write_text("# generated by the test suite\n" + "\n".join(lines) + "\n")
    return path


def read_csv(path):
    lines = Path(path).read_text().strip().splitlines()
    header, rows = lines[0], [ln.split(",") for ln in lines[1:]]
    return header, rows


# -- config parsing ------------------------------------------------------------


def test_parse_round_trip(tmp_path):
    cfg = parse_run_config(write_config(tmp_path, asymmetry="rd_dominant",
                                        asymmetry_ratio=1.5))
    assert cfg.antenna.n_r1 == 3
    assert cfg.grid_db == (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    assert cfg.query.snr_threshold() == pytest.approx(10.0)
    a_sr, a_rd = cfg.resolved_alphas()
    assert a_sr == 1.0 and a_rd == pytest.approx(1.5 ** 0.5)


def test_parse_rejects_unknown_key(tmp_path):
    path = write_config(tmp_path)
    path.write_text(path.read_text() + "bogus_key = 3\n")
    with pytest.raises(ConfigError):
        parse_run_config(path)


def test_parse_rejects_both_thresholds(tmp_path):
    with pytest.raises(ConfigError):
        parse_run_config(write_config(tmp_path, rate_r0=2))


def test_parse_rejects_missing_threshold(tmp_path):
    with pytest.raises(ConfigError):
        parse_run_config(write_config(tmp_path, gamma_t_db=None))


def test_parse_rejects_bad_grid(tmp_path):
    with pytest.raises(ConfigError):
        parse_run_config(write_config(tmp_path, grid_step_db=-5))


def test_parse_rejects_asymmetry_without_ratio(tmp_path):
    with pytest.raises(ConfigError):
        parse_run_config(write_config(tmp_path, asymmetry="sr_dominant"))


def test_parse_missing_file():
    with pytest.raises(ConfigError):
        parse_run_config("/nonexistent/run.cfg")


# -- coeffs subcommand -----------------------------------------------------------


def test_coeffs_writes_cache_and_reports_sum(tmp_path, capsys):
    cache = tmp_path / "cache"
    assert main(["coeffs", "2x2", "2x3", "--cache-dir", str(cache)]) == 0
    out = capsys.readouterr().out
    assert out.count("sum = 1") == 2
    assert (cache / "coeff_a2_b2.txt").exists()
    assert (cache / "coeff_a2_b3.txt").exists()
    # second invocation hits the cache
    assert main(["coeffs", "2x2", "--cache-dir", str(cache)]) == 0
    assert "cached" in capsys.readouterr().out


def test_coeffs_rejects_degenerate_dims(tmp_path, capsys):
    assert main(["coeffs", "0x2", "--cache-dir", str(tmp_path)]) == 2


def test_coeffs_requires_cache_dir(monkeypatch, capsys):
    monkeypatch.delenv("FDRELAY_CACHE_DIR", raising=False)
    assert main(["coeffs", "2x2"]) == 2


def test_coeffs_cache_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("FDRELAY_CACHE_DIR", str(tmp_path / "envcache"))
    assert main(["coeffs", "1x2"]) == 0
    assert (tmp_path / "envcache" / "coeff_a1_b2.txt").exists()


def test_usage_error_exit_code():
    assert main([]) == 2
    assert main(["no-such-command"]) == 2


# -- sweep subcommand --------------------------------------------------------------


def test_sweep_analytic_only(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["sweep", "--config", str(cfg)]) == 0
    header, rows = read_csv(tmp_path / "out.csv")
    assert header == "gammabar_db,analytic,mc,ci_low,ci_high"
    assert len(rows) == 7
    analytic = [float(r[1]) for r in rows]
    assert all(b < a for a, b in zip(analytic, analytic[1:]))
    assert all(r[2] == "" and r[3] == "" and r[4] == "" for r in rows)


def test_sweep_with_trials_fills_mc_columns(tmp_path):
    cfg = write_config(tmp_path, trials=5000, grid_stop_db=10)
    assert main(["sweep", "--config", str(cfg)]) == 0
    _, rows = read_csv(tmp_path / "out.csv")
    for r in rows:
        mc, lo, hi = float(r[2]), float(r[3]), float(r[4])
        assert 0.0 <= lo <= mc <= hi <= 1.0


def test_sweep_byte_identical_reruns(tmp_path):
    cfg = write_config(tmp_path, trials=2000, grid_stop_db=10)
    assert main(["sweep", "--config", str(cfg)]) == 0
    first = (tmp_path / "out.csv").read_bytes()
    assert main(["sweep", "--config", str(cfg)]) == 0
    assert (tmp_path / "out.csv").read_bytes() == first


def test_sweep_rate_threshold_equivalent(tmp_path):
    # R0 = 1 bit/s/Hz <=> threshold 2^1 - 1 = 1 = 0 dB, exactly representable
    snr_cfg = write_config(tmp_path, name="snr.cfg", gamma_t_db=0,
                           out_csv=str(tmp_path / "snr.csv"))
    rate_cfg = write_config(tmp_path, name="rate.cfg", gamma_t_db=None, rate_r0=1,
                            out_csv=str(tmp_path / "rate.csv"))
    assert main(["sweep", "--config", str(snr_cfg)]) == 0
    assert main(["sweep", "--config", str(rate_cfg)]) == 0
    assert (tmp_path / "snr.csv").read_bytes() == (tmp_path / "rate.csv").read_bytes()


def test_sweep_asymmetric_budget_changes_curve(tmp_path):
    sym = write_config(tmp_path, name="sym.cfg", out_csv=str(tmp_path / "sym.csv"))
    asym = write_config(tmp_path, name="asym.cfg", out_csv=str(tmp_path / "asym.csv"),
                        asymmetry="rd_dominant", asymmetry_ratio=1.5)
    assert main(["sweep", "--config", str(sym)]) == 0
    assert main(["sweep", "--config", str(asym)]) == 0
    _, sym_rows = read_csv(tmp_path / "sym.csv")
    _, asym_rows = read_csv(tmp_path / "asym.csv")
    assert [r[1] for r in sym_rows] != [r[1] for r in asym_rows]


def test_sweep_requires_out_csv(tmp_path):
    cfg = write_config(tmp_path, out_csv=None)
    assert main(["sweep", "--config", str(cfg)]) == 2


def test_sweep_missing_config_file():
    assert main(["sweep", "--config", "/nonexistent/run.cfg"]) == 2


def test_sweep_rejects_unknown_fault(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["sweep", "--config", str(cfg), "--inject-fault", "bogus"]) == 2


def test_sweep_uses_cache_dir(tmp_path):
    cfg = write_config(tmp_path)
    cache = tmp_path / "cache"
    assert main(["sweep", "--config", str(cfg), "--cache-dir", str(cache)]) == 0
    assert (cache / "coeff_a2_b2.txt").exists()
    assert (cache / "coeff_a1_b2.txt").exists()


# -- compare subcommand ----------------------------------------------------------------


def test_compare_agrees_with_healthy_pipeline(tmp_path, capsys):
    cfg = write_config(tmp_path, trials=20_000, seed=4, grid_stop_db=15)
    assert main(["compare", "--config", str(cfg)]) == 0
    assert "max |z|" in capsys.readouterr().out


def test_compare_detects_injected_fault(tmp_path, capsys):
    cfg = write_config(tmp_path, trials=20_000, seed=4, grid_stop_db=15)
    assert main(["compare", "--config", str(cfg), "--inject-fault", "wrong-dims"]) == 1


def test_compare_warns_when_underpowered(tmp_path, capsys):
    cfg = write_config(tmp_path, trials=1000, seed=12, grid_stop_db=10)
    main(["compare", "--config", str(cfg)])
    assert "underpowered" in capsys.readouterr().err


def test_compare_requires_trials(tmp_path):
    cfg = write_config(tmp_path, trials=0)
    assert main(["compare", "--config", str(cfg)]) == 2


def test_compare_trials_and_seed_overrides(tmp_path, capsys):
    cfg = write_config(tmp_path, trials=0, grid_stop_db=10)
    assert main(["compare", "--config", str(cfg), "--trials", "15000",
                 "--seed", "99"]) == 0


# -- diversity subcommand -----------------------------------------------------------------


def test_diversity_slope_check_passes(tmp_path, capsys):
    cfg = write_config(tmp_path, grid_start_db=25, grid_stop_db=40, grid_step_db=2.5)
    assert main(["diversity", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "predicted order 2" in out and "PASS" in out


def test_diversity_same_order_configs(tmp_path, capsys):
    for antennas in ((2, 3, 2, 2), (2, 3, 2, 3)):
        n_s, n_r1, n_r2, n_d = antennas
        cfg = write_config(tmp_path, name=f"d{n_d}.cfg", n_s=n_s, n_r1=n_r1,
                           n_r2=n_r2, n_d=n_d, grid_start_db=25,
                           grid_stop_db=40, grid_step_db=2.5)
        assert main(["diversity", "--config", str(cfg)]) == 0
        assert "predicted order 4" in capsys.readouterr().out


def test_diversity_needs_wide_grid(tmp_path):
    cfg = write_config(tmp_path, grid_start_db=0, grid_stop_db=5)
    assert main(["diversity", "--config", str(cfg)]) == 2


# -- curve internals ------------------------------------------------------------------------


def test_curve_slope_estimates(tmp_path):
    run = parse_run_config(write_config(tmp_path, grid_start_db=25,
                                        grid_stop_db=40, grid_step_db=2.5))
    curve = build_curve(run)
    assert curve.rows[0].slope_estimate is None
    assert curve.rows[-1].slope_estimate == pytest.approx(-2.0, abs=0.3)
    assert fit_high_snr_slope(curve) == pytest.approx(-2.0, abs=0.3)


def test_antenna_swap_comparison(tmp_path):
    # same total antenna count, swapped source/relay-rx roles
    swap = parse_run_config(write_config(
        tmp_path, name="a.cfg", n_s=3, n_r1=2, n_r2=2, n_d=2,
        grid_start_db=20, grid_stop_db=30, grid_step_db=5))
    orig = parse_run_config(write_config(
        tmp_path, name="b.cfg", n_s=2, n_r1=3, n_r2=2, n_d=2,
        grid_start_db=20, grid_stop_db=30, grid_step_db=5))
    for r_swap, r_orig in zip(build_curve(swap).rows, build_curve(orig).rows):
        assert r_orig.analytic < r_swap.analytic


# -- installed entry point ---------------------------------------------------------------------


def test_module_entry_point(tmp_path):
    result = subprocess.run(
        [sys.executable, "-m", "fdrelay", "coeffs", "2x2",
         "--cache-dir", str(tmp_path)],
        capture_output=True, text=True, timeout=120,
    )
    assert result.returncode == 0
    assert "sum = 1" in result.stdout
