import struct

import numpy as np
import pytest

from qnslab import (
    BadMagic,
    ConfigError,
    RunConfig,
    Truncated,
    VersionMismatch,
    parse_config,
    read_csv_columns,
    read_snapshot,
    run_single,
    run_sweep,
    write_csv,
    write_snapshot,
)
from qnslab.cli import main as cli_main
from qnslab.harness import build_initial_data
from qnslab.qnsio import CSV_HEADER


# ---------------------------------------------------------------- config


def test_parse_minimal_config():
    cfg = parse_config("gamma = 2\nepsilon = 0.1\n")
    assert cfg.grid_n == 64
    assert cfg.t_end == 0.5
    assert cfg.dt_policy == "auto"
    assert cfg.eta == 0.0
    assert cfg.record_every == 10
    assert cfg.params().rate == pytest.approx(0.5)


def test_parse_gamma_three_derived_exponents():
    cfg = parse_config("gamma = 3\nepsilon = 0.1")
    assert cfg.params().rate == pytest.approx(1 / 3)
    assert cfg.params().lam == 2.0


def test_parse_ladder():
    cfg = parse_config("epsilon_ladder = 0.2,0.1,0.05,0.025\n")
    assert cfg.epsilon_ladder == [0.2, 0.1, 0.05, 0.025]


def test_parse_comments_and_blank_lines():
    cfg = parse_config("# leading comment\n\ngamma = 2.5  # inline\nepsilon = 0.2\n")
    assert cfg.gamma == 2.5


def test_parse_unknown_key_reports_line():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("epsilon = 0.1\nmach = 3\n")


def test_parse_duplicate_key():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("epsilon = 0.1\nepsilon = 0.2\n")


def test_parse_type_mismatch():
    with pytest.raises(ConfigError, match="grid_n"):
        parse_config("epsilon = 0.1\ngrid_n = sixty-four\n")
    with pytest.raises(ConfigError, match="grid_n"):
        parse_config("epsilon = 0.1\ngrid_n = 64.5\n")


def test_parse_missing_epsilon():
    with pytest.raises(ConfigError, match="epsilon"):
        parse_config("gamma = 2\n")


def test_parse_non_decreasing_ladder():
    with pytest.raises(ConfigError, match="decreasing"):
        parse_config("epsilon_ladder = 0.1,0.2,0.3\n")


def test_parse_profiles_and_dt_policy(tmp_path):
    cfg = parse_config("epsilon = 0.1\ninitial_profile = SINE_DENSITY(0.5)\n")
    assert cfg.initial_profile == "sine_density"
    assert cfg.profile_amplitude == 0.5

    cfg = parse_config("epsilon = 0.1\ndt_policy = FIXED(0.001)\n")
    assert cfg.dt_policy == "fixed"
    assert cfg.dt_fixed == 0.001

    with pytest.raises(ConfigError, match="dt_policy"):
        parse_config("epsilon = 0.1\ndt_policy = adaptive\n")
    with pytest.raises(ConfigError, match="initial_profile"):
        parse_config("epsilon = 0.1\ninitial_profile = whirl(2)\n")


def test_profile_reference_is_consistent(grid32):
    from qnslab import helmholtz_project, norm, vector_field

    cfg = RunConfig(grid_n=32, epsilon=0.1, initial_profile="sine_density",
                    profile_amplitude=0.5)
    data, ref = build_initial_data(cfg, grid32)
    p_part, _ = helmholtz_project(data.u_0)
    gap = vector_field(
        grid32, p_part.x.values - ref.v.x.values, p_part.y.values - ref.v.y.values
    )
    assert norm(gap, 2, 0) < 1e-10


# ---------------------------------------------------------------- snapshots


def test_snapshot_round_trip_bitwise(tmp_path, rng):
    fields = {
        "n1_0": rng.standard_normal((32, 32)),
        "u0_x": rng.standard_normal((32, 32)),
        "u0_y": rng.standard_normal((32, 32)),
    }
    path = tmp_path / "state.qnsf"
    write_snapshot(fields, path)
    grid_n, back = read_snapshot(path)
    assert grid_n == 32
    assert list(back) == list(fields)
    for name in fields:
        assert np.array_equal(back[name], fields[name])
        assert back[name].dtype == np.float64


def test_snapshot_bad_magic(tmp_path):
    path = tmp_path / "bad.qnsf"
    path.write_bytes(b"XXXX" + b"\x00" * 32)
    with pytest.raises(BadMagic, match="BAD_MAGIC"):
        read_snapshot(path)


def test_snapshot_version_mismatch(tmp_path, rng):
    path = tmp_path / "v2.qnsf"
    write_snapshot({"f": rng.standard_normal((8, 8))}, path)
    raw = bytearray(path.read_bytes())
    raw[4:6] = struct.pack("<H", 2)
    path.write_bytes(bytes(raw))
    with pytest.raises(VersionMismatch, match="VERSION_MISMATCH"):
        read_snapshot(path)


def test_snapshot_truncated(tmp_path, rng):
    path = tmp_path / "cut.qnsf"
    write_snapshot({"f": rng.standard_normal((8, 8))}, path)
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) - 17])
    with pytest.raises(Truncated, match="TRUNCATED"):
        read_snapshot(path)


# ---------------------------------------------------------------- CSV


def test_csv_empty_and_single_row(tmp_path):
    path = tmp_path / "empty.csv"
    write_csv([], path)
    assert path.read_text() == CSV_HEADER + "\n"

    row = (0.0, 1.0, 0.25, 0.25, 0.5, 1.0, 2.0, 3.0, 10.0, 0.0)
    write_csv([row], tmp_path / "one.csv")
    lines = (tmp_path / "one.csv").read_text().splitlines()
    assert len(lines) == 2


def test_csv_round_trip_full_precision(tmp_path, rng):
    rows = [
        tuple([float(t)] + list(rng.standard_normal(9) * 10.0 ** rng.integers(-8, 8)))
        for t in range(5)
    ]
    path = tmp_path / "prec.csv"
    write_csv(rows, path)
    header, cols = read_csv_columns(path)
    assert header == CSV_HEADER.split(",")
    for j, name in enumerate(header):
        got = [cols[name][i] for i in range(5)]
        expected = [rows[i][j] for i in range(5)]
        assert got == expected  # bit-exact through 17 significant digits


def test_csv_lf_endings_and_order(tmp_path):
    rows = [(1.0,) + (0.0,) * 9, (0.5,) + (0.0,) * 9]
    path = tmp_path / "order.csv"
    write_csv(rows, path)
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert float(lines[1].split(",")[0]) == 0.5  # sorted by t


def test_csv_aborted_sentinel(tmp_path):
    path = tmp_path / "abort.csv"
    write_csv([(0.0,) + (1.0,) * 9], path, aborted="VacuumError: min n below floor")
    lines = path.read_text().splitlines()
    assert lines[-1].startswith("ABORTED,")
    header, cols = read_csv_columns(path)  # sentinel row skipped cleanly
    assert len(cols[header[0]]) == 1


# ---------------------------------------------------------------- runs


def test_run_single_rest_profile_entropy_stays_zero(tmp_path):
    cfg = RunConfig(grid_n=32, epsilon=0.1, t_end=0.05, initial_profile="rest",
                    record_every=2, output_dir=str(tmp_path))
    res = run_single(cfg, csv_path=tmp_path / "d.csv")
    assert res.aborted is None
    assert all(abs(r.rel_entropy) < 1e-12 for r in res.reports)
    assert res.energy_ok


def test_run_single_is_deterministic(tmp_path):
    cfg = RunConfig(grid_n=32, epsilon=0.1, t_end=0.04,
                    initial_profile="sine_density", profile_amplitude=0.5,
                    record_every=3, output_dir=str(tmp_path))
    run_single(cfg, csv_path=tmp_path / "a.csv")
    run_single(cfg, csv_path=tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.qnsf").read_bytes() == (tmp_path / "b.qnsf").read_bytes()


def test_run_single_terminal_snapshot_chains(tmp_path):
    cfg = RunConfig(grid_n=32, epsilon=0.1, t_end=0.02,
                    initial_profile="sine_density", profile_amplitude=0.3,
                    record_every=5, output_dir=str(tmp_path))
    run_single(cfg, csv_path=tmp_path / "first.csv")
    chained = RunConfig(grid_n=32, epsilon=0.1, t_end=0.02,
                        initial_profile="from_snapshot",
                        snapshot_path=str(tmp_path / "first.qnsf"),
                        record_every=5, output_dir=str(tmp_path))
    res = run_single(chained, csv_path=tmp_path / "second.csv")
    assert res.aborted is None


def test_run_single_with_mollified_acoustic_data(tmp_path):
    cfg = RunConfig(grid_n=32, epsilon=0.1, t_end=0.03, eta=0.2,
                    initial_profile="sine_density", profile_amplitude=0.5,
                    record_every=2, output_dir=str(tmp_path))
    res = run_single(cfg)
    assert res.aborted is None
    # mollified acoustic data no longer matches the solver data exactly,
    # so the entropy starts positive
    assert res.reports[0].rel_entropy > 1e-6


def test_run_single_from_snapshot_profile(tmp_path, grid32, rng):
    from qnslab import random_band_limited

    n1 = random_band_limited(grid32, 3, rng, 0.2).values
    u0x = random_band_limited(grid32, 3, rng, 0.3).values
    u0y = random_band_limited(grid32, 3, rng, 0.3).values
    snap = tmp_path / "init.qnsf"
    write_snapshot({"n1_0": n1, "u0_x": u0x, "u0_y": u0y}, snap)
    cfg = RunConfig(grid_n=32, epsilon=0.1, t_end=0.02,
                    initial_profile="from_snapshot", snapshot_path=str(snap),
                    record_every=5, output_dir=str(tmp_path))
    res = run_single(cfg, csv_path=tmp_path / "snap_run.csv")
    assert res.aborted is None


def test_run_single_abort_flushes_sentinel_csv(tmp_path):
    # a fixed step far above the stability bound is refused on step one;
    # the partial series is flushed with the sentinel row appended
    cfg = RunConfig(grid_n=32, epsilon=0.1, t_end=0.1, dt_policy="fixed",
                    dt_fixed=1.0, initial_profile="sine_density",
                    profile_amplitude=0.5, output_dir=str(tmp_path))
    res = run_single(cfg, csv_path=tmp_path / "abort.csv")
    assert res.aborted is not None and "CflViolation" in res.aborted
    lines = (tmp_path / "abort.csv").read_text().splitlines()
    assert lines[-1].startswith("ABORTED,")
    assert len(lines) == 3  # header, t=0 row, sentinel
    assert not (tmp_path / "abort.qnsf").exists()


def test_cli_numerical_abort_exit_code(tmp_path):
    cfgfile = tmp_path / "abort.cfg"
    cfgfile.write_text(
        "epsilon = 0.1\nt_end = 0.1\ngrid_n = 32\ndt_policy = fixed(1.0)\n"
        "initial_profile = sine_density(0.5)\n"
        f"output_dir = {tmp_path / 'out'}\n"
    )
    assert cli_main(["run", "--config", str(cfgfile)]) == 3


def test_cli_output_override(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text(
        "epsilon = 0.1\nt_end = 0.02\ngrid_n = 32\nrecord_every = 2\n"
        f"output_dir = {tmp_path / 'ignored'}\n"
    )
    override = tmp_path / "elsewhere"
    assert cli_main(["run", "--config", str(cfgfile), "--output", str(override)]) == 0
    assert (override / "diagnostics.csv").exists()
    assert not (tmp_path / "ignored").exists()


def test_sweep_synthetic_plumbing(tmp_path):
    cfg = RunConfig(grid_n=32, gamma=2.0, epsilon_ladder=[0.2, 0.1, 0.05, 0.025],
                    t_end=0.1, output_dir=str(tmp_path))
    result = run_sweep(cfg, synthetic=True)
    for fit in result.fits.values():
        assert fit.slope == pytest.approx(0.5, abs=1e-12)
    assert all(result.rate_verdicts.values())
    assert (tmp_path / "sweep_summary.csv").exists()


def test_sweep_with_aborted_runs_is_failed_but_reports(tmp_path):
    cfg = RunConfig(grid_n=32, epsilon_ladder=[0.2, 0.1, 0.05], t_end=0.1,
                    dt_policy="fixed", dt_fixed=1.0,  # refused at step one
                    initial_profile="sine_density", profile_amplitude=0.5,
                    output_dir=str(tmp_path))
    result = run_sweep(cfg)
    assert result.failed
    assert result.fits == {}
    assert len(result.runs) == len(cfg.epsilon_ladder)
    assert (tmp_path / "sweep_summary.csv").exists()
    for eps in cfg.epsilon_ladder:
        lines = (tmp_path / f"run_eps_{eps:g}.csv").read_text().splitlines()
        assert lines[-1].startswith("ABORTED,")


def test_sweep_rejects_short_ladder(tmp_path):
    cfg = RunConfig(grid_n=32, epsilon_ladder=[0.2, 0.1], t_end=0.1,
                    output_dir=str(tmp_path))
    with pytest.raises(ConfigError, match="length >= 3"):
        run_sweep(cfg)


def test_sweep_serial_matches_parallel(tmp_path):
    def go(threads, sub):
        out = tmp_path / sub
        cfg = RunConfig(grid_n=32, epsilon_ladder=[0.2, 0.1, 0.05], t_end=0.03,
                        initial_profile="sine_density", profile_amplitude=0.5,
                        record_every=2, output_dir=str(out))
        run_sweep(cfg, threads=threads)
        return {p.name: p.read_bytes() for p in sorted(out.iterdir())}

    assert go(1, "serial") == go(3, "parallel")


# ---------------------------------------------------------------- CLI


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("epsilon = 0.1\nwhat = 1\n")
    assert cli_main(["run", "--config", str(bad)]) == 2
    assert "unknown key" in capsys.readouterr().err


def test_cli_missing_config_is_io_error(tmp_path):
    assert cli_main(["run", "--config", str(tmp_path / "nope.cfg")]) == 4


def test_cli_run_and_rate_fit(tmp_path, capsys):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text(
        "epsilon = 0.1\nt_end = 0.04\ngrid_n = 32\n"
        "initial_profile = sine_density(0.5)\nrecord_every = 2\n"
        f"output_dir = {tmp_path / 'out'}\n"
    )
    assert cli_main(["run", "--config", str(cfgfile)]) == 0
    out = capsys.readouterr().out
    assert "energy inequality: PASS" in out

    sweep_cfg = tmp_path / "sweep.cfg"
    sweep_cfg.write_text(
        "epsilon_ladder = 0.2,0.1,0.05,0.025\ngrid_n = 32\nt_end = 0.1\n"
        f"output_dir = {tmp_path / 'sw'}\n"
    )
    assert cli_main(["sweep", "--config", str(sweep_cfg), "--synthetic"]) == 0
    assert cli_main(["rate-fit", str(tmp_path / "sw" / "sweep_summary.csv")]) == 0
    out = capsys.readouterr().out
    assert "slope = +0.5000" in out


def test_cli_rate_fit_missing_file():
    assert cli_main(["rate-fit", "/nonexistent/file.csv"]) == 4


def test_cli_bohm_check_small(capsys):
    # the battery's tolerance is calibrated at the default N = 128 (the
    # sqrt tail beyond the 2/3 cutoff shrinks with resolution)
    assert cli_main(["bohm-check", "--fields", "2"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_cli_threads_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("QNS_THREADS", "2")
    sweep_cfg = tmp_path / "sweep.cfg"
    sweep_cfg.write_text(
        "epsilon_ladder = 0.2,0.1,0.05\ngrid_n = 32\nt_end = 0.02\n"
        "initial_profile = sine_density(0.3)\n"
        f"output_dir = {tmp_path / 'sw'}\n"
    )
    assert cli_main(["sweep", "--config", str(sweep_cfg)]) == 0
