import numpy as np
import pytest

from bundle_newton.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    ConfigError,
    RunConfig,
    main,
    parse_config_file,
    run,
)


def read_csv(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    rows = [[float(x) for x in line.split(",")] for line in lines[1:]]
    return header, np.array(rows)


def test_geodesic_run_artifacts(tmp_path):
    out = tmp_path / "g"
    code = main(["geodesic-force", "--n", "30", "--out-dir", str(out)])
    assert code == EXIT_OK
    header, rows = read_csv(out / "iterates.csv")
    assert header == [
        "outer_iter",
        "norm_dx_inf",
        "accepted_alpha",
        "inner_trials",
        "theta_final",
        "residual_inf",
    ]
    assert rows[-1, 1] <= 1e-10  # final norm_dx_inf
    curve_header, curve = read_csv(out / "curve.csv")
    assert curve_header == ["t", "x", "y", "z"]
    assert curve.shape == (32, 4)
    assert np.abs(np.linalg.norm(curve[:, 1:], axis=1) - 1.0).max() < 1e-12
    meta = (out / "meta.txt").read_text()
    assert "result_status = converged" in meta
    assert "\r" not in meta and "\r" not in (out / "iterates.csv").read_text()


def test_geodesic_reference_run_full_steps(tmp_path):
    # the documented reference run: converges with full steps in few rows
    out = tmp_path / "g100"
    assert main(["geodesic-force", "--n", "100", "--out-dir", str(out)]) == EXIT_OK
    _, rows = read_csv(out / "iterates.csv")
    assert rows.shape[0] <= 8
    assert rows[-1, 1] <= 1e-10
    assert np.all(rows[:, 2] == 1.0)  # accepted_alpha


def test_geodesic_run_deterministic(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["geodesic-force", "--n", "25", "--out-dir", str(out1)]) == EXIT_OK
    assert main(["geodesic-force", "--n", "25", "--out-dir", str(out2)]) == EXIT_OK
    assert (out1 / "iterates.csv").read_text() == (out2 / "iterates.csv").read_text()
    assert (out1 / "curve.csv").read_text() == (out2 / "curve.csv").read_text()


def test_meta_round_trip_reproduces_trace(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["obstacle", "--n", "25", "--h-ref", "0.2", "--out-dir", str(out1)]) == EXIT_OK
    assert (
        main(["obstacle", "--config", str(out1 / "meta.txt"), "--out-dir", str(out2)])
        == EXIT_OK
    )
    assert (out1 / "iterates.csv").read_text() == (out2 / "iterates.csv").read_text()
    assert (out1 / "curve.csv").read_text() == (out2 / "curve.csv").read_text()


def test_numbers_round_trip_losslessly(tmp_path):
    out = tmp_path / "g"
    assert main(["geodesic-force", "--n", "20", "--out-dir", str(out)]) == EXIT_OK
    # 17 significant digits: parsing and re-formatting is the identity
    for line in (out / "curve.csv").read_text().splitlines()[1:3]:
        for token in line.split(","):
            assert format(float(token), ".17g") == token


def test_obstacle_meta_records_penalty(tmp_path):
    out = tmp_path / "o"
    assert main(["obstacle", "--n", "20", "--h-ref", "0.2", "--out-dir", str(out)]) == EXIT_OK
    meta = dict(
        line.split(" = ", 1) for line in (out / "meta.txt").read_text().splitlines()
    )
    assert float(meta["result_final_p"]) > 1.0
    assert float(meta["result_violation"]) <= float(meta["violation_tol"])
    assert int(meta["result_stage_count"]) >= 1


def test_rod_curve_columns(tmp_path):
    out = tmp_path / "r"
    assert main(["rod", "--n", "15", "--out-dir", str(out)]) == EXIT_OK
    header, rows = read_csv(out / "curve.csv")
    assert header == ["t", "x", "y", "z", "vx", "vy", "vz", "lx", "ly", "lz"]
    assert rows.shape == (17, 10)
    # the multiplier of the first interval is repeated at node zero
    assert np.array_equal(rows[0, 7:], rows[1, 7:])
    # alpha column: damped early, full step at the end
    _, iters = read_csv(out / "iterates.csv")
    alphas = iters[:, 2]
    assert alphas[0] < 1.0 and alphas[-1] == 1.0


def test_unknown_problem_is_config_error(capsys):
    # argparse rejects the positional before our validation, so call run()
    with pytest.raises(ConfigError):
        run(RunConfig(problem="nonsense"))


def test_bad_flag_value_exits_with_config_code(tmp_path):
    assert main(["geodesic-force", "--n", "0", "--out-dir", str(tmp_path)]) == EXIT_CONFIG
    assert main(["obstacle", "--h-ref", "1.5", "--out-dir", str(tmp_path)]) == EXIT_CONFIG
    assert (
        main(["geodesic-force", "--gamma0", "1,2", "--out-dir", str(tmp_path)])
        == EXIT_CONFIG
    )


def test_config_file_unknown_key_rejected(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("n = 10\nwibble = 3\n")
    assert main(["geodesic-force", "--config", str(cfg)]) == EXIT_CONFIG


def test_config_file_parsing(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# comment line\n"
        "n = 12\n"
        "tol = 1e-9\n"
        "gamma0 = 0.8,0,0.6\n"
        "result_status = converged\n"  # result keys are ignored
    )
    values = parse_config_file(cfg)
    assert values == {"n": 12, "tol": 1e-9, "gamma0": (0.8, 0.0, 0.6)}


def test_flags_override_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n = 12\n")
    out = tmp_path / "out"
    assert (
        main(
            [
                "geodesic-force",
                "--config",
                str(cfg),
                "--n",
                "8",
                "--out-dir",
                str(out),
            ]
        )
        == EXIT_OK
    )
    meta = (out / "meta.txt").read_text()
    assert "n = 8" in meta.splitlines()[1]
