import json
from pathlib import Path

import numpy as np
import pytest

from frontlab import cli, problem, runio


@pytest.fixture()
def stefan_cfg(tmp_path):
    path = tmp_path / "stefan.cfg"
    problem.save_config(problem.symmetric_stefan(T=0.1), path)
    return path


def read_tree(root: Path) -> dict[str, bytes]:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_solve_local_writes_outputs(stefan_cfg, tmp_path):
    out = tmp_path / "run"
    code = cli.main(
        ["solve", "--config", str(stefan_cfg), "--solver", "local",
         "--out", str(out), "--nx", "64", "--dt", "5e-4"]
    )
    assert code == 0
    assert (out / "boundary.csv").exists()
    assert (out / "metadata.json").exists()
    snaps = sorted(out.glob("snapshot_*.csv"))
    assert snaps
    t, g, h = runio.read_boundary_csv(out / "boundary.csv")
    assert t[0] == 0.0 and g[0] == -1.0 and h[0] == 1.0
    x, v = runio.read_snapshot_csv(snaps[0])
    assert v.max() == pytest.approx(1.0, abs=1e-12)


def test_solve_invalid_config_exit_2(tmp_path):
    cfg = tmp_path / "flat.cfg"
    cfg.write_text(
        "d = 1\nmu = 1\nh0 = 1\nT = 0.1\n"
        "reaction.family = zero\ninitial.family = quadratic_bump\ninitial.V = 0\n"
    )
    out = tmp_path / "run"
    code = cli.main(["solve", "--config", str(cfg), "--out", str(out)])
    assert code == 2
    err = json.loads((out / "error.json").read_text())
    assert err["code"] == "invalid_config"
    assert "(1.2a)" in err["message"]


def test_solve_nonlocal_coarse_grid_exit_3(stefan_cfg, tmp_path):
    out = tmp_path / "run"
    code = cli.main(
        ["solve", "--config", str(stefan_cfg), "--solver", "nonlocal",
         "--out", str(out), "--eps", "0.1", "--dx", "0.05"]
    )
    assert code == 3
    err = json.loads((out / "error.json").read_text())
    assert err["code"] == "resolution_too_coarse"
    assert set(err) == {"code", "message", "time_of_failure"}


def test_solve_nonlocal_run(stefan_cfg, tmp_path):
    out = tmp_path / "nl"
    code = cli.main(
        ["solve", "--config", str(stefan_cfg), "--solver", "nonlocal",
         "--out", str(out), "--eps", "0.2"]
    )
    assert code == 0
    meta = runio.read_metadata_json(out / "metadata.json")
    assert meta["eps"] == 0.2
    assert meta["variant"] == "modified"
    assert meta["kernel"] == "epanechnikov"
    assert {"dx", "dt", "cfl_sigma"} <= set(meta)


def test_converge_too_few_eps_exit_2(stefan_cfg, tmp_path):
    code = cli.main(
        ["converge", "--config", str(stefan_cfg), "--eps", "0.2", "--eps", "0.1",
         "--out", str(tmp_path / "sweep")]
    )
    assert code == 2


def test_converge_sweep_outputs_and_monotone_errors(stefan_cfg, tmp_path, capsys):
    out = tmp_path / "sweep"
    code = cli.main(
        ["converge", "--config", str(stefan_cfg),
         "--eps", "0.2", "--eps", "0.1", "--eps", "0.05",
         "--out", str(out), "--nx", "256", "--dt", "5e-4", "--dx-ratio", "8"]
    )
    assert code == 0
    data = runio.read_sweep_csv(out / "sweep.csv")
    assert data.shape == (3, 4)
    assert np.all(np.diff(data[:, 1]) < 0.0)  # sup error falls with eps
    from frontlab.analysis import RateFit

    fit = RateFit.from_json((out / "ratefit.json").read_text())
    assert fit.gamma_hat > 0.0
    assert "gamma_hat" in capsys.readouterr().out


def test_converge_deterministic_bytes(stefan_cfg, tmp_path):
    args = ["converge", "--config", str(stefan_cfg),
            "--eps", "0.2", "--eps", "0.1", "--eps", "0.05",
            "--nx", "128", "--dt", "1e-3", "--dx-ratio", "8"]
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert cli.main(args + ["--out", str(out_a)]) == 0
    assert cli.main(args + ["--out", str(out_b)]) == 0
    assert read_tree(out_a) == read_tree(out_b)


def test_converge_parallel_matches_serial(stefan_cfg, tmp_path):
    args = ["converge", "--config", str(stefan_cfg),
            "--eps", "0.2", "--eps", "0.1", "--eps", "0.05",
            "--nx", "128", "--dt", "1e-3", "--dx-ratio", "8"]
    out_serial, out_par = tmp_path / "serial", tmp_path / "par"
    assert cli.main(args + ["--out", str(out_serial)]) == 0
    assert cli.main(args + ["--out", str(out_par), "--jobs", "2"]) == 0
    assert read_tree(out_serial) == read_tree(out_par)


def test_verify_kernel_suite(capsys):
    assert cli.cmd_verify("kernel") == 0
    out = capsys.readouterr().out
    assert "[PASS]" in out and "[FAIL]" not in out


def test_verify_flag_alias(capsys):
    assert cli.main(["--verify", "kernel"]) == 0
    assert "[PASS]" in capsys.readouterr().out


def test_round_trip_csv(tmp_path, stefan_cfg):
    out = tmp_path / "rt"
    assert cli.main(
        ["solve", "--config", str(stefan_cfg), "--solver", "local",
         "--out", str(out), "--nx", "64", "--dt", "1e-3"]
    ) == 0
    t, g, h = runio.read_boundary_csv(out / "boundary.csv")
    path2 = tmp_path / "again.csv"

    class Carrier:
        boundary_times, boundary_g, boundary_h = t, g, h

    runio.write_boundary_csv(Carrier, path2)
    assert (out / "boundary.csv").read_bytes() == path2.read_bytes()
