import json

import numpy as np
import pytest

from gmmbounds.cli import main
from gmmbounds.io import DataError, load_dataset, load_panel, save_dataset
from gmmbounds.simulate import DgpSpec, simulate_dataset


def write(path, text):
    path.write_text(text)
    return path


def test_load_three_rows(tmp_path):
    p = write(tmp_path / "d.csv", "# note\ns,y,x\n1,0.5,0.2\n0,0.3,\n1,1.5,0.9\n")
    ds = load_dataset(p, ["y"], ["x"])
    assert ds.n == 3 and ds.p_hat == pytest.approx(2 / 3)
    np.testing.assert_array_equal(ds.z2[:, 0], [0.2, 0.0, 0.9])


def test_prefix_columns(tmp_path):
    p = write(tmp_path / "d.csv", "s,z1_1,z2_1,z2_2\n1,0.5,0.2,1\n0,0.3,,\n")
    ds = load_dataset(p)
    assert ds.z1.shape == (2, 1) and ds.z2.shape == (2, 2)


@pytest.mark.parametrize(
    "body, message",
    [
        ("s,y,x\n1,0.5,0.2\n0,0.3,0.4\n", "row 2.*must be empty"),
        ("s,y,x\n1,0.5,\n", "row 1.*empty"),
        ("s,y,x\n2,0.5,0.1\n", "row 1.*0 or 1"),
        ("s,y,x\n1,nan,0.1\n", "row 1.*NaN"),
        ("s,y,x\n1,0.5,abc\n", "row 1.*not a number"),
        ("y,x\n0.5,0.1\n", "selection column"),
        ("s,y\n1,0.5\n", "missing columns"),
    ],
)
def test_load_errors(tmp_path, body, message):
    p = write(tmp_path / "d.csv", body)
    with pytest.raises(DataError, match=message):
        load_dataset(p, ["y"], ["x"])


def test_panel_loading(tmp_path):
    p = write(tmp_path / "p.csv", "s2,s3,z1_1,z2_1,z3_1\n1,1,0,0.5,0.2\n1,0,0,0.4,\n0,0,0,,\n")
    ds = load_panel(p)
    assert ds.n == 3 and ds.p3 == pytest.approx(1 / 3)
    p = write(tmp_path / "q.csv", "s2,s3,z2_1,z3_1\n1,1,0.5,0.2\n0,1,,0.4\n")
    with pytest.raises(DataError, match="row 2.*monotone"):
        load_panel(p)


def test_save_load_round_trip(tmp_path):
    ds = simulate_dataset(DgpSpec(n=40, seed=1))
    save_dataset(ds, tmp_path / "d.csv", ["y"], ["x"], "hdr")
    back = load_dataset(tmp_path / "d.csv", ["y"], ["x"])
    np.testing.assert_array_equal(back.z1, ds.z1)
    np.testing.assert_array_equal(back.z2, ds.z2)
    np.testing.assert_array_equal(back.s, ds.s)


def test_cli_test_json(tmp_path, capsys):
    ds = simulate_dataset(DgpSpec(n=300, seed=2))
    save_dataset(ds, tmp_path / "d.csv", ["y"], ["x"])
    out = tmp_path / "out"
    code = main(["test", "--data", str(tmp_path / "d.csv"), "--theta0", "0.5,1.0", "--alpha", "0.05",
                 "--B", "50", "--m", "120", "--output-dir", str(out)])
    assert code == 0
    res = json.loads(capsys.readouterr().out)
    for key in ("t_stat", "critical_value", "reject", "alpha", "B", "epsilon", "seed"):
        assert key in res
    saved = json.loads((out / "test.json").read_text())
    assert list(saved)[0] == "config_sha256"


def test_cli_scripting_exit_codes(tmp_path):
    args = ["test", "--n", "300", "--B", "50", "--m", "120", "--scripting", "--output-dir", str(tmp_path)]
    assert main(args + ["--theta0", "0.1,0.1"]) == 1
    assert main(args + ["--theta0", "0.5,1.0"]) == 0


def test_cli_usage_errors(tmp_path, capsys):
    assert main(["test", "--model", "nope", "--n", "10", "--theta0", "1", "--output-dir", str(tmp_path)]) == 2
    assert main(["test", "--n", "10", "--output-dir", str(tmp_path)]) == 2
    assert main(["estimate-set", "--output-dir", str(tmp_path)]) == 2
    bad = write(tmp_path / "bad.csv", "s,y,x\n0,0.3,0.4\n")
    assert main(["estimate-set", "--data", str(bad), "--output-dir", str(tmp_path)]) == 2
    assert "row 1" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 2


def test_cli_config_file_and_overrides(tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dgp": {"n": 200}, "grid_resolution": 11, "m": 72}))
    monkeypatch.setenv("GMMBOUNDS_OUTPUT_DIR", str(tmp_path / "env-out"))
    assert main(["estimate-set", "--config", str(cfg), "--grid-resolution", "6"]) == 0
    lines = (tmp_path / "env-out" / "set.csv").read_text().splitlines()
    assert lines[0].startswith("# config_sha256=")
    assert len(lines) == 2 + 36
    cfg.write_text(json.dumps({"bogus_key": 1}))
    assert main(["estimate-set", "--config", str(cfg)]) == 2


def test_cli_confidence_region_files(tmp_path):
    out = tmp_path / "o"
    code = main(["confidence-region", "--n", "200", "--alphas", "0.9,0.05", "--B", "20", "--m", "60",
                 "--grid-resolution", "5", "--output-dir", str(out)])
    assert code == 0
    for name in ("cr_0.1.csv", "cr_0.95.csv"):
        lines = (out / name).read_text().splitlines()
        assert lines[0].startswith("# config_sha256=")
        assert lines[1] == "theta_1,theta_2,t_stat,critical_value,accepted"


def test_cli_verify(tmp_path):
    assert main(["verify", "--instances", "10", "--output-dir", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "verify.json").read_text())
    assert all(c["ok"] for c in report["checks"])


def test_cli_simulate_smoke(tmp_path):
    out = tmp_path / "s"
    code = main(["simulate", "--R", "1", "--B", "1", "--n", "200", "--m", "60", "--grid-resolution", "11",
                 "--output-dir", str(out)])
    assert code == 0
    for name in ("sets.csv", "hausdorff.csv", "rejections.csv"):
        assert (out / name).read_text().startswith("# config_sha256=")
    assert json.loads((out / "report.json").read_text())["R"] == 1


def test_config_hash_ignores_threads_and_output(tmp_path):
    from gmmbounds.cli import RunConfig

    a = RunConfig(command="simulate", dgp={"n": 10}, threads=1, output_dir="x")
    b = RunConfig(command="simulate", dgp={"n": 10}, threads=4, output_dir="y")
    c = RunConfig(command="simulate", dgp={"n": 11})
    assert a.config_hash() == b.config_hash() != c.config_hash()
