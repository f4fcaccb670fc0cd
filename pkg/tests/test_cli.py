import json

import numpy as np
import pytest

from mlrid.cli import main
from mlrid.experiment import read_csv
from mlrid.svg import emit_svg


@pytest.fixture
def config(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"generator": {"beta_star": [1.0, 2.0, -1.0], "p": 0.8, "seed": 3},
                             "horizon": 2000, "outputs": str(tmp_path / "out")}))
    return p


def test_run_and_determinism(config, tmp_path):
    assert main(["run", "--config", str(config)]) == 0
    first = (tmp_path / "out_rep0.csv").read_bytes()
    assert main(["run", "--config", str(config)]) == 0
    assert (tmp_path / "out_rep0.csv").read_bytes() == first
    assert main(["run", "--config", str(config), "--seed", "4", "--out", str(tmp_path / "o2")]) == 0
    assert (tmp_path / "o2_rep0.csv").read_bytes() != first


def test_simulate_then_eval(config, tmp_path, capsys):
    assert main(["run", "--config", str(config)]) == 0
    assert main(["simulate", "--config", str(config)]) == 0
    rc = main(["eval", "--config", str(config), "--stream", str(tmp_path / "out_stream.csv"),
               "--snapshots", str(tmp_path / "out_rep0_snapshots.csv")])
    assert rc == 0
    assert "max deviation from stored snapshots: 0.000e+00" in capsys.readouterr().out
    assert (tmp_path / "out_eval.csv").read_bytes() == (tmp_path / "out_rep0.csv").read_bytes()


def test_sweep_cli(config, tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"generator.p": [0.6, 0.8]}))
    assert main(["sweep", "--config", str(config), "--grid", str(grid)]) == 0
    header, rows = read_csv(tmp_path / "out_sweep.csv")
    assert header[0] == "generator.p" and len(rows) == 2
    grid.write_text(json.dumps({"horizon": [1]}))
    assert main(["sweep", "--config", str(config), "--grid", str(grid)]) == 1


def test_bounds_cli(config, tmp_path):
    assert main(["run", "--config", str(config)]) == 0
    out = str(tmp_path / "b")
    assert main(["bounds", "--delta", "0.1", "--lambda", str(tmp_path / "out_rep0.csv"), "--out", out]) == 0
    header, rows = read_csv(out + "_bounds.csv")
    run_header, run = read_csv(tmp_path / "out_rep0.csv")
    assert header == ["n", "lambda_min", "thm1_bound", "thm2_bound", "thm3_rate"]
    for col in ("n", "lambda_min", "thm1_bound", "thm2_bound"):
        np.testing.assert_array_equal(rows[:, header.index(col)], run[:, run_header.index(col)])


def test_exit_codes(config, tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"generator": {"beta_star": [1.0], "p": 1.5}, "horizon": 10}))
    assert main(["run", "--config", str(bad)]) == 1
    assert "generator.p" in capsys.readouterr().err
    assert main(["run", "--config", str(config), "--cap-mode", "sometimes"]) == 1
    assert main(["run", "--config", str(config), "--out", str(config / "x")]) == 3
    assert main(["plot", "--csv", str(tmp_path / "nothing.csv"), "--columns", "q", "--out",
                 str(tmp_path / "p.svg")]) == 3
    with pytest.raises(SystemExit):
        main(["frobnicate"])


def test_numeric_exit_code(config, tmp_path):
    assert main(["simulate", "--config", str(config)]) == 0
    path = tmp_path / "out_stream.csv"
    lines = path.read_text().splitlines()
    parts = lines[50].split(",")
    parts[1] = "1e200"
    lines[50] = ",".join(parts)
    path.write_text("\n".join(lines) + "\n")
    assert main(["eval", "--config", str(config), "--stream", str(path)]) == 2


def _tiny_csv(path):
    path.write_text("n,a,b\n1,1,100\n10,10,10\n100,100,1\n")


def test_svg_coordinates(tmp_path):
    _tiny_csv(tmp_path / "t.csv")
    emit_svg(tmp_path / "t.csv", ["a", "b"], tmp_path / "t.svg")
    text = (tmp_path / "t.svg").read_text()
    # decades 0..2 map linearly onto the 520 x 280 plot box with a 60 px margin
    assert 'points="60.00,340.00 320.00,200.00 580.00,60.00"' in text
    assert 'points="60.00,60.00 320.00,200.00 580.00,340.00"' in text
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>")


def test_svg_deterministic_and_errors(tmp_path):
    _tiny_csv(tmp_path / "t.csv")
    emit_svg(tmp_path / "t.csv", ["a"], tmp_path / "1.svg", title="x")
    emit_svg(tmp_path / "t.csv", ["a"], tmp_path / "2.svg", title="x")
    assert (tmp_path / "1.svg").read_bytes() == (tmp_path / "2.svg").read_bytes()
    with pytest.raises(ValueError, match="available"):
        emit_svg(tmp_path / "t.csv", ["zzz"], tmp_path / "3.svg")
    (tmp_path / "e.csv").write_text("n,a\n")
    with pytest.raises(ValueError, match="no data"):
        emit_svg(tmp_path / "e.csv", ["a"], tmp_path / "4.svg")


def test_plot_cli(tmp_path):
    _tiny_csv(tmp_path / "t.csv")
    assert main(["plot", "--csv", str(tmp_path / "t.csv"), "--columns", "a", "--out",
                 str(tmp_path / "p.svg"), "--linear-y"]) == 0
    assert main(["plot", "--csv", str(tmp_path / "t.csv"), "--columns", "zzz", "--out",
                 str(tmp_path / "p.svg")]) == 1
