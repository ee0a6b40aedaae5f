import csv
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from voltdeconv.cli import main, parse_config
from voltdeconv.errors import ConfigError
from voltdeconv.report import REPORT_COLUMNS

EXP_CFG = """\
problem = exponential   # smooth kernel exp(t)
delta = 0.1
n = 10
h = 0.1
seeds = 0,1,2
method = both
"""

ABEL_CFG = """\
problem = abel
gamma = 0.1
delta = 0.1
n = 10
h = 0.12
"""


def _write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _column(path, name):
    return np.array([float(r[name]) for r in _rows(path)])


def test_forward_writes_clean_and_noisy(tmp_path):
    cfg = _write(tmp_path, EXP_CFG)
    assert main(["forward", "--config", str(cfg), "--out", str(tmp_path / "o"), "--seeds", "1"]) == 0
    files = sorted(p.name for p in (tmp_path / "o").iterdir())
    assert files == ["f.csv", "f_delta_1.csv"]
    f = _column(tmp_path / "o" / "f.csv", "value")
    fd = _column(tmp_path / "o" / "f_delta_1.csv", "value")
    assert len(f) == 41
    assert np.max(np.abs(fd - f)) == pytest.approx(0.1, rel=1e-12)


def test_forward_zero_noise(tmp_path):
    cfg = _write(tmp_path, EXP_CFG.replace("delta = 0.1", "delta = 0").replace("both", "deconv"))
    assert main(["forward", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    clean = (tmp_path / "o" / "f.csv").read_bytes()
    for seed in (0, 1, 2):
        assert (tmp_path / "o" / f"f_delta_{seed}.csv").read_bytes() == clean


def test_solve_outputs(tmp_path, capsys):
    cfg = _write(tmp_path, EXP_CFG)
    out = tmp_path / "o"
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
    names = {p.name for p in out.iterdir()}
    assert {"u_exact.csv", "report.csv", "solution.svg"} <= names
    for m in ("deconv", "tikhonov"):
        for s in (0, 1, 2):
            assert f"u_{m}_{s}.csv" in names
    with open(out / "report.csv", newline="") as fh:
        header = next(csv.reader(fh))
    assert tuple(header) == REPORT_COLUMNS
    rows = _rows(out / "report.csv")
    assert len(rows) == 6
    assert all(float(r["rel_l2"]) > 0 for r in rows)
    assert {r["method"] for r in rows} == {"deconv", "tikhonov"}
    assert all(r["eps"] for r in rows if r["method"] == "tikhonov")
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 6
    for line in lines:
        method, seed, rel, ms = line.split()
        assert method in ("deconv", "tikhonov") and seed in "012"
        float(rel), float(ms)


def test_deconv_only_leaves_eps_empty(tmp_path):
    cfg = _write(tmp_path, EXP_CFG.replace("both", "deconv"))
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rows = _rows(tmp_path / "o" / "report.csv")
    assert len(rows) == 3
    assert all(r["eps"] == "" for r in rows)
    assert all(float(r["h"]) == 0.1 for r in rows)


def test_abel_config_ordering(tmp_path):
    cfg = _write(tmp_path, ABEL_CFG)
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rows = _rows(tmp_path / "o" / "report.csv")
    mean = {m: np.mean([float(r["rel_l2"]) for r in rows if r["method"] == m])
            for m in ("deconv", "tikhonov")}
    assert len(rows) == 20
    assert mean["deconv"] < mean["tikhonov"]


def test_outputs_are_deterministic(tmp_path):
    cfg = _write(tmp_path, EXP_CFG)
    for d in ("a", "b"):
        assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / d)]) == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    for name in names:
        a, b = (tmp_path / "a" / name), (tmp_path / "b" / name)
        if name == "report.csv":
            # wall-clock timings are the only run-dependent column
            strip = [[{k: v for k, v in r.items() if k != "wall_ms"} for r in _rows(p)] for p in (a, b)]
            assert strip[0] == strip[1]
        else:
            assert a.read_bytes() == b.read_bytes(), name


def test_svg_carries_csv_data(tmp_path):
    cfg = _write(tmp_path, EXP_CFG)
    out = tmp_path / "o"
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
    root = ET.parse(out / "solution.svg").getroot()
    assert "href" not in (out / "solution.svg").read_text()
    lines = {el.get("data-label"): el for el in root.iter("{http://www.w3.org/2000/svg}polyline")}
    assert set(lines) == {"u_exact", "u_deconv", "u_disc"}
    t = _column(out / "u_exact.csv", "t")
    for label, name in (("u_exact", "u_exact.csv"), ("u_deconv", "u_deconv_0.csv"),
                        ("u_disc", "u_tikhonov_0.csv")):
        xs = np.array(lines[label].get("data-x").split(), dtype=float)
        ys = np.array(lines[label].get("data-y").split(), dtype=float)
        np.testing.assert_array_equal(xs, t)
        np.testing.assert_array_equal(ys, _column(out / name, "value"))


def test_sweep_u_shape(tmp_path):
    cfg = _write(tmp_path, EXP_CFG.replace("both", "deconv"))
    hs = [0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.45]
    out = tmp_path / "o"
    assert main(["sweep", "--config", str(cfg), "--out", str(out),
                 "--h-list", ",".join(map(str, hs))]) == 0
    rows = _rows(out / "sweep.csv")
    assert [float(r["h"]) for r in rows] == hs
    err = [float(r["rel_l2"]) for r in rows]
    k = int(np.argmin(err))
    assert 0 < k < len(hs) - 1
    root = ET.parse(out / "sweep.svg").getroot()
    line = next(el for el in root.iter("{http://www.w3.org/2000/svg}polyline")
                if el.get("data-label") == "deconv rel_l2")
    np.testing.assert_array_equal(np.array(line.get("data-y").split(), dtype=float), err)


def test_sweep_single_step(tmp_path):
    cfg = _write(tmp_path, EXP_CFG)
    out = tmp_path / "o"
    assert main(["sweep", "--config", str(cfg), "--out", str(out), "--h-list", "0.1"]) == 0
    rows = _rows(out / "sweep.csv")
    assert [r["method"] for r in rows] == ["deconv", "tikhonov"]
    assert (out / "sweep.svg").read_text().startswith("<svg")


@pytest.mark.parametrize("text", [
    EXP_CFG.replace("exponential", "gaussian"),
    EXP_CFG.replace("n = 10", "n = 2"),
    EXP_CFG.replace("h = 0.1", ""),
    EXP_CFG + "gamma = 0.3\n",
    ABEL_CFG.replace("gamma = 0.1", ""),
    EXP_CFG.replace("method = both", "method = all"),
    EXP_CFG + "colour = red\n",
    EXP_CFG.replace("delta = 0.1", "delta = 0"),
    "problem = inline\ndelta = 0.1\nn = 10\nh = 0.1\nkernel = cosh(t)\nu = poly(1,0,0)\n",
])
def test_config_errors_exit_2(tmp_path, text):
    cfg = _write(tmp_path, text)
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_usage_errors_exit_2(tmp_path):
    assert main(["frobnicate"]) == 2
    assert main(["solve", "--config", str(tmp_path / "missing.cfg")]) == 2
    cfg = _write(tmp_path, EXP_CFG)
    assert main(["sweep", "--config", str(cfg), "--h-list", "0.1,0.6"]) == 2
    assert main(["solve", "--config", str(cfg), "--seeds", "a,b"]) == 2


def test_io_error_exit_3(tmp_path):
    cfg = _write(tmp_path, EXP_CFG)
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["forward", "--config", str(cfg), "--out", str(blocker)]) == 3


def test_numeric_failure_exit_4(tmp_path):
    cfg = _write(tmp_path, EXP_CFG.replace("h = 0.1", "h = 0.5").replace("both", "deconv"))
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 4


def test_inline_problem(tmp_path):
    text = ("problem = inline\nkernel = abel(0.3) + poly(0, 0, 1)\nu = poly(1, 0, -1)\n"
            "delta = 0.05\nn = 10\nh = 0.1\nseeds = 0,1\n")
    cfg = parse_config(text)
    p = cfg.build_problem()
    assert p.kernel.gamma == 0.3
    assert main(["solve", "--config", str(_write(tmp_path, text)), "--out", str(tmp_path / "o")]) == 0
    with pytest.raises(ConfigError):
        parse_config(text + "gamma = 0.4\n").build_problem()


def test_module_entry_point(tmp_path):
    cfg = _write(tmp_path, EXP_CFG)
    proc = subprocess.run([sys.executable, "-m", "voltdeconv.cli", "solve", "--config", str(cfg),
                           "--out", str(tmp_path / "o"), "--seeds", "0"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert len(proc.stdout.strip().splitlines()) == 2
    assert Path(tmp_path / "o" / "report.csv").exists()
