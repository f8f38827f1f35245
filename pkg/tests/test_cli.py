import shutil
import subprocess
from pathlib import Path

import numpy as np
import pytest

from siegelbounds import __version__
from siegelbounds.basins import read_ppm
from siegelbounds.cli import main

FIX = Path(__file__).parent / "fixtures"
GOLD = "[0;(1)*]"


def call(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def rows(out):
    return [line for line in out.splitlines() if not line.startswith("#")]


def test_tiling(capsys):
    code, out, _ = call(capsys, "tiling", "--theta", GOLD, "--m", 2)
    assert code == 0
    head = out.splitlines()[0]
    assert head == f"# siegelbounds {__version__} tiling theta={GOLD} m=2 c=0.0 seed=0"
    table = rows(out)
    assert table[0] == "index,left,length,length_class"
    assert len(table) - 1 == 5  # q_3 for the golden mean
    lengths = {line.split(",")[2] for line in table[1:]}
    assert len(lengths) <= 2
    assert {line.split(",")[3] for line in table[1:]} == {"short", "long"}


@pytest.mark.parametrize("theta", ["[1;2]", "0.5", "[0;x]", "[0;0,(1)*]"])
def test_tiling_bad_theta(capsys, theta):
    code, _, err = call(capsys, "tiling", "--theta", theta, "--m", 2)
    assert code == 2 and "error" in err


def test_usage_errors(capsys):
    assert call(capsys)[0] == 2
    assert call(capsys, "tiling", "--m", 2)[0] == 2
    assert call(capsys, "nonsense")[0] == 2
    # long flags only, no abbreviations
    assert call(capsys, "tiling", "--the", GOLD, "--m", 2)[0] == 2
    assert call(capsys, "tiling", "-h")[0] == 2
    assert call(capsys, "tiling", "--help")[0] == 0


def test_map(capsys):
    code, out, _ = call(capsys, "map", "--rho1", "0.5", "--rho2", "0.5")
    assert code == 0
    table = dict(line.split(",", 1) for line in rows(out)[1:])
    assert complex(table["rho3"].replace("i", "j")) == pytest.approx(4 / 3)
    assert table["degenerate"] == "0"
    code, out, _ = call(capsys, "map", "--point", "rho1=0+1i rho2=0-1i")
    assert code == 0 and "degenerate,1" in out
    assert call(capsys, "map", "--rho1", "0.5")[0] == 2


@pytest.mark.parametrize("name,verdict,code", [
    ("half.txt", "UNOBSTRUCTED λ=0.5", 0),
    ("levy.txt", "OBSTRUCTED λ=1", 1),
    ("one.txt", "OBSTRUCTED λ=1", 1),
    ("sqrt_half.txt", "UNOBSTRUCTED λ=0.7071067812", 0),
    ("sylvester.txt", "CRITICAL λ≈1", 3),
    ("reducible.txt", "OBSTRUCTED λ=1", 1),
])
def test_obstruct(capsys, name, verdict, code):
    got, out, _ = call(capsys, "obstruct", "--input", FIX / name)
    assert got == code
    assert out.splitlines()[1].startswith(verdict)
    assert "# A" in out


def test_obstruct_matrix_csv(capsys):
    _, out, _ = call(capsys, "obstruct", "--input", FIX / "sqrt_half.txt")
    assert out.splitlines()[2:] == ["# A", "0,1", "0.5,0"]


def test_tree(capsys):
    code, out, _ = call(capsys, "tree", "--input", FIX / "tree_half.txt")
    assert code == 0
    assert out.splitlines()[1] == "NO Mv=Dv SOLUTION"
    code, out, _ = call(capsys, "obstruct", "--input", FIX / "tree_half.txt")
    assert out.splitlines()[1] == "NO Mv=Dv SOLUTION"
    assert call(capsys, "tree", "--input", FIX / "half.txt")[0] == 2


def test_tree_solution(capsys, tmp_path):
    f = tmp_path / "t.txt"
    f.write_text("edge 1 2\nedge 2 3\npath E1: E1 E2\npath E2: E1 E2\ndelta E1 2\ndelta E2 2\n")
    code, out, _ = call(capsys, "tree", "--input", f)
    assert code == 0
    line = out.splitlines()[1]
    assert line.startswith("Mv=Dv SOLUTION v=")
    v = np.array([float(x) for x in line.split("=", 2)[2].split(",")])
    assert np.allclose(v, [0.5, 0.5])


def test_parse_failures(capsys, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("curve 1\npre 1 one 2\n")
    assert call(capsys, "obstruct", "--input", bad)[0] == 2
    assert call(capsys, "obstruct", "--input", tmp_path / "missing.txt")[0] == 2


def test_pulloff(capsys):
    code, out, _ = call(capsys, "pulloff", "--theta1", GOLD, "--theta2", GOLD, "--cap", 10000)
    assert code == 0
    N, dist = rows(out)[1].split(",")
    assert int(N) == 2 and float(dist) > 0
    # 1 - [0;(1)*] = [0;2,(1)*]
    code, out, _ = call(capsys, "pulloff", "--theta1", GOLD, "--theta2", "[0;2,(1)*]", "--cap", 1000)
    assert code == 0
    assert rows(out)[1].startswith("Unbounded,")


def test_psd_plan(capsys):
    code, out, _ = call(capsys, "psd-plan", "--theta", "[0;1,1000,(1)*]", "--KF", 50, "--K", 100)
    assert code == 0
    lines = out.splitlines()
    assert lines[1].startswith("# m_F=-2 near_parabolic=1")
    table = rows(out)
    near = [r for r in table[1:] if r.split(",")[3] == "1"]
    assert len(near) == 1 and near[0].split(",")[4:7] == ["4", "0", "0"]
    assert call(capsys, "psd-plan", "--theta", GOLD, "--KF", 50, "--M", 1)[0] == 2


def test_width_pair(capsys):
    code, out, _ = call(capsys, "width", "--config", FIX / "two_disks.cfg", "--pair", 0, 1)
    assert code == 0
    table = rows(out)
    assert table[0] == "name,value,error_estimate,grid"
    name, value, err, _ = table[1].split(",")
    assert float(value) > 0 and err != ""


def test_width_mark(capsys):
    code, out, _ = call(capsys, "width", "--config", FIX / "two_disks.cfg", "--mark", 0, "--n", 64)
    assert code == 0
    names = [r.split(",")[0] for r in rows(out)[1:]]
    assert names == ["W_plus_0", "W_sphere_0"]
    assert call(capsys, "width", "--config", FIX / "two_disks.cfg", "--mark", 3)[0] == 2
    assert call(capsys, "width", "--config", FIX / "two_disks.cfg")[0] == 2


def test_width_numeric_failure_exit(capsys, monkeypatch):
    from siegelbounds import cli
    from siegelbounds.errors import SolverDiverged

    def boom(*a, **k):
        raise SolverDiverged("stalled")

    monkeypatch.setattr(cli, "arc_degeneration_pair", boom)
    assert call(capsys, "width", "--config", FIX / "two_disks.cfg", "--pair", 0, 1)[0] == 3


def test_render(capsys, tmp_path):
    out = tmp_path / "z2.ppm"
    code, _, _ = call(capsys, "render", "--rho1", 0, "--rho2", 0, "--viewport=-1,1,-1,1",
                      "--res", "33x33", "--output", out)
    assert code == 0
    w, h, pix = read_ppm(out)
    assert (w, h) == (33, 33)
    zero_colour = tuple(pix[16, 16])
    assert zero_colour == tuple(pix[16, 20])
    assert out.with_name("z2.ppm.legend").exists()
    big = tmp_path / "big.ppm"
    call(capsys, "render", "--rho1", 0, "--rho2", 0, "--viewport=-1,1,-1,1", "--res", "66x66",
         "--output", big)
    assert read_ppm(big)[:2] == (66, 66)
    assert call(capsys, "render", "--rho1", 0, "--rho2", 0, "--res", "10")[0] == 2


def test_output_flag(capsys, tmp_path):
    dest = tmp_path / "t.csv"
    code, out, _ = call(capsys, "tiling", "--theta", GOLD, "--m", 1, "--output", dest)
    assert code == 0 and out == ""
    assert dest.read_text().startswith("# siegelbounds")


COMMANDS = [
    ["tiling", "--theta", "[0;2,(1)*]", "--m", 6, "--c", 0.3],
    ["map", "--rho1", "0.3+0.2i", "--rho2=-0.5i"],
    ["width", "--config", FIX / "two_disks.cfg", "--pair", 0, 1, "--method", "grid", "--n", 64],
    ["obstruct", "--input", FIX / "sqrt_half.txt"],
    ["tree", "--input", FIX / "tree_two.txt"],
    ["pulloff", "--theta1", "0.3", "--theta2", "[0;2,(1)*]", "--cap", 5000],
    ["psd-plan", "--theta", "[0;1,1000,(1)*]", "--KF", 500],
]


@pytest.mark.parametrize("argv", COMMANDS, ids=lambda a: a[0])
def test_deterministic(capsys, tmp_path, argv):
    outs = []
    for k, workers in enumerate((1, 1, 4)):
        dest = tmp_path / f"{k}.out"
        call(capsys, *argv, "--workers", workers, "--output", dest)
        outs.append(dest.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    assert outs[0].startswith(b"# siegelbounds")
    assert b"seed=0" in outs[0].splitlines()[0]


def test_render_deterministic(capsys, tmp_path):
    files = []
    for k, workers in enumerate((1, 1, 4)):
        dest = tmp_path / f"{k}.ppm"
        call(capsys, "render", "--rho1", "0.4+0.3i", "--rho2", "0.6", "--viewport=-2,2,-1.5,1.5",
             "--res", "41x31", "--workers", workers, "--output", dest)
        files.append(dest.read_bytes())
    assert files[0] == files[1] == files[2]


def test_seed_recorded(capsys):
    _, out, _ = call(capsys, "tiling", "--theta", GOLD, "--m", 1, "--seed", 17)
    assert out.splitlines()[0].endswith("seed=17")


@pytest.mark.skipif(shutil.which("siegelbounds") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["siegelbounds", "obstruct", "--input", str(FIX / "levy.txt")],
                         capture_output=True, text=True)
    assert res.returncode == 1
    assert res.stdout.splitlines()[1] == "OBSTRUCTED λ=1"
