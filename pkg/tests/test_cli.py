import json
import subprocess
import sys

import pytest

from intspace.cli import cli_dispatch
from intspace import models_io


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    for name in ("s2", "cone_t2", "hopf", "constant_s2", "torus_bundle", "split_s2"):
        assert cli_dispatch(["fixture", name, "--out", str(d / f"{name}.json")]) == 0
    return d


def run(argv, capsys):
    code = cli_dispatch(argv)
    return code, capsys.readouterr()


def test_obstruct_hopf(files, capsys):
    code, out = run(["obstruct", "--space", str(files / "s2.json"), "--sheaf", str(files / "hopf.json"),
                     "--qbar", "0"], capsys)
    assert code == 2
    rep = json.loads(out.out)
    assert rep["verdict"] == "OBSTRUCTED"
    assert [(w["r"], w["p"], w["q"]) for w in rep["witnesses"]] == [(2, 0, 1)]
    for key in ("verdict", "witnesses", "betti", "ext1_dim", "linear_part_dim", "seed"):
        assert key in rep


def test_obstruct_split_clear(files, capsys):
    code, out = run(["obstruct", "--sheaf", str(files / "split_s2.json"), "--qbar", "0"], capsys)
    assert code == 0 and json.loads(out.out)["verdict"] == "CLEAR"


def test_ic_csv(files, capsys):
    code, out = run(["ic", "--space", str(files / "cone_t2.json"), "--perversity", "zero", "--format", "csv"], capsys)
    assert code == 0
    assert out.out.splitlines() == ["degree,dim", "0,1", "1,0", "2,0", "3,0"]


def test_check_constant(files, capsys):
    code, out = run(["check", "--space", str(files / "s2.json"), "--sheaf", str(files / "constant_s2.json"),
                     "--perversity", "lower-middle"], capsys)
    assert code == 0 and json.loads(out.out)["passed"]


def test_is_stratum_model_obstructed(files, capsys):
    code, out = run(["is", "--space", str(files / "s2.json"), "--sheaf", str(files / "torus_bundle.json"),
                     "--codim", "3", "--perversity", "zero"], capsys)
    assert code == 2 and json.loads(out.out)["codim"] == 3


def test_ss_ascii_and_figures(files, capsys, tmp_path):
    out = tmp_path / "ss.txt"
    code, _ = run(["ss", "--sheaf", str(files / "hopf.json"), "--format", "ascii", "--out", str(out)], capsys)
    assert code == 0
    assert out.read_text().startswith("E_2")
    assert (tmp_path / "ss_E2.png").stat().st_size > 0


def test_betti_figure(files, capsys, tmp_path):
    out = tmp_path / "is.json"
    code, _ = run(["is", "--space", str(files / "cone_t2.json"), "--perversity", "zero", "--out", str(out)], capsys)
    assert code == 0
    assert json.loads(out.read_text())["betti"] == {"2": 1}
    assert (tmp_path / "is_betti.png").exists()


@pytest.mark.parametrize("argv", [
    ["ic", "--space", "/nonexistent.json"],
    ["ic"],
    ["obstruct", "--sheaf", "HOPF"],
    ["ic", "--space", "S2", "--perversity", "2:1"],
    ["fixture", "nope"],
    ["bogus"],
])
def test_invalid_input(files, capsys, argv):
    argv = [a.replace("HOPF", str(files / "hopf.json")).replace("S2", str(files / "s2.json")) for a in argv]
    code, out = run(argv, capsys)
    assert code == 3


def test_bad_sheaf_file(files, capsys, tmp_path):
    obj = json.loads((files / "constant_s2.json").read_text())
    obj["terms"][0]["restrictions"][0][2] = [["2"]]
    (tmp_path / "bad.json").write_text(json.dumps(obj))
    code, _ = run(["obstruct", "--sheaf", str(tmp_path / "bad.json"), "--qbar", "0"], capsys)
    assert code == 3


def test_console_script(files):
    r = subprocess.run([sys.executable, "-m", "intspace.cli", "obstruct", "--sheaf", str(files / "hopf.json"),
                        "--qbar", "0"], capture_output=True, text=True)
    assert r.returncode == 2
    assert models_io.cli_dispatch(["obstruct", "--sheaf", str(files / "hopf.json"), "--qbar", "1"]) == 0
