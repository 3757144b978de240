import json

import pytest

from haarint.algebra import Polynomial, poly_serialize
from haarint.cli import run
from haarint.pizzetti import StiefelSpec


@pytest.fixture
def norm_file(tmp_path):
    spec = StiefelSpec(1, 4, 2)
    f = Polynomial.zero(spec.layout)
    for r in range(4):
        f = f + Polynomial.var(spec.layout, r) ** 2
    path = tmp_path / "f.json"
    path.write_text(poly_serialize(f))
    return str(path)


def call(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_moment(capsys, norm_file):
    code, out, _ = call(capsys, "moment", "--beta", "1", "--n", "4", "--k", "2", "--poly", norm_file)
    assert code == 0
    assert json.loads(out)["exact"] == "1"


def test_moment_rejects_layout_mismatch(capsys, norm_file):
    code, out, err = call(capsys, "moment", "--beta", "1", "--n", "3", "--k", "2", "--poly", norm_file)
    assert code == 2 and out == "" and "layout" in err


def test_check_prop43(capsys):
    code, out, _ = call(capsys, "check", "prop43", "--beta", "2", "--n", "3", "--k", "2", "--trials", "50", "--seed", "7")
    assert code == 0
    assert json.loads(out)["passed"] is True


def test_iz_at_zero(capsys):
    code, out, _ = call(capsys, "iz", "--H", "0,0,0,0")
    assert code == 0
    assert json.loads(out)["value"] == 1.0


def test_iz_with_mc(capsys):
    code, out, _ = call(capsys, "iz", "--H", "0.3,0.1,-0.2,-0.1", "--mc-check", "20000,3")
    doc = json.loads(out)
    assert code == 0
    assert abs(doc["value"] - doc["mc"]["mean"]) <= 4 * doc["mc"]["stderr"]


def test_kernel_and_checks(capsys):
    code, out, _ = call(capsys, "kernel", "--beta", "4", "--n", "3", "--k", "2", "--lambdas", "1.5,2.5")
    assert code == 0 and json.loads(out)["method"] == "pfaffian_beta4_even"
    code, out, _ = call(capsys, "check", "sekiguchi")
    assert code == 0
    code, out, _ = call(capsys, "check", "kernel-vs-moments", "--beta", "2", "--n", "3", "--k", "2", "--lambdas", "0.5,1.0")
    assert code == 0 and json.loads(out)["passed"]


def test_sample_is_deterministic(capsys):
    argv = ("sample", "--beta", "2", "--n", "2", "--k", "1", "--samples", "3", "--seed", "4")
    _, first, _ = call(capsys, *argv)
    _, second, _ = call(capsys, *argv)
    assert first == second
    assert len(json.loads(first)["samples"]) == 3
    code, csv, _ = call(capsys, *argv, "--format", "csv")
    assert code == 0 and len(csv.strip().splitlines()) == 3


def test_oracle(capsys, norm_file):
    code, out, _ = call(capsys, "oracle", "--beta", "1", "--n", "4", "--k", "2", "--poly", norm_file, "--samples", "1000")
    assert code == 0 and json.loads(out)["mean"] == pytest.approx(1.0)


def test_flag_errors_exit_2(capsys):
    assert call(capsys, "bogus")[0] == 2
    assert call(capsys, "kernel", "--beta", "3", "--n", "3", "--k", "2", "--lambdas", "1,2")[0] == 2
    assert call(capsys, "kernel", "--beta", "2", "--n", "3", "--k", "2", "--lambdas", "1,1")[0] == 2
    assert call(capsys, "check", "kernel-vs-moments")[0] == 2


def test_failed_check_exits_1(capsys, monkeypatch):
    from haarint import iz
    from haarint.diffop import CheckReport

    monkeypatch.setattr(iz, "sekiguchi_check", lambda a_max: CheckReport(False, 1, "forced", "none"))
    code, out, _ = call(capsys, "check", "sekiguchi")
    assert code == 1 and json.loads(out)["passed"] is False
