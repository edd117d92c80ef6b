import json

import jsonschema
import pytest

from uncertainty_bounds.cli import main
from uncertainty_bounds.report import SCHEMA


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_catalog_run_triple_product(capsys, tmp_path):
    path = tmp_path / "r.json"
    code, out, _ = run(capsys, "catalog", "run", "triple_product", "--nmax", "2", "--json", str(path))
    assert code == 0
    doc = json.loads(path.read_text())
    jsonschema.validate(doc, SCHEMA)
    assert doc == json.loads(out)
    assert doc["bound"] == pytest.approx(0.1924500897, abs=1e-10)
    assert doc["minimizer"]["b"] == pytest.approx(0.5, abs=1e-10)
    assert doc["expected"]["matches"] is True
    assert doc["oracle"]["parametric"]["value"] == pytest.approx(doc["bound"], abs=1e-8)
    assert doc["oracle"]["fock"]["value"] == pytest.approx(doc["bound"], abs=1e-4)


def test_catalog_run_linear_params(capsys):
    code, out, _ = run(capsys, "catalog", "run", "linear", "--param", "mu=1", "--param", "nu=1", "--param", "lambda=0.5", "--nmax", "1", "--no-oracle")
    assert code == 0
    assert json.loads(out)["bound"] == pytest.approx(0.8660254, abs=1e-7)


def test_catalog_run_unbounded_linear_matches_expectation(capsys):
    code, out, _ = run(capsys, "catalog", "run", "linear", "--param", "lambda=2", "--nmax", "1", "--no-oracle")
    doc = json.loads(out)
    assert code == 0 and doc["verdict"] == "UNBOUNDED" and doc["witness"]["points"]


def test_certify_expression_and_env_hbar(capsys, monkeypatch):
    monkeypatch.setenv("UNCERTAINTY_HBAR", "2")
    code, out, _ = run(capsys, "certify", "--expr", "mu*sqrt(x*y)", "--param", "mu=3", "--nmax", "1", "--no-oracle")
    doc = json.loads(out)
    assert code == 0
    assert doc["hbar"] == 2.0 and doc["params"] == {"mu": 3.0}
    assert doc["bound"] == pytest.approx(3.0, rel=1e-10)


def test_catalog_list(capsys):
    code, out, _ = run(capsys, "catalog", "list")
    assert code == 0
    assert len(out.strip().splitlines()) == 13
    assert out.startswith("heisenberg")


def test_mesh_and_bch(capsys, tmp_path):
    code, out, _ = run(capsys, "mesh", "hyperboloid", "--nmax", "2", "--out", str(tmp_path / "h.csv"))
    assert code == 0 and "rows" in out
    assert (tmp_path / "h.csv").read_text().startswith("n,u,v,w\n")
    code, out, _ = run(capsys, "bch", "--b", "0", "--gamma", "0.3")
    assert code == 0
    assert out.splitlines()[0] == "r 0.3"


def test_oracle_commands(capsys):
    code, out, _ = run(capsys, "oracle", "sheet", "--expr", "x + y", "--n", "1")
    assert code == 0 and out.startswith("min 3.0")
    code, out, _ = run(capsys, "oracle", "fock", "--expr", "x + y", "--dim", "8", "--restarts", "2", "--seed", "1")
    assert code == 0 and float(out.split()[1]) == pytest.approx(1.0, abs=1e-8)


def test_errors(capsys, monkeypatch):
    code, _, err = run(capsys, "certify", "--expr", "x + ", "--no-oracle")
    assert code == 2 and "error" in err
    code, _, err = run(capsys, "catalog", "run", "nope")
    assert code == 2
    with pytest.raises(SystemExit) as exc:
        main(["certify"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        main(["certify", "--expr", "x", "--param", "oops"])
    monkeypatch.setenv("UNCERTAINTY_HBAR", "-1")
    code, _, err = run(capsys, "certify", "--expr", "x+y", "--no-oracle")
    assert code == 2 and "UNCERTAINTY_HBAR" in err


def test_inconclusive_exits_nonzero(capsys):
    code, out, _ = run(capsys, "certify", "--expr", "x + y + 2*abs(w)", "--nmax", "1", "--no-oracle")
    assert code == 1 and json.loads(out)["verdict"] == "INCONCLUSIVE"
