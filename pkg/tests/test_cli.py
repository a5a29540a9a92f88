import csv
import json

import pytest

from serrinlab.cli import main
from serrinlab.identity import CSV_HEADER
from serrinlab.mesh2d import read_mesh
from serrinlab.probe import SWEEP_HEADER




def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_case_outputs(tmp_path):
    code = main(["case", "--c0", "0.3", "--c", "-0.15", "--levels", "2", "--emit", "csv,json,svg,mesh",
                 "--out", str(tmp_path)])
    assert code == 0
    rows = _rows(tmp_path / "case.csv")
    assert tuple(rows[0]) == CSV_HEADER
    assert len(rows) == 3
    doc = json.loads((tmp_path / "case.json").read_text())
    assert doc["spec"]["theta_deg"] == pytest.approx(60.0)
    assert len(doc["identity"]) == 2
    assert (tmp_path / "case_field.svg").read_text().lstrip().startswith("<?xml")
    mesh, dofs = read_mesh((tmp_path / "case.mesh").read_text())
    assert dofs is not None and len(dofs) == doc["solver"]["n_dofs"]


def test_case_default_emit(tmp_path):
    assert main(["case", "--levels", "1", "--out", str(tmp_path)]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["case.csv", "case.json", "case_field.svg", "case_profile.svg"]


@pytest.mark.parametrize(
    "argv, name",
    [(["--c0", "-0.3", "--c", "0"], "NonPositiveC0"), (["--c0", "0.3", "--c", "0.4"], "InvalidAngle")],
)
def test_case_invalid(tmp_path, capsys, argv, name):
    assert main(["case", *argv, "--out", str(tmp_path)]) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == name


def test_levels_out_of_range(tmp_path):
    assert main(["case", "--levels", "7", "--out", str(tmp_path)]) == 2


def test_fem_needs_planar(tmp_path):
    assert main(["case", "--dim", "3", "--out", str(tmp_path)]) == 2


def test_solver_failure_exit_code(tmp_path, capsys):
    code = main(["render-mesh", "--eps", "-0.3", "--modes", "8:0", "--levels", "1", "--out", str(tmp_path)])
    assert code == 3
    assert json.loads(capsys.readouterr().err.strip())["error"] == "InvertedElement"


def test_convergence(tmp_path):
    assert main(["convergence", "--levels", "3", "--out", str(tmp_path), "--emit", "csv,svg"]) == 0
    rows = _rows(tmp_path / "convergence.csv")
    assert len(rows) == 4
    head = rows[0]
    assert rows[1][head.index("order_L2")] == ""
    assert float(rows[-1][head.index("order_L2")]) >= 2
    assert (tmp_path / "convergence.svg").exists()


def test_convergence_single_level(tmp_path):
    assert main(["convergence", "--levels", "1", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "convergence.csv")
    assert len(rows) == 2 and rows[1][rows[0].index("order_L2")] == ""


def test_convergence_rejects_perturbed(tmp_path, capsys):
    assert main(["convergence", "--eps", "0.1", "--out", str(tmp_path)]) == 2
    assert "eps=0" in capsys.readouterr().err


def test_sweep(tmp_path):
    assert main(["sweep", "--eps", "0,0.05,0.1", "--levels", "2", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "sweep.csv")
    assert tuple(rows[0]) == SWEEP_HEADER
    defects = [float(r[3]) for r in rows[1:]]
    assert defects[0] < defects[1] < defects[2]
    assert sorted(p.name for p in tmp_path.glob("sweep_profile_*.svg")) == [f"sweep_profile_{i}.svg" for i in range(3)]


def test_sweep_empty(tmp_path):
    assert main(["sweep", "--eps", "", "--out", str(tmp_path)]) == 2


def test_unknown_flag(capsys):
    with pytest.raises(SystemExit) as info:
        main(["sweep", "--bogus"])
    assert info.value.code == 64
    assert "usage" in capsys.readouterr().err


def test_render_mesh(tmp_path):
    assert main(["render-mesh", "--levels", "1", "--out", str(tmp_path)]) == 0
    mesh, _ = read_mesh((tmp_path / "mesh.mesh").read_text())
    assert mesh.n_triangles == 2 * 16 * 4 - 8
    assert "<svg" in (tmp_path / "mesh.svg").read_text()


def test_cap_any_dimension(tmp_path):
    assert main(["cap", "--dim", "4", "--c0", "0.2", "--c", "0.05", "--out", str(tmp_path), "--emit", "json,csv"]) == 0
    doc = json.loads((tmp_path / "cap.json").read_text())
    assert max(doc["residuals"].values()) < 1e-12
    assert doc["P_value"] == pytest.approx(0.02)


def test_config_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"c0": 0.3, "c": 0.1, "levels": 1, "emit": ["json"]}))
    assert main(["case", "--config", str(cfg), "--c", "-0.1", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "case.json").read_text())
    assert doc["config"]["c"] == -0.1
    assert doc["config"]["levels"] == 1


def test_env_overrides_out(tmp_path, monkeypatch):
    target = tmp_path / "env"
    monkeypatch.setenv("SERRINLAB_OUT", str(target))
    assert main(["case", "--levels", "1", "--out", str(tmp_path / "flag")]) == 0
    assert (target / "case.csv").exists()
    assert not (tmp_path / "flag").exists()


def test_svg_deterministic(tmp_path):
    for sub in ("a", "b"):
        assert main(["case", "--levels", "1", "--emit", "svg", "--out", str(tmp_path / sub)]) == 0
    for name in ("case_field.svg", "case_profile.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
