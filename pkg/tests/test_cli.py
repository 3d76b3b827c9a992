import csv
import math
import shutil

import numpy as np
import pytest
import yaml

from lichnerowicz import cli
from lichnerowicz.errors import (ConstructionFailure, DomainError, HypothesisFailure, InvalidArgument, NonConvergence,
                                 NumericError, SchemeFailure)
from lichnerowicz.io import ConfigError

from conftest import CONFIGS


def read_report(path):
    text = path.read_text()
    header, body = text.split("\n", 1)
    assert header == "# lichnerowicz-report/1"
    return yaml.safe_load(body)


def read_column(path, column="value"):
    with open(path, newline="") as fh:
        return np.array([float(row[column]) for row in csv.DictReader(fh)])


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data, sort_keys=False))
    return path


INTERVAL_MESH = {"kind": "interval", "length": 1.0, "n": 200, "left": "boundary0", "right": "boundary1"}


@pytest.fixture(scope="module")
def radial_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("radial")
    code = cli.main(["solve", "--config", str(CONFIGS / "radial.yaml"), "--out", str(out)])
    return code, out


def test_mixed_eigenvalue_report(tmp_path, capsys):
    assert cli.main(["eigen", "--config", str(CONFIGS / "interval_eigen.yaml"), "--out", str(tmp_path)]) == 0
    rep = read_report(tmp_path / "eigen_report.txt")
    assert rep["zeta"] == pytest.approx(math.pi**2 / 4, rel=1e-2)
    assert round(rep["zeta"], 2) == 2.47
    assert rep["residual_norm"] <= 1e-8
    assert read_column(tmp_path / "eigenfunction.csv").size == 200
    assert "zeta" in capsys.readouterr().out


def test_dirichlet_eigenvalue_report(tmp_path):
    cfg = write_yaml(tmp_path / "d.yaml", {"mesh": INTERVAL_MESH, "eigen": {"kind": "dirichlet", "a": 0.0}})
    assert cli.main(["eigen", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rep = read_report(tmp_path / "eigen_report.txt")
    assert rep["zeta"] == pytest.approx(math.pi**2, rel=1e-2)


def test_malformed_mesh_file_is_line_anchored(tmp_path, capsys):
    (tmp_path / "mesh.yaml").write_text("kind: interval\nn: 20\nlength: [1.0\n")
    cfg = write_yaml(tmp_path / "run.yaml", {"mesh": "mesh.yaml", "eigen": {"kind": "zaremba"}})
    assert cli.main(["eigen", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "mesh.yaml:" in err
    line = err.split("mesh.yaml:")[1].split(":")[0]
    assert line.isdigit()


def test_invalid_value_names_key_line(tmp_path, capsys):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("mesh:\n  kind: interval\n  n: -4\n  length: 1.0\neigen:\n  kind: zaremba\n")
    assert cli.main(["eigen", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "run.yaml:3" in capsys.readouterr().err


def test_constant_solve(tmp_path):
    assert cli.main(["solve", "--config", str(CONFIGS / "constant.yaml"), "--out", str(tmp_path)]) == 0
    u = read_column(tmp_path / "solution.csv")
    assert np.max(np.abs(u - 1.0)) <= 1e-10
    gaps = (tmp_path / "gaps.csv").read_text().splitlines()
    assert len(gaps) >= 2


def test_tail_without_absorption_fails_hypothesis(tmp_path):
    assert cli.main(["solve", "--config", str(CONFIGS / "tail_zero.yaml"), "--out", str(tmp_path)]) == 4
    rep = read_report(tmp_path / "solve_report.txt")
    assert rep["status"] == "failed" and rep["exit_code"] == 4
    assert rep["failure"]["kind"] == "hypothesis-failure"
    assert rep["failure"]["condition"] == "tail_ratio_absorption"


def test_radial_solve_acceptance_fields(radial_run):
    code, out = radial_run
    assert code == 0
    rep = read_report(out / "solve_report.txt")
    acc = rep["acceptance"]
    diffs = acc["innermost_differences"]
    assert len(diffs) == 3
    assert all(b < a for a, b in zip(diffs, diffs[1:]))
    assert diffs[-1] <= 1e-3
    assert acc["interior_residual"] <= acc["residual_bound"] == pytest.approx(1e-7)
    assert acc["boundary_residual"] <= acc["residual_bound"]


def test_verify_closes_on_solve_output(radial_run, tmp_path):
    _, out = radial_run
    code = cli.main(["verify", "--config", str(CONFIGS / "radial.yaml"), "--solution", str(out / "solution.csv"),
                     "--out", str(tmp_path)])
    assert code == 0
    assert read_report(tmp_path / "verify_report.txt")["flagged_nodes"] == []


def _perturb(src, dst, node, value):
    with open(src, newline="") as fh:
        rows = list(csv.reader(fh))
    rows[node + 1][-1] = repr(value)
    with open(dst, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


def test_verify_flags_edited_node(radial_run, tmp_path):
    _, out = radial_run
    node = 777
    u = read_column(out / "solution.csv")
    _perturb(out / "solution.csv", tmp_path / "edited.csv", node, float(u[node]) * 1.01)
    code = cli.main(["verify", "--config", str(CONFIGS / "radial.yaml"), "--solution", str(tmp_path / "edited.csv"),
                     "--out", str(tmp_path)])
    assert code == 1
    rep = read_report(tmp_path / "verify_report.txt")
    assert node in rep["flagged_nodes"]
    assert rep["worst"]["interior"]["node"] == node


def test_verify_rejects_nonpositive_value(radial_run, tmp_path):
    _, out = radial_run
    _perturb(out / "solution.csv", tmp_path / "bad.csv", 12, 0.0)
    code = cli.main(["verify", "--config", str(CONFIGS / "radial.yaml"), "--solution", str(tmp_path / "bad.csv"),
                     "--out", str(tmp_path)])
    assert code == 2
    assert read_report(tmp_path / "verify_report.txt")["failure"]["node"] == 12


def test_verify_exact_constant(tmp_path):
    rows = ["node,x,value"] + [f"{i},0.0,1.0" for i in range(50)]
    (tmp_path / "one.csv").write_text("\n".join(rows) + "\n")
    code = cli.main(["verify", "--config", str(CONFIGS / "constant.yaml"), "--solution", str(tmp_path / "one.csv"),
                     "--out", str(tmp_path)])
    assert code == 0
    rep = read_report(tmp_path / "verify_report.txt")
    assert rep["interior_sup"] == 0.0 and rep["boundary_sup"] == 0.0


def test_verify_rejects_wrong_node_count(tmp_path):
    (tmp_path / "short.csv").write_text("node,x,value\n0,0.0,1.0\n")
    code = cli.main(["verify", "--config", str(CONFIGS / "constant.yaml"), "--solution", str(tmp_path / "short.csv"),
                     "--out", str(tmp_path)])
    assert code == 2


def test_dual_exponents_and_terms(tmp_path):
    assert cli.main(["dual", "--config", str(CONFIGS / "radial.yaml"), "--out", str(tmp_path)]) == 0
    rep = read_report(tmp_path / "dual_report.txt")
    assert (rep["sigma"], rep["tau"]) == (9.0, -3.0)
    terms = sorted((c[0], q) for c, q in rep["g_terms"])
    assert terms == sorted([(-1.0, 1.5), (1.0, -1.0)])
    for c, _ in rep["g_terms"]:
        assert len(set(c)) == 1


def test_dual_of_dual_is_byte_identical(tmp_path):
    first = tmp_path / "first"
    second = tmp_path / "second"
    assert cli.main(["dual", "--config", str(CONFIGS / "radial.yaml"), "--out", str(first)]) == 0
    raw = yaml.safe_load((CONFIGS / "radial.yaml").read_text())
    cfg = write_yaml(tmp_path / "dual.yaml", {"mesh": raw["mesh"], "coefficients": "first/dual_coefficients.yaml"})
    assert cli.main(["dual", "--config", str(cfg), "--out", str(second)]) == 0
    assert (second / "dual_coefficients.yaml").read_bytes() == (first / "coefficients.yaml").read_bytes()


def test_reports_are_deterministic(tmp_path):
    for name in ("a", "b"):
        assert cli.main(["barriers", "--config", str(CONFIGS / "radial_bump.yaml"), "--out", str(tmp_path / name)]) == 0
    for f in ("barriers_report.txt", "barriers.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_iteration_budget_maps_to_scheme_exit(tmp_path):
    code = cli.main(["solve", "--config", str(CONFIGS / "constant.yaml"), "--max-iter", "1", "--out", str(tmp_path)])
    assert code == 6
    assert read_report(tmp_path / "solve_report.txt")["failure"]["kind"] == "nonconvergence"


def test_csv_format_prints_field(tmp_path, capsys):
    assert cli.main(["solve", "--config", str(CONFIGS / "constant.yaml"), "--format", "csv",
                     "--out", str(tmp_path)]) == 0
    assert capsys.readouterr().out == (tmp_path / "solution.csv").read_text()


@pytest.mark.parametrize("flag", [["--theta", "1.5"], ["--theta", "x"], ["--tol", "0"], ["--exhaustion", "0"]])
def test_bad_flags_exit_config(tmp_path, flag):
    shutil.copy(CONFIGS / "constant.yaml", tmp_path / "c.yaml")
    assert cli.main(["solve", "--config", str(tmp_path / "c.yaml"), "--out", str(tmp_path), *flag]) == 2


@pytest.mark.parametrize("exc, code", [
    (HypothesisFailure("x"), 4), (ConstructionFailure("x"), 5), (SchemeFailure("x"), 6), (NonConvergence("x"), 6),
    (NumericError("x"), 3), (InvalidArgument("x"), 2), (DomainError("x"), 2), (ConfigError("x"), 2)])
def test_exit_code_mapping(exc, code):
    assert cli.exit_code(exc) == code


def test_verify_uses_the_solved_theta(tmp_path):
    cfg = str(CONFIGS / "radial_bump.yaml")
    assert cli.main(["solve", "--config", cfg, "--out", str(tmp_path)]) == 0
    theta = read_report(tmp_path / "solve_report.txt")["theta"]
    sol = str(tmp_path / "solution.csv")
    assert cli.main(["verify", "--config", cfg, "--solution", sol, "--out", str(tmp_path)]) == 0
    assert read_report(tmp_path / "verify_report.txt")["theta"] == theta
    # the same field does not solve the unmodulated equation
    assert cli.main(["verify", "--config", cfg, "--solution", sol, "--theta", "1", "--out", str(tmp_path)]) == 1
