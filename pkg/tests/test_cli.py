import json

import pytest

from sdgdyn import format_sdg, load_fds, save_fds
from sdgdyn.cli import main

import helpers


@pytest.fixture()
def eight_vertex_file(tmp_path):
    path = tmp_path / "example.sdg"
    path.write_text(format_sdg(helpers.eight_vertex_example()))
    return str(path)


@pytest.fixture()
def double_loop_file(tmp_path):
    path = tmp_path / "loops.sdg"
    path.write_text(format_sdg(helpers.double_loop_example()))
    return str(path)


def test_analyze_reports_lambda_beta(eight_vertex_file, capsys):
    assert main(["analyze", "--graph", eight_vertex_file]) == 0
    out = capsys.readouterr().out
    assert "lambda: 3" in out
    assert "beta: 1" in out
    assert "initial components: {1,2,3} {4,5} {6}" in out


def test_analyze_json(eight_vertex_file, capsys):
    assert main(["analyze", "--graph", eight_vertex_file, "--json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["lambda"] == 3 and report["beta"] == 1
    assert report["cycles"]["total"] == len(
        __import__("sdgdyn").enumerate_cycles(helpers.eight_vertex_example())
    )


def test_synth_nilpotent_double_loop(double_loop_file, tmp_path, capsys):
    out = tmp_path / "loops.fds.json"
    code = main(
        ["synth-nilpotent", "--graph", double_loop_file, "--out", str(out)]
    )
    assert code == 0
    text = capsys.readouterr().out
    assert "nilpotent, index 2" in text
    doc = json.loads(out.read_text())
    assert doc["intervals"] == [[0, 2]]
    assert doc["tables"] == [[0, 2, 0]]
    cert = json.loads((tmp_path / "loops.fds.cert.json").read_text())
    assert cert["lambda"] == 1 and cert["beta"] == 1
    assert cert["xi"] == [0]


def test_synth_then_verify_roundtrip(eight_vertex_file, tmp_path, capsys):
    out = tmp_path / "f.json"
    assert main(["synth-nilpotent", "--graph", eight_vertex_file, "--out", str(out)]) == 0
    capsys.readouterr()
    assert main(["verify", "--graph", eight_vertex_file, "--fds", str(out)]) == 0
    text = capsys.readouterr().out
    assert "PASS: interaction graph matches" in text
    assert "PASS: degree bounds hold" in text
    assert "PASS: certificate verifies" in text
    assert "nilpotency index: 4" in text


def test_verify_detects_corruption(eight_vertex_file, tmp_path, capsys):
    out = tmp_path / "f.json"
    main(["synth-nilpotent", "--graph", eight_vertex_file, "--out", str(out)])
    capsys.readouterr()
    doc = json.loads(out.read_text())
    doc["tables"][0][0] = 1 - doc["tables"][0][0]  # flip one entry
    out.write_text(json.dumps(doc))
    assert main(["verify", "--graph", eight_vertex_file, "--fds", str(out)]) == 1
    text = capsys.readouterr().out
    assert "FAIL" in text


def test_synth_converge_cli(tmp_path, capsys):
    g, cycle = __import__("test_synthesis").fig_case1_instance()
    from sdgdyn import cycle_subsystem

    sub, h = cycle_subsystem(g, [cycle])
    gpath = tmp_path / "g.sdg"
    gpath.write_text(format_sdg(g))
    hpath = tmp_path / "h.json"
    save_fds(h, str(hpath))
    fpath = tmp_path / "f.json"
    code = main(
        [
            "synth-converge",
            "--graph", str(gpath),
            "--sub", str(hpath),
            "--out", str(fpath),
        ]
    )
    assert code == 0
    assert "converges toward subsystem in at most 4 steps" in capsys.readouterr().out
    capsys_out = main(
        [
            "verify",
            "--graph", str(gpath),
            "--fds", str(fpath),
            "--sub", str(hpath),
            "--steps", "4",
        ]
    )
    assert capsys_out == 0
    assert "PASS: converges toward subsystem in 4 steps" in capsys.readouterr().out


def test_synth_fixed_points_cli(tmp_path, capsys):
    from sdgdyn import SignedDigraph

    g = SignedDigraph.from_arcs([("1", "2", "+"), ("2", "1", "-"), ("1", "3", "+")])
    gpath = tmp_path / "g.sdg"
    gpath.write_text(format_sdg(g))
    assert main(["synth-fixed-points", "--graph", str(gpath), "--cycles", "0"]) == 0
    assert "0 fixed points" in capsys.readouterr().out

    g2 = SignedDigraph.from_arcs([("1", "2", "+"), ("2", "1", "+"), ("1", "3", "+")])
    g2path = tmp_path / "g2.sdg"
    g2path.write_text(format_sdg(g2))
    assert main(["synth-fixed-points", "--graph", str(g2path), "--cycles", "1"]) == 0
    assert "2 fixed points" in capsys.readouterr().out


def test_precondition_violation_exit_code(tmp_path, capsys):
    from sdgdyn import SignedDigraph, constant_fds, IntervalProduct
    from sdgdyn.fds import Fds
    import numpy as np

    # the arc-removal impossibility pattern: exit status 3
    g = SignedDigraph.from_arcs([("1", "2", "+"), ("2", "3", "+")])
    sub_h = Fds(
        IntervalProduct(((0, 1), (0, 1), (0, 0))),
        (
            np.zeros(4, dtype=np.int64),
            np.array([0, 0, 1, 1], dtype=np.int64),
            np.zeros(4, dtype=np.int64),
        ),
    )
    gpath = tmp_path / "g.sdg"
    gpath.write_text(format_sdg(g))
    hpath = tmp_path / "h.json"
    save_fds(sub_h, str(hpath))
    code = main(["synth-converge", "--graph", str(gpath), "--sub", str(hpath)])
    assert code == 3
    assert "error" in capsys.readouterr().err


def test_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.sdg"
    bad.write_text("not a graph\n")
    assert main(["analyze", "--graph", str(bad)]) == 2
    assert main(["analyze", "--graph", str(tmp_path / "missing.sdg")]) == 2


def test_cap_exit_code(eight_vertex_file, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SDG_CAP", "100")
    code = main(["synth-nilpotent", "--graph", eight_vertex_file])
    assert code == 4
    monkeypatch.delenv("SDG_CAP")


def test_enumerate_cli(tmp_path, capsys):
    from sdgdyn import SignedDigraph

    g = SignedDigraph.from_arcs([("1", "2", "+"), ("2", "1", "-")])
    gpath = tmp_path / "cycle.sdg"
    gpath.write_text(format_sdg(g))
    assert main(["enumerate", "--graph", str(gpath), "--json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["count"] == 1
    assert report["systems"][0]["fixed_points"] == 0
    assert report["systems"][0]["nilpotency_index"] is None


def test_export_dot_cli(eight_vertex_file, tmp_path, capsys):
    out = tmp_path / "g.dot"
    assert main(["export-dot", "--graph", eight_vertex_file, "--out", str(out)]) == 0
    text = out.read_text()
    assert text.startswith("digraph")
    assert "color=green" in text and "color=red" in text


def test_output_roundtrip_identical_verdicts(double_loop_file, tmp_path, capsys):
    out = tmp_path / "f.json"
    main(["synth-nilpotent", "--graph", double_loop_file, "--out", str(out)])
    capsys.readouterr()
    f = load_fds(str(out))
    save_fds(f, str(out))  # rewrite, then verify again
    assert main(["verify", "--graph", double_loop_file, "--fds", str(out)]) == 0
