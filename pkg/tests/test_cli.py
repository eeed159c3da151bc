import json

import pytest

from chambercomplex.cli import main, window_extents
from chambercomplex.documents import document_for
from chambercomplex.fixtures import pants_swap_spec


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_window_extents_mapping():
    assert window_extents(1) == ((1, 4),)
    assert window_extents(2) == ((2, 8), (1, 4))
    assert window_extents(3) == ((3, 12), (1, 6))
    assert window_extents(4) == ((4, 16), (2, 8), (1, 4))
    with pytest.raises(ValueError):
        window_extents(0)


def test_dist_identical_cells_prints_zero(capsys):
    code, out, _ = run(capsys, "dist", "/e/0", "/e/0")
    assert code == 0
    assert out == "0\n"


def test_dist_json_fields(capsys):
    code, out, _ = run(capsys, "dist", "/e/0", "W1.0/a/2", "--json", "--window", "2")
    assert code == 0
    obj = json.loads(out)
    assert obj["command"] == "dist"
    assert obj["length"]["t"] == 1
    assert "/" in obj["dist"] or obj["dist"].isdigit()
    assert obj["dist_prime"] != obj["dist"]  # one chamber step at J > 0


def test_unknown_subcommand_exits_2(capsys):
    code, _, _ = run(capsys, "frobnicate")
    assert code == 2


def test_bad_cell_address_exits_2(capsys):
    code, _, err = run(capsys, "dist", "/e/0", "not-an-address")
    assert code == 2
    assert "error:" in err


def test_budget_exhausted_exits_3(capsys):
    code, _, err = run(capsys, "dist", "/e/0", "W1.0/a/2", "--budget", "500")
    assert code == 3
    assert "budget" in err


def test_tb_order_example(capsys):
    code, out, _ = run(capsys, "tb", "order", "--matrix", "1,1,0,1", "--k", "1")
    assert code == 0
    assert out == "3\n"
    code, out, _ = run(capsys, "tb", "order", "--matrix", "0,-1,1,0", "--k", "1")
    assert out == "4\n"
    code, out, _ = run(capsys, "tb", "order", "--matrix", "0,-1,1,0", "--k", "1",
                       "--method", "constructive")
    assert out == "4\n"


def test_tb_order_rejects_non_sl2(capsys):
    code, _, err = run(capsys, "tb", "order", "--matrix", "2,0,0,2", "--k", "1")
    assert code == 2
    assert "determinant" in err


def test_tb_power_matches_group_law(capsys):
    code, out, _ = run(capsys, "tb", "power", "--matrix", "1,1,0,1",
                       "--element", "1,0,1", "--i", "3")
    assert code == 0
    assert out == "((3, 0), 3)\n"
    code, out, _ = run(capsys, "tb", "power", "--matrix", "1,1,0,1",
                       "--element", "1,0,1", "--i", "0")
    assert out == "((0, 0), 0)\n"


def test_tb_loops_output(capsys):
    code, out, _ = run(capsys, "tb", "loops", "--matrix", "1,0,0,1",
                       "--k", "1", "--element", "1,0,0")
    assert code == 0
    obj = json.loads(out)
    assert obj["count"] == 3
    assert obj["degrees"] == [3, 3, 3]
    assert obj["m"] == 3


def test_geodesics_single_column(capsys):
    code, out, _ = run(capsys, "geodesics", "/e/0", "/e/3", "--window", "1")
    assert code == 0
    obj = json.loads(out)
    assert obj["count"] == 1
    assert obj["geodesics"][0]["kinds"] == "SSS"
    assert obj["geodesics"][0]["value"] == "3/8"


def test_ball_counts(capsys):
    code, out, _ = run(capsys, "ball", "--R", "3", "--window", "1")
    assert code == 0
    obj = json.loads(out)
    assert obj["count"] == len(obj["cells"]) == 45  # whole ((1,4),) window


def test_validate_fixture_ok(capsys):
    code, out, _ = run(capsys, "validate")
    assert code == 0
    obj = json.loads(out)
    assert obj["ok"] is True
    assert obj["deck"]["ok"] is True
    assert obj["document"]["schema"] == "graph-manifold-complex/1"


def test_validate_bad_document_exits_2(tmp_path, capsys):
    doc = document_for(pants_swap_spec()).to_obj()
    doc["gluings"][0]["matrix"] = [[2, 0], [0, 1]]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "validate", "--spec", str(path))
    assert code == 2
    assert "gluing-det" in err
    assert "$.gluings[0].matrix" in err


def test_spec_file_round_trip(tmp_path, capsys):
    path = tmp_path / "pants.json"
    path.write_text(document_for(pants_swap_spec()).canonical())
    code, out, _ = run(capsys, "dist", "--spec", str(path), "/e/0", "/e/2")
    assert code == 0
    assert out == "1/4\n"


def test_verify_convexity_defaults_pass(capsys):
    code, out, _ = run(capsys, "verify", "convexity")
    assert code == 0
    obj = json.loads(out)
    assert obj["verdict"] == "pass"
    assert obj["witnesses"] == []


def test_verify_fail_emits_witnesses_that_replay(tmp_path, capsys):
    regime = ["--eta", "4", "--H", "1/2", "--J", "1", "--window", "2"]
    report_path = tmp_path / "report.json"
    code, _, _ = run(capsys, "verify", "chain-shadow", *regime, "--out", str(report_path))
    assert code == 1
    report = json.loads(report_path.read_text())
    assert report["verdict"] == "fail"
    assert report["witnesses"]
    code, out, _ = run(capsys, "verify", "chain-shadow", *regime,
                       "--replay", str(report_path))
    assert code == 1  # same verdict on replay
    replay = json.loads(out)
    assert replay["confirmed"] == replay["replayed"] == len(report["witnesses"])


def test_verify_replay_single_witness_file(tmp_path, capsys):
    regime = ["--eta", "4", "--H", "1/2", "--J", "1", "--window", "2"]
    report_path = tmp_path / "report.json"
    run(capsys, "verify", "chain-shadow", *regime, "--out", str(report_path))
    witness = json.loads(report_path.read_text())["witnesses"][0]
    wpath = tmp_path / "w.json"
    wpath.write_text(json.dumps(witness))
    code, out, _ = run(capsys, "verify", "chain-shadow", *regime, "--replay", str(wpath))
    assert code == 1
    assert json.loads(out)["replayed"] == 1


def test_estimate_c0_deterministic(capsys):
    code, out1, _ = run(capsys, "estimate-c0", "--fixture", "shear")
    code2, out2, _ = run(capsys, "estimate-c0", "--fixture", "shear")
    assert code == code2 == 0
    assert out1 == out2
    obj = json.loads(out1)
    assert obj["gluings"][0]["condition"] == "C"
    assert set(obj["gluings"][0]["clauses"]) == set("abcdefg")


def test_suite_runs_are_byte_identical(tmp_path, capsys):
    p1, p2 = tmp_path / "s1.json", tmp_path / "s2.json"
    code1, out1, _ = run(capsys, "suite", "--out", str(p1))
    code2, out2, _ = run(capsys, "suite", "--out", str(p2))
    assert code1 == code2 == 0
    assert out1 == out2 == ""  # --out writes the file, not stdout
    assert p1.read_bytes() == p2.read_bytes()
    obj = json.loads(p1.read_text())
    assert obj["ok"] is True
    assert [r["lemma"] for r in obj["reports"]][:1] == ["wall-constants-0"]


def test_export_graph_json_matches_dot(capsys):
    code, out_json, _ = run(capsys, "export-graph", "--window", "1")
    assert code == 0
    obj = json.loads(out_json)
    code, out_dot, _ = run(capsys, "export-graph", "--window", "1", "--format", "dot")
    assert code == 0
    # graph header + one line per node + one per edge + closing brace
    assert len(out_dot.splitlines()) == 2 + len(obj["nodes"]) + len(obj["edges"])
    code, out_dot2, _ = run(capsys, "export-graph", "--window", "1", "--format", "dot")
    assert out_dot2 == out_dot


def test_deck_reports_linear_growth(capsys):
    code, out, _ = run(capsys, "deck", "--window", "2")
    assert code == 0
    obj = json.loads(out)
    assert obj["lattice"]["ok"] is True
    assert obj["displacement"]["c_hat"] == "1/8"
    assert len(obj["displacement"]["rows"]) == 8


def test_eta_override_changes_distances(capsys):
    _, out_default, _ = run(capsys, "dist", "/e/0", "/e/2")
    _, out_heavy, _ = run(capsys, "dist", "/e/0", "/e/2", "--eta", "3")
    assert out_default == "1/4\n"
    assert out_heavy == "6\n"
