import json

import pytest

from charsets.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_qhull(capsys):
    code, out, _ = run(capsys, "qhull", "--E", "1/5", "--m", "0")
    assert code == 0 and json.loads(out)["hull"] == ["0", "1/5", "4/5"]


def test_measure(capsys):
    code, out, _ = run(capsys, "measure", "--B", "factorial:3", "--delta", "1/4", "--levels", "1")
    assert code == 0 and json.loads(out)["measure"] == "1/2"


def test_perp_snf_expand(capsys):
    code, out, _ = run(capsys, "perp", "--H", "(1/2,1/3)")
    assert code == 0 and sorted(json.loads(out)["perp"]) == [[0, 3], [2, 0]]
    code, out, _ = run(capsys, "snf", "--M", "[[2,4],[6,8]]")
    assert json.loads(out)["D"] == [["2", "0"], ["0", "4"]]
    code, out, _ = run(capsys, "expand", "--x", "1/3", "--N", "4")
    assert json.loads(out)["digits"] == [0, 2, 0, 0]


def test_characterize_then_verify(tmp_path, capsys):
    tower = tmp_path / "tower.json"
    tower.write_text(json.dumps({"generators": ["1/2"], "refine": 2}))
    B, certs = tmp_path / "B.json", tmp_path / "certs.json"
    code, _, _ = run(capsys, "characterize", "--tower", str(tower), "--levels", "4",
                     "--out", str(B), "--certs", str(certs))
    assert code == 0
    first = B.read_bytes()
    # same config, byte-identical output
    run(capsys, "characterize", "--tower", str(tower), "--levels", "4", "--out", str(B))
    assert B.read_bytes() == first
    code, out, _ = run(capsys, "verify-cert", "--certs", str(certs))
    assert code == 0 and json.loads(out)["verified"]
    csv = tmp_path / "p.csv"
    code, out, _ = run(capsys, "verify", "--B", str(B), "--x", "1/3", "--csv", str(csv))
    assert code == 0 and json.loads(out)["verdict"] == "witness-found"
    assert csv.read_text().startswith("level,phi,value,err\n")

    obj = json.loads(certs.read_text())
    obj["levels"][1]["arcs"][0][1] = "1/25"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(obj))
    code, _, err = run(capsys, "verify-cert", "--certs", str(bad))
    assert code == 1 and "arc [" in err


def test_invalid_inputs(tmp_path, capsys):
    assert run(capsys, "qhull", "--E", "{bad")[0] == 1
    assert run(capsys, "nonsense")[0] == 1
    p = tmp_path / "b.json"
    p.write_text('{"levels": [[1, 2]')
    code, _, err = run(capsys, "verify", "--B", str(p), "--x", "1/3")
    assert code == 1 and "line 1" in err
    p.write_text('{"dim": 1}')
    code, _, err = run(capsys, "verify", "--B", str(p), "--x", "1/3")
    assert code == 1 and "'levels'" in err
    code, _, err = run(capsys, "verify-cert", "--certs", '{"levels": [{"n": 0}]}')
    assert code == 1 and "levels[0]" in err
    assert run(capsys, "characterize", "--tower", '{"generators": ["1/2"]}', "--pool", "0")[0] == 1


def test_budget_exhaustion_exit_2(tmp_path, capsys):
    out = tmp_path / "B.json"
    code, _, err = run(capsys, "characterize", "--tower", '{"generators": ["1/2"], "refine": 2}',
                       "--levels", "6", "--max-pool", "1", "--pool", "1", "--max-depth", "1",
                       "--out", str(out))
    assert code == 2
    assert json.loads(out.read_text())["partial"] is True


def test_chain_commands(tmp_path, capsys):
    chain = tmp_path / "c.json"
    chain.write_text(json.dumps({"ambient": "omega", "truncation": 4,
                                 "stages": [[1, 1, 1, 1], ["T", 1, 1, 1], ["T", "T", 1, 1],
                                            ["T", "T", "T", 1]]}))
    code, out, _ = run(capsys, "check-chain", "--chain", str(chain))
    assert code == 0 and json.loads(out)["holds"] is False
    code, out, _ = run(capsys, "refute", "--chain", str(chain))
    assert code == 0 and json.loads(out)["verified"] is True
    dy = tmp_path / "d.json"
    dy.write_text(json.dumps({"stages": [{"generators": ["1/2"]}, {"generators": ["1/4"]}]}))
    assert run(capsys, "refute", "--chain", str(dy))[0] == 1


def test_levels_flag_reaches_tower_builder(capsys):
    code, out, _ = run(capsys, "characterize", "--tower", '{"generators": ["1/2"], "refine": 2}',
                       "--levels", "10")
    assert code == 0 and len(json.loads(out)["levels"]) == 10


def test_seed_after_subcommand(capsys):
    code, out, _ = run(capsys, "measure", "--B", "list:1,2", "--delta", "1/8", "--samples", "1000",
                       "--seed", "5")
    assert code == 0 and json.loads(out)["seed"] == 5
