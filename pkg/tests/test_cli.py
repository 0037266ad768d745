import json
from pathlib import Path

import pytest

from modinv.cli import main
from modinv.ir import parse

GOLDEN = Path(__file__).parent / "data" / "golden_trace_p37_x13.tsv"


def run(capsys, *argv):
    rc = main(list(argv))
    out, err = capsys.readouterr()
    return rc, out, err


def test_trace_golden(capsys):
    rc, out, _ = run(capsys, "trace", "--prime", "37", "--x", "13")
    assert rc == 0
    assert out == GOLDEN.read_text()


def test_trace_circuit_matches_model(capsys):
    _, model, _ = run(capsys, "trace", "--prime", "37", "--x", "13")
    rc, circuit, _ = run(capsys, "trace", "--prime", "37", "--x", "13", "--circuit")
    assert rc == 0 and circuit == model


def test_verify_all(capsys):
    rc, out, _ = run(capsys, "verify", "--prime", "37", "--all")
    assert rc == 0
    assert out.strip().endswith("36/36 pass")


def test_verify_one(capsys):
    rc, out, _ = run(capsys, "verify", "--prime", "37", "--x", "13", "--oracle")
    assert rc == 0 and out.strip() == "13 -> 20 pass"


def test_verify_cap(capsys):
    rc, _, err = run(capsys, "verify", "--prime", "8209", "--all")
    assert rc == 2 and "cap" in err


def test_simulate_json(capsys):
    rc, out, _ = run(capsys, "simulate", "--prime", "37", "--x", "13", "--format", "json")
    rec = json.loads(out)
    assert rc == 0
    assert rec["output"] == 20 and rec["ancillas_clean"] and rec["input_restored"]


@pytest.mark.parametrize("argv", [
    ["verify", "--prime", "35", "--x", "2"],
    ["simulate", "--n", "2", "--x", "1"],
    ["simulate", "--prime", "37", "--x", "40"],
    ["estimate", "--n", "4"],
    ["estimate"],
    ["verify", "--prime", "37"],
])
def test_usage_errors(capsys, argv):
    rc, _, err = run(capsys, *argv)
    assert rc == 2 and err.startswith("error:")


def test_synth_text_and_manifest(capsys, tmp_path):
    out = tmp_path / "c.txt"
    rc, _, err = run(capsys, "synth", "--prime", "13", "--out", str(out))
    assert rc == 0 and "width=" in err
    c = parse(out.read_text())
    assert c.width > 0 and len(c.gates) > 0
    assert all(g.kind == "not" and len(g.controls) <= 2 for g in c.gates)
    man = json.loads((tmp_path / "c.txt.manifest.json").read_text())
    assert man["p"] == 13 and man["schedule"]["steps"] == len(man["windows"])


def test_synth_json(capsys, tmp_path):
    out = tmp_path / "c.json"
    rc, _, _ = run(capsys, "synth", "--n", "4", "--format", "json", "--out", str(out))
    data = json.loads(out.read_text())
    assert rc == 0 and data["width"] > 0 and "work1" in data["layout"]


def test_count_json_per_block(capsys):
    rc, out, _ = run(capsys, "count", "--prime", "13", "--per-block", "--format", "json")
    data = json.loads(out)
    assert rc == 0
    assert data["toffoli"] == sum(b["toffoli"] for b in data["blocks"].values())
    assert {"r-addsub", "t-addsub", "loc-swap", "len-lt", "len-lrp"} <= set(data["blocks"])


def test_count_tsv(capsys):
    rc, out, _ = run(capsys, "count", "--n", "5", "--format", "tsv")
    head, row = out.splitlines()[:2]
    assert rc == 0 and head.split("\t")[:3] == ["n", "p", "width"]
    assert row.split("\t")[:2] == ["5", "31"]


def test_estimate_ecdlp(capsys):
    rc, out, _ = run(capsys, "estimate", "--n", "256", "--ecdlp", "--format", "json")
    rep = json.loads(out)
    assert rc == 0
    assert rep["ecdlp_width"]["value"] == 1333 and rep["inversion_width"]["value"] == 820


def test_estimate_table_tsv(capsys, tmp_path):
    out = tmp_path / "t.tsv"
    rc, _, _ = run(capsys, "estimate", "--table", "--out", str(out))
    lines = out.read_text().splitlines()
    assert rc == 0 and lines[0].startswith("n\t") and len(lines) == 10


def test_model_trace(capsys):
    rc, out, _ = run(capsys, "model-trace", "--prime", "37", "--x", "13", "--format", "json")
    rec = json.loads(out)
    assert rc == 0
    assert rec["quotients"] == [2, 1, 5, 2] and rec["active_steps"] == 32
    assert rec["schedule_steps"] == 36


def test_verify_composite_without_mode(capsys):
    rc, _, _ = run(capsys, "verify", "--prime", "35")
    assert rc == 2


def test_x_one_uses_minimum_steps(capsys):
    rc, out, _ = run(capsys, "model-trace", "--prime", "37", "--x", "1", "--format", "json")
    assert rc == 0 and json.loads(out)["active_steps"] == 24


def test_streamed_count_matches_serialized_circuit(capsys, tmp_path):
    from modinv.ir import count

    out = tmp_path / "c8.txt"
    run(capsys, "synth", "--n", "8", "--out", str(out))
    rep = count(parse(out.read_text()))
    rc, text, _ = run(capsys, "count", "--n", "8", "--format", "json")
    data = json.loads(text)
    assert rc == 0
    assert (data["toffoli"], data["cnot"], data["x"]) == (rep.toffoli, rep.cnot, rep.x)
    assert data["width"] == rep.width


def test_outputs_are_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    run(capsys, "synth", "--prime", "37", "--out", str(a))
    run(capsys, "synth", "--prime", "37", "--out", str(b))
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.txt.manifest.json").read_bytes() == (tmp_path / "b.txt.manifest.json").read_bytes()
    _, e1, _ = run(capsys, "estimate", "--table", "--format", "json")
    _, e2, _ = run(capsys, "estimate", "--table", "--format", "json")
    assert e1 == e2
