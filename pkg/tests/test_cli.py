import json

import pytest

from dqcsim.cli import (
    EXIT_FAIL,
    EXIT_INPUT,
    EXIT_OK,
    EXIT_USAGE,
    main,
)
from dqcsim.graphs import GraphTopology, build_linear_cluster, graph_to_json


def _read(path):
    with open(path) as fh:
        return fh.read()


def test_run_bfk_writes_result(tmp_path):
    out = tmp_path / "r.json"
    code = main(["run", "bfk", "--angles", "3", "--seed", "1",
                 "--out", str(out)])
    assert code == EXIT_OK
    obj = json.loads(_read(out))
    assert obj["protocol"] == "bfk" and obj["accepted"] is True
    assert obj["output"]["dims"] == [2]


def test_run_determinism_byte_identical(tmp_path):
    for proto, extra in [
        ("bfk", ["--angles", "3"]),
        ("dmpqc", ["--clients", "ps,rm"]),
        ("dbsp", ["--setting", "mixed", "--clients", "ps,rm,ps"]),
        ("vbdqc", ["--setting", "rm", "--angles", "2"]),
    ]:
        a = tmp_path / f"{proto}-a.json"
        b = tmp_path / f"{proto}-b.json"
        args = ["run", proto, "--seed", "7", *extra]
        assert main([*args, "--out", str(a)]) == EXIT_OK
        assert main([*args, "--out", str(b)]) == EXIT_OK
        assert _read(a) == _read(b)


def test_run_dbsp_theta_recomputable_from_records(tmp_path):
    out = tmp_path / "d.json"
    assert main(["run", "dbsp", "--setting", "mixed", "--clients", "ps,rm",
                 "--seed", "5", "--out", str(out)]) == EXIT_OK
    obj = json.loads(_read(out))
    rec = obj["records"]
    theta = 0
    for kind, th, r, s in zip(rec["kinds"], rec["theta_c"], rec["r"],
                              rec["s"]):
        if kind == "PS":
            theta += (-1) ** s * th
        else:
            theta += th + 4 * r
    assert obj["theta"] == theta % 8


def test_run_unknown_protocol_is_usage_error(capsys):
    assert main(["run", "nosuch"]) == EXIT_USAGE


def test_run_malformed_graph_is_input_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{broken")
    assert main(["run", "bfk", "--graph", str(bad)]) == EXIT_INPUT


def test_run_bad_angle_is_input_error():
    assert main(["run", "bfk", "--angles", "9"]) == EXIT_INPUT


def test_run_bad_clients_is_input_error():
    assert main(["run", "dmpqc", "--clients", "ps,zz"]) == EXIT_INPUT


def test_verify_single_check_passes(tmp_path):
    out = tmp_path / "v.json"
    assert main(["verify", "kraus", "--seed", "3",
                 "--out", str(out)]) == EXIT_OK
    lines = _read(out).strip().splitlines()
    assert len(lines) == 1
    obj = json.loads(lines[0])
    assert obj["check"] == "kraus" and obj["pass"] is True
    assert obj["deviation"] <= obj["tolerance"]


def test_verify_unknown_check_is_usage_error():
    assert main(["verify", "nosuch"]) == EXIT_USAGE


def test_verify_deterministic(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    args = ["verify", "kraus", "identities", "dt-graph", "--seed", "9"]
    assert main([*args, "--out", str(a)]) == EXIT_OK
    assert main([*args, "--out", str(b)]) == EXIT_OK
    assert _read(a) == _read(b)


def test_graph_emits_dt_of_single_edge(tmp_path):
    base = tmp_path / "base.json"
    base.write_text(json.dumps(graph_to_json(build_linear_cluster(2))))
    out = tmp_path / "dt.json"
    assert main(["graph", "--graph", str(base), "--seed", "5",
                 "--out", str(out)]) == EXIT_OK
    obj = json.loads(_read(out))
    assert len(obj["nodes"]) == 15
    assert len(obj["edges"]) == 18


def test_graph_empty_input_gives_empty_output(tmp_path):
    base = tmp_path / "empty.json"
    base.write_text(json.dumps(graph_to_json(GraphTopology((), (), (), ()))))
    out = tmp_path / "dt.json"
    assert main(["graph", "--graph", str(base), "--out", str(out)]) == EXIT_OK
    obj = json.loads(_read(out))
    assert obj["nodes"] == [] and obj["edges"] == []


def test_graph_same_seed_same_colouring(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    assert main(["graph", "--seed", "5", "--out", str(a)]) == EXIT_OK
    assert main(["graph", "--seed", "5", "--out", str(b)]) == EXIT_OK
    assert _read(a) == _read(b)


def test_pretty_flag_changes_formatting_not_content(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    assert main(["run", "bfk", "--angles", "1", "--seed", "2",
                 "--out", str(a)]) == EXIT_OK
    assert main(["run", "bfk", "--angles", "1", "--seed", "2", "--pretty",
                 "--out", str(b)]) == EXIT_OK
    assert _read(a) != _read(b)
    assert json.loads(_read(a)) == json.loads(_read(b))


def test_missing_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == EXIT_USAGE
