import json

import numpy as np
import pytest

from qpv import io
from qpv.cli import main
from qpv.pmpv import convert, xi_matrix
from qpv.strategies import CANNED_NAMES, canned, diagonal_filter_protocol, spectral_gap


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gap_prints_quarter(capsys):
    code, out, _ = run(capsys, "gap", "--protocol", "cnot")
    assert code == 0 and out == "0.25\n"


def test_plan_prints_1840_first(capsys):
    code, out, _ = run(capsys, "plan", "--epsilon", "0.01", "--delta", "0.01", "--nu", "0.25")
    assert code == 0
    assert out.splitlines()[0] == "1840"
    assert out.splitlines()[1].startswith("approx 1842.06")


@pytest.mark.parametrize("name", CANNED_NAMES)
def test_build_round_trip(name, tmp_path, capsys):
    out = tmp_path / "s.json"
    assert main(["build", "--protocol", name, "--out", str(out)]) == 0
    s = io.strategy_from_json(io.load_file(out))
    assert io.dumps(io.strategy_to_json(s)) == out.read_text()
    assert np.allclose(s.matrix().data, canned(name).matrix().data, atol=1e-15)
    code, text, _ = run(capsys, "gap", "--protocol", str(out))
    assert code == 0
    assert float(text) == pytest.approx(spectral_gap(canned(name)), abs=1e-11)


def test_build_from_circuit(tmp_path, capsys):
    circ = tmp_path / "c.json"
    circ.write_text(json.dumps({"n": 2, "gates": [["CNOT", 0, 1]]}))
    code, out, _ = run(capsys, "gap", "--circuit", str(circ))
    assert code == 0 and float(out) == pytest.approx(0.25)
    code, out, _ = run(capsys, "gap", "--circuit", str(circ), "--full")
    assert float(out) == pytest.approx(8 / 15)


def test_convert_round_trip(tmp_path):
    out = tmp_path / "x.json"
    assert main(["convert", "--protocol", "phase", "--out", str(out)]) == 0
    data = io.load_file(out)
    assert sorted(e["input"][0] for e in data["entries"]) == ["+", "-", "0", "1"]
    x = io.pmpv_from_json(data)
    assert np.allclose(xi_matrix(x).data, xi_matrix(convert(canned("phase"))).data, atol=1e-15)


def test_pmpv_json_accepts_named_and_raw_states():
    data = {"d": 2, "entries": [
        {"p": 0.5, "input": "0", "pass_effect": {"matrix": [[1, 0], [0, 0]]}},
        {"p": 0.5, "input": {"vector": [[0, 0], [1, 0]]},
         "pass_effect": {"matrix": [[0, 0], [0, 1]]}}]}
    x = io.pmpv_from_json(data)
    assert np.allclose(xi_matrix(x).data, np.diag([0.5, 0, 0, 0.5]))
    data["entries"][0]["input"] = "−"
    io.pmpv_from_json(data)


def test_simulate_ideal_and_noisy(tmp_path, capsys):
    code, out, _ = run(capsys, "simulate", "--protocol", "cnot", "--rounds", "500", "--seed", "7")
    assert code == 0 and json.loads(out)["passes"] == 500
    code, out, _ = run(capsys, "simulate", "--protocol", "cnot", "--rounds", "2000",
                       "--noise", "depolarizing:0.3", "--format", "csv", "--epsilon", "0.05")
    assert code == 1
    assert out.splitlines()[1].split(",")[-1] == "1.0"


def test_simulate_postselected_strategy_file(tmp_path, capsys):
    path = tmp_path / "filter.json"
    path.write_text(io.dumps(io.strategy_to_json(diagonal_filter_protocol([1, 0.5]))))
    code, out, _ = run(capsys, "simulate", "--protocol", str(path), "--scheme", "pmpv",
                       "--rounds", "1000", "--mode", "local")
    data = json.loads(out)
    assert code == 0 and data["postselected"] and data["attempts"] > 1000


def test_seeded_commands_are_byte_identical(tmp_path):
    cmds = [
        ["simulate", "--protocol", "identity3", "--rounds", "3000", "--seed", "11",
         "--noise", "depolarizing:0.05", "--mode", "local"],
        ["simulate", "--protocol", "cnot", "--rounds", "3000", "--seed", "11", "--scheme",
         "pmpv", "--noise", "depolarizing:0.05", "--format", "csv", "--epsilon", "0.01"],
        ["oracle", "--protocol", "hadamard", "--epsilon", "0.1", "--trials", "300", "--seed", "3"],
        ["build", "--protocol", "dj_const1"],
        ["convert", "--protocol", "cnot"],
    ]
    for k, cmd in enumerate(cmds):
        a, b = tmp_path / f"a{k}", tmp_path / f"b{k}"
        main(cmd + ["--out", str(a)])
        main(cmd + ["--out", str(b)])
        assert a.read_bytes() == b.read_bytes()


def test_oracle_command(capsys):
    code, out, _ = run(capsys, "oracle", "--protocol", "cnot", "--epsilon", "0.1",
                       "--trials", "2000", "--noise", "depolarizing:0.04")
    data = json.loads(out)
    assert code == 0
    assert data["analytic"] == pytest.approx(0.975)
    assert data["subspace_max"] == pytest.approx(0.975, abs=1e-9)
    assert data["random_search_max"] <= data["subspace_max"] + 1e-9
    assert data["process_pass_probability"] == pytest.approx(0.98, abs=1e-12)


def test_verify_meas_command(tmp_path, capsys):
    povm = tmp_path / "povm.json"
    povm.write_text(json.dumps({"effects": [[[0.99, 0], [0, 0.01]], [[0.01, 0], [0, 0.99]]]}))
    code, out, _ = run(capsys, "verify-meas", "--povm", str(povm), "--epsilon", "0.05",
                       "--delta", "0.001", "--seed", "1")
    data = json.loads(out)
    assert data["N"] == 135 and data["fidelity"] == pytest.approx(0.99)
    assert code == (0 if data["fails"] == 0 else 1)
    perfect = tmp_path / "p.json"
    perfect.write_text(json.dumps({"effects": [[[1, 0], [0, 0]], [[0, 0], [0, 1]]]}))
    code, out, _ = run(capsys, "verify-meas", "--povm", str(perfect), "--target",
                       "computational", "--epsilon", "0.01", "--delta", "0.01")
    assert code == 0 and json.loads(out)["passes"] == 459


def test_report_recomputes_from_counts(tmp_path, capsys):
    path = tmp_path / "run.json"
    main(["simulate", "--protocol", "identity2", "--rounds", "459", "--out", str(path)])
    data = io.load_file(path)
    data["delta_bound"] = 0.5
    data["empirical_pass_rate"] = 0.1
    path.write_text(json.dumps(data))
    code, out, _ = run(capsys, "report", str(path), "--epsilon", "0.01")
    row = out.splitlines()[1].split()
    assert code == 0
    assert row[5] == "1.000000" and row[6] == "accept"
    nu = spectral_gap(canned("identity2"))
    assert float(row[-1]) == pytest.approx((1 - 0.01 * nu) ** 459, rel=1e-5)


@pytest.mark.parametrize("argv, field", [
    (["gap", "--protocol", "bogus"], "protocol"),
    (["gap"], "protocol"),
    (["plan", "--epsilon", "0.1", "--delta", "0.1"], "nu"),
    (["simulate", "--protocol", "cnot"], "rounds"),
    (["simulate", "--protocol", "cnot", "--rounds", "5", "--noise", "depol"], "depol"),
    (["oracle", "--protocol", "cnot"], "epsilon"),
    (["verify-meas", "--epsilon", "0.1", "--delta", "0.1"], "povm"),
    (["report", "--epsilon", "0.1"], "inputs"),
])
def test_input_errors_exit_2(argv, field, capsys):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert field in err


def test_malformed_files_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "gap", "--protocol", str(bad))
    assert code == 2 and "not valid JSON" in err
    partial = tmp_path / "partial.json"
    partial.write_text(json.dumps({"n_ancilla": 1, "n_system": 1, "tests": []}))
    code, _, err = run(capsys, "gap", "--protocol", str(partial))
    assert code == 2 and "target" in err
    proc = tmp_path / "proc.json"
    proc.write_text(json.dumps({"kind": "kraus"}))
    code, _, err = run(capsys, "simulate", "--protocol", "xgate", "--rounds", "5",
                       "--process", str(proc))
    assert code == 2 and "matrices" in err


def test_canonical_json_format():
    text = io.dumps({"b": 0.1, "a": [1, 2.0, True, None], "c": "x"})
    assert text == '{"a": [1, 2.0, true, null], "b": 0.10000000000000001, "c": "x"}\n'
