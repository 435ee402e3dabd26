import numpy as np
import pytest

from qpv.channels import gate, unitary_process
from qpv.errors import QPVError, StrategyError
from qpv.pauli import CliffordCircuit, PauliString, StabilizerGroup
from qpv.strategies import (CANNED_NAMES, DJ_BALANCED_PRINTED, LocalSettings, Test,
                            canned, clifford_protocol, confidence, diagonal_filter_protocol,
                            dj_balanced_strings, full_group_protocol, generator_protocol,
                            hypergraph_cz_protocol, pauli_protocol, plan_samples,
                            single_qubit_gate_protocol, spectral_gap, strategy_matrix)
from qpv.channels import choi_vector
from reference import H, S, X, gap, omega, plus_projector

EXPECTED_GAPS = {"cnot": 1 / 4, "identity2": 1 / 2, "identity3": 2 / 3, "xgate": 1 / 2,
              "hadamard": 1 / 2, "phase": 1 / 2, "dj_const1": 1 / 6, "dj_balanced_x2": 1 / 6}


@pytest.mark.parametrize("name", CANNED_NAMES)
def test_canned_gaps(name):
    assert abs(spectral_gap(canned(name)) - EXPECTED_GAPS[name]) < 1e-9


def test_identity_matrix_matches_reference():
    assert np.allclose(strategy_matrix(canned("identity2")).data, omega(["XX", "ZZ"]),
                       atol=1e-12)


def test_cnot_matrix_matches_reference():
    ref = omega(["ZXZX", "IZZZ", "ZZIZ", "XXXI"])
    assert np.allclose(strategy_matrix(canned("cnot")).data, ref, atol=1e-12)
    assert abs(gap(ref) - 0.25) < 1e-12


def test_single_test_strategy_is_its_projector():
    s = pauli_protocol(["+ZZ"], choi_vector(gate("I")), 1)
    assert np.allclose(s.matrix().data, plus_projector("ZZ"), atol=1e-12)


def test_local_settings_reproduce_projectors():
    for name in CANNED_NAMES:
        for _, t in canned(name).tests:
            ref = Test(t.settings).projector.data
            assert np.allclose(t.settings.lower(), t.projector.data, atol=1e-12)
            assert np.allclose(ref, t.projector.data, atol=1e-12)


@pytest.mark.parametrize("u, labels", [(H, ("+XZ", "+ZX")), (S, ("+XY", "+ZZ")),
                                       (X, ("+XX", "-ZZ"))])
def test_substitution_protocols(u, labels):
    s = single_qubit_gate_protocol(u)
    assert sorted(t.label for _, t in s.tests) == sorted(labels)
    assert abs(spectral_gap(s) - 0.5) < 1e-10


def test_three_setting_substitution():
    s = single_qubit_gate_protocol(H, settings=3)
    assert sorted(t.label for _, t in s.tests) == ["+XZ", "+YY", "+ZX"]
    assert abs(spectral_gap(s) - 2 / 3) < 1e-10


def test_non_clifford_substitution():
    t_gate = np.diag([1, np.exp(1j * np.pi / 4)])
    assert abs(spectral_gap(single_qubit_gate_protocol(t_gate)) - 0.5) < 1e-10
    assert abs(spectral_gap(single_qubit_gate_protocol(t_gate, 3)) - 2 / 3) < 1e-10
    with pytest.raises(QPVError):
        single_qubit_gate_protocol(np.diag([1, 2]))


@pytest.mark.parametrize("n, expected", [(1, 2 / 3), (2, 8 / 15), (3, 32 / 63)])
def test_full_group_gap(n, expected):
    gates = {1: (("H", 0), ("S", 0)), 2: (("CNOT", 0, 1),),
             3: (("H", 0), ("CNOT", 0, 1), ("S", 2), ("CNOT", 1, 2), ("H", 1))}[n]
    s = clifford_protocol(CliffordCircuit(n, gates), full=True)
    assert len(s.tests) == 4 ** n - 1
    assert abs(spectral_gap(s) - expected) < 1e-9


def test_generator_protocol_gap_is_one_over_k():
    s = clifford_protocol(CliffordCircuit(3, (("H", 0), ("CNOT", 0, 2))))
    assert abs(spectral_gap(s) - 1 / 6) < 1e-10


def test_bell_generators():
    g = StabilizerGroup((PauliString.from_label("XX"), PauliString.from_label("ZZ")))
    assert abs(spectral_gap(generator_protocol(g)) - 0.5) < 1e-10
    assert len(full_group_protocol(g).tests) == 3


@pytest.mark.parametrize("n, tests, nu", [(2, 3, 1 / 3), (3, 4, 1 / 4), (4, 5, 1 / 5)])
def test_hypergraph_protocol(n, tests, nu):
    s = hypergraph_cz_protocol(n)
    assert len(s.tests) == tests
    assert abs(spectral_gap(s) - nu) < 1e-9


def test_dj_balanced_printed_strings_are_rejected():
    u = np.kron(np.eye(2), gate("CNOT").ops[0])
    with pytest.raises(StrategyError, match="not 1"):
        pauli_protocol(DJ_BALANCED_PRINTED, choi_vector(unitary_process(u)), 3)


def test_dj_balanced_strings_after_oracle():
    assert dj_balanced_strings() == ("+ZZZZIZ", "-ZZYZIY", "+ZZXZZX", "-ZYZZXY", "-ZXZZYY",
                                     "-YZZYIZ")


def test_dj_const1_contains_negative_zxzzxz():
    labels = [t.label for _, t in canned("dj_const1").tests]
    assert len(labels) == 6
    assert "-ZYZZYZ" in labels and "+ZXZZXZ" in labels


def test_cnot_canned_strings():
    assert [t.label for _, t in canned("cnot").tests] == ["+ZXZX", "+IZZZ", "+ZZIZ", "+XXXI"]


def test_unknown_canned_name():
    with pytest.raises(QPVError, match="unknown protocol"):
        canned("toffoli")


def test_weights_validated():
    t = Test.from_pauli("+XX")
    with pytest.raises(StrategyError):
        pauli_protocol(["+XX", "+ZZ"], choi_vector(gate("I")), 1, weights=[0.7, 0.7])
    assert t.projector.dim == 4


def test_local_settings_validation():
    with pytest.raises(QPVError):
        LocalSettings(("X", "Z"), [True, False])
    with pytest.raises(QPVError):
        LocalSettings((np.diag([1, 2]),), [True, False])


def test_filter_protocol_target_passes():
    s = diagonal_filter_protocol([1, 0.5])
    v = s.target.amplitudes
    assert abs(np.real(v.conj() @ s.matrix().data @ v) - 1) < 1e-12
    assert spectral_gap(s) > 0.3


def test_plan_samples_values():
    assert plan_samples(0.01, 0.01, 1).N == 459
    assert plan_samples(0.01, 0.01, 0.25).N == 1840
    assert plan_samples(0.05, 0.001, 1).N == 135
    assert plan_samples(0.01, 0.01, 0.25).approx == pytest.approx(4 * 100 * np.log(100))


def test_plan_samples_domain():
    for bad in ((0, 0.1, 1), (0.1, 1, 1), (0.1, 0.1, 0), (0.1, 0.1, 1.5)):
        with pytest.raises(QPVError):
            plan_samples(*bad)


def test_confidence():
    assert confidence(0.01, 1, 0) == 1
    assert confidence(0.01, 1, 459) <= 0.01
    assert confidence(1, 1, 3) == 0
