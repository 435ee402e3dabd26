"""Canonical JSON and (de)serialization of strategies, PMPV ensembles and POVMs.

Output is byte-stable: keys sorted, floats written with 17 significant
digits, no trailing whitespace.
"""
import json
import math

import numpy as np

from .channels import QuantumProcess, choi_vector
from .errors import QPVError
from .pauli import CliffordCircuit, PauliString
from .pmpv import NAMED_KETS, PMPVEntry, PMPVStrategy, product_ket
from .strategies import AAPVStrategy, LocalSettings, Test, canned, clifford_protocol
from .tensor import Operator, PureState


def _fmt_float(x):
    if math.isnan(x) or math.isinf(x):
        raise QPVError("non-finite number in JSON output")
    if x == int(x) and abs(x) < 2**53:
        return f"{int(x)}.0"
    return format(x, ".17g")


def _encode(obj, out):
    if obj is None or isinstance(obj, (bool, str)):
        out.append(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif isinstance(obj, dict):
        out.append("{")
        for j, k in enumerate(sorted(obj)):
            if j:
                out.append(", ")
            out.append(json.dumps(str(k)) + ": ")
            _encode(obj[k], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for j, v in enumerate(obj):
            if j:
                out.append(", ")
            _encode(v, out)
        out.append("]")
    else:
        raise QPVError(f"cannot serialize {type(obj).__name__}")


def dumps(obj):
    """Canonical JSON text (sorted keys, 17-digit floats) ending in a newline."""
    out = []
    _encode(obj, out)
    return "".join(out) + "\n"


def load_file(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise QPVError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise QPVError(f"{path} is not valid JSON ({exc.msg})") from None


def field(obj, name, where="input"):
    if not isinstance(obj, dict) or name not in obj:
        raise QPVError(f"{where} is missing field {name!r}")
    return obj[name]


# -------------------------------------------------------------- matrices

def matrix_to_json(m):
    m = m.data if isinstance(m, Operator) else np.asarray(m)
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


def matrix_from_json(obj, name="matrix"):
    try:
        a = np.array(obj, dtype=np.float64)
    except (TypeError, ValueError):
        raise QPVError(f"field {name!r} must be a matrix of [re, im] pairs") from None
    if a.ndim == 2:
        return a.astype(np.complex128)
    if a.ndim != 3 or a.shape[2] != 2:
        raise QPVError(f"field {name!r} must be a matrix of [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def vector_to_json(v):
    return [[float(x.real), float(x.imag)] for x in np.asarray(v).ravel()]


def vector_from_json(obj, name="vector"):
    try:
        a = np.array(obj, dtype=np.float64)
    except (TypeError, ValueError):
        raise QPVError(f"field {name!r} must be a list of [re, im] pairs") from None
    if a.ndim == 1:
        return a.astype(np.complex128)
    if a.ndim != 2 or a.shape[1] != 2:
        raise QPVError(f"field {name!r} must be a list of [re, im] pairs")
    return a[:, 0] + 1j * a[:, 1]


def _qubit_dims(d):
    n = d.bit_length() - 1
    return (2,) * n if d == 1 << n and n > 0 else (d,)


# -------------------------------------------------------------- strategies

def _test_to_json(p, t):
    if t.pauli is not None:
        return {"p": p, "pauli": t.pauli.label()}
    st = t.settings
    bases = [b if isinstance(b, str) else matrix_to_json(b) for b in st.bases]
    return {"p": p, "bases": bases, "accept": [int(i) for i in np.flatnonzero(st.accept)]}


def _test_from_json(obj, k):
    where = f"tests[{k}]"
    if "pauli" in obj:
        try:
            return Test.from_pauli(PauliString.from_label(obj["pauli"]))
        except QPVError as exc:
            raise QPVError(f"{where}.pauli: {exc}") from None
    bases = field(obj, "bases", where)
    accept_idx = field(obj, "accept", where)
    bases = tuple(b if isinstance(b, str) else matrix_from_json(b, f"{where}.bases")
                  for b in bases)
    mask = np.zeros(1 << len(bases), dtype=bool)
    try:
        mask[np.asarray(accept_idx, dtype=np.int64)] = True
    except (IndexError, ValueError, TypeError):
        raise QPVError(f"{where}.accept must list outcome indices") from None
    return Test(LocalSettings(bases, mask), label=obj.get("label", ""))


def strategy_to_json(s):
    target = {"state": vector_to_json(s.target.amplitudes)}
    if s.target_process is not None:
        target["process"] = s.target_process.to_json()
    return {
        "name": s.name,
        "n_ancilla": s.n_ancilla,
        "n_system": s.n_system,
        "target": target,
        "tests": [_test_to_json(p, t) for p, t in s.tests],
    }


def strategy_from_json(obj):
    if isinstance(obj, dict) and "entries" in obj:
        raise QPVError("expected an AAPV strategy, got a PMPV ensemble (field 'entries')")
    n_a = field(obj, "n_ancilla", "strategy")
    n_s = field(obj, "n_system", "strategy")
    target = field(obj, "target", "strategy")
    tests_json = field(obj, "tests", "strategy")
    if not isinstance(n_a, int) or not isinstance(n_s, int) or n_a < 1 or n_s < 1:
        raise QPVError("fields 'n_ancilla' and 'n_system' must be positive integers")
    proc = None
    if isinstance(target, dict) and "process" in target:
        proc = QuantumProcess.from_json(target["process"])
    if isinstance(target, dict) and "state" in target:
        state = PureState(vector_from_json(target["state"], "target.state"), (2,) * (n_a + n_s))
    elif proc is not None:
        state = choi_vector(proc)
    else:
        raise QPVError("strategy is missing field 'target.state'")
    tests = []
    for k, t in enumerate(tests_json):
        tests.append((float(field(t, "p", f"tests[{k}]")), _test_from_json(t, k)))
    return AAPVStrategy(tuple(tests), state, n_a, n_s, obj.get("name", ""), proc)


def build_strategy(protocol=None, circuit=None, full=False):
    """A canned protocol by name, or the generator protocol of a Clifford circuit."""
    if protocol is not None:
        return canned(protocol)
    if circuit is None:
        raise QPVError("build needs --protocol or --circuit")
    c = circuit if isinstance(circuit, CliffordCircuit) else CliffordCircuit.from_json(circuit)
    return clifford_protocol(c, full=full)


# -------------------------------------------------------------- PMPV

def _state_spec(entry):
    label = entry.input_label
    if label and all(lab in NAMED_KETS for lab in label):
        return list(label)
    w, v = np.linalg.eigh(entry.rho.data)
    if w[-1] > 1 - 1e-10:
        return {"vector": vector_to_json(v[:, -1])}
    return {"matrix": matrix_to_json(entry.rho)}


def _state_from_spec(spec, where):
    if isinstance(spec, str):
        spec = [spec]
    if isinstance(spec, list) and all(isinstance(x, str) for x in spec):
        unknown = [x for x in spec if x not in NAMED_KETS]
        if unknown:
            raise QPVError(f"{where}: unknown named ket {unknown[0]!r}")
        v = product_ket(spec)
        return np.outer(v, v.conj()), tuple(spec)
    if isinstance(spec, dict) and "vector" in spec:
        v = vector_from_json(spec["vector"], f"{where}.vector")
        v = v / np.linalg.norm(v)
        return np.outer(v, v.conj()), ()
    if isinstance(spec, dict) and "matrix" in spec:
        return matrix_from_json(spec["matrix"], f"{where}.matrix"), ()
    raise QPVError(f"{where} must be named kets, {{'vector': ...}} or {{'matrix': ...}}")


def pmpv_to_json(x):
    entries = []
    for e in x.entries:
        effect = {"matrix": matrix_to_json(e.effect)}
        if e.settings is not None:
            effect["bases"] = [b if isinstance(b, str) else matrix_to_json(b)
                               for b in e.settings.bases]
            effect["accept"] = [int(i) for i in np.flatnonzero(e.settings.accept)]
        entries.append({"p": e.p, "input": _state_spec(e), "pass_effect": effect})
    out = {"d": x.d, "entries": entries, "name": x.name}
    if x.target_process is not None:
        out["target_process"] = x.target_process.to_json()
    return out


def pmpv_from_json(obj):
    d = field(obj, "d", "PMPV strategy")
    entries = []
    for k, ent in enumerate(field(obj, "entries", "PMPV strategy")):
        where = f"entries[{k}]"
        rho, label = _state_from_spec(field(ent, "input", where), f"{where}.input")
        eff = field(ent, "pass_effect", where)
        n_mat = matrix_from_json(field(eff, "matrix", f"{where}.pass_effect"),
                                 f"{where}.pass_effect.matrix")
        settings = None
        if "bases" in eff:
            bases = tuple(b if isinstance(b, str) else matrix_from_json(b) for b in eff["bases"])
            mask = np.zeros(1 << len(bases), dtype=bool)
            mask[np.asarray(eff.get("accept", []), dtype=np.int64)] = True
            settings = LocalSettings(bases, mask)
        entries.append(PMPVEntry(float(field(ent, "p", where)),
                                 Operator(rho, _qubit_dims(rho.shape[0]), hermitian=True),
                                 Operator(n_mat, _qubit_dims(n_mat.shape[0]), hermitian=True),
                                 label, settings))
    proc = obj.get("target_process")
    proc = QuantumProcess.from_json(proc) if proc is not None else None
    return PMPVStrategy(tuple(entries), int(d), proc, obj.get("name", ""))
