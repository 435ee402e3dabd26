"""Ancilla-assisted verification strategies: tests, spectral gaps, sample plans
and protocol builders.

A strategy is a weighted list of pass/fail tests on ancilla (x) system qubits
whose target (a pure Choi state) passes every test with certainty.  Each test
carries a local description: one single-qubit measurement basis per qubit and
the set of outcome strings that count as a pass.  The dense projector is
derived from that description, so "only local measurements" is a property
the code can check rather than a comment.
"""
import math
import threading
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from . import _config
from .channels import choi_vector, controlled_z, gate, kraus_process, unitary_process
from .errors import QPVError, StrategyError
from .pauli import (CliffordCircuit, PauliString, clifford_conjugate, choi_stabilizers,
                    cz_choi_hypergraph, eigenspace_projector, group_elements, proper_coloring,
                    stabilizer_state)
from .tensor import Operator, PureState, check_dim, eig_hermitian

_SQ = 1 / np.sqrt(2)
# columns are the eigenvectors for outcome 0 (+1) and outcome 1 (-1)
BASIS = {
    "Z": np.eye(2, dtype=np.complex128),
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[_SQ, _SQ], [_SQ, -_SQ]], dtype=np.complex128),
    "Y": np.array([[_SQ, _SQ], [1j * _SQ, -1j * _SQ]], dtype=np.complex128),
}


def basis_matrix(b):
    if isinstance(b, str):
        return BASIS[b]
    return np.asarray(b, dtype=np.complex128)


def observable_basis(obs):
    """Eigenbasis (+1 column first) of a 2x2 Hermitian involution."""
    obs = np.asarray(obs, dtype=np.complex128)
    if np.max(np.abs(obs @ obs - np.eye(2))) > 1e-10 or np.max(np.abs(obs - obs.conj().T)) > 1e-12:
        raise QPVError("observable must be a Hermitian involution with eigenvalues +-1")
    w, v = np.linalg.eigh(obs)
    return v[:, ::-1].copy()


def parity_mask(n, qubits, parity):
    """Outcome strings whose bits on ``qubits`` XOR to ``parity`` (qubit 0 = MSB)."""
    b = np.arange(1 << n)
    acc = np.zeros(1 << n, dtype=np.int64)
    for q in qubits:
        acc ^= (b >> (n - 1 - q)) & 1
    return acc == parity


@dataclass(frozen=True, eq=False)
class LocalSettings:
    """Per-qubit measurement bases plus the accepted outcome strings.

    ``bases[q]`` is ``"X"``, ``"Y"``, ``"Z"``, ``"I"`` (not needed; measured in
    Z and ignored) or an explicit 2x2 unitary whose columns are the outcome-0
    and outcome-1 states.  ``accept`` is a boolean array over all ``2**n``
    outcome strings.
    """
    bases: tuple
    accept: np.ndarray

    def __post_init__(self):
        bases = tuple(b if isinstance(b, str) else np.asarray(b, dtype=np.complex128)
                      for b in self.bases)
        accept = np.array(self.accept, dtype=bool).ravel()
        if accept.shape[0] != 1 << len(bases):
            raise QPVError("accept mask length must be 2**(number of qubits)")
        for b in bases:
            m = basis_matrix(b)
            if m.shape != (2, 2) or np.max(np.abs(m.conj().T @ m - np.eye(2))) > 1e-10:
                raise QPVError("measurement basis must be a 2x2 unitary")
        accept.setflags(write=False)
        object.__setattr__(self, "bases", bases)
        object.__setattr__(self, "accept", accept)

    @property
    def n(self):
        return len(self.bases)

    def basis_unitary(self):
        check_dim(1 << self.n)
        return reduce(np.kron, [basis_matrix(b) for b in self.bases])

    def lower(self):
        """Dense pass projector B diag(accept) B^dagger."""
        b = self.basis_unitary()
        return (b * self.accept) @ b.conj().T

    def outcome_distribution(self, rho):
        """Joint outcome probabilities for state ``rho`` (clipped, sums to Tr rho)."""
        b = self.basis_unitary()
        r = rho.data if isinstance(rho, Operator) else rho
        p = np.real(np.einsum("ij,jk,ki->i", b.conj().T, r, b))
        return np.where(p < 1e-15, 0.0, p)

    def basis_labels(self):
        return [b if isinstance(b, str) else "U" for b in self.bases]


class Test:
    """A pass/fail test: projector plus (optionally) its local description."""

    __test__ = False  # not a pytest class

    def __init__(self, settings=None, pauli=None, projector=None, label=""):
        if settings is None and pauli is None and projector is None:
            raise QPVError("a test needs a projector, a Pauli string or local settings")
        self.settings = settings
        self.pauli = pauli
        self.label = label or (pauli.label() if pauli is not None else "")
        self._projector = projector
        self._lock = threading.Lock()

    @classmethod
    def from_pauli(cls, p, label=""):
        """Test passing on the +1 eigenspace of the signed Pauli ``p``."""
        if isinstance(p, str):
            p = PauliString.from_label(p)
        if not p.hermitian or p.is_identity:
            raise QPVError(f"{p} cannot define a test")
        accept = parity_mask(p.n, p.support, 0 if p.sign == 1 else 1)
        return cls(LocalSettings(tuple(p.letters), accept), pauli=p, label=label)

    @classmethod
    def from_observables(cls, observables, sign=1, label=""):
        """+1 eigenspace of ``sign * (x)_q O_q`` for single-qubit involutions O_q."""
        bases, support = [], []
        for q, o in enumerate(observables):
            if isinstance(o, str):
                bases.append(o)
                if o != "I":
                    support.append(q)
            else:
                bases.append(observable_basis(o))
                support.append(q)
        accept = parity_mask(len(bases), support, 0 if sign == 1 else 1)
        return cls(LocalSettings(tuple(bases), accept), label=label)

    @property
    def n(self):
        if self.settings is not None:
            return self.settings.n
        if self.pauli is not None:
            return self.pauli.n
        return len(self._projector.dims)

    @property
    def projector(self):
        with self._lock:
            if self._projector is None:
                if self.pauli is not None:
                    self._projector = eigenspace_projector(self.pauli, 1)
                else:
                    self._projector = Operator(self.settings.lower(), (2,) * self.n,
                                               projector=True)
            return self._projector

    def __repr__(self):
        return f"Test({self.label or '<projector>'})"


@dataclass(frozen=True, eq=False)
class AAPVStrategy:
    """Omega = sum_i p_i Omega_i on ``n_ancilla + n_system`` qubits (ancillas first)."""
    tests: tuple
    target: PureState
    n_ancilla: int
    n_system: int
    name: str = ""
    target_process: object = None
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: object = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        tests = tuple((float(p), t) for p, t in self.tests)
        if not tests:
            raise StrategyError("strategy has no tests")
        n = self.n_ancilla + self.n_system
        if any(p <= 0 for p, _ in tests):
            raise StrategyError("test probabilities must be positive")
        if abs(sum(p for p, _ in tests) - 1) > 1e-12:
            raise StrategyError("test probabilities must sum to 1")
        if self.target.dim != 1 << n:
            raise StrategyError("target state does not live on ancilla (x) system qubits")
        for _, t in tests:
            if t.n != n:
                raise StrategyError(f"test {t!r} acts on {t.n} qubits, expected {n}")
        object.__setattr__(self, "tests", tests)
        v = self.target.amplitudes
        for _, t in tests:
            passing = float(np.real(v.conj() @ t.projector.data @ v))
            if abs(passing - 1) > _config.PROJECTOR_TOL:
                raise StrategyError(f"target passes test {t.label or t!r} with probability "
                                    f"{passing:.12g}, not 1")

    @property
    def n_qubits(self):
        return self.n_ancilla + self.n_system

    @property
    def d_system(self):
        return 1 << self.n_system

    @property
    def weights(self):
        return np.array([p for p, _ in self.tests])

    def matrix(self):
        with self._lock:
            if "omega" not in self._cache:
                check_dim(1 << self.n_qubits)
                om = sum(p * t.projector.data for p, t in self.tests)
                self._cache["omega"] = Operator(om, (2,) * self.n_qubits, hermitian=True)
            return self._cache["omega"]


def strategy_matrix(s):
    return s.matrix()


def spectral_gap(s):
    """1 - lambda_2(Omega); 0 when the eigenvalue-1 space is degenerate."""
    w = eig_hermitian(s.matrix()).eigenvalues
    if abs(w[0] - 1) > _config.EIG_RESIDUAL_TOL:
        raise StrategyError(f"largest eigenvalue of Omega is {w[0]:.12g}, not 1")
    if len(w) == 1:
        return 1.0
    return float(min(1.0, max(0.0, 1 - w[1])))


# ------------------------------------------------------------------ planning

@dataclass(frozen=True)
class SamplePlan:
    epsilon: float
    delta: float
    nu: float
    N: int
    approx: float


def _check_unit(name, value, lo_open=True, hi_closed=False):
    ok = (0 < value if lo_open else 0 <= value) and (value <= 1 if hi_closed else value < 1)
    if not ok:
        raise QPVError(f"{name}={value} outside its domain")


def plan_samples(epsilon, delta, nu):
    """Smallest N with (1 - nu eps)^N <= delta, plus the 1/(nu eps) ln(1/delta) estimate."""
    _check_unit("epsilon", epsilon, hi_closed=True)
    _check_unit("delta", delta)
    _check_unit("nu", nu, hi_closed=True)
    x = nu * epsilon
    log_delta = math.log(1 / delta)
    if x >= 1:
        n = 1
    else:
        n = max(1, math.ceil(log_delta / -math.log1p(-x) - 1e-9))
    return SamplePlan(epsilon, delta, nu, n, log_delta / x)


def confidence(epsilon, nu, n):
    """Failure-probability bound (1 - eps nu)^N after N passed rounds."""
    if not 0 <= epsilon <= 1 or not 0 <= nu <= 1:
        raise QPVError("epsilon and nu must lie in [0, 1]")
    if int(n) != n or n < 0:
        raise QPVError(f"N must be a non-negative integer, got {n}")
    return (1 - epsilon * nu) ** int(n)


# ------------------------------------------------------------------ builders

def pauli_protocol(paulis, target, n_ancilla, name="", target_process=None, weights=None):
    """Uniform (or weighted) mixture of +1-eigenspace tests of signed Pauli strings."""
    paulis = [PauliString.from_label(p) if isinstance(p, str) else p for p in paulis]
    if weights is None:
        weights = [1 / len(paulis)] * len(paulis)
    tests = tuple((w, Test.from_pauli(p)) for w, p in zip(weights, paulis))
    n = paulis[0].n
    return AAPVStrategy(tests, target, n_ancilla, n - n_ancilla, name, target_process)


def generator_protocol(g, n_ancilla=None, target=None, target_process=None, name=""):
    """One test per stabilizer generator, uniformly mixed; nu = 1/k."""
    if target is None:
        try:
            target = stabilizer_state(g)
        except QPVError as exc:
            raise StrategyError(str(exc)) from None
    n_ancilla = g.n // 2 if n_ancilla is None else n_ancilla
    return pauli_protocol(g.generators, target, n_ancilla, name, target_process)


def full_group_protocol(g, n_ancilla=None, target=None, target_process=None, name=""):
    """Every non-identity stabilizer as a test; nu = 2^(k-1) / (2^k - 1)."""
    if target is None:
        target = stabilizer_state(g)
    n_ancilla = g.n // 2 if n_ancilla is None else n_ancilla
    return pauli_protocol(group_elements(g), target, n_ancilla, name, target_process)


def clifford_protocol(c, full=False, name=""):
    """Protocol for a Clifford circuit from its Choi stabilizers."""
    if isinstance(c, dict):
        c = CliffordCircuit.from_json(c)
    g = choi_stabilizers(c)
    proc = unitary_process(c.unitary().data, name=name or "clifford")
    target = choi_vector(proc)
    build = full_group_protocol if full else generator_protocol
    return build(g, n_ancilla=c.n, target=target, target_process=proc,
                 name=name or ("clifford_full" if full else "clifford"))


_SIGMA = {
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.diag([1, -1]).astype(np.complex128),
}
_IDENTITY_TESTS = {2: (("X", 1), ("Z", 1)), 3: (("X", 1), ("Y", -1), ("Z", 1))}


def _as_signed_pauli(m):
    for letter, s in _SIGMA.items():
        for sign in (1, -1):
            if np.max(np.abs(m - sign * s)) < 1e-12:
                return letter, sign
    return None


def single_qubit_gate_protocol(u, settings=2, name=""):
    """Identity-protocol tests with the system factor sigma -> U sigma U^dagger."""
    u = np.asarray(u.data if isinstance(u, Operator) else u, dtype=np.complex128)
    if u.shape != (2, 2) or np.max(np.abs(u.conj().T @ u - np.eye(2))) > 1e-10:
        raise QPVError("single_qubit_gate_protocol needs a 2x2 unitary")
    if settings not in _IDENTITY_TESTS:
        raise QPVError("settings must be 2 or 3")
    proc = unitary_process(u, name=name or "U")
    tests = []
    for letter, sign in _IDENTITY_TESTS[settings]:
        image = u @ _SIGMA[letter] @ u.conj().T
        signed = _as_signed_pauli(image)
        if signed is not None:
            p = PauliString.from_label(("+" if sign * signed[1] > 0 else "-") + letter + signed[0])
            tests.append(Test.from_pauli(p))
        else:
            tests.append(Test.from_observables([letter, image], sign,
                                               label=f"{'+' if sign > 0 else '-'}{letter}(x)U{letter}U^"))
    w = 1 / len(tests)
    return AAPVStrategy(tuple((w, t) for t in tests), choi_vector(proc), 1, 1,
                        name or f"gate{settings}", proc)


def _hypergraph_accept(h, cls):
    n = h.n
    b = np.arange(1 << n)
    bit = [(b >> (n - 1 - v)) & 1 for v in range(n)]
    ok = np.ones(1 << n, dtype=bool)
    for v in cls:
        val = bit[v].copy()
        for e in h.incident(v):
            term = np.ones(1 << n, dtype=np.int64)
            for u in e:
                if u != v:
                    term &= bit[u]
            val ^= term
        ok &= val == 0
    return ok


def hypergraph_cz_protocol(n):
    """Colouring protocol for C^(n-1)Z on n qubits (2n qubits with ancillas).

    Built for the hypergraph state (1 (x) C^(n-1)Z)|psi~>; since
    |psi~> = (H (x) 1)|psi>, the ancilla X/Z bases are swapped so the tests
    target the ordinary Choi state of the gate.
    """
    if n < 2:
        raise QPVError("hypergraph protocol needs n >= 2")
    check_dim(1 << (2 * n))
    h = cz_choi_hypergraph(n)
    colors, k = proper_coloring(h)
    tests = []
    for c in range(k):
        cls = [v for v in range(2 * n) if colors[v] == c]
        frame = ["X" if v in cls else "Z" for v in range(2 * n)]
        bases = tuple(("Z" if b == "X" else "X") if v < n else b for v, b in enumerate(frame))
        settings = LocalSettings(bases, _hypergraph_accept(h, cls))
        tests.append((1 / k, Test(settings, label=f"color{c}:" + "".join(bases))))
    proc = unitary_process(controlled_z(n), name=f"C{n - 1}Z")
    return AAPVStrategy(tuple(tests), choi_vector(proc), n, n, f"hypergraph_cz_{n}", proc)


def diagonal_filter_protocol(k, name="filter"):
    """Protocol for the postselected qubit filter K = diag(k0, k1).

    The Choi state is proportional to k0|00> + k1|11>.  One test checks ZZ
    parity; three more each reject a single product state u (x) v orthogonal
    to the target, with u running over X-Y plane states at 120 degree
    spacing.  Every test is a fixed-basis local measurement.
    """
    k = np.asarray(k, dtype=np.complex128).ravel()
    if k.shape != (2,) or np.min(np.abs(k)) < 1e-12:
        raise QPVError("diagonal filter needs two nonzero entries")
    scale = np.max(np.abs(k))
    proc = kraus_process((np.diag(k / scale),), name=name)
    tests = [Test.from_pauli(PauliString.from_label("+ZZ"))]
    reject_00 = np.array([False, True, True, True])
    for j in range(3):
        w = np.exp(2j * np.pi * j / 3)
        u = np.array([1, w]) / np.sqrt(2)
        v = np.array([np.conj(k[1]) * u[1], -np.conj(k[0]) * u[0]])
        v /= np.linalg.norm(v)
        bu = np.column_stack([u, [-np.conj(u[1]), np.conj(u[0])]])
        bv = np.column_stack([v, [-np.conj(v[1]), np.conj(v[0])]])
        tests.append(Test(LocalSettings((bu, bv), reject_00), label=f"reject{j}"))
    return AAPVStrategy(tuple((0.25, t) for t in tests), choi_vector(proc), 1, 1, name, proc)


# ------------------------------------------------------------ canned protocols

DJ_CONST1_STRINGS = ("+ZZZZZZ", "+ZZYZZY", "-ZZXZZX", "-ZYZZYZ", "+ZXZZXZ", "-YZZYZZ")
# as printed for f(x) = x2; these stabilize the identity Choi state, not I (x) CNOT
DJ_BALANCED_PRINTED = ("+ZZZZZZ", "-ZZYZZY", "+ZZXZZX", "-ZYZZYZ", "+ZXZZXZ", "-YZZYZZ")
_DJ_ORACLE_CNOT = CliffordCircuit(6, (("CNOT", 4, 5),))


def dj_balanced_strings():
    """Printed f(x)=x2 strings pushed through the system-side CNOT."""
    return tuple(clifford_conjugate(_DJ_ORACLE_CNOT, PauliString.from_label(s)).label()
                 for s in DJ_BALANCED_PRINTED)


def _gate_protocol(strings, proc, name):
    n_a = len(proc.dims_in)
    return pauli_protocol(strings, choi_vector(proc), n_a, name, proc)


def _dj_const1():
    u = np.kron(np.eye(4), _SIGMA["Z"])
    return _gate_protocol(DJ_CONST1_STRINGS, unitary_process(u, name="IIZ"), "dj_const1")


def _dj_balanced():
    u = np.kron(np.eye(2), gate("CNOT").ops[0])
    return _gate_protocol(dj_balanced_strings(), unitary_process(u, name="ICNOT"),
                          "dj_balanced_x2")


_CANNED = {
    "cnot": lambda: _gate_protocol(("+ZXZX", "+IZZZ", "+ZZIZ", "+XXXI"), gate("CNOT"), "cnot"),
    "identity2": lambda: _gate_protocol(("+XX", "+ZZ"), gate("I"), "identity2"),
    "identity3": lambda: _gate_protocol(("+XX", "-YY", "+ZZ"), gate("I"), "identity3"),
    "xgate": lambda: _gate_protocol(("+XX", "-ZZ"), gate("X"), "xgate"),
    "hadamard": lambda: _gate_protocol(("+XZ", "+ZX"), gate("H"), "hadamard"),
    "phase": lambda: _gate_protocol(("+ZZ", "+XY"), gate("S"), "phase"),
    "dj_const1": _dj_const1,
    "dj_balanced_x2": _dj_balanced,
}

CANNED_NAMES = tuple(_CANNED)


def canned(name):
    """Protocols written out explicitly for specific gates and circuits."""
    try:
        builder = _CANNED[name]
    except KeyError:
        raise QPVError(f"unknown protocol {name!r}; choose from {', '.join(_CANNED)}") from None
    return builder()

