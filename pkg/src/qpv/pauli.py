"""Symplectic Pauli algebra, stabilizer groups, Clifford propagation and hypergraphs.

A :class:`PauliString` on ``n`` qubits is stored as ``i**e * X^x Z^z`` where
``x`` and ``z`` are ``n``-bit integers.  Qubit ``q`` lives at bit ``n-1-q``,
so qubit 0 is the leftmost letter of the label and the most significant
tensor factor of the matrix.  Ancilla qubits come first in every Choi-state
layout used by this package.
"""
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import kernels
from .errors import DimensionError, QPVError
from .tensor import Operator, PureState, check_dim

_LABEL_PHASE = {"": 0, "+": 0, "-": 2, "i": 1, "+i": 1, "-i": 3}
_PHASE_PREFIX = {0: "+", 1: "+i", 2: "-", 3: "-i"}


def _popcount(v):
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    n: int
    x: int
    z: int
    e: int = 0

    def __post_init__(self):
        mask = (1 << self.n) - 1
        if self.n < 1 or self.x & ~mask or self.z & ~mask:
            raise DimensionError(f"bit pattern does not fit {self.n} qubits")
        object.__setattr__(self, "e", self.e % 4)

    @classmethod
    def from_label(cls, label):
        """Parse ``"-ZZYZZY"``, ``"+ZXZX"``, ``"iXY"`` and friends."""
        label = label.strip()
        body = label.lstrip("+-i")
        prefix = label[: len(label) - len(body)]
        if prefix not in _LABEL_PHASE or not body:
            raise QPVError(f"cannot parse Pauli label {label!r}")
        n = len(body)
        x = z = ny = 0
        for q, ch in enumerate(body.upper()):
            bit = 1 << (n - 1 - q)
            if ch == "X":
                x |= bit
            elif ch == "Z":
                z |= bit
            elif ch == "Y":
                x |= bit
                z |= bit
                ny += 1
            elif ch != "I":
                raise QPVError(f"bad Pauli letter {ch!r} in {label!r}")
        return cls(n, x, z, _LABEL_PHASE[prefix] + ny)

    @classmethod
    def single(cls, n, qubit, letter):
        body = ["I"] * n
        body[qubit] = letter
        return cls.from_label("".join(body))

    @property
    def letters(self):
        out = []
        for q in range(self.n):
            bit = 1 << (self.n - 1 - q)
            out.append("IXZY"[bool(self.x & bit) + 2 * bool(self.z & bit)])
        return "".join(out)

    @property
    def phase_exponent(self):
        """k such that the operator equals i**k times the bare letter string."""
        return (self.e - _popcount(self.x & self.z)) % 4

    @property
    def phase(self):
        return (1, 1j, -1, -1j)[self.phase_exponent]

    @property
    def hermitian(self):
        return self.phase_exponent % 2 == 0

    @property
    def sign(self):
        if not self.hermitian:
            raise QPVError(f"{self} is not Hermitian")
        return 1 if self.phase_exponent == 0 else -1

    @property
    def is_identity(self):
        return self.x == 0 and self.z == 0

    @property
    def support(self):
        return tuple(q for q, ch in enumerate(self.letters) if ch != "I")

    def label(self):
        return _PHASE_PREFIX[self.phase_exponent] + self.letters

    __str__ = label

    def __repr__(self):
        return f"PauliString({self.label()!r})"

    def __neg__(self):
        return PauliString(self.n, self.x, self.z, self.e + 2)

    def __mul__(self, other):
        if self.n != other.n:
            raise DimensionError("qubit count mismatch")
        e = self.e + other.e + 2 * _popcount(self.z & other.x)
        return PauliString(self.n, self.x ^ other.x, self.z ^ other.z, e)

    def commutes(self, other):
        return (_popcount(self.x & other.z) + _popcount(self.z & other.x)) % 2 == 0

    def restrict(self, qubits):
        """Sub-string on the listed qubits; the phase stays on the result."""
        letters = "".join(self.letters[q] for q in qubits)
        return PauliString.from_label(_PHASE_PREFIX[self.phase_exponent] + letters)

    def to_matrix(self):
        return pauli_to_matrix(self)


def pauli_to_matrix(p):
    check_dim(1 << p.n)
    data = kernels.pauli_dense(p.x, p.z, p.e, p.n)
    return Operator(data, (2,) * p.n, hermitian=True if p.hermitian else None, unitary=True)


def eigenspace_projector(p, sign=1):
    """(1 + sign * P) / 2 for a Hermitian Pauli string."""
    if not p.hermitian:
        raise QPVError(f"{p} has a non-real phase; no +-1 eigenspaces")
    if sign not in (1, -1):
        raise QPVError("sign must be +1 or -1")
    m = kernels.pauli_dense(p.x, p.z, p.e, p.n)
    d = m.shape[0]
    return Operator((np.eye(d) + sign * m) / 2, (2,) * p.n, projector=True)


def _gf2_rank(rows):
    rows = [r for r in rows if r]
    rank = 0
    while rows:
        pivot = max(rows)
        rows.remove(pivot)
        top = pivot.bit_length() - 1
        rows = [r ^ pivot if (r >> top) & 1 else r for r in rows]
        rows = [r for r in rows if r]
        rank += 1
    return rank


def _symplectic_row(p):
    return (p.x << p.n) | p.z


@dataclass(frozen=True)
class StabilizerGroup:
    """Independent commuting Hermitian generators (sign carried in the phase)."""
    generators: tuple

    def __post_init__(self):
        gens = tuple(PauliString.from_label(g) if isinstance(g, str) else g for g in self.generators)
        if not gens:
            raise QPVError("a stabilizer group needs at least one generator")
        n = gens[0].n
        for g in gens:
            if g.n != n:
                raise DimensionError("generators act on different qubit counts")
            if not g.hermitian:
                raise QPVError(f"generator {g} is not Hermitian")
            if g.is_identity:
                raise QPVError("the identity is not an admissible generator")
        for a, b in combinations(gens, 2):
            if not a.commutes(b):
                raise QPVError(f"generators {a} and {b} anticommute")
        if _gf2_rank([_symplectic_row(g) for g in gens]) != len(gens):
            raise QPVError("generators are not independent")
        object.__setattr__(self, "generators", gens)

    @property
    def n(self):
        return self.generators[0].n

    @property
    def k(self):
        return len(self.generators)

    def labels(self):
        return [g.label() for g in self.generators]


MAX_GROUP_GENERATORS = 20


def group_elements(g):
    """All ``2**k - 1`` non-identity products of the generators, by subset mask."""
    if g.k > MAX_GROUP_GENERATORS:
        raise QPVError(f"at most {MAX_GROUP_GENERATORS} generators supported, got {g.k}")
    if g.n > 64:
        raise QPVError("group enumeration packs qubits into 64-bit words")
    gx = np.array([p.x for p in g.generators], dtype=np.uint64)
    gz = np.array([p.z for p in g.generators], dtype=np.uint64)
    ge = np.array([p.e for p in g.generators], dtype=np.int64)
    xs, zs, es = kernels.group_products(gx, gz, ge)
    return [PauliString(g.n, int(x), int(z), int(e)) for x, z, e in zip(xs[1:], zs[1:], es[1:])]


def stabilizer_state(g):
    """Dense joint +1 eigenvector; requires ``k == n`` and consistent signs."""
    if g.k != g.n:
        raise QPVError(f"{g.k} generators on {g.n} qubits do not fix a unique state")
    d = 1 << g.n
    check_dim(d)
    proj = np.eye(d, dtype=np.complex128)
    for p in g.generators:
        proj = proj @ eigenspace_projector(p, 1).data
    tr = np.trace(proj).real
    if abs(tr - 1) > 1e-8:
        raise QPVError("generators have no common +1 eigenvector (inconsistent signs)")
    col = proj[:, int(np.argmax(np.linalg.norm(proj, axis=0)))]
    return PureState.normalized(col, (2,) * g.n)


# -------------------------------------------------------------- Clifford circuits

_ARITY = {"H": 1, "S": 1, "CNOT": 2}


@dataclass(frozen=True)
class CliffordCircuit:
    """Gates from {H, S, CNOT} applied in list order."""
    n: int
    gates: tuple

    def __post_init__(self):
        gates = []
        for gate in self.gates:
            name, *qubits = gate
            name = str(name).upper()
            if name == "CX":
                name = "CNOT"
            if name not in _ARITY or len(qubits) != _ARITY[name]:
                raise QPVError(f"bad gate {gate!r}")
            qubits = tuple(int(q) for q in qubits)
            if any(not 0 <= q < self.n for q in qubits) or len(set(qubits)) != len(qubits):
                raise DimensionError(f"gate {gate!r} has invalid qubits for n={self.n}")
            gates.append((name,) + qubits)
        object.__setattr__(self, "gates", tuple(gates))

    def shifted(self, offset, n_total):
        return CliffordCircuit(n_total, tuple((g[0],) + tuple(q + offset for q in g[1:])
                                              for g in self.gates))

    def unitary(self):
        d = 1 << self.n
        check_dim(d)
        u = np.eye(d, dtype=np.complex128)
        for gate in self.gates:
            u = _gate_matrix(gate, self.n) @ u
        return Operator(u, (2,) * self.n, unitary=True)

    def to_json(self):
        return {"n": self.n, "gates": [list(g) for g in self.gates]}

    @classmethod
    def from_json(cls, obj):
        for key in ("n", "gates"):
            if not isinstance(obj, dict) or key not in obj:
                raise QPVError(f"circuit JSON is missing field {key!r}")
        return cls(int(obj["n"]), tuple(tuple(g) for g in obj["gates"]))


_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
_S = np.diag([1, 1j])


def _gate_matrix(gate, n):
    name = gate[0]
    d = 1 << n
    if name in ("H", "S"):
        q = gate[1]
        return np.kron(np.kron(np.eye(1 << q), _H if name == "H" else _S), np.eye(1 << (n - q - 1)))
    c, t = gate[1], gate[2]
    cb, tb = 1 << (n - 1 - c), 1 << (n - 1 - t)
    m = np.zeros((d, d), dtype=np.complex128)
    for b in range(d):
        m[b ^ tb if b & cb else b, b] = 1
    return m


def _conjugate_gate(gate, x, z, e, n):
    name = gate[0]
    if name in ("H", "S"):
        bit = 1 << (n - 1 - gate[1])
        xb, zb = bool(x & bit), bool(z & bit)
        if name == "H":
            # H X^a Z^b H = Z^a X^b = (-1)^(ab) X^b Z^a
            x = (x & ~bit) | (bit if zb else 0)
            z = (z & ~bit) | (bit if xb else 0)
            e += 2 * (xb and zb)
        else:
            # S X S^dag = i X Z, S Z S^dag = Z
            if xb:
                z ^= bit
                e += 1
        return x, z, e
    cb, tb = 1 << (n - 1 - gate[1]), 1 << (n - 1 - gate[2])
    if x & cb:
        x ^= tb
    if z & tb:
        z ^= cb
    return x, z, e


def clifford_conjugate(c, p):
    """The Pauli ``C P C^dagger`` for circuit unitary ``C``."""
    if c.n != p.n:
        raise DimensionError(f"circuit on {c.n} qubits, Pauli on {p.n}")
    x, z, e = p.x, p.z, p.e
    for gate in c.gates:
        x, z, e = _conjugate_gate(gate, x, z, e, c.n)
    return PauliString(p.n, x, z, e)


def choi_stabilizers(c):
    """Generators of ``(I (x) C)(|00>+|11>)^n`` on 2n qubits, ancillas first.

    For each qubit ``i`` the Bell-pair generators ``X_a X_s`` and ``Z_a Z_s``
    are pushed through the system copy of the circuit, interleaved as
    ``[XX_0, ZZ_0, XX_1, ZZ_1, ...]``.
    """
    n = c.n
    check_dim(1 << n)
    big = c.shifted(n, 2 * n)
    gens = []
    for i in range(n):
        for letter in "XZ":
            body = ["I"] * (2 * n)
            body[i] = body[n + i] = letter
            gens.append(clifford_conjugate(big, PauliString.from_label("".join(body))))
    return StabilizerGroup(tuple(gens))


# ------------------------------------------------------------------- hypergraphs

@dataclass(frozen=True)
class Hypergraph:
    n: int
    edges: tuple

    def __post_init__(self):
        edges = []
        for e in self.edges:
            e = frozenset(int(v) for v in e)
            if len(e) < 2:
                raise QPVError(f"hyperedge {sorted(e)} has fewer than two vertices")
            if any(not 0 <= v < self.n for v in e):
                raise DimensionError(f"hyperedge {sorted(e)} out of range")
            if e in edges:
                raise QPVError(f"duplicate hyperedge {sorted(e)}")
            edges.append(e)
        object.__setattr__(self, "edges", tuple(edges))

    def incident(self, v):
        return [e for e in self.edges if v in e]

    def state(self):
        """Dense ``prod_e CZ_e |+>^n``."""
        d = 1 << self.n
        check_dim(d)
        b = np.arange(d)
        bits = [(b >> (self.n - 1 - v)) & 1 for v in range(self.n)]
        phase = np.zeros(d, dtype=np.int64)
        for e in self.edges:
            term = np.ones(d, dtype=np.int64)
            for v in e:
                term &= bits[v]
            phase ^= term
        return PureState((1 - 2 * phase) / np.sqrt(d), (2,) * self.n)


def proper_coloring(h):
    """Greedy colouring in vertex order; vertices sharing any edge differ.

    Returns ``(colors, n_colors)`` with ``colors`` a list indexed by vertex.
    """
    colors = [-1] * h.n
    for v in range(h.n):
        taken = {colors[u] for e in h.incident(v) for u in e if u != v and colors[u] >= 0}
        c = 0
        while c in taken:
            c += 1
        colors[v] = c
    return colors, (max(colors) + 1 if colors else 0)


def cz_choi_hypergraph(n):
    """Hypergraph of ``(1 (x) C^(n-1)Z)|psi~>``: pair edges plus one system hyperedge."""
    edges = [(i, n + i) for i in range(n)]
    edges.append(tuple(range(n, 2 * n)))
    return Hypergraph(2 * n, tuple(edges))
