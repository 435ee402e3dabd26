"""One-way decomposition of ancilla-assisted strategies and their
prepare-and-measure counterparts.

``one_way_decompose`` rewrites Omega as sum_i M_i (x) N_i with {M_i} a POVM on
the ancilla, ``to_pmpv`` turns that into an ensemble of input states
rho_i = M_i^T / Tr M_i prepared with probability Tr M_i / d, and the
remaining functions evaluate pass probabilities of a concrete process.
"""
from dataclasses import dataclass
from functools import reduce

import numpy as np

from . import _config
from .channels import apply, choi_matrix
from .errors import DecompositionError, DimensionError, ProcessError, StrategyError
from .strategies import LocalSettings, basis_matrix
from .tensor import Operator, check_dim, is_density_matrix

# ket names of M^T for outcome (basis, bit); transposing a Y projector flips it
_INPUT_NAMES = {("Z", 0): "0", ("Z", 1): "1", ("X", 0): "+", ("X", 1): "-",
                ("Y", 0): "bot", ("Y", 1): "top"}

_SQ = 1 / np.sqrt(2)
NAMED_KETS = {
    "0": np.array([1, 0], dtype=np.complex128),
    "1": np.array([0, 1], dtype=np.complex128),
    "+": np.array([_SQ, _SQ], dtype=np.complex128),
    "-": np.array([_SQ, -_SQ], dtype=np.complex128),
    "top": np.array([_SQ, 1j * _SQ], dtype=np.complex128),
    "bot": np.array([1j * _SQ, _SQ], dtype=np.complex128),
}
NAMED_KETS["−"] = NAMED_KETS["-"]


@dataclass(frozen=True, eq=False)
class OneWayPair:
    M: Operator
    N: Operator
    input_label: tuple = ()
    settings: object = None
    weight: float = None  # exact Tr M when M is a weighted unit-trace projector


@dataclass(frozen=True, eq=False)
class OneWayForm:
    """Omega = sum_i M_i (x) N_i; {M_i} must be a POVM and 0 <= N_i <= 1."""
    pairs: tuple

    def __post_init__(self):
        pairs = tuple(p if isinstance(p, OneWayPair) else OneWayPair(*p) for p in self.pairs)
        if not pairs:
            raise DecompositionError("empty one-way form")
        d = pairs[0].M.dim
        total = sum(p.M.data for p in pairs)
        if np.max(np.abs(total - np.eye(d))) > _config.PROJECTOR_TOL:
            raise DecompositionError("ancilla operators do not sum to the identity")
        for p in pairs:
            w = np.linalg.eigvalsh(p.N.data)
            if w[0] < -_config.PSD_TOL or w[-1] > 1 + _config.PSD_TOL:
                raise DecompositionError("pass effect outside [0, 1]")
        object.__setattr__(self, "pairs", pairs)

    def reconstruct(self):
        return sum(np.kron(p.M.data, p.N.data) for p in self.pairs)


def _key(m):
    return (np.round(m, 10) + 0.0).tobytes()


def one_way_decompose(s):
    """Split every test by ancilla outcome string in its local product basis.

    Unmeasured ancilla qubits are expanded in the Z basis so each M_i is a
    weighted rank-one product projector.  Pairs with identical normalized M
    and identical N are merged.
    """
    n_a, n_s = s.n_ancilla, s.n_system
    d_a, d_s = 1 << n_a, 1 << n_s
    merged = {}
    order = []
    for p, test in s.tests:
        st = test.settings
        if st is None:
            raise DecompositionError(f"test {test!r} has no local description across the cut")
        anc = [("Z" if isinstance(b, str) and b == "I" else b) for b in st.bases[:n_a]]
        sysb = st.bases[n_a:]
        b_s = reduce(np.kron, [basis_matrix(b) for b in sysb]) if n_s else np.eye(1)
        accept = st.accept.reshape(d_a, d_s)
        for a in range(d_a):
            bits = [(a >> (n_a - 1 - q)) & 1 for q in range(n_a)]
            kets = [basis_matrix(b)[:, bit] for b, bit in zip(anc, bits)]
            ket = reduce(np.kron, kets)
            m_norm = np.outer(ket, ket.conj())
            mask = accept[a]
            n_eff = (b_s * mask) @ b_s.conj().T
            key = (_key(m_norm), _key(n_eff))
            if key in merged:
                merged[key][0] += p
                continue
            label = tuple(_INPUT_NAMES.get((b, bit), f"u{bit}") if isinstance(b, str)
                          else f"u{bit}" for b, bit in zip(anc, bits))
            merged[key] = [p, m_norm, n_eff, label, LocalSettings(tuple(sysb), mask)]
            order.append(key)
    pairs = []
    for key in order:
        w, m_norm, n_eff, label, settings = merged[key]
        pairs.append(OneWayPair(Operator(w * m_norm, (2,) * n_a, hermitian=True),
                                Operator(n_eff, (2,) * n_s, projector=True), label, settings, w))
    return OneWayForm(tuple(pairs))


@dataclass(frozen=True, eq=False)
class PMPVEntry:
    p: float
    rho: Operator
    effect: Operator
    input_label: tuple = ()
    settings: object = None


@dataclass(frozen=True, eq=False)
class PMPVStrategy:
    """Xi = sum_i p_i rho_i^T (x) N_i on a d-dimensional system."""
    entries: tuple
    d: int
    target_process: object = None
    name: str = ""

    def __post_init__(self):
        entries = tuple(e if isinstance(e, PMPVEntry) else PMPVEntry(*e) for e in self.entries)
        if not entries:
            raise StrategyError("PMPV strategy has no entries")
        if abs(sum(e.p for e in entries) - 1) > 1e-12 or any(e.p <= 0 for e in entries):
            raise StrategyError("PMPV weights must be positive and sum to 1")
        for e in entries:
            if e.rho.dim != self.d:
                raise DimensionError(f"input state of dimension {e.rho.dim}, expected {self.d}")
            if not is_density_matrix(e.rho):
                raise StrategyError(f"input {e.input_label or ''} is not a density matrix")
        object.__setattr__(self, "entries", entries)
        if self.target_process is not None:
            u = self.target_process
            if u.d_in != self.d:
                raise DimensionError("target process does not match the input dimension")
            ratio = _ensemble_ratio(self, u)
            if abs(ratio - 1) > _config.PROJECTOR_TOL:
                raise StrategyError(f"target passes with probability {ratio:.12g}, not 1")

    @property
    def weights(self):
        return np.array([e.p for e in self.entries])

    @property
    def dims(self):
        return self.entries[0].rho.dims


def to_pmpv(f, d, target_process=None, name=""):
    """p_i = Tr(M_i)/d, rho_i = M_i^T / Tr(M_i); zero-trace M_i are dropped."""
    if f.pairs[0].M.dim != d:
        raise DimensionError(f"ancilla dimension {f.pairs[0].M.dim} does not match d={d}")
    entries = []
    for pair in f.pairs:
        tr = pair.M.trace().real if pair.weight is None else pair.weight
        if tr <= 1e-14:
            continue
        rho = Operator(pair.M.data.T / tr, pair.M.dims, hermitian=True)
        entries.append(PMPVEntry(tr / d, rho, pair.N, pair.input_label, pair.settings))
    return PMPVStrategy(tuple(entries), d, target_process, name)


def convert(s):
    """AAPV strategy -> PMPV strategy via the one-way form."""
    return to_pmpv(one_way_decompose(s), 1 << s.n_ancilla, s.target_process, s.name)


def xi_matrix(x):
    check_dim(x.d * x.entries[0].effect.dim)
    data = sum(e.p * np.kron(e.rho.data.T, e.effect.data) for e in x.entries)
    return Operator(data, x.dims + x.entries[0].effect.dims, hermitian=True)


def mean_input(x):
    return Operator(sum(e.p * e.rho.data for e in x.entries), x.dims, hermitian=True)


def _ensemble_terms(x, e):
    outs = [apply(e, ent.rho).data for ent in x.entries]
    num = sum(ent.p * np.real(np.einsum("ij,ji->", o, ent.effect.data))
              for ent, o in zip(x.entries, outs))
    den = sum(ent.p * np.real(np.trace(o)) for ent, o in zip(x.entries, outs))
    return float(num), float(den)


def _ensemble_ratio(x, e):
    num, den = _ensemble_terms(x, e)
    return num / den


def _choi_route(x, e):
    xi = xi_matrix(x).data
    ups = choi_matrix(e).data
    return float(np.real(np.einsum("ij,ji->", xi, ups)))


def failure_probability(x, e):
    """Per-round pass probability sum_i p_i Tr[E(rho_i) N_i] = Tr(Xi Upsilon_E).

    Both routes are evaluated and must agree to 1e-10.  Trace-decreasing
    processes belong to :func:`postselected_failure_probability`.
    """
    if e.d_in != x.d:
        raise DimensionError("process input dimension does not match the strategy")
    if not e.is_trace_preserving():
        raise ProcessError("process is not trace preserving; use postselected_failure_probability")
    ensemble, _ = _ensemble_terms(x, e)
    choi = _choi_route(x, e)
    if abs(ensemble - choi) > 1e-10:
        raise ArithmeticError(f"ensemble ({ensemble!r}) and Choi ({choi!r}) routes disagree")
    return ensemble


pass_probability = failure_probability


def postselected_failure_probability(x, e):
    """Conditional pass probability Tr(Xi Upsilon_E) / Tr[E(rho_bar)]."""
    if e.d_in != x.d:
        raise DimensionError("process input dimension does not match the strategy")
    den = float(np.real(np.trace(apply(e, mean_input(x)).data)))
    if den <= 1e-12:
        raise ProcessError("process produces no output on the mean input state")
    num_e, den_e = _ensemble_terms(x, e)
    ratio = _choi_route(x, e) / den
    if abs(ratio - num_e / den_e) > 1e-10:
        raise ArithmeticError("ensemble and Choi routes disagree")
    return ratio


def product_ket(labels):
    return reduce(np.kron, [NAMED_KETS[lab] for lab in labels])
