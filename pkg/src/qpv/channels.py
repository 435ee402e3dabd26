"""Quantum processes (unitary or Kraus), Choi matrices, fidelities and noise models."""
from dataclasses import dataclass, field
from math import prod

import numpy as np

from . import _config
from .errors import DimensionError, ProcessError, QPVError
from .tensor import Operator, PureState, check_dim, partial_trace


def _qubit_dims(d):
    n = d.bit_length() - 1
    return (2,) * n if d == 1 << n and n > 0 else (d,)


def _as_matrix(m):
    m = np.array(m.data if isinstance(m, Operator) else m, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {m.shape}")
    m.setflags(write=False)
    return m


@dataclass(frozen=True, eq=False)
class QuantumProcess:
    """A completely positive, trace non-increasing map.

    ``kind`` is ``"unitary"`` (one operator, U^dag U = 1) or ``"kraus"``
    (sum K^dag K <= 1; equality means trace preserving).
    """
    kind: str
    ops: tuple
    dims_in: tuple = None
    dims_out: tuple = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind not in ("unitary", "kraus"):
            raise ProcessError(f"unknown process kind {self.kind!r}")
        ops = tuple(_as_matrix(k) for k in self.ops)
        if not ops:
            raise ProcessError("a process needs at least one operator")
        d_out, d_in = ops[0].shape
        if any(k.shape != (d_out, d_in) for k in ops):
            raise DimensionError("Kraus operators have inconsistent shapes")
        dims_in = tuple(self.dims_in) if self.dims_in is not None else _qubit_dims(d_in)
        dims_out = tuple(self.dims_out) if self.dims_out is not None else _qubit_dims(d_out)
        if prod(dims_in) != d_in or prod(dims_out) != d_out:
            raise DimensionError("subsystem dims do not match the operator shape")
        if self.kind == "unitary":
            if len(ops) != 1 or d_in != d_out:
                raise ProcessError("a unitary process has exactly one square operator")
            u = ops[0]
            if np.max(np.abs(u.conj().T @ u - np.eye(d_in))) > _config.PROJECTOR_TOL:
                raise ProcessError("operator is not unitary")
        else:
            top = np.linalg.eigvalsh(self._kraus_sum(ops))[-1]
            if top > 1 + _config.PSD_TOL:
                raise ProcessError(f"trace-increasing Kraus set (largest eigenvalue of "
                                   f"sum K^dag K is {top:.6g})")
        object.__setattr__(self, "ops", ops)
        object.__setattr__(self, "dims_in", dims_in)
        object.__setattr__(self, "dims_out", dims_out)

    @staticmethod
    def _kraus_sum(ops):
        s = sum(k.conj().T @ k for k in ops)
        return (s + s.conj().T) / 2

    @property
    def d_in(self):
        return self.ops[0].shape[1]

    @property
    def d_out(self):
        return self.ops[0].shape[0]

    @property
    def kraus_ops(self):
        return self.ops

    def is_trace_preserving(self, tol=_config.PSD_TOL):
        if self.kind == "unitary":
            return True
        return bool(np.max(np.abs(self._kraus_sum(self.ops) - np.eye(self.d_in))) <= tol)

    def to_json(self):
        return {
            "kind": self.kind,
            "matrices": [[[[float(v.real), float(v.imag)] for v in row] for row in k]
                         for k in self.ops],
            "dims": list(self.dims_in),
            "dims_out": list(self.dims_out),
            "name": self.name,
        }

    @classmethod
    def from_json(cls, obj):
        try:
            kind = obj["kind"]
            mats = [np.array(m, dtype=np.float64) for m in obj["matrices"]]
        except KeyError as exc:
            raise QPVError(f"process JSON is missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError):
            raise QPVError("process JSON field 'matrices' must hold [re, im] pairs") from None
        ops = []
        for m in mats:
            if m.ndim != 3 or m.shape[2] != 2:
                raise QPVError("process JSON field 'matrices' must hold [re, im] pairs")
            ops.append(m[..., 0] + 1j * m[..., 1])
        dims = obj.get("dims")
        return cls(kind, tuple(ops), dims, obj.get("dims_out", dims), obj.get("name", ""))


def unitary_process(u, dims=None, name=""):
    u = _as_matrix(u)
    dims = tuple(dims) if dims is not None else _qubit_dims(u.shape[0])
    return QuantumProcess("unitary", (u,), dims, dims, name)


def kraus_process(ops, dims_in=None, dims_out=None, name=""):
    return QuantumProcess("kraus", tuple(ops), dims_in, dims_out, name)


# ---------------------------------------------------------------- named gates

_GATES = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1, -1]),
    "H": np.array([[1, 1], [1, -1]]) / np.sqrt(2),
    "S": np.diag([1, 1j]),
    "T": np.diag([1, np.exp(1j * np.pi / 4)]),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]),
    "CZ": np.diag([1, 1, 1, -1]),
}


def controlled_z(n):
    """C^(n-1)Z on n qubits: diag(1, ..., 1, -1)."""
    diag = np.ones(1 << n, dtype=np.complex128)
    diag[-1] = -1
    return np.diag(diag)


def gate(name):
    """Unitary process for a named gate (I, X, Y, Z, H, S, T, CNOT, CZ, CCZ, C<k>Z)."""
    key = name.upper()
    if key in _GATES:
        return unitary_process(_GATES[key], name=key)
    if key == "CCZ":
        return unitary_process(controlled_z(3), name=key)
    if key.startswith("C") and key.endswith("Z") and key[1:-1].isdigit():
        return unitary_process(controlled_z(int(key[1:-1]) + 1), name=key)
    raise QPVError(f"unknown gate {name!r}")


# ------------------------------------------------------------------ Choi maps

def choi_matrix(e):
    """Unnormalized Choi matrix sum_{kl} |k><l| (x) E(|k><l|), ancilla first."""
    check_dim(e.d_in * e.d_out)
    vecs = np.stack([k.T.reshape(-1) for k in e.ops], axis=1)
    return Operator(vecs @ vecs.conj().T, e.dims_in + e.dims_out, hermitian=True)


def choi_state(e):
    ups = choi_matrix(e)
    tr = ups.trace().real
    if tr <= 1e-12:
        raise ProcessError("null process: Choi matrix has zero trace")
    return Operator(ups.data / tr, ups.dims, hermitian=True)


def choi_vector(e):
    """Normalized pure Choi vector for a single-operator process."""
    if len(e.ops) != 1:
        raise ProcessError("choi_vector needs a single-operator process")
    return PureState.normalized(e.ops[0].T.reshape(-1), e.dims_in + e.dims_out)


def process_from_choi(choi, dims_in, dims_out, trace_scale=None):
    """Kraus process whose Choi matrix is proportional to ``choi``.

    By default the result is scaled so the largest eigenvalue of sum K^dag K
    is 1 (trace preserving when the input marginal allows it).
    """
    c = choi.data if isinstance(choi, Operator) else np.asarray(choi, dtype=np.complex128)
    d_in, d_out = prod(dims_in), prod(dims_out)
    if c.shape != (d_in * d_out, d_in * d_out):
        raise DimensionError("Choi matrix shape does not match the dims")
    w, v = np.linalg.eigh((c + c.conj().T) / 2)
    if w[0] < -_config.PSD_TOL * max(1.0, w[-1]):
        raise ProcessError("Choi matrix is not positive semidefinite")
    ops = [np.sqrt(lam) * v[:, j].reshape(d_in, d_out).T
           for j, lam in enumerate(w) if lam > 1e-14 * w[-1]]
    top = np.linalg.eigvalsh(QuantumProcess._kraus_sum(ops))[-1]
    scale = trace_scale if trace_scale is not None else 1 / top
    return QuantumProcess("kraus", tuple(k * np.sqrt(scale) for k in ops),
                          tuple(dims_in), tuple(dims_out))


def _rho_data(rho, d):
    r = rho.data if isinstance(rho, Operator) else np.asarray(rho, dtype=np.complex128)
    if r.shape != (d, d):
        raise DimensionError(f"input state has shape {r.shape}, process expects {d}x{d}")
    return r


def apply(e, rho):
    """sum_j K_j rho K_j^dag (unnormalized for trace-decreasing processes)."""
    r = _rho_data(rho, e.d_in)
    out = sum(k @ r @ k.conj().T for k in e.ops)
    return Operator(out, e.dims_out)


def apply_postselected(e, rho):
    """(E(rho) / Tr E(rho), Tr E(rho))."""
    out = apply(e, rho)
    p = out.trace().real
    if p <= 1e-12:
        raise ProcessError("zero success probability under postselection")
    return Operator(out.data / p, out.dims), p


def apply_choi(choi, rho, dims_in):
    """Tr_A[(rho^T (x) 1) Upsilon], the inverse Choi map."""
    n_a = len(dims_in)
    d_a = prod(dims_in)
    r = _rho_data(rho, d_a)
    d_s = choi.dim // d_a
    left = np.kron(r.T, np.eye(d_s))
    prod_op = Operator(left @ choi.data, choi.dims)
    return partial_trace(prod_op, range(n_a, choi.n_subsystems))


def _is_pure_target(target):
    if target.kind == "unitary" or len(target.ops) == 1:
        return True
    w = np.linalg.eigvalsh(choi_state(target).data)
    return w[-2] <= 1e-8


def entanglement_fidelity(e, target):
    """Tr(rho_E rho_target) with rho_target the (pure) normalized Choi state."""
    if (e.d_in, e.d_out) != (target.d_in, target.d_out):
        raise DimensionError("process and target act on different dimensions")
    if not _is_pure_target(target):
        raise ProcessError("target Choi state is not pure")
    rho_e = choi_state(e).data
    rho_t = choi_state(target).data
    return float(np.clip(np.real(np.einsum("ij,ji->", rho_e, rho_t)), 0.0, 1.0))


def average_gate_fidelity(f_e, d):
    """(d F_e + 1) / (d + 1)."""
    if not 0.0 <= f_e <= 1.0:
        raise QPVError(f"entanglement fidelity {f_e} outside [0, 1]")
    if int(d) != d or d < 2:
        raise QPVError(f"dimension must be an integer >= 2, got {d}")
    return (d * f_e + 1) / (d + 1)


# ---------------------------------------------------------------- composition

def compose(outer, inner):
    """The process ``outer o inner`` (inner acts first)."""
    if outer.d_in != inner.d_out:
        raise DimensionError("cannot compose: dimension mismatch")
    ops = tuple(a @ b for a in outer.ops for b in inner.ops)
    name = f"{outer.name}o{inner.name}" if outer.name or inner.name else ""
    if outer.kind == inner.kind == "unitary":
        return QuantumProcess("unitary", ops, inner.dims_in, outer.dims_out, name)
    return QuantumProcess("kraus", ops, inner.dims_in, outer.dims_out, name)


def tensor(*procs):
    ops = [np.array([[1.0]])]
    for p in procs:
        ops = [np.kron(a, b) for a in ops for b in p.ops]
    kind = "unitary" if all(p.kind == "unitary" for p in procs) else "kraus"
    dims_in = sum((p.dims_in for p in procs), ())
    dims_out = sum((p.dims_out for p in procs), ())
    return QuantumProcess(kind, tuple(ops), dims_in, dims_out)


def depolarizing(d, p, dims=None):
    """Global depolarizing channel rho -> (1-p) rho + p Tr(rho) 1/d."""
    if not 0.0 <= p <= 1.0:
        raise QPVError(f"depolarizing probability {p} outside [0, 1]")
    ops = [np.sqrt(1 - p) * np.eye(d)]
    if p > 0:
        for i in range(d):
            for j in range(d):
                m = np.zeros((d, d))
                m[i, j] = np.sqrt(p / d)
                ops.append(m)
    return QuantumProcess("kraus", tuple(ops), dims, dims, f"depol({p:g})")


def amplitude_damping(gamma):
    if not 0.0 <= gamma <= 1.0:
        raise QPVError(f"damping rate {gamma} outside [0, 1]")
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]])
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]])
    return QuantumProcess("kraus", (k0, k1), (2,), (2,), f"ad({gamma:g})")


def rotation(axis, angle):
    """exp(-i angle/2 sigma_axis)."""
    sigma = _GATES[axis.upper()]
    u = np.cos(angle / 2) * np.eye(2) - 1j * np.sin(angle / 2) * sigma
    return unitary_process(u, name=f"R{axis.lower()}({angle:g})")


@dataclass(frozen=True)
class NoiseSpec:
    """Noise model applied after the target.

    Models: ``depolarizing`` (p, global), ``local_depolarizing`` (p, per qubit),
    ``unitary_overrotation`` (axis, angle; on every qubit),
    ``amplitude_damping`` (gamma; every qubit), ``lossy_filter`` (matrix).
    """
    model: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        p = self.params
        if self.model in ("depolarizing", "local_depolarizing"):
            if not 0.0 <= float(p.get("p", -1)) <= 1.0:
                raise QPVError("depolarizing noise needs p in [0, 1]")
        elif self.model == "amplitude_damping":
            if not 0.0 <= float(p.get("gamma", -1)) <= 1.0:
                raise QPVError("amplitude damping needs gamma in [0, 1]")
        elif self.model == "unitary_overrotation":
            if str(p.get("axis", "")).upper() not in ("X", "Y", "Z") or "angle" not in p:
                raise QPVError("overrotation needs axis in {x, y, z} and an angle")
        elif self.model == "lossy_filter":
            if "matrix" not in p:
                raise QPVError("lossy_filter needs a 'matrix' parameter")
        else:
            raise QPVError(f"unknown noise model {self.model!r}")

    @classmethod
    def parse(cls, text):
        """``depolarizing:0.04``, ``amplitude_damping:0.1``, ``unitary_overrotation:x:0.2``."""
        model, *args = text.split(":")
        try:
            if model in ("depolarizing", "local_depolarizing"):
                return cls(model, {"p": float(args[0])})
            if model == "amplitude_damping":
                return cls(model, {"gamma": float(args[0])})
            if model == "unitary_overrotation":
                return cls(model, {"axis": args[0], "angle": float(args[1])})
        except (IndexError, ValueError):
            pass
        raise QPVError(f"cannot parse noise spec {text!r}")


def _per_qubit(channel, n):
    return tensor(*([channel] * n))


def make_noise(target, spec):
    """Compose ``target`` with the noise channel described by ``spec``."""
    d = target.d_out
    n = len(target.dims_out)
    qubits = all(x == 2 for x in target.dims_out)
    p = spec.params
    if spec.model == "depolarizing":
        noise = depolarizing(d, float(p["p"]), target.dims_out)
    elif spec.model == "lossy_filter":
        k = _as_matrix(p["matrix"])
        noise = QuantumProcess("kraus", (k,), target.dims_out, target.dims_out, "filter")
    else:
        if not qubits:
            raise QPVError(f"{spec.model} is defined per qubit")
        if spec.model == "local_depolarizing":
            one = depolarizing(2, float(p["p"]), (2,))
        elif spec.model == "amplitude_damping":
            one = amplitude_damping(float(p["gamma"]))
        else:
            one = rotation(p["axis"], float(p["angle"]))
        noise = _per_qubit(one, n)
    out = compose(noise, target)
    return QuantumProcess(out.kind, out.ops, target.dims_in, target.dims_out,
                          f"{spec.model}({target.name})")


def random_kraus(d, rank, rng, d_out=None):
    """Random trace-preserving Kraus set from a Haar-like isometry."""
    d_out = d_out or d
    g = rng.normal(size=(d_out * rank, d)) + 1j * rng.normal(size=(d_out * rank, d))
    q, r = np.linalg.qr(g)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return kraus_process(tuple(q[i * d_out:(i + 1) * d_out] for i in range(rank)))


def random_unitary(d, rng):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density(d, rng, rank=None):
    rank = rank or d
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real

