"""Dense operators with explicit subsystem structure.

Everything here is small dense linear algebra: Kronecker products, partial
traces and transposes over a declared tensor factorization, a self-adjoint
eigensolver with deterministic ordering, and pure-state fidelity.
"""
from dataclasses import dataclass, field
from math import prod

import numpy as np

from . import _config
from .errors import CapExceededError, DimensionError, NotHermitianError


def check_dim(d):
    cap = _config.dim_cap()
    if d > cap:
        raise CapExceededError(f"dimension {d} exceeds the dense cap {cap} "
                               "(raise it with QPV_DIM_CAP, at most 4096)")


def _frozen(a):
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


def _flag_check(data, hermitian, unitary, projector):
    if hermitian and np.max(np.abs(data - data.conj().T), initial=0.0) > _config.HERMITIAN_TOL:
        raise NotHermitianError("operator flagged hermitian is not")
    if unitary:
        d = data.shape[0]
        if np.max(np.abs(data.conj().T @ data - np.eye(d)), initial=0.0) > _config.PROJECTOR_TOL:
            raise DimensionError("operator flagged unitary is not")
    if projector and np.max(np.abs(data @ data - data), initial=0.0) > _config.PROJECTOR_TOL:
        raise DimensionError("operator flagged projector is not idempotent")


@dataclass(frozen=True, eq=False)
class Operator:
    """Square complex matrix over subsystems of dimensions ``dims``.

    ``hermitian``, ``unitary`` and ``projector`` are tri-state flags: ``True``
    is checked on construction, ``False`` asserts the property is absent,
    ``None`` means unknown.
    """
    data: np.ndarray
    dims: tuple
    hermitian: object = None
    unitary: object = None
    projector: object = None

    def __post_init__(self):
        data = _frozen(self.data)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise DimensionError(f"operator must be square, got shape {data.shape}")
        dims = tuple(int(x) for x in self.dims)
        if any(x < 1 for x in dims) or prod(dims) != data.shape[0]:
            raise DimensionError(f"dims {dims} do not factor dimension {data.shape[0]}")
        check_dim(data.shape[0])
        if self.projector:
            object.__setattr__(self, "hermitian", True)
        _flag_check(data, self.hermitian, self.unitary, self.projector)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self):
        return self.data.shape[0]

    @property
    def n_subsystems(self):
        return len(self.dims)

    def trace(self):
        return complex(np.trace(self.data))

    def __matmul__(self, other):
        return Operator(self.data @ other.data, self.dims)

    def allclose(self, other, atol=1e-12):
        other = other.data if isinstance(other, Operator) else np.asarray(other)
        return self.data.shape == other.shape and bool(np.max(np.abs(self.data - other)) <= atol)


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray
    dims: tuple

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        dims = tuple(int(x) for x in self.dims)
        if prod(dims) != amps.shape[0]:
            raise DimensionError(f"dims {dims} do not factor length {amps.shape[0]}")
        check_dim(amps.shape[0])
        if abs(np.linalg.norm(amps) - 1.0) > _config.NORM_TOL:
            raise DimensionError("state vector is not normalized")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def normalized(cls, vec, dims):
        vec = np.asarray(vec, dtype=np.complex128).ravel()
        return cls(vec / np.linalg.norm(vec), dims)

    @property
    def dim(self):
        return self.amplitudes.shape[0]

    def density(self):
        v = self.amplitudes
        return Operator(np.outer(v, v.conj()), self.dims, projector=True)


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: object = field(default=None)


def operator(data, dims=None, **flags):
    """Wrap an array; ``dims`` defaults to qubits when the size is a power of two."""
    data = np.asarray(data, dtype=np.complex128)
    if dims is None:
        d = data.shape[0]
        n = d.bit_length() - 1
        dims = (2,) * n if d == 1 << n and n > 0 else (d,)
    return Operator(data, dims, **flags)


def identity(dims):
    dims = tuple(dims)
    return Operator(np.eye(prod(dims)), dims, hermitian=True, unitary=True, projector=True)


def _and(a, b):
    if a and b:
        return True
    return None


def kron(a, b):
    return Operator(np.kron(a.data, b.data), a.dims + b.dims,
                    hermitian=_and(a.hermitian, b.hermitian),
                    unitary=_and(a.unitary, b.unitary),
                    projector=_and(a.projector, b.projector))


def kron_all(ops):
    ops = list(ops)
    out = ops[0]
    for op in ops[1:]:
        out = kron(out, op)
    return out


def _check_indices(indices, n):
    indices = sorted(set(int(i) for i in indices))
    for i in indices:
        if not 0 <= i < n:
            raise DimensionError(f"subsystem index {i} out of range for {n} subsystems")
    return indices


def partial_trace(op, keep):
    """Trace out every subsystem not listed in ``keep`` (kept in ascending order)."""
    n = op.n_subsystems
    keep = _check_indices(keep, n)
    t = op.data.reshape(op.dims + op.dims)
    current = list(range(n))
    for i in sorted(set(range(n)) - set(keep), reverse=True):
        pos = current.index(i)
        t = np.trace(t, axis1=pos, axis2=pos + len(current))
        current.pop(pos)
    kept = tuple(op.dims[i] for i in keep)
    d = prod(kept)
    return Operator(t.reshape(d, d), kept, hermitian=True if op.hermitian else None)


def partial_transpose(op, subsystems):
    n = op.n_subsystems
    subs = _check_indices(subsystems, n)
    t = op.data.reshape(op.dims + op.dims)
    axes = list(range(2 * n))
    for i in subs:
        axes[i], axes[n + i] = axes[n + i], axes[i]
    return Operator(t.transpose(axes).reshape(op.dim, op.dim), op.dims,
                    hermitian=True if op.hermitian else None)


def transpose(op):
    return Operator(op.data.T, op.dims, hermitian=op.hermitian, unitary=op.unitary,
                    projector=op.projector)


def dagger(op):
    return Operator(op.data.conj().T, op.dims, hermitian=op.hermitian, unitary=op.unitary,
                    projector=op.projector)


def _fix_phase(vecs):
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        k = int(np.argmax(np.abs(col) > 1e-10 * np.max(np.abs(col))))
        vecs[:, j] = col * (abs(col[k]) / col[k])
    return vecs


def eig_hermitian(op, vectors=False):
    """Eigen-decomposition of a Hermitian operator, eigenvalues descending.

    Eigenvectors (when requested) are phase-fixed so their first significant
    entry is real positive; inside a degenerate cluster (gap <= 1e-10) they are
    ordered lexicographically by their rounded real then imaginary parts.
    """
    a = op.data if isinstance(op, Operator) else np.asarray(op, dtype=np.complex128)
    if np.max(np.abs(a - a.conj().T), initial=0.0) > _config.HERMITIAN_TOL:
        raise NotHermitianError("eig_hermitian needs a Hermitian operator")
    a = (a + a.conj().T) / 2
    if not vectors:
        return Spectrum(np.linalg.eigvalsh(a)[::-1].copy())
    w, v = np.linalg.eigh(a)
    w, v = w[::-1].copy(), _fix_phase(v[:, ::-1].copy())
    order, start = [], 0
    for j in range(1, len(w) + 1):
        if j == len(w) or w[start] - w[j] > _config.EIG_RESIDUAL_TOL:
            cluster = list(range(start, j))
            if len(cluster) > 1:
                keyed = [(tuple(np.round(v[:, c].real, 9)) + tuple(np.round(v[:, c].imag, 9)), c)
                         for c in cluster]
                cluster = [c for _, c in sorted(keyed, reverse=True)]
            order.extend(cluster)
            start = j
    return Spectrum(w[order], v[:, order])


def expectation(op, rho):
    """Real part of Tr(op rho)."""
    a = op.data if isinstance(op, Operator) else op
    r = rho.data if isinstance(rho, Operator) else rho
    return float(np.real(np.einsum("ij,ji->", a, r)))


def is_density_matrix(rho, tol=_config.PSD_TOL):
    a = rho.data if isinstance(rho, Operator) else np.asarray(rho)
    if np.max(np.abs(a - a.conj().T)) > tol or abs(np.trace(a) - 1) > tol:
        return False
    return bool(np.linalg.eigvalsh((a + a.conj().T) / 2)[0] >= -tol)


def state_fidelity(rho, phi):
    """<phi|rho|phi> for a density matrix ``rho`` and pure state ``phi``."""
    if rho.dim != phi.dim:
        raise DimensionError(f"dimension mismatch: {rho.dim} vs {phi.dim}")
    if not is_density_matrix(rho):
        raise DimensionError("rho is not a density matrix")
    v = phi.amplitudes
    return float(np.real(v.conj() @ rho.data @ v))
