"""Verification of a d-outcome measurement against a rank-one projective target.

Prepare |i> with probability 1/d, measure, pass iff the outcome is i.  The
per-round pass probability is (1/d) sum_i <i|M_i|i>, which is exactly the
measurement fidelity, so a model at fidelity 1 - eps fails each round with
probability eps and the sample count is the nu = 1 case of the state bound.
"""
from dataclasses import dataclass

import numpy as np

from . import _config, kernels
from .channels import kraus_process
from .errors import DimensionError, QPVError
from .simulator import RunResult
from .strategies import plan_samples
from .tensor import Operator, PureState


@dataclass(frozen=True, eq=False)
class MeasurementModel:
    """POVM with one effect per outcome."""
    effects: tuple

    def __post_init__(self):
        effs = []
        for m in self.effects:
            a = np.asarray(m.data if isinstance(m, Operator) else m, dtype=np.complex128)
            effs.append(Operator(a, (a.shape[0],), hermitian=True))
        if not effs:
            raise QPVError("a measurement needs at least one effect")
        d = effs[0].dim
        for k, m in enumerate(effs):
            if m.dim != d:
                raise DimensionError("effects have different dimensions")
            if np.linalg.eigvalsh(m.data)[0] < -_config.PSD_TOL:
                raise QPVError(f"effect {k} is not positive semidefinite")
        if np.max(np.abs(sum(m.data for m in effs) - np.eye(d))) > _config.PSD_TOL:
            raise QPVError("effects do not sum to the identity")
        object.__setattr__(self, "effects", tuple(effs))

    @property
    def d(self):
        return self.effects[0].dim

    def to_json(self):
        return {"effects": [[[[float(v.real), float(v.imag)] for v in row] for row in m.data]
                            for m in self.effects]}


@dataclass(frozen=True, eq=False)
class ProjectiveTarget:
    """Orthonormal basis {|i>}; outcome i should fire exactly on |i>."""
    basis: tuple
    name: str = ""

    def __post_init__(self):
        basis = tuple(b if isinstance(b, PureState) else PureState.normalized(b, (len(b),))
                      for b in self.basis)
        d = basis[0].dim
        if len(basis) != d or any(b.dim != d for b in basis):
            raise DimensionError("target basis must contain d vectors of dimension d")
        g = np.array([b.amplitudes for b in basis])
        if np.max(np.abs(g.conj() @ g.T - np.eye(d))) > 1e-12:
            raise QPVError("target basis is not orthonormal")
        object.__setattr__(self, "basis", basis)

    @classmethod
    def computational(cls, d):
        return cls(tuple(PureState(np.eye(d)[i], (d,)) for i in range(d)), "computational")

    @property
    def d(self):
        return len(self.basis)

    def matrix(self):
        """Columns are the basis vectors."""
        return np.array([b.amplitudes for b in self.basis]).T


def _check_pair(m, p):
    if m.d != p.d or len(m.effects) != p.d:
        raise DimensionError(f"measurement with {len(m.effects)} effects of dimension {m.d} "
                             f"cannot be compared to a {p.d}-outcome target")


def round_pass_probabilities(m, p):
    """<i|M_i|i> for each prepared basis state i."""
    _check_pair(m, p)
    return np.array([float(np.real(b.amplitudes.conj() @ e.data @ b.amplitudes))
                     for e, b in zip(m.effects, p.basis)])


def measurement_fidelity(m, p):
    """(1/d) sum_i <i|M_i|i>."""
    return float(np.mean(round_pass_probabilities(m, p)))


def plan_measurement_samples(epsilon, delta):
    return plan_samples(epsilon, delta, 1.0).N


def damped_model(target, epsilon):
    """Fidelity 1 - eps model: outcome i fires on |i> w.p. 1 - eps, else on |i+1>.

    Every prepared state passes with probability exactly 1 - eps.
    """
    if isinstance(target, int):
        target = ProjectiveTarget.computational(target)
    if not 0 <= epsilon <= 1:
        raise QPVError(f"epsilon={epsilon} outside [0, 1]")
    d = target.d
    v = target.matrix()
    projs = [np.outer(v[:, i], v[:, i].conj()) for i in range(d)]
    return MeasurementModel(tuple((1 - epsilon) * projs[i] + epsilon * projs[(i - 1) % d]
                                  for i in range(d)))


def flip_model(q):
    """Qubit readout that reports the wrong bit with probability q."""
    return MeasurementModel((np.diag([1 - q, q]), np.diag([q, 1 - q])))


def verify_measurement(m, p, N, rng_seed=0):
    """Monte Carlo run: prepare |i> uniformly, pass iff the outcome is i."""
    q = round_pass_probabilities(m, p)
    q = np.where(np.abs(q - 1) < 1e-12, 1.0, np.clip(q, 0.0, 1.0))
    d = p.d
    cum = np.arange(1, d + 1, dtype=np.float64) / d
    cum[-1] = 1.0
    attempts, outs, passes = kernels.sample_rounds(
        cum, np.ones(d), q, np.zeros((1, 2)), np.zeros((1, 1), dtype=bool), 0, False,
        kernels.derive_key(rng_seed), int(N), False, int(N))
    return RunResult(p.name or "measurement", "measurement", int(N), rng_seed, "projector",
                     int(outs.sum()), int(passes.sum()), int(attempts),
                     tuple(int(v) for v in outs), tuple(int(v) for v in passes), 1.0,
                     expected_rate=float(q.mean()))


def instrument_branches(m):
    """Each outcome as a trace-decreasing process with Kraus operator sqrt(M_i).

    Checking branch i against the filter |i><i| with the postselected
    process machinery is the route for measurements that cannot be
    probed with trusted entangled inputs.
    """
    out = []
    for k, e in enumerate(m.effects):
        w, v = np.linalg.eigh(e.data)
        root = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
        out.append(kraus_process((root,), name=f"branch{k}"))
    return tuple(out)


def model_from_json(obj):
    if not isinstance(obj, dict) or "effects" not in obj:
        raise QPVError("POVM is missing field 'effects'")
    effs = []
    for k, e in enumerate(obj["effects"]):
        a = np.array(e, dtype=np.float64)
        if a.ndim == 3 and a.shape[2] == 2:
            a = a[..., 0] + 1j * a[..., 1]
        elif a.ndim != 2:
            raise QPVError(f"field 'effects[{k}]' must be a matrix")
        effs.append(a)
    return MeasurementModel(tuple(effs))


def target_from_json(obj, d):
    if obj is None or obj == "computational":
        return ProjectiveTarget.computational(d)
    if isinstance(obj, str):
        raise QPVError(f"unknown named target basis {obj!r}")
    vecs = []
    for k, v in enumerate(obj):
        a = np.array(v, dtype=np.float64)
        if a.ndim == 2 and a.shape[1] == 2:
            a = a[:, 0] + 1j * a[:, 1]
        elif a.ndim != 1:
            raise QPVError(f"field 'target[{k}]' must be a vector")
        vecs.append(a)
    return ProjectiveTarget(tuple(vecs))
