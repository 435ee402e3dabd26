"""Monte Carlo verification runs against a concrete process.

Each round draws a test (AAPV) or an input/effect pair (PMPV), and passes
with the exact Born probability.  In ``local`` mode the pass decision comes
from single-qubit outcomes sampled one qubit at a time from their exact
conditional distributions, which is how the protocol runs in a lab.

Randomness is counter based (see ``kernels``): round ``a`` of a run with
seed ``s`` always uses the same uniforms, independent of backend and
chunking, so identical configurations give identical results.
"""
import csv
import io as _io
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .channels import apply, choi_state
from .errors import DimensionError, ProcessError, QPVError
from .strategies import AAPVStrategy, confidence, spectral_gap
from .tensor import Operator

SNAP = 1e-12


@dataclass(frozen=True)
class RunConfig:
    """``budget="outputs"`` counts N in rounds that produced an output
    (postselection); ``budget="attempts"`` counts every attempt."""
    N: int
    seed: int = 0
    mode: str = "projector"
    budget: str = "outputs"
    max_attempts: int = None

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise QPVError(f"N must be a positive integer, got {self.N}")
        if self.mode not in ("projector", "local"):
            raise QPVError(f"mode must be 'projector' or 'local', got {self.mode!r}")
        if self.budget not in ("outputs", "attempts"):
            raise QPVError(f"budget must be 'outputs' or 'attempts', got {self.budget!r}")


@dataclass(frozen=True, eq=False)
class RunResult:
    protocol: str
    kind: str
    N: int
    seed: int
    mode: str
    rounds_executed: int
    passes: int
    attempts: int
    per_entry_rounds: tuple = ()
    per_entry_passes: tuple = ()
    nu: float = None
    process: str = ""
    postselected: bool = False
    expected_rate: float = None
    extra: dict = field(default_factory=dict)

    @property
    def fails(self):
        return self.rounds_executed - self.passes

    @property
    def accepted(self):
        return self.rounds_executed > 0 and self.fails == 0

    @property
    def verdict(self):
        return "accept" if self.accepted else "reject"

    @property
    def empirical_pass_rate(self):
        return self.passes / self.rounds_executed if self.rounds_executed else float("nan")

    @property
    def postselected_rounds(self):
        return self.attempts if self.postselected else None

    def sigma(self, p=None):
        """Binomial standard deviation of the pass rate at probability ``p``."""
        p = self.expected_rate if p is None else p
        return float(np.sqrt(max(p * (1 - p), 0.0) / max(self.rounds_executed, 1)))

    def delta_bound_at(self, epsilon, nu=None):
        nu = self.nu if nu is None else nu
        if nu is None:
            raise QPVError("spectral gap unknown for this run")
        return verdict_and_confidence(self, epsilon, nu)

    def to_json(self, epsilon=None):
        out = {
            "protocol": self.protocol, "kind": self.kind, "process": self.process,
            "N": self.N, "seed": self.seed, "mode": self.mode,
            "rounds_executed": self.rounds_executed, "attempts": self.attempts,
            "passes": self.passes, "fails": self.fails, "verdict": self.verdict,
            "empirical_pass_rate": self.empirical_pass_rate,
            "per_entry_rounds": list(self.per_entry_rounds),
            "per_entry_passes": list(self.per_entry_passes),
            "postselected": self.postselected,
        }
        if self.nu is not None:
            out["nu"] = self.nu
        if self.expected_rate is not None:
            out["expected_rate"] = self.expected_rate
        if epsilon is not None and self.nu is not None:
            out["epsilon"] = epsilon
            out["delta_bound"] = self.delta_bound_at(epsilon)
        out.update(self.extra)
        return out

    CSV_FIELDS = ("protocol", "noise", "N", "passes", "rate", "delta_bound")

    def to_csv(self, epsilon=None):
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_FIELDS)
        delta = "" if epsilon is None or self.nu is None else repr(self.delta_bound_at(epsilon))
        w.writerow((self.protocol, self.process, self.rounds_executed, self.passes,
                    repr(self.empirical_pass_rate), delta))
        return buf.getvalue()

    @classmethod
    def from_json(cls, obj):
        try:
            return cls(obj["protocol"], obj["kind"], int(obj["N"]), int(obj["seed"]),
                       obj["mode"], int(obj["rounds_executed"]), int(obj["passes"]),
                       int(obj["attempts"]), tuple(obj.get("per_entry_rounds", ())),
                       tuple(obj.get("per_entry_passes", ())), obj.get("nu"),
                       obj.get("process", ""), bool(obj.get("postselected", False)),
                       obj.get("expected_rate"))
        except KeyError as exc:
            raise QPVError(f"run result is missing field {exc.args[0]!r}") from None


def verdict_and_confidence(r, epsilon, nu):
    """(1 - eps nu)^N after an accepted run of N rounds, else 1 (no claim)."""
    if not r.accepted:
        return 1.0
    return confidence(epsilon, nu, r.rounds_executed)


def _snap(q):
    q = np.asarray(q, dtype=np.float64)
    q = np.where(np.abs(q) < SNAP, 0.0, q)
    q = np.where(np.abs(q - 1) < SNAP, 1.0, q)
    return np.clip(q, 0.0, 1.0)


def _cum(weights):
    c = np.cumsum(np.asarray(weights, dtype=np.float64))
    c /= c[-1]
    c[-1] = 1.0
    return c


def _local_tables(settings_list, states):
    """Prefix sums of exact outcome distributions and accept masks, one row per entry."""
    n = settings_list[0].n
    if any(st.n != n for st in settings_list):
        raise QPVError("local mode needs every entry measured on the same number of qubits")
    cumdist = np.zeros((len(settings_list), (1 << n) + 1))
    accept = np.zeros((len(settings_list), 1 << n), dtype=bool)
    for i, (st, rho) in enumerate(zip(settings_list, states)):
        p = st.outcome_distribution(rho)
        cumdist[i, 1:] = np.cumsum(p / p.sum())
        accept[i] = st.accept
    return n, cumdist, accept


def _run(cum_p, out_p, pass_p, cfg, local_tables=None):
    if local_tables is None:
        n_local, cumdist, accept = 0, np.zeros((1, 2)), np.zeros((1, 1), dtype=bool)
    else:
        n_local, cumdist, accept = local_tables
    count_attempts = cfg.budget == "attempts"
    max_attempts = cfg.max_attempts or (cfg.N if count_attempts else 1000 * cfg.N)
    return kernels.sample_rounds(cum_p, out_p, pass_p, cumdist, accept, n_local,
                                 cfg.mode == "local", kernels.derive_key(cfg.seed), cfg.N,
                                 count_attempts, max_attempts)


def simulate_aapv(s, e, cfg):
    """Run ``cfg.N`` rounds of the ancilla-assisted protocol on the Choi state of ``e``."""
    if not isinstance(s, AAPVStrategy):
        raise QPVError("simulate_aapv needs an AAPV strategy")
    if e.d_in != 1 << s.n_ancilla or e.d_out != 1 << s.n_system:
        raise DimensionError("process dimensions do not match the strategy")
    if not e.is_trace_preserving():
        raise ProcessError("AAPV simulation needs a trace-preserving process; use PMPV")
    rho = choi_state(e)
    q = _snap([np.real(np.einsum("ij,ji->", t.projector.data, rho.data)) for _, t in s.tests])
    tables = None
    if cfg.mode == "local":
        if any(t.settings is None for _, t in s.tests):
            raise QPVError("local mode needs tests with local settings")
        tables = _local_tables([t.settings for _, t in s.tests], [rho] * len(s.tests))
    attempts, outs, passes = _run(_cum(s.weights), np.ones(len(q)), q, cfg, tables)
    return RunResult(s.name, "aapv", cfg.N, cfg.seed, cfg.mode, int(outs.sum()),
                     int(passes.sum()), int(attempts), tuple(int(v) for v in outs),
                     tuple(int(v) for v in passes), spectral_gap(s), e.name,
                     expected_rate=float(s.weights @ q))


def simulate_pmpv(x, e, cfg, nu=None):
    """Run the prepare-and-measure protocol; trace-decreasing ``e`` is postselected.

    For a trace-decreasing process an output appears with probability
    Tr E(rho_i); only rounds with an output count towards N unless
    ``cfg.budget == "attempts"``.  ``expected_rate`` is the conditional
    pass probability.
    """
    if e.d_in != x.d:
        raise DimensionError("process input dimension does not match the strategy")
    outs_rho = [apply(e, ent.rho).data for ent in x.entries]
    t = _snap([np.real(np.trace(o)) for o in outs_rho])
    if e.d_out != x.entries[0].effect.dim:
        raise DimensionError("process output dimension does not match the pass effects")
    tp = e.is_trace_preserving()
    if not tp and cfg.budget == "outputs" and not np.any(x.weights * t > 0):
        raise ProcessError("process never produces an output")
    safe = np.where(t > 0, t, 1.0)
    q = _snap([np.real(np.einsum("ij,ji->", o, ent.effect.data)) / tt
               for o, ent, tt in zip(outs_rho, x.entries, safe)])
    tables = None
    if cfg.mode == "local":
        if any(ent.settings is None for ent in x.entries):
            raise QPVError("local mode needs pass effects with local settings")
        states = [o / tt for o, tt in zip(outs_rho, safe)]
        tables = _local_tables([ent.settings for ent in x.entries], states)
    out_p = np.ones(len(t)) if tp else t
    attempts, outs, passes = _run(_cum(x.weights), out_p, q, cfg, tables)
    w = x.weights * out_p
    expected = float(w @ q / w.sum()) if w.sum() > 0 else float("nan")
    return RunResult(x.name, "pmpv", cfg.N, cfg.seed, cfg.mode, int(outs.sum()),
                     int(passes.sum()), int(attempts), tuple(int(v) for v in outs),
                     tuple(int(v) for v in passes), nu, e.name, postselected=not tp,
                     expected_rate=expected)


def local_round(test, rho_out, rng):
    """One lab-style round: measure qubit by qubit, then apply the pass rule.

    Returns ``(passed, outcomes)`` with ``outcomes`` a tuple of bits.
    """
    st = test.settings
    if st is None:
        raise QPVError(f"test {test!r} has no local description")
    r = rho_out.data if isinstance(rho_out, Operator) else np.asarray(rho_out)
    p = st.outcome_distribution(r)
    p = p / p.sum()
    n = st.n
    lo, size, bits = 0, 1 << n, []
    for _ in range(n):
        half = size >> 1
        tot = p[lo:lo + size].sum()
        p0 = p[lo:lo + half].sum() / tot if tot > 0 else 1.0
        bit = int(rng.random() >= p0)
        bits.append(bit)
        lo += bit * half
        size = half
    return bool(st.accept[lo]), tuple(bits)
