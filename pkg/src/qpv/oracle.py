"""Independent worst-case pass probabilities for a strategy at infidelity eps.

Four estimates of max Tr(Omega rho) over states with <phi|rho|phi> <= 1 - eps:

* ``analytic_worst_case``: 1 - eps * nu from the spectral gap.
* ``subspace_worst_case``: exact, via the top eigenvalue of Omega compressed
  onto the orthogonal complement of the target.
* ``random_search_worst_case``: stochastic lower bound (hill-climbing chains
  on the complement).
* ``tp_constrained_search``: falsifier restricted to Choi states of
  trace-preserving processes.

They are computed by different routes so that a bug in one shows up as a
violated ordering.
"""
from dataclasses import dataclass

import numpy as np

from .channels import (choi_state, compose, depolarizing, entanglement_fidelity, random_kraus)
from .errors import QPVError, StrategyError
from .strategies import spectral_gap
from .tensor import Operator


def _check_eps(epsilon):
    if not 0 <= epsilon < 1:
        raise QPVError(f"epsilon={epsilon} outside [0, 1)")


@dataclass(frozen=True, eq=False)
class WorstCaseReport:
    epsilon: float
    analytic: float
    subspace_max: float
    random_search_max: float
    maximizer: Operator
    degenerate: bool = False
    tp_constrained_max: float = None

    def to_json(self):
        m = self.maximizer.data
        out = {
            "epsilon": self.epsilon,
            "analytic": self.analytic,
            "subspace_max": self.subspace_max,
            "random_search_max": self.random_search_max,
            "degenerate": self.degenerate,
            "maximizer": [[[float(v.real), float(v.imag)] for v in row] for row in m],
        }
        if self.tp_constrained_max is not None:
            out["tp_constrained_max"] = self.tp_constrained_max
        return out


def analytic_worst_case(s, epsilon):
    _check_eps(epsilon)
    return 1 - epsilon * spectral_gap(s)


def complement_basis(phi):
    """Orthonormal basis (columns) of the complement of the unit vector ``phi``."""
    d = phi.shape[0]
    a = np.concatenate([phi[:, None], np.eye(d, dtype=np.complex128)], axis=1)
    q, _ = np.linalg.qr(a)
    return q[:, 1:d]


def _compressed(s):
    phi = s.target.amplitudes
    b = complement_basis(phi)
    c = b.conj().T @ s.matrix().data @ b
    return phi, b, (c + c.conj().T) / 2


def subspace_worst_case(s, epsilon, trials=0, rng_seed=0):
    """Exact maximum (1 - eps) + eps * lambda_max(Q Omega Q) with Q = 1 - |phi><phi|.

    The maximizer (1 - eps)|phi><phi| + eps|tau><tau| has fidelity exactly
    1 - eps.  ``degenerate`` flags an eigenvalue-1 direction orthogonal to
    the target, in which case nothing is learned from passing.  With
    ``trials > 0`` the report also carries a random-search lower bound.
    """
    _check_eps(epsilon)
    phi, b, c = _compressed(s)
    w, v = np.linalg.eigh(c)
    lam = float(w[-1])
    tau = b @ v[:, -1]
    rho = (1 - epsilon) * np.outer(phi, phi.conj()) + epsilon * np.outer(tau, tau.conj())
    value = (1 - epsilon) + epsilon * lam
    degenerate = lam > 1 - 1e-10
    try:
        analytic = analytic_worst_case(s, epsilon)
    except StrategyError:
        analytic = float("nan")
    rs = random_search_worst_case(s, epsilon, trials, rng_seed) if trials else float("nan")
    return WorstCaseReport(float(epsilon), float(analytic), float(value), float(rs),
                           Operator(rho, s.target.dims, hermitian=True), bool(degenerate))


def _as_direction(state, phi, b):
    a = state.data if isinstance(state, Operator) else np.asarray(state, dtype=np.complex128)
    if a.ndim == 2:
        c = b.conj().T @ a @ b
        w, v = np.linalg.eigh((c + c.conj().T) / 2)
        return v[:, -1]
    c = b.conj().T @ a
    return c / np.linalg.norm(c)


def random_search_worst_case(s, epsilon, trials, rng_seed=0, seed_states=(), chains=8):
    """Stochastic lower bound on the fidelity-constrained maximum.

    Every evaluated state is (1 - eps)|phi><phi| + eps|tau><tau| with tau a
    unit vector orthogonal to the target.  ``trials`` evaluations are split
    between ``chains`` (1+1) hill-climbers: each proposal adds a unitarily
    invariant Gaussian step to the current tau and is kept if it scores
    higher; the step size shrinks after a failure and grows after a success.
    States in ``seed_states`` (vectors or density matrices) are evaluated
    first and count against the budget.
    """
    _check_eps(epsilon)
    if trials < 1:
        raise QPVError("trials must be at least 1")
    if epsilon == 0:
        return 1.0
    phi, b, c = _compressed(s)
    m = c.shape[0]
    rng = np.random.default_rng(rng_seed)

    def score(t):
        return np.real(np.einsum("ij,jk,ik->i", t.conj(), c, t))

    best = -np.inf
    seeds = [_as_direction(x, phi, b) for x in seed_states][:trials]
    if seeds:
        best = float(np.max(score(np.array(seeds))))
    budget = trials - len(seeds)
    if budget > 0:
        k = min(chains, budget)
        t = rng.normal(size=(k, m)) + 1j * rng.normal(size=(k, m))
        t /= np.linalg.norm(t, axis=1, keepdims=True)
        cur = score(t)
        best = max(best, float(np.max(cur)))
        budget -= k
        step = np.full(k, 0.5)
        while budget > 0:
            r = min(k, budget)
            g = rng.normal(size=(r, m)) + 1j * rng.normal(size=(r, m))
            prop = t[:r] + step[:r, None] * g / np.sqrt(2 * m)
            prop /= np.linalg.norm(prop, axis=1, keepdims=True)
            val = score(prop)
            up = val > cur[:r]
            t[:r][up] = prop[up]
            cur[:r] = np.where(up, val, cur[:r])
            step[:r] = np.clip(np.where(up, step[:r] * 1.5, step[:r] * 0.9), 1e-4, 2.0)
            best = max(best, float(np.max(val)))
            budget -= r
    return float((1 - epsilon) + epsilon * best)


def choi_pass_probability(s, e):
    """Tr(Omega rho_E) with rho_E the normalized Choi state of ``e``."""
    if e.d_in != 1 << s.n_ancilla or e.d_out != 1 << s.n_system:
        raise QPVError("process dimensions do not match the strategy")
    return float(np.real(np.einsum("ij,ji->", s.matrix().data, choi_state(e).data)))


def tp_constrained_search(s, epsilon, trials, rng_seed=0, max_rank=None):
    """Max pass probability over sampled trace-preserving processes at F_e = 1 - eps.

    Each trial draws a random TP channel R and mixes it with the target U as
    (1 - t) U + t R with t = eps / (1 - F_R), so the mixture sits exactly on
    the fidelity constraint.  Linearity of the Choi state makes the pass
    probability 1 - t (1 - Tr(Omega rho_R)).  Trials whose R is already
    closer than 1 - eps to U are skipped.  Returns NaN if every trial was
    skipped.
    """
    _check_eps(epsilon)
    if trials < 1:
        raise QPVError("trials must be at least 1")
    u = s.target_process
    if u is None:
        raise QPVError("tp_constrained_search needs a strategy with a target process")
    if epsilon == 0:
        return 1.0
    d = u.d_in
    max_rank = max_rank or d * d
    rng = np.random.default_rng(rng_seed)
    best = float("nan")
    for _ in range(trials):
        rank = int(rng.integers(1, max_rank + 1))
        r = random_kraus(d, rank, rng, d_out=u.d_out)
        f_r = entanglement_fidelity(r, u)
        if f_r >= 1 - epsilon:
            continue
        t = epsilon / (1 - f_r)
        val = 1 - t * (1 - choi_pass_probability(s, r))
        if not val <= best:
            best = val
    return best


def depolarizing_sweep(s, ps):
    """Rows (p, F_e, pass probability, 1 - eps * nu) for depolarizing noise after the target."""
    u = s.target_process
    if u is None:
        raise QPVError("depolarizing_sweep needs a strategy with a target process")
    nu = spectral_gap(s)
    rows = []
    for p in ps:
        e = compose(depolarizing(u.d_out, p, u.dims_out), u)
        f = entanglement_fidelity(e, u)
        rows.append((float(p), f, choi_pass_probability(s, e), 1 - (1 - f) * nu))
    return rows
