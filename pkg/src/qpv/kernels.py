"""Hot numeric kernels with a numba path and a pure-numpy path.

The backend is picked at import time from ``QPV_BACKEND`` (``numba`` or
``numpy``); numba is the default when it imports.  :func:`use_backend`
switches at runtime.  Both paths perform the same floating-point operations
in the same order, so results are bit-identical across backends.

Random numbers come from a counter-based generator: a uniform is a pure
function of ``(key, attempt index, stream)``, which makes every round
independently reproducible no matter how the work is chunked.
"""
import contextlib
import os

import numpy as np

try:
    import numba
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - declared dependency; fallback for stripped installs
    numba = None
    HAVE_NUMBA = False

_requested = os.environ.get("QPV_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ValueError(f"QPV_BACKEND must be 'numba' or 'numpy', got {_requested!r}")
BACKEND = "numba" if (_requested == "numba" and HAVE_NUMBA) else "numpy"

# streams per attempt: 0 choose entry, 1 output occurs, 2 projector pass, 3.. qubit outcomes
STREAMS = 64
MAX_LOCAL_QUBITS = STREAMS - 3

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0


def get_backend():
    return BACKEND


def use_backend(name):
    """Select ``"numba"`` or ``"numpy"``; returns the previous backend name."""
    global BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not importable")
    prev, BACKEND = BACKEND, name
    return prev


@contextlib.contextmanager
def backend(name):
    prev = use_backend(name)
    try:
        yield
    finally:
        use_backend(prev)


def _identity_decorator(*args, **kwargs):
    if args and callable(args[0]):
        return args[0]
    return lambda f: f


_jit = njit(cache=True) if HAVE_NUMBA else _identity_decorator


# ---------------------------------------------------------------- bit helpers

def _popcount_np(a):
    return np.bitwise_count(np.asarray(a, dtype=np.uint64)).astype(np.int64)


@_jit
def _popcount_nb(v):
    v = v - ((v >> np.uint64(1)) & np.uint64(0x5555555555555555))
    v = (v & np.uint64(0x3333333333333333)) + ((v >> np.uint64(2)) & np.uint64(0x3333333333333333))
    v = (v + (v >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return np.int64((v * np.uint64(0x0101010101010101)) >> np.uint64(56))


# ------------------------------------------------------------- counter RNG

def _mix_np(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@_jit
def _mix_nb(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def derive_key(seed):
    """Scramble a user seed (any int, reduced mod 2**64) into a stream key."""
    s = np.array([int(seed) % (1 << 64)], dtype=np.uint64)
    return int(_mix_np(s + _GOLDEN)[0])


def _uniform_np(key, attempt, stream):
    ctr = attempt.astype(np.uint64) * np.uint64(STREAMS) + np.uint64(stream)
    h = _mix_np(np.uint64(key) + ctr * _GOLDEN)
    return (h >> np.uint64(11)).astype(np.float64) * _INV53


@_jit
def _uniform_nb(key, attempt, stream):
    ctr = np.uint64(attempt) * np.uint64(64) + np.uint64(stream)
    h = _mix_nb(np.uint64(key) + ctr * np.uint64(0x9E3779B97F4A7C15))
    return np.float64(h >> np.uint64(11)) * (1.0 / 9007199254740992.0)


def counter_uniforms(key, attempts, stream):
    """Uniforms in [0, 1) for the given attempt indices on one stream."""
    attempts = np.asarray(attempts, dtype=np.int64)
    if BACKEND == "numba":
        return _counter_uniforms_nb(np.uint64(key), attempts, stream)
    return _uniform_np(key, attempts, stream)


@_jit
def _counter_uniforms_nb(key, attempts, stream):
    out = np.empty(attempts.shape[0])
    for i in range(attempts.shape[0]):
        out[i] = _uniform_nb(key, attempts[i], stream)
    return out


# ------------------------------------------------------------- Pauli lowering

def pauli_dense(x, z, e, n):
    """Dense matrix of ``i**e * X^x Z^z`` with qubit 0 as the most significant bit."""
    if BACKEND == "numba":
        return _pauli_dense_nb(np.uint64(x), np.uint64(z), np.int64(e % 4), np.int64(n))
    dim = 1 << n
    b = np.arange(dim, dtype=np.uint64)
    signs = 1.0 - 2.0 * (_popcount_np(b & np.uint64(z)) & 1)
    out = np.zeros((dim, dim), dtype=np.complex128)
    out[(b ^ np.uint64(x)).astype(np.int64), b.astype(np.int64)] = (1j ** (e % 4)) * signs
    return out


@_jit
def _pauli_dense_nb(x, z, e, n):
    dim = 1 << n
    phase = 1.0 + 0.0j
    for _ in range(e):
        phase = phase * 1j
    out = np.zeros((dim, dim), dtype=np.complex128)
    for b in range(dim):
        ub = np.uint64(b)
        if _popcount_nb(ub & z) & 1:
            out[np.int64(ub ^ x), b] = -phase
        else:
            out[np.int64(ub ^ x), b] = phase
    return out


# ------------------------------------------------------- group enumeration

def group_products(gx, gz, ge):
    """All ``2**k`` products of k Paulis in (x, z, e) form, indexed by subset mask.

    Element ``m`` is ``prod_{i in m} g_i`` taken in increasing ``i``; element 0
    is the identity.
    """
    gx = np.ascontiguousarray(gx, dtype=np.uint64)
    gz = np.ascontiguousarray(gz, dtype=np.uint64)
    ge = np.ascontiguousarray(ge, dtype=np.int64)
    if BACKEND == "numba":
        return _group_products_nb(gx, gz, ge)
    k = gx.shape[0]
    size = 1 << k
    xs = np.zeros(size, dtype=np.uint64)
    zs = np.zeros(size, dtype=np.uint64)
    es = np.zeros(size, dtype=np.int64)
    for h in range(k):
        lo, hi = 1 << h, 1 << (h + 1)
        xs[lo:hi] = xs[:lo] ^ gx[h]
        zs[lo:hi] = zs[:lo] ^ gz[h]
        es[lo:hi] = (es[:lo] + ge[h] + 2 * _popcount_np(zs[:lo] & gx[h])) % 4
    return xs, zs, es


@_jit
def _group_products_nb(gx, gz, ge):
    k = gx.shape[0]
    size = 1 << k
    xs = np.zeros(size, dtype=np.uint64)
    zs = np.zeros(size, dtype=np.uint64)
    es = np.zeros(size, dtype=np.int64)
    for h in range(k):
        lo = 1 << h
        for m in range(lo):
            xs[lo + m] = xs[m] ^ gx[h]
            zs[lo + m] = zs[m] ^ gz[h]
            es[lo + m] = (es[m] + ge[h] + 2 * _popcount_nb(zs[m] & gx[h])) % 4
    return xs, zs, es


# ---------------------------------------------------------- round sampling

def sample_rounds(cum_p, out_p, pass_p, cumdist, accept, n_local, local, key,
                  budget, count_attempts, max_attempts):
    """Run verification rounds and return per-entry tallies.

    Each attempt picks entry ``i`` from the cumulative weights ``cum_p``; an
    output is produced with probability ``out_p[i]``.  A produced output
    passes with probability ``pass_p[i]`` (projector mode) or, in local mode,
    when the outcome string sampled qubit by qubit from the prefix sums
    ``cumdist[i]`` is flagged in ``accept[i]``.

    Sampling stops after ``budget`` outputs (or ``budget`` attempts when
    ``count_attempts``) or at ``max_attempts``.  Returns ``(attempts,
    outputs_per_entry, passes_per_entry)``.
    """
    cum_p = np.ascontiguousarray(cum_p, dtype=np.float64)
    out_p = np.ascontiguousarray(out_p, dtype=np.float64)
    pass_p = np.ascontiguousarray(pass_p, dtype=np.float64)
    cumdist = np.ascontiguousarray(cumdist, dtype=np.float64)
    accept = np.ascontiguousarray(accept, dtype=np.bool_)
    if local and n_local > MAX_LOCAL_QUBITS:
        raise ValueError(f"local sampling supports at most {MAX_LOCAL_QUBITS} qubits")
    if BACKEND == "numba":
        return _sample_rounds_nb(cum_p, out_p, pass_p, cumdist, accept, np.int64(n_local),
                                 bool(local), np.uint64(key), np.int64(budget),
                                 bool(count_attempts), np.int64(max_attempts))
    return _sample_rounds_np(cum_p, out_p, pass_p, cumdist, accept, n_local, local, key,
                             budget, count_attempts, max_attempts)


@_jit
def _sample_rounds_nb(cum_p, out_p, pass_p, cumdist, accept, n_local, local, key,
                      budget, count_attempts, max_attempts):
    n_entries = cum_p.shape[0]
    outputs = np.zeros(n_entries, dtype=np.int64)
    passes = np.zeros(n_entries, dtype=np.int64)
    produced = 0
    a = 0
    while a < max_attempts:
        if count_attempts:
            if a >= budget:
                break
        elif produced >= budget:
            break
        u = _uniform_nb(key, a, 0)
        i = np.searchsorted(cum_p, u, side="right")
        if i >= n_entries:
            i = n_entries - 1
        if _uniform_nb(key, a, 1) < out_p[i]:
            produced += 1
            outputs[i] += 1
            if local:
                lo = 0
                size = 1 << n_local
                for k in range(n_local):
                    half = size >> 1
                    tot = cumdist[i, lo + size] - cumdist[i, lo]
                    p0 = 1.0
                    if tot > 0.0:
                        p0 = (cumdist[i, lo + half] - cumdist[i, lo]) / tot
                    if _uniform_nb(key, a, 3 + k) >= p0:
                        lo += half
                    size = half
                if accept[i, lo]:
                    passes[i] += 1
            elif _uniform_nb(key, a, 2) < pass_p[i]:
                passes[i] += 1
        a += 1
    return a, outputs, passes


def _sample_rounds_np(cum_p, out_p, pass_p, cumdist, accept, n_local, local, key,
                      budget, count_attempts, max_attempts):
    n_entries = cum_p.shape[0]
    outputs = np.zeros(n_entries, dtype=np.int64)
    passes = np.zeros(n_entries, dtype=np.int64)
    produced = 0
    a0 = 0
    chunk = max(1024, min(int(budget), 1 << 18))
    while a0 < max_attempts:
        if count_attempts:
            remaining = budget - a0
        else:
            remaining = budget - produced
        if remaining <= 0:
            break
        stop = min(a0 + max(chunk, remaining), max_attempts)
        if count_attempts:
            stop = min(stop, budget)
        att = np.arange(a0, stop, dtype=np.int64)
        i = np.searchsorted(cum_p, _uniform_np(key, att, 0), side="right")
        i = np.minimum(i, n_entries - 1)
        out = _uniform_np(key, att, 1) < out_p[i]
        if not count_attempts:
            csum = np.cumsum(out)
            if csum.size and csum[-1] >= remaining:
                cut = int(np.searchsorted(csum, remaining)) + 1
                att, i, out = att[:cut], i[:cut], out[:cut]
                stop = a0 + cut
        if local:
            lo = np.zeros(att.shape[0], dtype=np.int64)
            size = 1 << n_local
            for k in range(n_local):
                half = size >> 1
                base = cumdist[i, lo]
                tot = cumdist[i, lo + size] - base
                safe = np.where(tot > 0.0, tot, 1.0)
                p0 = np.where(tot > 0.0, (cumdist[i, lo + half] - base) / safe, 1.0)
                lo = lo + np.where(_uniform_np(key, att, 3 + k) >= p0, half, 0)
                size = half
            ok = out & accept[i, lo]
        else:
            ok = out & (_uniform_np(key, att, 2) < pass_p[i])
        outputs += np.bincount(i[out], minlength=n_entries)
        passes += np.bincount(i[ok], minlength=n_entries)
        produced += int(out.sum())
        a0 = stop
    return a0, outputs, passes
