"""Time the numba and numpy kernel backends on representative workloads.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5]

Each workload is run once per backend to warm up (and compile), then timed
as the best of ``--repeat`` runs.  Outputs are compared for bit-identity.
"""
import argparse
import time

import numpy as np

from qpv import kernels
from qpv.channels import NoiseSpec, choi_state, gate, make_noise
from qpv.pmpv import convert
from qpv.simulator import _local_tables
from qpv.strategies import canned


def _round_inputs(local):
    s = canned("cnot")
    rho = choi_state(make_noise(gate("CNOT"), NoiseSpec.parse("depolarizing:0.04"))).data
    q = np.array([np.real(np.trace(t.projector.data @ rho)) for _, t in s.tests])
    cum = np.cumsum(s.weights)
    cum[-1] = 1.0
    if local:
        n, cd, acc = _local_tables([t.settings for _, t in s.tests], [rho] * len(s.tests))
    else:
        n, cd, acc = 0, np.zeros((1, 2)), np.zeros((1, 1), dtype=bool)
    return cum, np.ones(len(q)), q, cd, acc, n, local


def workloads():
    proj = _round_inputs(False)
    loc = _round_inputs(True)
    key = kernels.derive_key(1)
    rng = np.random.default_rng(0)
    k = 16
    gx = rng.integers(0, 1 << 20, size=k).astype(np.uint64)
    gz = rng.integers(0, 1 << 20, size=k).astype(np.uint64)
    ge = np.zeros(k, dtype=np.int64)
    return {
        "sample_rounds projector 1e6": lambda: kernels.sample_rounds(
            *proj, key, 1_000_000, False, 1_000_000),
        "sample_rounds local 1e6": lambda: kernels.sample_rounds(
            *loc, key, 1_000_000, False, 1_000_000),
        "group_products k=16": lambda: kernels.group_products(gx, gz, ge),
        "pauli_dense n=10": lambda: kernels.pauli_dense(0b1011001110, 0b0110100101, 1, 10),
        "convert dj_balanced_x2": lambda: convert(canned("dj_balanced_x2")),
    }


def _flatten(out):
    if isinstance(out, tuple):
        return [np.asarray(v) for v in out]
    if isinstance(out, np.ndarray):
        return [out]
    return []


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = ["numpy"] + (["numba"] if kernels.HAVE_NUMBA else [])
    print(f"{'workload':32s} " + " ".join(f"{b:>10s}" for b in backends)
          + "    speedup  identical")
    for name, fn in workloads().items():
        times, outs = {}, {}
        for b in backends:
            with kernels.backend(b):
                outs[b] = _flatten(fn())
                times[b] = _time(fn, args.repeat)
        same = all(np.array_equal(a, c) for a, c in zip(outs["numpy"], outs[backends[-1]]))
        speed = times["numpy"] / times[backends[-1]]
        print(f"{name:32s} " + " ".join(f"{times[b] * 1e3:8.2f}ms" for b in backends)
              + f"  {speed:8.1f}x  {same}")


if __name__ == "__main__":
    main()
