"""Command-line front end.

Exit codes: 0 success, 1 the verification run rejected, 2 bad input.
"""
import argparse
import os
import sys

from . import io
from .channels import NoiseSpec, QuantumProcess, make_noise
from .errors import QPVError
from .measurement import (measurement_fidelity, model_from_json, plan_measurement_samples,
                          target_from_json, verify_measurement)
from .oracle import random_search_worst_case, subspace_worst_case, tp_constrained_search
from .pmpv import convert, failure_probability, postselected_failure_probability
from .simulator import RunConfig, RunResult, simulate_aapv, simulate_pmpv, verdict_and_confidence
from .strategies import CANNED_NAMES, canned, plan_samples, spectral_gap

EXIT_OK, EXIT_REJECT, EXIT_INPUT = 0, 1, 2


def _load_strategy(args):
    ref = getattr(args, "protocol", None)
    circuit = getattr(args, "circuit", None)
    if ref is None and circuit is None:
        raise QPVError("missing field 'protocol' (give --protocol NAME|FILE or --circuit FILE)")
    if circuit is not None:
        return io.build_strategy(circuit=io.load_file(circuit), full=getattr(args, "full", False))
    if ref in CANNED_NAMES:
        return canned(ref)
    if os.path.exists(ref):
        return io.strategy_from_json(io.load_file(ref))
    raise QPVError(f"field 'protocol': {ref!r} is neither a canned protocol "
                   f"({', '.join(CANNED_NAMES)}) nor a readable file")


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _need(args, name):
    value = getattr(args, name)
    if value is None:
        raise QPVError(f"missing field '{name}' (--{name.replace('_', '-')})")
    return value


def _process(args, s):
    if args.process:
        e = QuantumProcess.from_json(io.load_file(args.process))
    elif s.target_process is not None:
        e = s.target_process
    else:
        raise QPVError("missing field 'process' and the strategy has no target process")
    if args.noise:
        e = make_noise(e, NoiseSpec.parse(args.noise))
    return e


# ---------------------------------------------------------------- commands

def cmd_build(args):
    s = _load_strategy(args)
    _emit(io.dumps(io.strategy_to_json(s)), args.out)
    return EXIT_OK


def cmd_gap(args):
    print(format(spectral_gap(_load_strategy(args)), ".12g"))
    return EXIT_OK


def cmd_plan(args):
    plan = plan_samples(_need(args, "epsilon"), _need(args, "delta"), _need(args, "nu"))
    print(plan.N)
    print(f"approx {plan.approx:.6f}")
    return EXIT_OK


def cmd_convert(args):
    _emit(io.dumps(io.pmpv_to_json(convert(_load_strategy(args)))), args.out)
    return EXIT_OK


def cmd_simulate(args):
    s = _load_strategy(args)
    e = _process(args, s)
    cfg = RunConfig(_need(args, "rounds"), args.seed, args.mode, args.budget)
    if args.scheme == "aapv":
        r = simulate_aapv(s, e, cfg)
    else:
        r = simulate_pmpv(convert(s), e, cfg, nu=spectral_gap(s))
    text = r.to_csv(args.epsilon) if args.format == "csv" else io.dumps(r.to_json(args.epsilon))
    _emit(text, args.out)
    return EXIT_OK if r.accepted else EXIT_REJECT


def cmd_oracle(args):
    s = _load_strategy(args)
    eps = _need(args, "epsilon")
    rep = subspace_worst_case(s, eps)
    out = rep.to_json()
    out["random_search_max"] = random_search_worst_case(s, eps, args.trials, args.seed,
                                                        seed_states=())
    if s.target_process is not None and s.target_process.is_trace_preserving():
        out["tp_constrained_max"] = tp_constrained_search(s, eps, max(1, args.trials // 50),
                                                          args.seed)
    if args.process or args.noise:
        e = _process(args, s)
        x = convert(s)
        out["process_pass_probability"] = (failure_probability(x, e)
                                           if e.is_trace_preserving()
                                           else postselected_failure_probability(x, e))
    _emit(io.dumps(out), args.out)
    return EXIT_OK


def cmd_verify_meas(args):
    m = model_from_json(io.load_file(_need(args, "povm")))
    target = args.target
    if target is not None and target != "computational":
        target = io.load_file(target)
    p = target_from_json(target, m.d)
    eps, delta = _need(args, "epsilon"), _need(args, "delta")
    n = args.rounds or plan_measurement_samples(eps, delta)
    r = verify_measurement(m, p, n, args.seed)
    out = r.to_json(eps)
    out["fidelity"] = measurement_fidelity(m, p)
    out["delta"] = delta
    _emit(io.dumps(out), args.out)
    return EXIT_OK if r.accepted else EXIT_REJECT


def cmd_report(args):
    eps = _need(args, "epsilon")
    if not args.inputs:
        raise QPVError("missing field 'inputs' (one or more run result JSON files)")
    rows = [("protocol", "kind", "noise", "rounds", "passes", "rate", "verdict", "nu", "delta")]
    for path in args.inputs:
        r = RunResult.from_json(io.load_file(path))
        nu = spectral_gap(canned(r.protocol)) if r.protocol in CANNED_NAMES else r.nu
        rate = r.passes / r.rounds_executed if r.rounds_executed else float("nan")
        delta = verdict_and_confidence(r, eps, nu) if nu is not None else float("nan")
        rows.append((r.protocol, r.kind, r.process or "-", str(r.rounds_executed),
                     str(r.passes), f"{rate:.6f}", r.verdict,
                     "-" if nu is None else f"{nu:.6g}", f"{delta:.6g}"))
    widths = [max(len(row[j]) for row in rows) for j in range(len(rows[0]))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser():
    ap = argparse.ArgumentParser(prog="qpv", description="Quantum process verification toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--out", help="write output here instead of stdout")
        return p

    def strategy_flags(p):
        p.add_argument("--protocol", help=f"canned name ({', '.join(CANNED_NAMES)}) "
                                          "or strategy JSON file")
        p.add_argument("--circuit", help="Clifford circuit JSON file")
        p.add_argument("--full", action="store_true", help="use the full stabilizer group")

    p = add("build", cmd_build, "emit a strategy as canonical JSON")
    strategy_flags(p)
    p = add("gap", cmd_gap, "print the spectral gap")
    strategy_flags(p)
    p = add("plan", cmd_plan, "number of rounds for (epsilon, delta, nu)")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--nu", type=float)
    p = add("convert", cmd_convert, "convert an AAPV strategy to a PMPV ensemble")
    strategy_flags(p)
    p = add("simulate", cmd_simulate, "Monte Carlo verification run")
    strategy_flags(p)
    p.add_argument("--process", help="process JSON file (default: the strategy target)")
    p.add_argument("--noise", help="noise after the process, e.g. depolarizing:0.04")
    p.add_argument("--rounds", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("projector", "local"), default="projector")
    p.add_argument("--scheme", choices=("aapv", "pmpv"), default="aapv")
    p.add_argument("--budget", choices=("outputs", "attempts"), default="outputs")
    p.add_argument("--epsilon", type=float, help="report the confidence bound at this epsilon")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p = add("oracle", cmd_oracle, "worst-case pass probabilities at infidelity epsilon")
    strategy_flags(p)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--process")
    p.add_argument("--noise")
    p = add("verify-meas", cmd_verify_meas, "verify a measurement against a projective target")
    p.add_argument("--povm", help="POVM JSON file")
    p.add_argument("--target", help="'computational' (default) or basis JSON file")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--rounds", type=int, help="override the planned number of rounds")
    p.add_argument("--seed", type=int, default=0)
    p = add("report", cmd_report, "summary table of run results")
    p.add_argument("inputs", nargs="*", help="run result JSON files")
    p.add_argument("--epsilon", type=float)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except QPVError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (KeyError, TypeError, ValueError) as exc:
        print(f"error: malformed input ({type(exc).__name__}: {exc})", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
