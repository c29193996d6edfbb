"""Command-line entry point.

Exit codes: 0 success, 1 domain failure (bounded-error test fails, halting
violation, reconstruction failure), 2 input error (missing/malformed files,
bad arguments). With --json a single JSON document goes to stdout; it
contains no timing, so fixed seeds and inputs give byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import afftm, circuits, interference, querylab, tomography
from .errors import (
    CapacityError,
    GptLabError,
    HaltingViolationError,
    MachineValidationError,
    ParseError,
    ReconstructionError,
)
from .serialization import parse_circuit, parse_family, parse_machine, parse_theory

DEFAULT_SEED = 7

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_INPUT = 2


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("GPTLAB_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ParseError(f"GPTLAB_SEED must be an integer, got {env!r}", "env") from None
    return DEFAULT_SEED


def _emit(args, report: dict, human_lines: list[str], elapsed: float) -> None:
    if args.json:
        print(json.dumps(report, sort_keys=True))
    else:
        for line in human_lines:
            print(line)
        print(f"[{elapsed * 1000:.1f} ms]")


# ---------------------------------------------------------------------------
# subcommand handlers; each returns (report dict, human lines, exit code)


def _cmd_theory_info(args):
    theory = parse_theory(args.theory)
    report = {
        "command": "theory info",
        "name": theory.name,
        "composite_rule": theory.composite_rule.name,
        "system_types": {label: t.dim for label, t in theory.system_types.items()},
        "gates": sorted(theory.gates),
        "states": sorted(theory.states),
        "effects": sorted(theory.effects),
    }
    lines = [f"theory {theory.name} (composite rule: {theory.composite_rule.name})"]
    for label, t in theory.system_types.items():
        lines.append(f"  type {label}: dim {t.dim}")
    lines.append("  gates: " + ", ".join(sorted(theory.gates)))
    return report, lines, EXIT_OK


def _cmd_circuit_eval(args):
    circuit, _ = parse_circuit(args.circuit)
    dist = circuits.distribution(circuit, cap=args.cap)
    entries = {str(z): p for z, p in sorted(dist.items(), key=lambda kv: str(kv[0]))}
    report = {"command": "circuit eval", "distribution": entries,
              "total": sum(dist.values())}
    lines = [f"{z}: {p:.6g}" for z, p in entries.items()]
    lines.append(f"total: {report['total']:.6g}")
    return report, lines, EXIT_OK


def _cmd_circuit_accept(args):
    circuit, acceptor = parse_circuit(args.circuit)
    if acceptor is None:
        raise ParseError("circuit file declares no acceptor", "circuit")
    p = circuits.acceptance_prob(circuit, acceptor, cap=args.cap)
    decision = "accept" if p >= 2 / 3 else "reject" if p <= 1 / 3 else "inconclusive"
    report = {"command": "circuit accept", "acceptance_probability": p,
              "decision": decision}
    return report, [f"acceptance probability {p:.6g} -> {decision}"], EXIT_OK


def _cmd_afftm_run(args):
    machine = parse_machine(args.machine)
    alpha = afftm.acceptance_weight(machine, args.input, args.max_steps)
    report = {"command": "afftm run", "input": args.input, "acceptance_weight": alpha}
    return report, [f"acceptance weight on {args.input!r}: {alpha!r}"], EXIT_OK


def _cmd_afftm_check(args):
    machine = parse_machine(args.machine)
    inputs = args.inputs.split(",") if args.inputs else []
    prop = afftm.is_proper_on(machine, inputs, args.max_steps)
    report = {
        "command": "afftm check",
        "proper": prop.all_pass,
        "note": prop.note,
        "entries": [{"input": e.input, "alpha": e.alpha, "ok": e.ok} for e in prop.entries],
    }
    lines = [f"{e.input!r}: alpha={e.alpha!r} {'ok' if e.ok else 'OUT OF RANGE'}"
             for e in prop.entries]
    lines.append(("proper on this sample" if prop.all_pass else "NOT proper") +
                 f" ({prop.note})")
    return report, lines, EXIT_OK if prop.all_pass else EXIT_DOMAIN


def _cmd_afftm_norms(args):
    machine = parse_machine(args.machine)
    trace = afftm.norm_trace(machine, args.input, args.max_steps)
    report = {"command": "afftm norms", "input": args.input, "norms": trace.norms,
              "flagged_steps": trace.flagged_steps, "within_bound": trace.within_bound}
    lines = [f"step {i}: 2-norm {n!r}" + ("  <-- exceeds 1" if i in trace.flagged_steps else "")
             for i, n in enumerate(trace.norms)]
    lines.append("all norms within the free-theory bound" if trace.within_bound
                 else f"bound exceeded at steps {trace.flagged_steps}")
    return report, lines, EXIT_OK


def _cmd_interfere_order(args):
    family = parse_family(args.family)
    order = interference.interference_order(family)
    report = {"command": "interfere order", "family": family.name or "unnamed",
              "n_slits": family.n_slits, "order": order}
    return report, [f"interference order: {order}"], EXIT_OK


def _cmd_interfere_decompose(args):
    family = parse_family(args.family)
    vector = np.asarray(json.loads(args.vector), dtype=float)
    decomp = interference.decompose(vector, family, args.order)
    components = {
        "{" + ",".join(str(i) for i in sorted(k)) + "}": [float(x) for x in v]
        for k, v in sorted(decomp.components.items(), key=lambda kv: (len(kv[0]), sorted(kv[0])))
    }
    report = {"command": "interfere decompose", "order": decomp.order,
              "residual": decomp.residual, "components": components}
    lines = [f"{k}: {v}" for k, v in components.items()]
    lines.append(f"residual {decomp.residual:.3e}")
    return report, lines, EXIT_OK


def _check_caps_and_tols(args) -> None:
    cap = getattr(args, "cap", None)
    if cap is not None and cap <= 0:
        raise ParseError("--cap must be positive", "args")
    tol = getattr(args, "rank_tol", None)
    if tol is not None and not (0.0 < tol < 1.0):
        raise ParseError("--rank-tol must lie in (0, 1)", "args")


def _cmd_tomo_check(args):
    theory = parse_theory(args.theory)
    rep = tomography.n_local_span(theory, args.systems, args.locality, cap=args.cap,
                                  rank_tol=args.rank_tol)
    report = {
        "command": "tomo check",
        "theory": rep.theory,
        "systems": rep.n_systems,
        "locality": rep.locality,
        "composite_dim": rep.composite_dim,
        "span_dim": rep.n_local_span_dim,
        "defect": rep.defect,
        "defect_basis": [[float(x) for x in row] for row in rep.defect_basis],
    }
    return report, [rep.summary()], EXIT_OK


def _cmd_tomo_count(args):
    value = tomography.fiducial_count(args.k, args.systems, args.locality)
    report = {"command": "tomo count", "k": args.k, "systems": args.systems,
              "locality": args.locality, "count": value}
    return report, [f"fiducial measurements required: {value}"], EXIT_OK


def _cmd_query_parity(args):
    table = _parse_table(args)
    f = querylab.OracleFunction(table)
    quantum = querylab.parity_quantum(f)
    classical = querylab.parity_classical(f)
    agree = quantum.result == classical.result
    report = {
        "command": "query parity",
        "n": f.n_items,
        "table": list(f.table),
        "quantum": {"parity": quantum.result, "queries": quantum.query_count},
        "classical": {"parity": classical.result, "queries": classical.query_count},
        "agree": agree,
    }
    lines = [
        f"table: {''.join(str(b) for b in f.table)}",
        f"interference solver: parity {quantum.result} in {quantum.query_count} queries",
        f"classical baseline:  parity {classical.result} in {classical.query_count} queries",
    ]
    return report, lines, EXIT_OK if agree else EXIT_DOMAIN


def _parse_table(args) -> tuple[int, ...]:
    if args.table is not None:
        try:
            table = tuple(int(c) for c in args.table)
        except ValueError:
            raise ParseError(f"--table must be a bit string, got {args.table!r}", "args") from None
        if args.n is not None and args.n != len(table):
            raise ParseError("--n disagrees with --table length", "args")
        return table
    if args.n is None:
        raise ParseError("need --n or --table", "args")
    rng = np.random.default_rng(_seed(args))
    return tuple(int(b) for b in rng.integers(0, 2, size=args.n))


def _cmd_query_grover(args):
    if args.marked is not None:
        table = [0] * args.n
        table[args.marked] = 1
    else:
        rng = np.random.default_rng(_seed(args))
        table = [0] * args.n
        table[int(rng.integers(0, args.n))] = 1
    f = querylab.OracleFunction(tuple(table))
    transcript = querylab.grover_search(f, iterations=args.iters)
    report = {
        "command": "query grover",
        "n": f.n_items,
        "marked": f.marked_items()[0],
        "queries": transcript.query_count,
        "result": transcript.result,
        "success": transcript.success,
        "success_probability": transcript.success_probability,
    }
    lines = [
        f"marked item {report['marked']} of {f.n_items}",
        f"result {transcript.result} after {transcript.query_count} queries "
        f"(p_success {transcript.success_probability:.6g})",
    ]
    return report, lines, EXIT_OK if transcript.success else EXIT_DOMAIN


def _cmd_query_bounds(args):
    bound = querylab.lower_bound(args.problem, args.n, args.k)
    report = {"command": "query bounds", "problem": bound.problem, "n": bound.n_items,
              "k": bound.order, "value": bound.value, "asymptotic": bound.asymptotic}
    return report, [str(bound)], EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gptlab",
        description="Simulation laboratory for computation in generalised probabilistic theories",
    )
    parser.add_argument("--json", action="store_true",
                        help="emit one machine-readable JSON document on stdout")
    parser.add_argument("--seed", type=int, default=None,
                        help=f"RNG seed (default {DEFAULT_SEED}; GPTLAB_SEED overrides the default)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory", help="inspect theories")
    ps = p.add_subparsers(dest="subcommand", required=True)
    q = ps.add_parser("info")
    q.add_argument("--theory", required=True, help="theory JSON file or inline JSON")
    q.set_defaults(handler=_cmd_theory_info)

    p = sub.add_parser("circuit", help="evaluate closed circuits")
    ps = p.add_subparsers(dest="subcommand", required=True)
    q = ps.add_parser("eval")
    q.add_argument("--circuit", required=True)
    q.add_argument("--cap", type=int, default=circuits.DEFAULT_ENUMERATION_CAP)
    q.set_defaults(handler=_cmd_circuit_eval)
    q = ps.add_parser("accept")
    q.add_argument("--circuit", required=True)
    q.add_argument("--cap", type=int, default=circuits.DEFAULT_ENUMERATION_CAP)
    q.set_defaults(handler=_cmd_circuit_accept)

    p = sub.add_parser("afftm", help="run affine Turing machines")
    ps = p.add_subparsers(dest="subcommand", required=True)
    q = ps.add_parser("run")
    q.add_argument("--machine", required=True)
    q.add_argument("--input", default="")
    q.add_argument("--max-steps", type=int, required=True)
    q.set_defaults(handler=_cmd_afftm_run)
    q = ps.add_parser("check")
    q.add_argument("--machine", required=True)
    q.add_argument("--inputs", default="", help="comma-separated inputs")
    q.add_argument("--max-steps", type=int, required=True)
    q.set_defaults(handler=_cmd_afftm_check)
    q = ps.add_parser("norms")
    q.add_argument("--machine", required=True)
    q.add_argument("--input", default="")
    q.add_argument("--max-steps", type=int, required=True)
    q.set_defaults(handler=_cmd_afftm_norms)

    p = sub.add_parser("interfere", help="projector families and coherence")
    ps = p.add_subparsers(dest="subcommand", required=True)
    q = ps.add_parser("order")
    q.add_argument("--family", required=True)
    q.set_defaults(handler=_cmd_interfere_order)
    q = ps.add_parser("decompose")
    q.add_argument("--family", required=True)
    q.add_argument("--vector", required=True, help="JSON array of carrier coordinates")
    q.add_argument("--order", type=int, required=True)
    q.set_defaults(handler=_cmd_interfere_decompose)

    p = sub.add_parser("tomo", help="tomographic locality analysis")
    ps = p.add_subparsers(dest="subcommand", required=True)
    q = ps.add_parser("check")
    q.add_argument("--theory", required=True)
    q.add_argument("--systems", type=int, required=True)
    q.add_argument("--locality", type=int, required=True)
    q.add_argument("--cap", type=int, default=4096)
    q.add_argument("--rank-tol", type=float, default=1e-9, dest="rank_tol")
    q.set_defaults(handler=_cmd_tomo_check)
    q = ps.add_parser("count")
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--systems", type=int, required=True)
    q.add_argument("--locality", type=int, required=True)
    q.set_defaults(handler=_cmd_tomo_count)

    p = sub.add_parser("query", help="oracle query experiments")
    ps = p.add_subparsers(dest="subcommand", required=True)
    q = ps.add_parser("parity")
    q.add_argument("--n", type=int, default=None)
    q.add_argument("--table", default=None, help="explicit bit string, e.g. 0110")
    # SUPPRESS keeps a top-level --seed visible to the subcommand
    q.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    q.set_defaults(handler=_cmd_query_parity)
    q = ps.add_parser("grover")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--marked", type=int, default=None)
    q.add_argument("--iters", type=int, default=None)
    q.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    q.set_defaults(handler=_cmd_query_grover)
    q = ps.add_parser("bounds")
    q.add_argument("--problem", choices=("parity", "search"), required=True)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--k", type=int, required=True)
    q.set_defaults(handler=_cmd_query_bounds)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        _check_caps_and_tols(args)
        report, lines, code = args.handler(args)
    except (ParseError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (MachineValidationError,) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (HaltingViolationError, CapacityError, ReconstructionError) as exc:
        print(f"domain failure: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except GptLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    _emit(args, report, lines, time.perf_counter() - start)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
