"""Command-line entry point: synth, simulate, verify, trace, count, estimate, model-trace."""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager
from typing import Iterator, TextIO

from . import estimate as E
from .ir import CountSink, ListSink, TextSink, to_json
from .model import ProblemInstance, classical_trace, eea_trace, trace_row, trace_tsv
from .numtheory import (
    bit_length_of_modulus,
    golden_step_bound,
    is_probable_prime,
    largest_prime_below,
    step_budget,
)
from .synth import layout, manifest_json, synth_inversion
from .verify import check_inversion, circuit_steps, require_prime

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
DEFAULT_VERIFY_CAP = 1 << 13


class UsageError(ValueError):
    pass


def _prime_arg(args) -> int:
    if getattr(args, "prime", None) is not None:
        p = args.prime
        if p < 5 or not is_probable_prime(p):
            raise UsageError(f"p={p} must be an odd prime >= 5")
        return p
    n = getattr(args, "n", None)
    if n is None:
        raise UsageError("give --prime or --n")
    if n < 3:
        raise UsageError(f"n={n} must be at least 3")
    return largest_prime_below(1 << n)


@contextmanager
def _output(path: str | None) -> Iterator[TextIO]:
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _emit(text: str, path: str | None = None) -> None:
    with _output(path) as fh:
        fh.write(text if text.endswith("\n") else text + "\n")


# subcommands


def cmd_synth(args) -> int:
    p = _prime_arg(args)
    n = bit_length_of_modulus(p)
    lay = layout(n)
    with _output(args.out) as fh:
        if args.format == "json":
            sink = ListSink()
            synth_inversion(p, sink)
            fh.write(to_json(sink.circuit(lay.width, _named_layout(lay))) + "\n")
        else:
            fh.write(f"width={lay.width}\n")
            sink = TextSink(fh)
            synth_inversion(p, sink)
    manifest_path = args.manifest or (f"{args.out}.manifest.json" if args.out and args.out != "-" else None)
    if manifest_path:
        _emit(manifest_json(lay, p), manifest_path)
    print(f"p={p} n={n} width={lay.width} inversion_width={lay.inversion_width} steps={step_budget(n)}",
          file=sys.stderr)
    return EXIT_OK


def _named_layout(lay) -> dict[str, list[int]]:
    regs = lay.as_dict()["registers"]
    out = {}
    for k, v in regs.items():
        if k == "x":
            continue
        out[k] = v if isinstance(v, list) else [v]
    return out


def cmd_simulate(args) -> int:
    p = _prime_arg(args)
    res = check_inversion(p, [args.x])
    row = {
        "p": p,
        "x": args.x,
        "output": res.outputs[0],
        "ancillas_clean": not res.dirty[0],
        "input_restored": res.x_restored[0],
        "width": res.width,
        "gates": res.gates,
    }
    _print_record(row, args.format)
    return EXIT_OK if not res.failures else EXIT_FAIL


def cmd_verify(args) -> int:
    p = args.prime
    require_prime(p)
    if args.x is None and not args.all:
        raise UsageError("give --all or --x")
    if args.all and p > args.cap:
        raise UsageError(f"p={p} exceeds the exhaustive cap {args.cap}; raise --cap to override")
    if args.cap > DEFAULT_VERIFY_CAP:
        print(f"warning: exhaustive cap raised to {args.cap}", file=sys.stderr)
    res = check_inversion(p, None if args.all else [args.x], oracle=args.oracle)
    if args.x is not None and not args.all:
        status = "pass" if not res.failures else "FAIL"
        print(f"{args.x} -> {res.outputs[0]} {status}")
    else:
        for x in res.failures:
            i = res.xs.index(x)
            print(f"FAIL x={x} got={res.outputs[i]} want={res.expected[i]}")
        print(f"{res.passed}/{len(res.xs)} pass")
    return EXIT_OK if not res.failures else EXIT_FAIL


def cmd_trace(args) -> int:
    p = args.prime
    inst = ProblemInstance(p, args.x)
    if args.circuit:
        rows = [trace_row(snap.T, snap.states[0]) for snap in circuit_steps(p, [args.x])]
    else:
        rows = classical_trace(inst)
    _emit(trace_tsv(rows), args.out)
    return EXIT_OK


def cmd_model_trace(args) -> int:
    inst = ProblemInstance(args.prime, args.x)
    tr = eea_trace(inst)
    n = inst.n
    record = {
        "p": inst.p,
        "x": inst.x,
        "n": n,
        "quotients": list(tr.quotients),
        "bit_lengths": list(tr.bit_lengths),
        "iterations": tr.iterations,
        "active_steps": tr.active_steps,
        "golden_step_bound": golden_step_bound(n),
        "schedule_steps": step_budget(n),
    }
    _print_record(record, args.format)
    if args.rows:
        sys.stdout.write(trace_tsv(classical_trace(inst)))
    return EXIT_OK


def cmd_count(args) -> int:
    p = _prime_arg(args)
    sink = CountSink()
    lay = synth_inversion(p, sink)
    rep = sink.report
    rep.width = lay.width
    data = rep.as_dict()
    data["p"] = p
    data["n"] = lay.n
    data["inversion_width"] = lay.inversion_width
    if not args.per_block:
        data.pop("blocks")
    if args.format == "json":
        print(json.dumps(data, indent=2, sort_keys=True))
        return EXIT_OK
    sep = "\t" if args.format == "tsv" else " "
    print(sep.join(["n", "p", "width", "toffoli", "cnot", "x"]))
    print(sep.join(str(v) for v in (lay.n, p, lay.width, rep.toffoli, rep.cnot, rep.x)))
    if args.per_block:
        print(sep.join(["block", "toffoli", "cnot", "x"]))
        for k, v in sorted(rep.blocks.items()):
            print(sep.join([k] + [str(c) for c in v]))
    return EXIT_OK


def cmd_estimate(args) -> int:
    if args.table:
        rows = E.table_report()
        _emit(E.report_json(rows) if args.format == "json" else E.report_tsv(rows), args.out)
        return EXIT_OK
    if args.n is None:
        raise UsageError("give --n or --table")
    if args.n < 8:
        raise UsageError(f"n={args.n} must be at least 8")
    if args.windows is not None and args.windows < 1:
        raise UsageError("window size must be at least 1")
    rep = E.estimate_report(args.n, ecdlp=args.ecdlp, w=args.windows)
    if args.format == "json":
        _emit(json.dumps(rep, indent=2, sort_keys=True), args.out)
        return EXIT_OK
    lines = []
    for key, cell in rep.items():
        if isinstance(cell, dict) and "value" in cell:
            lines.append(f"{key}\t{cell['value']}\t{cell['source']}")
        elif isinstance(cell, dict):
            for sub, c in cell.items():
                lines.append(f"{key}.{sub}\t{c['value']}\t{c['source']}")
        else:
            lines.append(f"{key}\t{cell}\t")
    _emit("\n".join(lines), args.out)
    return EXIT_OK


def _print_record(record: dict, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(record, indent=2, sort_keys=True))
    else:
        for k, v in record.items():
            print(f"{k}\t{v}")


# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="modinv", description="Reversible modular-inversion circuits.")
    sub = ap.add_subparsers(dest="command", required=True)

    def size_args(p: argparse.ArgumentParser) -> None:
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("--prime", "-p", type=int)
        g.add_argument("--n", type=int)

    p = sub.add_parser("synth", help="write the lowered inversion circuit and its manifest")
    size_args(p)
    p.add_argument("--out", "-o")
    p.add_argument("--manifest")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("simulate", help="run the circuit on one input")
    size_args(p)
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("verify", help="simulate and compare with x^-1 mod p")
    p.add_argument("--prime", "-p", type=int, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--all", action="store_true")
    g.add_argument("--x", type=int)
    p.add_argument("--oracle", action="store_true", help="also cross-check the reference model")
    p.add_argument("--cap", type=int, default=DEFAULT_VERIFY_CAP)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("trace", help="per-step TSV trace")
    p.add_argument("--prime", "-p", type=int, required=True)
    p.add_argument("--x", type=int, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--model", action="store_true", default=True)
    g.add_argument("--circuit", action="store_true")
    p.add_argument("--out", "-o")
    p.set_defaults(fn=cmd_trace)

    p = sub.add_parser("count", help="stream gate counts of the full inversion")
    size_args(p)
    p.add_argument("--per-block", action="store_true")
    p.add_argument("--format", choices=["text", "json", "tsv"], default="text")
    p.set_defaults(fn=cmd_count)

    p = sub.add_parser("estimate", help="closed-form width and gate-count model")
    p.add_argument("--n", type=int)
    p.add_argument("--ecdlp", action="store_true")
    p.add_argument("--windows", type=int)
    p.add_argument("--table", action="store_true")
    p.add_argument("--format", choices=["text", "json", "tsv"], default="text")
    p.add_argument("--out", "-o")
    p.set_defaults(fn=cmd_estimate)

    p = sub.add_parser("model-trace", help="quotients and step counts from the reference model")
    p.add_argument("--prime", "-p", type=int, required=True)
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--rows", action="store_true", help="append the full step trace")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(fn=cmd_model_trace)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
