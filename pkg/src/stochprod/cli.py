"""Command-line interface.

Exit codes: 0 analysis completed, 1 internal error, 2 invalid input.
Verdicts are inside the JSON reports, never in the exit code.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from .accumulation import MatrixSequence, segment, segment_gantmacher
from .analysis import GapSchedule, check_theorem, classify_schedule, series_partial_sums
from .generators import GeneratorSpec
from .processes import run_consensus, run_markov
from .structure import communication_classes

log = logging.getLogger("stochprod")


class InputError(Exception):
    """Malformed or invalid user input (exit code 2)."""


def load_sequence(path, horizon: Optional[int] = None, seed: Optional[int] = None,
                  positive_diagonal: bool = False) -> MatrixSequence:
    """Read a sequence file: ``{"n", "matrices"}`` or ``{"generator", "horizon"?}``."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError("sequence file must hold a JSON object")
    try:
        if "generator" in doc:
            spec = GeneratorSpec.from_dict(doc["generator"])
            if seed is not None:
                spec = dataclasses.replace(spec, seed=seed)
            h = horizon if horizon is not None else doc.get("horizon")
            if h is None:
                raise InputError("generator input needs --horizon or a 'horizon' field")
            return MatrixSequence(spec, int(h), positive_diagonal=positive_diagonal)
        mats = doc["matrices"]
        n = int(doc.get("n", len(mats[0]) if mats else 0))
        seq = MatrixSequence(mats, horizon, positive_diagonal=positive_diagonal)
        if seq.n != n:
            raise InputError(f"declared n={n} but matrices are {seq.n}x{seq.n}")
        return seq
    except InputError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InputError(f"invalid sequence file {path}: {exc}") from exc


def dump_sequence(matrices, path) -> None:
    """Write a ``{"n", "matrices"}`` file; float repr round-trips exactly."""
    mats = [np.asarray(m, dtype=float).tolist() for m in matrices]
    doc = {"n": len(mats[0]) if mats else 0, "matrices": mats}
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def _write(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _parse_vector(arg: str) -> List[float]:
    p = Path(arg)
    try:
        if p.is_file():
            vals = json.loads(p.read_text(encoding="utf-8"))
        else:
            vals = [float(v) for v in arg.replace(",", " ").split()]
        return [float(v) for v in vals]
    except (ValueError, TypeError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot parse vector {arg!r}: {exc}") from exc


def _trace_text(trace: np.ndarray, fmt: str) -> str:
    if fmt == "json":
        return _json({"t": list(range(len(trace))), "values": trace.tolist()})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"v_{i + 1}" for i in range(trace.shape[1])])
    for t, row in enumerate(trace):
        w.writerow([t] + [repr(float(v)) for v in row])
    return buf.getvalue()


def cmd_simulate(args) -> int:
    seq = load_sequence(args.input, args.horizon, args.seed)
    n = seq.n
    try:
        if args.process == "consensus":
            if args.x0 is None:
                x0 = np.random.default_rng(args.seed).random(n)
            else:
                x0 = _parse_vector(args.x0)
            run = run_consensus(seq, x0, args.horizon, args.tol, patience=args.patience)
            trace = run.trace
            report = {"process": "consensus", "steps": len(trace) - 1,
                      "final": trace[-1].tolist(), **run.report.to_dict()}
        else:
            p0 = np.full(n, 1.0 / n) if args.x0 is None else _parse_vector(args.x0)
            mrun = run_markov(seq, p0, args.horizon, args.tol, patience=args.patience)
            trace = mrun.trace
            report = {"process": "markov", "steps": len(trace) - 1,
                      "final": trace[-1].tolist(), "converged": mrun.converged}
    except (ValueError, IndexError) as exc:
        raise InputError(str(exc)) from exc
    if args.out:
        _write(_trace_text(trace, args.format), args.out)
    _write(_json(report), args.report)
    return 0


def cmd_segment(args) -> int:
    seq = load_sequence(args.input, args.horizon, args.seed, positive_diagonal=True)
    try:
        seg = segment(seq, args.direction, args.horizon)
    except (ValueError, IndexError) as exc:
        raise InputError(str(exc)) from exc
    doc = seg.to_dict()
    doc["classes"] = communication_classes(seg.segment_pattern).to_dict()
    if seg.stabilized:
        doc["gantmacher"] = segment_gantmacher(seg).to_dict()
    _write(_json(doc), args.out)
    return 0


def cmd_check(args) -> int:
    seq = load_sequence(args.input, args.horizon, args.seed, positive_diagonal=True)
    try:
        schedule = None
        if args.schedule:
            if args.delta_floor is None:
                raise InputError("--schedule needs --delta-floor")
            schedule = GapSchedule(args.schedule, args.delta_floor, a=args.a, N=args.N)
        report = check_theorem(seq, args.horizon, args.tol if args.tol is not None else 1e-8,
                               delta_floor=args.delta_floor, schedule=schedule)
    except (ValueError, IndexError) as exc:
        raise InputError(str(exc)) from exc
    _write(_json(report.to_dict()), args.out)
    return 0


def _checkpoints(upto: int, first: int, every: Optional[int]) -> List[int]:
    if every:
        pts = list(range(first, upto + 1, every))
    else:
        pts = sorted({min(upto, 10 ** k) for k in range(0, len(str(upto)) + 1)} | {upto})
        pts = [p for p in pts if p >= first]
    if pts[-1] != upto:
        pts.append(upto)
    return pts


def cmd_series(args) -> int:
    try:
        sched = GapSchedule(args.kind, args.delta, a=args.a, N=args.N)
        sums = series_partial_sums(sched, args.upto)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    first = sched.first_index
    pts = _checkpoints(args.upto, first, args.every)
    rows = [(i, float(sums[i - first])) for i in pts]
    summary = {"schedule": sched.to_dict(), "upto": args.upto,
               "partial_sum": float(sums[-1]), "classification": classify_schedule(sched)}
    if args.format == "json":
        summary["table"] = [{"i": i, "partial_sum": s} for i, s in rows]
        _write(_json(summary), args.out)
        return 0
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "partial_sum"])
    for i, s in rows:
        w.writerow([i, repr(s)])
    _write(buf.getvalue(), args.out)
    if args.out in (None, "-"):
        sys.stderr.write(_json(summary))
    else:
        sys.stdout.write(_json(summary))
    return 0


def cmd_generate(args) -> int:
    try:
        doc = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        spec = GeneratorSpec.from_dict(doc.get("generator", doc))
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"invalid generator spec {args.spec}: {exc}") from exc
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    mats = [spec(t).entries for t in range(args.count)]
    if args.out in (None, "-"):
        sys.stdout.write(json.dumps({"n": spec.n, "matrices": [m.tolist() for m in mats]}) + "\n")
    else:
        dump_sequence(mats, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed override for generated inputs")
    common.add_argument("--tol", type=float, default=None, help="convergence / residual tolerance")
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="stochprod",
        description="Products of row-stochastic matrices with positive diagonals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="run a consensus or Markov process")
    p.add_argument("input")
    p.add_argument("--x0", help="initial vector: comma list or JSON file")
    p.add_argument("--process", choices=("consensus", "markov"), default="consensus")
    p.add_argument("--horizon", type=int)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--report", default=None, help="JSON report file (default: stdout)")
    p.set_defaults(func=cmd_simulate, tol_default=1e-10)

    p = sub.add_parser("segment", parents=[common], help="segment an accumulation")
    p.add_argument("input")
    p.add_argument("--horizon", type=int)
    p.add_argument("--direction", choices=("fwd", "bwd", "forward", "backward"), default="bwd")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("check", parents=[common], help="check convergence hypotheses and residuals")
    p.add_argument("input")
    p.add_argument("--horizon", type=int)
    p.add_argument("--delta-floor", type=float, default=None)
    p.add_argument("--schedule", choices=("constant", "log", "loglog"), default=None)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--N", type=int, default=1)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("series", parents=[common], help="partial sums of a gap schedule series")
    p.add_argument("--kind", choices=("constant", "log", "loglog"), required=True)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--N", type=int, default=1)
    p.add_argument("--upto", type=int, required=True)
    p.add_argument("--every", type=int, default=None, help="table stride (default: powers of ten)")
    p.set_defaults(func=cmd_series)

    p = sub.add_parser("generate", parents=[common], help="materialize a generator spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--count", type=int, required=True)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.tol is None and getattr(args, "tol_default", None) is not None:
        args.tol = args.tol_default
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        log.exception("internal error")
        return 1


if __name__ == "__main__":
    sys.exit(main())
