"""Benchmark and diagnostics command line.

Subcommands: solve, compare, invariance, sparse-demo, list-problems.
All randomness flows from one 64-bit seed (flag, else BREGMANQN_SEED,
else 0) which is recorded in every output file; wall time is reported on
stderr only so written artifacts stay byte-identical across runs.
"""

import argparse
import csv
import io
import json
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from .errors import BregmanQNError, InvalidParameter
from .pdlinalg import PDMatrix
from .potentials import log_potential
from .problems import get_problem, list_problems
from .solver import (
    LineSearchParams,
    SolverConfig,
    invariance_check,
    minimize,
)
from .sparse import banded_pattern, is_chordal, load_pattern, sparse_update
from .updates import SecantPair, UpdateFamily

__all__ = ["RunRecord", "export_trace", "run_command", "main"]

TRACE_COLUMNS = ("iter", "f", "grad_norm", "alpha", "det_B", "sTy", "skipped")


@dataclass
class RunRecord:
    """One solve outcome; wall_time stays out of serialized form."""

    problem: str
    family: str
    potential_params: dict
    iterations: int
    final_grad_norm: float
    final_f: float
    wall_time: float
    status: str
    seed: int

    def to_dict(self):
        return {
            "problem": self.problem,
            "family": self.family,
            "potential_params": self.potential_params,
            "iterations": self.iterations,
            "final_grad_norm": self.final_grad_norm,
            "final_f": self.final_f,
            "status": self.status,
            "seed": self.seed,
        }


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def export_trace(trace, path, fmt):
    """Write a solver trace or a divergence sequence to csv or json.

    Solver traces carry the iter/f/grad_norm/alpha/det_B/sTy/skipped
    columns, iterate 0 included with empty alpha and sTy; a bare
    sequence is written as (iter, divergence) rows.
    """
    if fmt not in ("csv", "json"):
        raise InvalidParameter(f"format must be csv or json, got {fmt!r}")
    if hasattr(trace, "records"):
        columns = TRACE_COLUMNS
        rows = [
            (r.k, r.f, r.grad_norm, r.alpha, r.det_b, r.sty, r.skipped)
            for r in trace.records
        ]
    else:
        columns = ("iter", "divergence")
        rows = [(k, float(v)) for k, v in enumerate(trace)]
    try:
        if fmt == "csv":
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
            data = buf.getvalue()
        else:
            data = (
                json.dumps([dict(zip(columns, row)) for row in rows], indent=2)
                + "\n"
            )
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
    except OSError as exc:
        raise BregmanQNError(f"cannot write trace to {path}: {exc}")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser():
    # abbreviation off so explicit flags can be recognized verbatim in argv
    p = _Parser(prog="bregmanqn", description=__doc__.splitlines()[0],
                allow_abbrev=False)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, problem=True):
        if problem:
            sp.add_argument("--problem", required=False, default="rosenbrock")
        sp.add_argument("--family", default="bfgs",
                        help="update family, potential inline: vbfgs:power:gamma=0.25")
        sp.add_argument("--tol", type=float, default=1e-6)
        sp.add_argument("--max-iter", type=int, default=200)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--config", default=None,
                        help="key=value file; command-line flags win")

    sp = sub.add_parser("solve", allow_abbrev=False, help="run one problem/family and write the trace")
    common(sp)
    sp = sub.add_parser("compare", allow_abbrev=False, help="run a family grid on one problem")
    common(sp)
    sp.add_argument("--families", default="bfgs,vbfgs:log",
                    help="comma-separated family strings")
    sp = sub.add_parser("invariance", allow_abbrev=False, help="compare a run against its affine image")
    common(sp)
    sp.add_argument("--transform", choices=("sl", "gl"), default="sl",
                    help="seeded random transform: det 1 (sl) or det 2 (gl)")
    sp = sub.add_parser("sparse-demo", allow_abbrev=False, help="run sparse update chains on a pattern")
    common(sp, problem=False)
    sp.add_argument("--pattern", default=None, help="pattern file; default tridiagonal n=10")
    sp.add_argument("--algorithm", type=int, choices=(1, 2), default=2)
    sp.add_argument("--T", type=int, default=150)
    sub.add_parser("list-problems", allow_abbrev=False, help="print the problem catalog")
    return p


def _apply_config_file(args, argv):
    """Overlay key=value file entries under explicit command-line flags."""
    if args.config is None:
        return args
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise _UsageError(f"cannot read config file {args.config}: {exc}")
    known = {
        "problem": str,
        "family": str,
        "families": str,
        "tol": float,
        "max-iter": int,
        "seed": int,
        "out": str,
        "format": str,
        "pattern": str,
        "algorithm": int,
        "T": int,
        "transform": str,
    }
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise _UsageError(f"config line {lineno} is not key=value: {raw!r}")
        if key not in known:
            raise _UsageError(f"unknown config key {key!r} on line {lineno}")
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise _UsageError(f"config key {key!r} does not apply to this command")
        try:
            parsed = known[key](value)
        except ValueError:
            raise _UsageError(f"config key {key!r} has a bad value {value!r}")
        # flags explicitly given on the command line take precedence;
        # abbreviation is disabled so the option string appears verbatim
        option = "--" + key
        explicit = any(tok == option or tok.startswith(option + "=") for tok in argv)
        if not explicit:
            setattr(args, attr, parsed)
    return args


def _resolve_seed(args):
    if args.seed is not None:
        return int(args.seed)
    env = os.environ.get("BREGMANQN_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise _UsageError(f"BREGMANQN_SEED is not an integer: {env!r}")
    return 0


def _solve_once(problem_name, family_str, tol, max_iter, seed):
    spec = get_problem(problem_name, seed=seed)
    family = UpdateFamily.from_string(family_str)
    config = SolverConfig(
        family=family,
        line_search=LineSearchParams(),
        grad_tol=tol,
        max_iter=max_iter,
    )
    t0 = time.perf_counter()
    trace = minimize(spec.objective, spec.start, PDMatrix.identity(spec.n), config)
    wall = time.perf_counter() - t0
    pot = family.potential
    record = RunRecord(
        problem=spec.name,
        family=family.label(),
        potential_params=dict(pot.params) if pot is not None else {},
        iterations=trace.iterations,
        final_grad_norm=trace.final.grad_norm,
        final_f=trace.final.f,
        wall_time=wall,
        status=trace.status,
        seed=seed,
    )
    return spec, trace, record


def _cmd_solve(args):
    seed = _resolve_seed(args)
    spec, trace, record = _solve_once(
        args.problem, args.family, args.tol, args.max_iter, seed
    )
    out = args.out or f"trace.{args.format}"
    export_trace(trace, out, args.format)
    print(
        f"{record.problem} {record.family}: {record.status} "
        f"iters={record.iterations} f={record.final_f:.6e} "
        f"|grad|={record.final_grad_norm:.3e} seed={record.seed} -> {out}"
    )
    print(f"wall time {record.wall_time:.3f}s", file=sys.stderr)
    return 0 if record.status == "Converged" else 2


def _log_bfgs_deviation(spec, tol, max_iter):
    """Max per-iterate gap between plain BFGS and the log-potential family."""
    config_b = SolverConfig(UpdateFamily("bfgs"), grad_tol=tol, max_iter=max_iter)
    config_v = SolverConfig(
        UpdateFamily("vbfgs", log_potential()), grad_tol=tol, max_iter=max_iter
    )
    tr_b = minimize(spec.objective, spec.start, PDMatrix.identity(spec.n), config_b)
    tr_v = minimize(spec.objective, spec.start, PDMatrix.identity(spec.n), config_v)
    m = min(len(tr_b.records), len(tr_v.records))
    dev = 0.0
    for k in range(m):
        dev = max(dev, float(np.abs(tr_b.records[k].x - tr_v.records[k].x).max()))
    if len(tr_b.records) != len(tr_v.records):
        dev = max(dev, np.inf)
    return dev


def _cmd_compare(args):
    seed = _resolve_seed(args)
    families = [f.strip() for f in args.families.split(",") if f.strip()]
    if not families:
        raise _UsageError("no families given")
    spec = get_problem(args.problem, seed=seed)
    log_dev = _log_bfgs_deviation(spec, args.tol, args.max_iter)
    rows = []
    for fam in families:
        _, trace, record = _solve_once(args.problem, fam, args.tol, args.max_iter, seed)
        rows.append((record, trace))
    rows.sort(key=lambda rt: rt[0].family)
    ref_x = rows[0][1].final.x
    out = args.out or f"compare.{args.format}"
    columns = (
        "problem", "family", "status", "iterations", "final_f",
        "final_grad_norm", "x_dev_vs_first", "log_bfgs_dev", "seed",
    )
    table = []
    for record, trace in rows:
        table.append(
            (
                record.problem,
                record.family,
                record.status,
                record.iterations,
                record.final_f,
                record.final_grad_norm,
                float(np.abs(trace.final.x - ref_x).max()),
                log_dev,
                record.seed,
            )
        )
    try:
        if args.format == "csv":
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(columns)
            for row in table:
                writer.writerow([_fmt(v) for v in row])
            data = buf.getvalue()
        else:
            data = json.dumps([dict(zip(columns, row)) for row in table], indent=2) + "\n"
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
    except OSError as exc:
        raise BregmanQNError(f"cannot write summary to {out}: {exc}")
    for row in table:
        print(
            f"{row[0]} {row[1]}: {row[2]} iters={row[3]} f={row[4]:.6e} "
            f"|grad|={row[5]:.3e}"
        )
    print(f"summary -> {out}")
    return 0 if all(r[0].status == "Converged" for r in rows) else 2


def _seeded_transform(n, seed, det_target):
    rng = np.random.default_rng(seed + 0x5EED)
    M = rng.standard_normal((n, n)) + 3.0 * np.eye(n)
    d = np.linalg.det(M)
    if abs(d) < 1e-8:
        M += np.eye(n)
        d = np.linalg.det(M)
    M *= np.sign(d)
    d = abs(d)
    return M * (det_target / d) ** (1.0 / n)


def _cmd_invariance(args):
    seed = _resolve_seed(args)
    spec = get_problem(args.problem, seed=seed)
    family = UpdateFamily.from_string(args.family)
    config = SolverConfig(family=family, grad_tol=args.tol, max_iter=args.max_iter)
    det_target = 1.0 if args.transform == "sl" else 2.0
    T = _seeded_transform(spec.n, seed, det_target)
    report = invariance_check(
        spec.objective, spec.start, PDMatrix.identity(spec.n), T, config,
        k_max=min(args.max_iter, 20), tol=1e-6,
    )
    verdict = "invariant" if report.invariant else "NOT invariant"
    print(
        f"{spec.name} {family.label()} det(T)={det_target:g}: {verdict} "
        f"(x_dev={report.x_dev:.3e}, b_dev={report.b_dev:.3e}, k={report.k_used})"
    )
    if args.out:
        payload = {
            "problem": spec.name,
            "family": family.label(),
            "det_T": det_target,
            "x_dev": report.x_dev,
            "b_dev": report.b_dev,
            "k_used": report.k_used,
            "tol": report.tol,
            "invariant": report.invariant,
            "seed": seed,
        }
        try:
            if args.format == "json":
                data = json.dumps(payload, indent=2) + "\n"
            else:
                buf = io.StringIO()
                writer = csv.writer(buf, lineterminator="\n")
                writer.writerow(list(payload))
                writer.writerow([_fmt(v) for v in payload.values()])
                data = buf.getvalue()
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(data)
        except OSError as exc:
            raise BregmanQNError(f"cannot write report to {args.out}: {exc}")
    return 0 if report.invariant else 2


def _cmd_sparse_demo(args):
    seed = _resolve_seed(args)
    if args.pattern is not None:
        pattern = load_pattern(args.pattern)
    else:
        pattern = banded_pattern(10, 1)
    tree = is_chordal(pattern)
    n = pattern.n
    family = UpdateFamily.from_string(args.family)
    pot = family.potential if family.potential is not None else log_potential()

    rng = np.random.default_rng(seed)
    base = rng.standard_normal((n, n))
    feasible = pattern.restrict(base @ base.T + n * np.eye(n))
    s = rng.standard_normal(n)
    y = feasible @ s
    B0 = PDMatrix.identity(n)
    result = sparse_update(
        B0, SecantPair(s, y), pattern, tree, pot, algorithm=args.algorithm, T=args.T
    )
    out = args.out or f"sparse-trace.{args.format}"
    export_trace(result.trace, out, args.format)
    slack = np.diff(result.trace) <= 1e-9 if len(result.trace) > 1 else np.array([True])
    final = float(result.trace[-1])
    print(
        f"pattern n={n} algorithm={args.algorithm} T={args.T} "
        f"potential={pot.label()} trace={result.trace_kind} "
        f"final={final:.3e} monotone={bool(slack.all())} seed={seed} -> {out}"
    )
    return 0 if final <= args.tol else 2


def _cmd_list_problems(_args):
    for name, desc in list_problems():
        print(f"{name:32s} {desc}")
    return 0


def run_command(argv):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help and friends
        return int(exc.code or 0)
    if args.command is None:
        print("error: a subcommand is required (see --help)", file=sys.stderr)
        return 1
    handlers = {
        "solve": _cmd_solve,
        "compare": _cmd_compare,
        "invariance": _cmd_invariance,
        "sparse-demo": _cmd_sparse_demo,
        "list-problems": _cmd_list_problems,
    }
    try:
        if getattr(args, "config", None) is not None:
            args = _apply_config_file(args, argv)
        return handlers[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (BregmanQNError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run_command(sys.argv[1:]))
