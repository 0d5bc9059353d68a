"""Command-line front end: ``cluster``, ``synth`` and ``eval``.

Exit codes: 0 success, 1 bad arguments, 2 data error, 3 solver failure
(degenerate cluster or numerical breakdown).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import metrics
from .data import SynthSpec, estimate_nu, read_table, returns_from_table, synth
from .errors import (
    DegenerateClusterError,
    EstimationError,
    InitializationError,
    InvalidInputError,
    NumericalError,
    ParseError,
    UndefinedMetricError,
)
from .solver import SolverConfig, run

EXIT_OK, EXIT_ARGS, EXIT_DATA, EXIT_SOLVER = 0, 1, 2, 3
METRIC_KEYS = ("acc", "purity", "mod", "ari", "chi")

log = logging.getLogger("bipartite_clustering")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for data errors here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ARGS, f"{self.prog}: error: {message}\n")


def _step(value: str):
    if value == "auto":
        return value
    try:
        v = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive number or 'auto', got {value!r}")
    if not v > 0:
        raise argparse.ArgumentTypeError(f"step size must be > 0, got {value}")
    return v


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="bipartite-cluster", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("cluster", help="learn the bipartite graph and cluster members", formatter_class=fmt)
    p.add_argument("--input", required=True, help="CSV of prices (or returns with --returns); header = asset ids")
    p.add_argument("--returns", action="store_true", help="input already holds returns (skip log-ratio)")
    p.add_argument("--k", type=int, required=True, help="number of clusters (>= 2)")
    nu = p.add_mutually_exclusive_group()
    nu.add_argument("--nu", type=float, default=None, help="Student-t degrees of freedom (> 2); fitted when omitted")
    nu.add_argument("--fit-nu", action="store_true", help="estimate nu from per-asset kurtosis (the default)")
    p.add_argument("--rho", type=float, default=1.0, help="ADMM penalty")
    p.add_argument("--mu", type=_step, default="auto", help="B step size")
    p.add_argument("--eta", type=_step, default="auto", help="A step size")
    p.add_argument("--inner-iters", type=int, default=50, help="PGD iterations per subproblem")
    p.add_argument("--max-iter", type=int, default=1000, help="outer iteration cap")
    p.add_argument("--tol", type=float, default=1e-5, help="relative primal residual threshold")
    p.add_argument("--tol-change", type=float, default=1e-6, help="relative B-change threshold")
    p.add_argument(
        "--init",
        choices=("uniform", "normal"),
        default="normal",
        help="A0 draw: U[0,1] entries, or |N(0,1)| entries (absolute value taken "
        "before column normalization so columns are valid weights)",
    )
    p.add_argument("--seed", type=int, default=0, help="RNG seed for A0")
    p.add_argument("--truth", default=None, help="CSV of ground-truth labels; enables acc/purity/ari")
    p.add_argument("--out", default=None, help="report JSON path (stdout when omitted)")
    p.add_argument("--dot", default=None, help="write the learned graph as a DOT edge list")
    p.add_argument("--b-out", default=None, help="write the learned B matrix as JSON")
    p.add_argument("--threshold", type=float, default=1e-6, help="smallest B weight emitted as a DOT edge")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("synth", help="generate data from the heavy-tailed bipartite model", formatter_class=fmt)
    p.add_argument("--r", type=int, default=60, help="number of members")
    p.add_argument("--k", type=int, default=3, help="number of clusters")
    p.add_argument("--n", type=int, default=2000, help="number of samples")
    p.add_argument("--nu", type=float, default=5.0, help="degrees of freedom (> 2)")
    p.add_argument("--sep", type=float, default=0.9, help="in-cluster weight fraction, in (1/k, 1]")
    p.add_argument("--seed", type=int, default=0, help="RNG seed")
    p.add_argument("--out-prefix", default="synth", help="writes PREFIX.csv, PREFIX_labels.csv, PREFIX_B.json")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="score labels against ground truth", formatter_class=fmt)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--report", help="report JSON written by 'cluster'")
    src.add_argument("--labels", help="CSV of predicted labels")
    p.add_argument("--truth", required=True, help="CSV of ground-truth labels")
    p.add_argument("--graph", default=None, help="B matrix JSON (from 'synth' or 'cluster --b-out'); enables mod")
    p.add_argument("--input", default=None, help="data CSV; enables chi")
    p.add_argument("--returns", action="store_true", help="--input already holds returns")
    p.add_argument("--out", default=None, help="metrics JSON path (stdout when omitted)")
    p.set_defaults(func=cmd_eval)
    return parser


# ---------------------------------------------------------------- file formats


def write_labels(path, labels, names=None):
    names = names or [f"m{i:03d}" for i in range(len(labels))]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["asset", "label"])
        for name, lab in zip(names, labels):
            w.writerow([name, int(lab)])


def read_labels(path, names=None) -> np.ndarray:
    """Read a label CSV (header row; last column = integer label).

    With a two-column file and known asset ``names``, rows are matched by name.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise ParseError(f"{path}: no labels")
    body = rows[1:]
    try:
        labels = [int(row[-1]) for row in body]
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if names is not None and len(rows[0]) >= 2:
        by_name = {row[0].strip(): lab for row, lab in zip(body, labels)}
        if set(by_name) == set(names):
            labels = [by_name[name] for name in names]
    return np.asarray(labels, dtype=int)


def write_graph_json(path, B, names=None):
    payload = {"B": np.asarray(B).tolist()}
    if names is not None:
        payload["names"] = list(names)
    Path(path).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")


def read_graph_json(path) -> np.ndarray:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        B = np.asarray(payload["B"], dtype=float)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"cannot read graph {path}: {exc}") from exc
    if B.ndim != 2:
        raise ParseError(f"{path}: B must be a matrix")
    return B


def to_dot(B, names, threshold=1e-6) -> str:
    """Directed member -> center edge list weighted by ``B``."""
    B = np.asarray(B)
    lines = ["digraph bipartite {"]
    for j in range(B.shape[1]):
        lines.append(f'  "center_{j}" [shape=box];')
    for i, name in enumerate(names):
        for j in range(B.shape[1]):
            if B[i, j] > threshold:
                lines.append(f'  "{name}" -> "center_{j}" [weight={B[i, j]:.6g}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _emit(text: str, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


# ---------------------------------------------------------------- metrics


def _try(fn, *args):
    try:
        return float(fn(*args)), None
    except (UndefinedMetricError, InvalidInputError) as exc:
        return None, str(exc)


def score(pred, truth=None, B=None, data=None):
    """Every metric we can compute; the rest map to None with a reason."""
    values, reasons = {}, {}

    def put(key, result):
        values[key], why = result
        if why is not None:
            reasons[key] = why

    if truth is None:
        for key in ("acc", "purity", "ari"):
            put(key, (None, "no truth labels provided"))
    elif len(truth) != len(pred):
        for key in ("acc", "purity", "ari"):
            put(key, (None, f"truth has {len(truth)} labels, prediction has {len(pred)}"))
    else:
        put("acc", _try(metrics.accuracy, truth, pred))
        put("purity", _try(metrics.purity, truth, pred))
        put("ari", _try(metrics.ari, truth, pred))
    put("mod", _try(metrics.modularity, B, pred) if B is not None else (None, "no graph provided"))
    put("chi", _try(metrics.chi, data, pred) if data is not None else (None, "no data provided"))
    return {key: values[key] for key in METRIC_KEYS}, {key: reasons[key] for key in METRIC_KEYS if key in reasons}


# ---------------------------------------------------------------- commands


def cmd_cluster(args) -> int:
    if args.k < 2:
        raise UsageError(f"--k must be >= 2, got {args.k}")
    if args.threshold < 0:
        raise UsageError("--threshold must be nonnegative")
    table = read_table(args.input)
    data = returns_from_table(table, already_returns=args.returns)
    if args.k >= data.r:
        raise UsageError(f"--k must be smaller than the number of assets ({data.r})")
    truth = read_labels(args.truth, table.names) if args.truth else None
    if args.nu is None:
        nu, nu_source = estimate_nu(data), "fitted"
    else:
        nu, nu_source = args.nu, "given"
    try:
        cfg = SolverConfig(
            k=args.k,
            nu=nu,
            rho=args.rho,
            mu=args.mu,
            eta=args.eta,
            max_outer=args.max_iter,
            inner_iters=args.inner_iters,
            tol_primal=args.tol,
            tol_change=args.tol_change,
            seed=args.seed,
        )
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from exc
    t0 = time.perf_counter()
    result = run(data, cfg, args.init)
    elapsed = (time.perf_counter() - t0) * 1000.0
    values, reasons = score(result.labels, truth, result.B, data)
    report = {
        "labels": result.labels.tolist(),
        "metrics": values,
        "metric_reasons": reasons,
        "config": {**asdict(cfg), "init": args.init, "nu_source": nu_source, "returns": args.returns},
        "iterations": result.iterations,
        "converged": result.converged,
        "trace": [
            {"iter": t.iter, "objective": t.objective, "primal_residual": t.primal_residual}
            for t in result.trace
        ],
        "timing_ms": elapsed,
    }
    _emit(_dump(report), args.out)
    if args.dot:
        Path(args.dot).write_text(to_dot(result.B, table.names, args.threshold), encoding="utf-8")
    if args.b_out:
        write_graph_json(args.b_out, result.B, table.names)
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        spec = SynthSpec(r=args.r, k=args.k, n=args.n, nu=args.nu, separation=args.sep, seed=args.seed)
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from exc
    data, labels, B = synth(spec)
    names = [f"m{i:03d}" for i in range(spec.r)]
    prefix = args.out_prefix
    Path(prefix).parent.mkdir(parents=True, exist_ok=True)
    with open(f"{prefix}.csv", "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(names) + "\n")
        np.savetxt(fh, data.X.T, delimiter=",", fmt="%.17g")
    write_labels(f"{prefix}_labels.csv", labels, names)
    write_graph_json(f"{prefix}_B.json", B, names)
    return EXIT_OK


def cmd_eval(args) -> int:
    table = None
    if args.input:
        table = read_table(args.input)
    names = table.names if table is not None else None
    if args.report:
        try:
            pred = np.asarray(json.loads(Path(args.report).read_text(encoding="utf-8"))["labels"], dtype=int)
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise ParseError(f"cannot read report {args.report}: {exc}") from exc
    else:
        pred = read_labels(args.labels, names)
    truth = read_labels(args.truth, names)
    B = read_graph_json(args.graph) if args.graph else None
    data = returns_from_table(table, args.returns) if table is not None else None
    values, reasons = score(pred, truth, B, data)
    _emit(_dump({"metrics": values, "metric_reasons": reasons}), args.out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except (ParseError, EstimationError, InitializationError, InvalidInputError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DegenerateClusterError, NumericalError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
