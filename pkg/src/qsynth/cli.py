"""Command-line front end: ``qsynth {gen,oracle,learn,factor,pipeline,bench}``.

Exit codes: 0 on success, 1 on any error, 2 when ``bench --check`` finds a
result outside its acceptance band.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .circuit_io import load_matrix, render_ascii, save_matrix, write_qasm
from .datagen import (haar_random_unitary, random_gate_sequence,
                      random_state_batch, target_by_label)
from .errors import QsynthError
from .factorizer import factor
from .harness import STUDIES, ExperimentSpec, check_result, run_experiment
from .optimizers import LINESEARCHES, LearnConfig, run, sequential_learn, with_overrides
from .oracle import procrustes_solve
from .pipeline import pipeline_from_files

log = logging.getLogger("qsynth")

EXIT_OK, EXIT_ERROR, EXIT_CHECK = 0, 1, 2


def _global_flags(parser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    g = parser.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=d(0), help="master random seed")
    g.add_argument("--trials", type=int, default=d(None), help="trials per cell (bench)")
    g.add_argument("--out-dir", default=d("."), help="directory for generated files")
    g.add_argument("--workers", type=int, default=d(1), help="worker threads")
    g.add_argument("--config", default=d(None), help="JSON config file")
    g.add_argument("-v", "--verbose", action="store_true", default=d(False))


def _learn_flags(parser) -> None:
    parser.add_argument("--method", help="GD, GDP, GDLM, DLR or NM; a trailing * adds the unitarity constraint")
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--beta", type=float)
    parser.add_argument("--tol", type=float)
    parser.add_argument("--stall-tol", type=float)
    parser.add_argument("--max-iters", type=int)
    parser.add_argument("--linesearch", choices=LINESEARCHES)
    parser.add_argument("--sequential", action="store_true", help="learn U one row at a time")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsynth", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate matrices and example batches")
    p.add_argument("kind", choices=["states", "unitary", "named", "sequence", "problem"])
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--m", type=int)
    p.add_argument("--cond-cap", type=float, default=100.0)
    p.add_argument("--no-cond-cap", action="store_true", help="skip the condition-number test")
    p.add_argument("--name", help="named operator label such as H1, F8 or G16")
    p.add_argument("--k", type=int, default=2, help="qubits for a gate sequence")
    p.add_argument("--length", type=int, default=10, help="gates in a sequence")
    p.add_argument("--target", help="problem target label; default is a Haar-random unitary")
    p.add_argument("--x-kind", choices=["random", "haar"], default="random")
    p.add_argument("--out", help="output matrix file (single-matrix kinds)")

    p = sub.add_parser("oracle", parents=[common], help="closed-form Procrustes solution")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("learn", parents=[common], help="learn U from examples")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--out", help="learned matrix file")
    p.add_argument("--report-out", help="JSON summary of the run")
    p.add_argument("--trace-out", help="CSV of iteration, f, g")
    _learn_flags(p)

    p = sub.add_parser("factor", parents=[common], help="synthesize a circuit for a unitary")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--qasm-out")
    p.add_argument("--diagram-out")
    p.add_argument("--report-out")

    p = sub.add_parser("pipeline", parents=[common], help="examples to circuit in one go")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    _learn_flags(p)

    p = sub.add_parser("bench", parents=[common], help="run one of the convergence studies")
    p.add_argument("experiment", choices=STUDIES)
    p.add_argument("--check", action="store_true", help="exit 2 if any acceptance band fails")
    return parser


def _learn_config(args) -> LearnConfig:
    base = LearnConfig.from_json(args.config) if args.config else LearnConfig()
    cfg = with_overrides(base, alpha=args.alpha, beta=args.beta, tol=args.tol,
                         stall_tol=args.stall_tol, max_iters=args.max_iters,
                         linesearch=args.linesearch, seed=args.seed)
    if args.method:
        cfg = with_overrides(cfg, method=args.method, constrained=args.method.endswith("*"))
    return cfg


def _write_metadata(path: Path, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def cmd_gen(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    meta = []
    if args.kind == "states":
        batch = random_state_batch(args.n, args.m or args.n, None if args.no_cond_cap else args.cond_cap, rng)
        path = Path(args.out) if args.out else out_dir / "states.txt"
        save_matrix(path, batch.states)
        meta.append({"file": path.name, "kind": "states", "n": args.n, "m": args.m or args.n,
                     "seed": args.seed, "cond": format(batch.cond, ".17g"), "resamples": batch.resamples})
    elif args.kind in ("unitary", "named", "sequence"):
        if args.kind == "unitary":
            U, n = haar_random_unitary(args.n, rng), args.n
        elif args.kind == "named":
            if not args.name:
                raise QsynthError("gen named needs --name (for example F8)")
            U = target_by_label(args.name)
            n = U.shape[0]
        else:
            circuit, U = random_gate_sequence(args.k, args.length, rng)
            n = U.shape[0]
            (out_dir / "sequence.qasm").write_text(write_qasm(circuit))
        path = Path(args.out) if args.out else out_dir / f"{args.kind}.txt"
        save_matrix(path, U)
        meta.append({"file": path.name, "kind": args.kind, "n": n, "m": n, "seed": args.seed,
                     "cond": "1", "resamples": 0})
    else:
        U = target_by_label(args.target) if args.target else haar_random_unitary(args.n, rng)
        n = U.shape[0]
        m = args.m or n
        if args.x_kind == "haar":
            if m != n:
                raise QsynthError("--x-kind haar needs m == n")
            X, cond, resamples = haar_random_unitary(n, rng), 1.0, 0
        else:
            batch = random_state_batch(n, m, None if args.no_cond_cap else args.cond_cap, rng)
            X, cond, resamples = batch.states, batch.cond, batch.resamples
        for name, mat in (("X.txt", X), ("Y.txt", U @ X), ("U.txt", U)):
            save_matrix(out_dir / name, mat)
        meta.append({"file": "X.txt,Y.txt,U.txt", "kind": "problem", "n": n, "m": m,
                     "seed": args.seed, "cond": format(cond, ".17g"), "resamples": resamples})
    _write_metadata(out_dir / "metadata.csv", meta)
    return EXIT_OK


def cmd_oracle(args) -> int:
    save_matrix(args.out, procrustes_solve(load_matrix(args.x), load_matrix(args.y)))
    return EXIT_OK


def cmd_learn(args) -> int:
    cfg = _learn_config(args)
    X, Y = load_matrix(args.x), load_matrix(args.y)
    if args.sequential:
        res = sequential_learn(cfg, X, Y, parallelism=args.workers)
    else:
        res = run(cfg, X, Y)
    if args.out:
        save_matrix(args.out, res.U)
    if args.trace_out:
        with open(args.trace_out, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["iteration", "f", "g"])
            for it, f, g in res.objective_trace:
                writer.writerow([it, format(f, ".17g"), format(g, ".17g")])
    report = {"method": cfg.label, "status": res.status, "iterations": res.iterations,
              "f": res.f, "g": res.g, "lambda_final": res.lambda_final, "config": cfg.to_dict()}
    if res.row_iterations is not None:
        report["row_iterations"] = [int(i) for i in res.row_iterations]
        report["row_status"] = res.row_status
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.report_out:
        Path(args.report_out).write_text(text + "\n")
    print(f"{cfg.label}: {res.status} after {res.iterations} iterations (f={res.f:.3e})")
    return EXIT_OK


def cmd_factor(args) -> int:
    U = load_matrix(args.input)
    d = U.shape[0]
    k = d.bit_length() - 1
    if U.shape != (d, d) or 2**k != d or d < 2:
        raise QsynthError(f"operator shape {U.shape} is not 2^k x 2^k")
    circuit, report = factor(U, k)
    if args.qasm_out:
        Path(args.qasm_out).write_text(write_qasm(circuit))
    diagram = render_ascii(circuit)
    if args.diagram_out:
        Path(args.diagram_out).write_text(diagram)
    else:
        print(diagram, end="")
    if args.report_out:
        Path(args.report_out).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    print(f"{report.cnot_count} CNOTs, {report.total_gates} gates, fidelity error {report.error:.3e}")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = _learn_config(args)
    out = pipeline_from_files(args.x, args.y, cfg, out_dir=args.out_dir,
                              sequential=args.sequential, workers=args.workers)
    r = out.report
    print(f"learn {r['learn']['status']} in {r['learn']['iterations']} iterations; "
          f"{r['cnot_count']} CNOTs, {r['total_gates']} gates, fidelity error {r['fidelity_error']:.3e}")
    return EXIT_OK


def cmd_bench(args) -> int:
    params = {}
    if args.config:
        with open(args.config) as fh:
            params = json.load(fh)
    kwargs = {"trials": args.trials} if args.trials is not None else {}
    spec = ExperimentSpec(args.experiment, seed=args.seed, workers=args.workers,
                          out_dir=Path(args.out_dir), params=params, **kwargs)
    result = run_experiment(spec)
    checks = check_result(result)
    failed = 0
    for name, passed, detail in checks:
        print(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}".rstrip())
        failed += not passed
    if args.check and failed:
        return EXIT_CHECK
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "oracle": cmd_oracle, "learn": cmd_learn, "factor": cmd_factor,
            "pipeline": cmd_pipeline, "bench": cmd_bench}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; 2 is reserved for failed checks
        return EXIT_OK if exc.code in (0, None) else EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (QsynthError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
