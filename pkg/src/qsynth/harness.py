"""Seeded, batch-vectorised reproductions of the convergence studies.

Each study draws its problems from ``SeedSequence([seed, study, trial])`` so
a trial's data never depends on scheduling or on how many workers run, and
the CSV written for a (spec, seed) pair is byte-identical across runs.  Only
the wall-clock study records timings, and those are inherently noisy.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import stats

from .datagen import (condition_number, haar_random_unitary, random_state_batch,
                      target_by_label)
from .optimizers import LearnConfig, iterate, run, sequential_iterate, sequential_learn

log = logging.getLogger(__name__)

STUDIES = (
    "lit_examples", "wall_clock", "example_count_sweep", "sequential_vs_batch",
    "xy_distance", "initial_guess", "conditioning", "pipeline",
)

DEFAULT_PARAMS = {
    "lit_examples": {
        "targets": ["H1", "F4", "F8", "G8", "G16"],
        "methods": ["GDP", "GDP*", "GDLM", "GDLM*", "DLR", "DLR*", "NM"],
        "alpha": 0.1, "beta": 0.1, "cond_cap": 100.0, "max_iters": 200_000,
    },
    "wall_clock": {
        "sizes": [4, 8, 16, 32],
        "methods": ["GDP", "GDLM", "DLR", "GDP*", "GDLM*", "DLR*", "NM"],
        "alpha_start": 1.0, "alpha_min": 1.0 / 128, "tune_trials": 2,
        "beta": 0.1, "cond_cap": 100.0, "max_iters": 200_000,
    },
    "example_count_sweep": {
        "n": 16, "ms": [4, 8, 12, 16, 24, 32],
        "methods": ["GDP*", "GDLM*", "DLR*"],
        "alpha": 0.1, "beta": 0.1, "cond_cap": 100.0, "max_iters": 60_000,
    },
    "sequential_vs_batch": {
        "sizes": [4, 8, 16], "method": "DLR", "alpha": 0.1, "beta": 0.1,
        "cond_cap": 100.0, "max_iters": 200_000, "check_workers": 4,
    },
    "xy_distance": {
        "n": 4, "method": "GDP*", "alpha": 0.1, "beta": 0.1, "cond_cap": 100.0,
        "max_iters": 200_000, "bin_width": 0.1, "per_bin": 100, "min_bin_count": 5,
    },
    "initial_guess": {
        "n": 4, "method": "GDP*", "alpha": 0.1, "beta": 0.1, "cond_cap": 100.0,
        "max_iters": 200_000, "bin_width": 0.1, "per_bin": 100, "min_bin_count": 5,
        "max_distance": 4.0,
    },
    "conditioning": {
        "n": 4, "method": "GDP*", "alpha": 0.1, "beta": 0.1, "cond_cap": None,
        "max_iters": 200_000, "unitary_controls": 20,
    },
    "pipeline": {
        "target": "G8", "x_kind": "haar", "method": "GD", "alpha": 0.1,
        "max_iters": 100_000,
    },
}


@dataclass
class TrialRecord:
    experiment: str
    trial: int
    seed: int
    method: str
    n: int
    m: int
    alpha: float
    beta: float
    iterations: int
    status: str
    f: float
    g: float
    cond_x: float
    y_minus_x: float
    u_minus_u0: float
    wall_time: float = float("nan")
    target: str = ""
    mode: str = "batch"
    row_iterations_mean: float = float("nan")


CSV_FIELDS = [f.name for f in fields(TrialRecord)]


def _cell(value) -> str:
    if isinstance(value, float) or isinstance(value, np.floating):
        return "" if np.isnan(value) else format(float(value), ".17g")
    return str(value)


def records_to_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for rec in records:
        writer.writerow([_cell(getattr(rec, name)) for name in CSV_FIELDS])
    return buf.getvalue()


def read_records(text: str) -> list:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        kw = {}
        for f in fields(TrialRecord):
            raw = row[f.name]
            if f.type in ("int",):
                kw[f.name] = int(raw)
            elif f.type in ("float",):
                kw[f.name] = float(raw) if raw != "" else float("nan")
            else:
                kw[f.name] = raw
        out.append(TrialRecord(**kw))
    return out


@dataclass
class ExperimentSpec:
    study: str
    trials: int = 100
    seed: int = 0
    workers: int = 1
    out_dir: Optional[Path] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.study not in STUDIES:
            raise ValueError(f"unknown study {self.study!r}; expected one of {STUDIES}")
        if self.trials < 1:
            raise ValueError("trial count must be at least 1")
        unknown = set(self.params) - set(DEFAULT_PARAMS[self.study])
        if unknown:
            raise ValueError(f"unknown parameters for {self.study}: {sorted(unknown)}")

    def param(self, name):
        return self.params.get(name, DEFAULT_PARAMS[self.study][name])


@dataclass
class ExperimentResult:
    study: str
    records: list
    summary: dict
    fit: Optional[dict] = None

    def write(self, out_dir) -> dict:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = {"csv": out_dir / f"{self.study}.csv", "summary": out_dir / f"{self.study}_summary.json"}
        paths["csv"].write_text(records_to_csv(self.records))
        payload = {"summary": self.summary}
        if self.fit is not None:
            payload["fit"] = self.fit
        paths["summary"].write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")
        if self.study == "lit_examples":
            paths["table"] = out_dir / "lit_examples_table.csv"
            paths["table"].write_text(table1_csv(self.summary))
        return paths


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(type(obj))


# ---------------------------------------------------------------------------
# helpers


def trial_rngs(seed: int, study: str, trial: int, streams: int = 3):
    ss = np.random.SeedSequence([int(seed), STUDIES.index(study), int(trial)])
    return [np.random.default_rng(s) for s in ss.spawn(streams)]


def mean_iterations(records) -> float:
    """Mean over converged trials only; NaN when none converged."""
    its = [r.iterations for r in records if r.status == "converged"]
    return float(np.mean(its)) if its else float("nan")


def binned_fit(x, y, width=0.1, per_bin=100, min_count=5) -> dict:
    """OLS line through the means of width-``width`` bins of ``x``.

    Only the first ``per_bin`` samples (in trial order) of each bin are used,
    and bins with fewer than ``min_count`` samples are left out of the fit.
    """
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    idx = np.floor(x / width + 1e-9).astype(int)
    bins = []
    for b in np.unique(idx):
        sel = np.flatnonzero(idx == b)[:per_bin]
        bins.append({
            "lo": float(b * width), "hi": float((b + 1) * width),
            "center": float((b + 0.5) * width), "count": int(sel.size),
            "mean": float(y[sel].mean()), "std": float(y[sel].std()),
        })
    used = [b for b in bins if b["count"] >= min_count]
    fit = {"samples": int(x.size), "bin_width": width, "per_bin": per_bin,
           "bins": bins, "bins_used": len(used)}
    fit.update(_ols([b["center"] for b in used], [b["mean"] for b in used]))
    return fit


def _ols(x, y) -> dict:
    if len(x) < 3:
        return {"slope": float("nan"), "intercept": float("nan"), "r2": float("nan")}
    r = stats.linregress(x, y)
    return {"slope": float(r.slope), "intercept": float(r.intercept), "r2": float(r.rvalue**2)}


def _chunked(n_items: int, workers: int):
    return np.array_split(np.arange(n_items), max(1, min(workers, n_items)))


def _batch_learn(config, U0, X, Y, workers=1):
    """``iterate`` over trials split across threads; results are chunk-independent."""
    chunks = _chunked(len(U0), workers)
    work = lambda idx: iterate(config, U0[idx], X[idx], Y[idx])
    if len(chunks) == 1:
        parts = [work(chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(work, chunks))
    cat = lambda name: np.concatenate([getattr(p, name) for p in parts])
    return cat("U"), cat("status"), cat("iterations"), cat("f"), cat("g")


def _config(method, alpha, beta, max_iters) -> LearnConfig:
    return LearnConfig(method=method, alpha=alpha, beta=beta, max_iters=max_iters)


# ---------------------------------------------------------------------------
# studies


def exp_lit_examples(spec: ExperimentSpec) -> ExperimentResult:
    """Named operators learned from random square X with U0 = I."""
    alpha, beta = spec.param("alpha"), spec.param("beta")
    records = []
    summary = {"alpha": alpha, "beta": beta, "trials": spec.trials, "table": {}}
    for label in spec.param("targets"):
        T = target_by_label(label)
        n = T.shape[0]
        batches = [random_state_batch(n, n, spec.param("cond_cap"), trial_rngs(spec.seed, spec.study, t)[0])
                   for t in range(spec.trials)]
        X = np.stack([b.states for b in batches])
        Y = T @ X
        U0 = np.broadcast_to(np.eye(n, dtype=complex), X.shape).copy()
        row = {}
        for method in spec.param("methods"):
            cfg = _config(method, alpha, beta, spec.param("max_iters"))
            _, status, iters, f, g = _batch_learn(cfg, U0, X, Y, spec.workers)
            recs = [TrialRecord(spec.study, t, spec.seed, cfg.label, n, n, alpha, beta,
                                int(iters[t]), str(status[t]), float(f[t]), float(g[t]),
                                batches[t].cond, float(np.linalg.norm(Y[t] - X[t])),
                                float(np.linalg.norm(T - U0[t])), target=label)
                    for t in range(spec.trials)]
            records += recs
            row[cfg.label] = {
                "mean_iterations": mean_iterations(recs),
                "stalled": sum(r.status == "stalled" for r in recs),
                "diverged": sum(r.status == "diverged" for r in recs),
                "max_iters": sum(r.status == "max_iters" for r in recs),
            }
        summary["table"][label] = row
    return ExperimentResult(spec.study, records, summary)


def table1_csv(summary) -> str:
    """One row per target; each method cell is ``mean, stalled``."""
    table = summary["table"]
    methods = list(next(iter(table.values())).keys()) if table else []
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["target"] + methods)
    for label, row in table.items():
        cells = []
        for m in methods:
            mean = row[m]["mean_iterations"]
            cells.append(f"{'nan' if np.isnan(mean) else round(mean)}, {row[m]['stalled']}")
        writer.writerow([label] + cells)
    return buf.getvalue()


def _wall_clock_problem(spec, n, t):
    rng_u, rng_x, _ = trial_rngs(spec.seed, spec.study, n * 100_000 + t)
    U = haar_random_unitary(n, rng_u)
    batch = random_state_batch(n, n, spec.param("cond_cap"), rng_x)
    return U, batch


def _tune_alpha(spec, method):
    """Halve alpha from ``alpha_start`` until no tuning run stalls or diverges.

    When even ``alpha_min`` fails, the rate with the fewest divergences, then
    the fewest failures overall, wins (ties go to the larger rate). A diverged
    run stops almost at once, so its wall time says nothing about the method.
    """
    alpha = spec.param("alpha_start")
    best, best_key = None, None
    while alpha >= spec.param("alpha_min"):
        cfg = _config(method, alpha, spec.param("beta"), spec.param("max_iters"))
        failures = diverged = 0
        for n in spec.param("sizes"):
            for t in range(spec.param("tune_trials")):
                U, batch = _wall_clock_problem(spec, n, -1 - t)
                res = run(cfg, batch.states, U @ batch.states)
                failures += res.status != "converged"
                diverged += res.status == "diverged"
        key = (diverged, failures)
        if best_key is None or key < best_key:
            best, best_key = (alpha, failures), key
        if failures == 0:
            break
        alpha /= 2
    return best


def exp_wall_clock(spec: ExperimentSpec) -> ExperimentResult:
    """Wall time to converge against system size at each method's tuned rate."""
    records = []
    summary = {"tuned_alpha": {}, "mean_wall_time": {}, "mean_iterations": {}}
    for method in spec.param("methods"):
        alpha, failures = _tune_alpha(spec, method)
        cfg = _config(method, alpha, spec.param("beta"), spec.param("max_iters"))
        summary["tuned_alpha"][cfg.label] = {"alpha": alpha, "tuning_failures": failures}
        times, iters = {}, {}
        for n in spec.param("sizes"):
            recs = []
            for t in range(spec.trials):
                U, batch = _wall_clock_problem(spec, n, t)
                X = batch.states
                start = time.perf_counter()
                res = run(cfg, X, U @ X)
                elapsed = time.perf_counter() - start
                recs.append(TrialRecord(spec.study, t, spec.seed, cfg.label, n, n, alpha, cfg.beta,
                                        res.iterations, res.status, res.f, res.g, batch.cond,
                                        float(np.linalg.norm(U @ X - X)),
                                        float(np.linalg.norm(U - np.eye(n))), wall_time=elapsed))
            records += recs
            times[n] = float(np.mean([r.wall_time for r in recs]))
            iters[n] = mean_iterations(recs)
        summary["mean_wall_time"][cfg.label] = times
        summary["mean_iterations"][cfg.label] = iters
    return ExperimentResult(spec.study, records, summary)


def exp_example_count_sweep(spec: ExperimentSpec) -> ExperimentResult:
    """Iterations against the number of consistent examples ``Y = U X``."""
    n = spec.param("n")
    alpha, beta = spec.param("alpha"), spec.param("beta")
    records = []
    summary = {"n": n, "mean_iterations": {}}
    Us = np.stack([haar_random_unitary(n, trial_rngs(spec.seed, spec.study, t)[0])
                   for t in range(spec.trials)])
    for m in spec.param("ms"):
        batches = [random_state_batch(n, m, spec.param("cond_cap"),
                                      np.random.default_rng([spec.seed, 2, t, m]))
                   for t in range(spec.trials)]
        X = np.stack([b.states for b in batches])
        Y = Us @ X
        U0 = np.broadcast_to(np.eye(n, dtype=complex), Us.shape).copy()
        for method in spec.param("methods"):
            cfg = _config(method, alpha, beta, spec.param("max_iters"))
            _, status, iters, f, g = _batch_learn(cfg, U0, X, Y, spec.workers)
            recs = [TrialRecord(spec.study, t, spec.seed, cfg.label, n, m, alpha, beta,
                                int(iters[t]), str(status[t]), float(f[t]), float(g[t]),
                                batches[t].cond, float(np.linalg.norm(Y[t] - X[t])),
                                float(np.linalg.norm(Us[t] - U0[t])))
                    for t in range(spec.trials)]
            records += recs
            summary["mean_iterations"].setdefault(cfg.label, {})[m] = mean_iterations(recs)
    return ExperimentResult(spec.study, records, summary)


def exp_sequential_vs_batch(spec: ExperimentSpec) -> ExperimentResult:
    """Batch against row-by-row learning; per-row counts are the normalized ones."""
    method, alpha, beta = spec.param("method"), spec.param("alpha"), spec.param("beta")
    cfg = _config(method, alpha, beta, spec.param("max_iters"))
    records = []
    summary = {"method": cfg.label, "sizes": {}}
    for n in spec.param("sizes"):
        rows = []
        invariant = True
        for t in range(spec.trials):
            rng_u, rng_x, _ = trial_rngs(spec.seed, spec.study, n * 100_000 + t)
            U = haar_random_unitary(n, rng_u)
            batch = random_state_batch(n, n, spec.param("cond_cap"), rng_x)
            X = batch.states
            Y = U @ X
            b = run(cfg, X, Y)
            s = sequential_learn(cfg, X, Y, parallelism=spec.workers)
            s_alt = sequential_learn(cfg, X, Y, parallelism=spec.param("check_workers"))
            same = (np.array_equal(s.row_iterations, s_alt.row_iterations)
                    and np.array_equal(s.U, s_alt.U))
            invariant &= same
            common = dict(trial=t, seed=spec.seed, method=cfg.label, n=n, m=n, alpha=alpha,
                          beta=beta, cond_x=batch.cond, y_minus_x=float(np.linalg.norm(Y - X)),
                          u_minus_u0=float(np.linalg.norm(U - np.eye(n))))
            records.append(TrialRecord(spec.study, iterations=b.iterations, status=b.status,
                                       f=b.f, g=b.g, mode="batch", **common))
            records.append(TrialRecord(spec.study, iterations=s.iterations, status=s.status,
                                       f=s.f, g=s.g, mode="sequential",
                                       row_iterations_mean=float(np.mean(s.row_iterations)), **common))
            rows.append((b, s))
        both = [(b, s) for b, s in rows if b.converged and s.converged]
        summary["sizes"][n] = {
            "batch_mean": float(np.mean([b.iterations for b, _ in both])) if both else float("nan"),
            "row_mean": float(np.mean([np.mean(s.row_iterations) for _, s in both])) if both else float("nan"),
            "row_max_mean": float(np.mean([s.iterations for _, s in both])) if both else float("nan"),
            "row_total_over_n": float(np.mean([np.sum(s.row_iterations) / n for _, s in both])) if both else float("nan"),
            "rows_never_slower": bool(all(np.all(s.row_iterations <= b.iterations) for b, s in both)),
            "both_converged": len(both),
            "worker_invariant": bool(invariant),
        }
    return ExperimentResult(spec.study, records, summary)


def _sequential_population(spec, Xs, Us, U0s):
    cfg = _config(spec.param("method"), spec.param("alpha"), spec.param("beta"), spec.param("max_iters"))
    out = sequential_iterate(cfg, U0s, Xs, Us @ Xs, workers=spec.workers)
    return cfg, out


def _population_records(spec, cfg, out, Xs, Us, U0s, conds):
    n = Us.shape[1]
    Ys = Us @ Xs
    return [TrialRecord(spec.study, t, spec.seed, cfg.label, n, Xs.shape[2], cfg.alpha, cfg.beta,
                        int(out.iterations[t]), str(out.status[t]), float(out.f[t]), float(out.g[t]),
                        float(conds[t]), float(np.linalg.norm(Ys[t] - Xs[t])),
                        float(np.linalg.norm(Us[t] - U0s[t])), mode="sequential",
                        row_iterations_mean=float(out.row_iterations[t].mean()))
            for t in range(len(Us))]


def _draw_population(spec, cond_cap):
    n = spec.param("n")
    Us, Xs, conds, rngs = [], [], [], []
    for t in range(spec.trials):
        rng_u, rng_x, rng_p = trial_rngs(spec.seed, spec.study, t)
        Us.append(haar_random_unitary(n, rng_u))
        batch = random_state_batch(n, n, cond_cap, rng_x)
        Xs.append(batch.states)
        conds.append(batch.cond)
        rngs.append(rng_p)
    return np.stack(Us), np.stack(Xs), np.array(conds), rngs


def exp_xy_distance(spec: ExperimentSpec) -> ExperimentResult:
    """Iterations against ``||Y - X||_F`` with U0 = I."""
    Us, Xs, conds, _ = _draw_population(spec, spec.param("cond_cap"))
    U0s = np.broadcast_to(np.eye(Us.shape[1], dtype=complex), Us.shape).copy()
    cfg, out = _sequential_population(spec, Xs, Us, U0s)
    records = _population_records(spec, cfg, out, Xs, Us, U0s, conds)
    ok = [r for r in records if r.status == "converged"]
    fit = binned_fit([r.y_minus_x for r in ok], [r.iterations for r in ok],
                     spec.param("bin_width"), spec.param("per_bin"), spec.param("min_bin_count"))
    summary = {"converged": len(ok), "trials": spec.trials}
    return ExperimentResult(spec.study, records, summary, fit)


def exp_initial_guess(spec: ExperimentSpec) -> ExperimentResult:
    """Iterations against ``||U - U0||_F``, U0 = U + d E with ``||E||_F = 1``.

    ``d`` is uniform on [0, max_distance); the first trial uses d = 0.
    """
    Us, Xs, conds, rngs = _draw_population(spec, spec.param("cond_cap"))
    n = Us.shape[1]
    U0s = np.empty_like(Us)
    for t, rng in enumerate(rngs):
        d = 0.0 if t == 0 else rng.uniform(0.0, spec.param("max_distance"))
        E = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        U0s[t] = Us[t] + d * E / np.linalg.norm(E)
    cfg, out = _sequential_population(spec, Xs, Us, U0s)
    records = _population_records(spec, cfg, out, Xs, Us, U0s, conds)
    ok = [r for r in records if r.status == "converged"]
    fit = binned_fit([r.u_minus_u0 for r in ok], [r.iterations for r in ok],
                     spec.param("bin_width"), spec.param("per_bin"), spec.param("min_bin_count"))
    summary = {"converged": len(ok), "trials": spec.trials,
               "zero_distance_iterations": records[0].iterations}
    return ExperimentResult(spec.study, records, summary, fit)


def exp_conditioning(spec: ExperimentSpec) -> ExperimentResult:
    """log10(iterations) against log10(cond X) with the condition cap lifted.

    A small control group with unitary X (cond = 1) is appended after the
    main population and kept out of the fit.
    """
    Us, Xs, conds, _ = _draw_population(spec, spec.param("cond_cap"))
    n = Us.shape[1]
    controls = spec.param("unitary_controls")
    if controls:
        extra_U, extra_X = [], []
        for c in range(controls):
            rng_u, rng_x, _ = trial_rngs(spec.seed, spec.study, spec.trials + c)
            extra_U.append(haar_random_unitary(n, rng_u))
            extra_X.append(haar_random_unitary(n, rng_x))
        Us = np.concatenate([Us, np.stack(extra_U)])
        Xs = np.concatenate([Xs, np.stack(extra_X)])
        conds = np.concatenate([conds, [condition_number(x) for x in extra_X]])
    U0s = np.broadcast_to(np.eye(n, dtype=complex), Us.shape).copy()
    cfg, out = _sequential_population(spec, Xs, Us, U0s)
    records = _population_records(spec, cfg, out, Xs, Us, U0s, conds)
    for r in records[spec.trials:]:
        r.mode = "sequential-unitary-x"
    main = [r for r in records[:spec.trials] if r.status == "converged" and r.iterations > 0]
    fit = {"samples": len(main)}
    fit.update(_ols(np.log10([r.cond_x for r in main]), np.log10([r.iterations for r in main])))
    ctrl = [r.iterations for r in records[spec.trials:] if r.status == "converged"]
    summary = {
        "converged": len(main), "trials": spec.trials,
        "stalled": sum(r.status == "stalled" for r in records[:spec.trials]),
        "unitary_x_mean_iterations": float(np.mean(ctrl)) if ctrl else float("nan"),
        "lowest_cond_decile_mean_iterations": _lowest_decile_mean(main),
    }
    return ExperimentResult(spec.study, records, summary, fit)


def _lowest_decile_mean(records) -> float:
    if not records:
        return float("nan")
    ordered = sorted(records, key=lambda r: r.cond_x)
    head = ordered[:max(1, len(ordered) // 10)]
    return float(np.mean([r.iterations for r in head]))


def exp_pipeline(spec: ExperimentSpec) -> ExperimentResult:
    """End-to-end run on a generated problem; see :mod:`qsynth.pipeline`."""
    from .pipeline import run_pipeline

    label = spec.param("target")
    T = target_by_label(label)
    n = T.shape[0]
    rng_x = trial_rngs(spec.seed, spec.study, 0)[1]
    if spec.param("x_kind") == "haar":
        X = haar_random_unitary(n, rng_x)
    else:
        X = random_state_batch(n, n, 100.0, rng_x).states
    cfg = LearnConfig(method=spec.param("method"), alpha=spec.param("alpha"),
                      max_iters=spec.param("max_iters"))
    out = run_pipeline(X, T @ X, cfg, out_dir=spec.out_dir)
    report = dict(out.report)
    from .objectives import fidelity_error
    from .circuit import circuit_matrix
    report["target_fidelity_error"] = fidelity_error(T, circuit_matrix(out.circuit))
    rec = TrialRecord(spec.study, 0, spec.seed, cfg.label, n, n, cfg.alpha, cfg.beta,
                      report["learn"]["iterations"], report["learn"]["status"],
                      report["learn"]["f"], report["learn"]["g"], condition_number(X),
                      float(np.linalg.norm(T @ X - X)), float(np.linalg.norm(T - np.eye(n))),
                      target=label)
    return ExperimentResult(spec.study, [rec], report)


RUNNERS = {
    "lit_examples": exp_lit_examples,
    "wall_clock": exp_wall_clock,
    "example_count_sweep": exp_example_count_sweep,
    "sequential_vs_batch": exp_sequential_vs_batch,
    "xy_distance": exp_xy_distance,
    "initial_guess": exp_initial_guess,
    "conditioning": exp_conditioning,
    "pipeline": exp_pipeline,
}


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    log.info("running %s with %d trials (seed %d)", spec.study, spec.trials, spec.seed)
    result = RUNNERS[spec.study](spec)
    if spec.out_dir is not None:
        result.write(spec.out_dir)
    return result


# ---------------------------------------------------------------------------
# acceptance bands


GD_FAMILY = ("GDP", "GDP*", "GDLM", "GDLM*", "DLR", "DLR*")


def check_result(result: ExperimentResult) -> list:
    """``(name, passed, detail)`` for every band that applies to ``result``."""
    s, fit = result.summary, result.fit
    checks = []
    if result.study == "lit_examples":
        table = s["table"]
        for label, row in table.items():
            if "NM" in row:
                nm = row["NM"]
                checks.append((f"{label} NM zero stalls", nm["stalled"] == 0, f"stalled={nm['stalled']}"))
                checks.append((f"{label} NM mean in [100, 300]",
                               100 <= nm["mean_iterations"] <= 300, f"mean={nm['mean_iterations']:.1f}"))
        if "H1" in table:
            for m in GD_FAMILY:
                if m in table["H1"]:
                    v = table["H1"][m]["mean_iterations"]
                    checks.append((f"H1 {m} mean in [300, 5000]", 300 <= v <= 5000, f"mean={v:.1f}"))
        if "F4" in table and "F8" in table:
            for m in GD_FAMILY:
                if m in table["F4"] and m in table["F8"]:
                    a, b = table["F4"][m]["mean_iterations"], table["F8"][m]["mean_iterations"]
                    checks.append((f"{m} mean F8 > F4", b > a, f"F4={a:.1f} F8={b:.1f}"))
    elif result.study == "example_count_sweep":
        for method, by_m in s["mean_iterations"].items():
            if 16 in by_m:
                mid = by_m[16]
                for m in (8, 32):
                    if m in by_m:
                        checks.append((f"{method} m={m} < m=16", by_m[m] < mid,
                                       f"m={m}: {by_m[m]:.1f}, m=16: {mid:.1f}"))
    elif result.study == "sequential_vs_batch":
        for n, row in s["sizes"].items():
            checks.append((f"n={n} per-row <= batch",
                           row["both_converged"] > 0 and row["rows_never_slower"] and row["row_mean"] <= row["batch_mean"],
                           f"row={row['row_mean']:.1f} batch={row['batch_mean']:.1f}"))
            checks.append((f"n={n} worker invariant", row["worker_invariant"], ""))
    elif result.study == "xy_distance":
        checks.append(("xy R2 <= 0.5", fit["r2"] <= 0.5, f"R2={fit['r2']:.3f}"))
    elif result.study == "initial_guess":
        checks.append(("initial-guess R2 >= 0.9", fit["r2"] >= 0.9, f"R2={fit['r2']:.3f}"))
        checks.append(("initial-guess slope > 0", fit["slope"] > 0, f"slope={fit['slope']:.2f}"))
    elif result.study == "conditioning":
        checks.append(("conditioning slope in [1.4, 2.5]", 1.4 <= fit["slope"] <= 2.5, f"slope={fit['slope']:.3f}"))
        checks.append(("conditioning R2 >= 0.9", fit["r2"] >= 0.9, f"R2={fit['r2']:.3f}"))
        ctrl, low = s["unitary_x_mean_iterations"], s["lowest_cond_decile_mean_iterations"]
        if not np.isnan(ctrl):
            checks.append(("unitary X at the bottom of the sweep", ctrl <= low,
                           f"unitary={ctrl:.1f} best-decile={low:.1f}"))
    elif result.study == "wall_clock":
        times = s["mean_wall_time"]
        if "DLR" in times:
            n = max(times["DLR"])
            for other in ("GDP", "GDLM"):
                if other in times:
                    checks.append((f"DLR faster than {other} at n={n}", times["DLR"][n] < times[other][n],
                                   f"DLR={times['DLR'][n]:.3f}s {other}={times[other][n]:.3f}s"))
    elif result.study == "pipeline":
        err = s["target_fidelity_error"]
        checks.append(("pipeline fidelity error <= 1e-6", err <= 1e-6, f"error={err:.3e}"))
    return checks
