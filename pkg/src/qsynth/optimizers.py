"""Iterative learners for the unitary that maps X onto Y.

Every method goes through one driver, :func:`iterate`, which advances a
stack of independent problems in lock step and retires each one as soon as
it converges, stalls, diverges or runs out of iterations.  ``run`` is the
single-problem front end, ``sequential_learn`` feeds it the rows of one
problem, and the experiment harness feeds it whole trial populations.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .datagen import haar_random_unitary
from .errors import DimensionError, InvalidRequestError, LinesearchError, SingularSystemError
from .objectives import flat_procrustes_hessian, frobenius_objective

log = logging.getLogger(__name__)

METHODS = ("GD", "GDP", "GDLM", "DLR", "NM")
LINESEARCHES = ("none", "backtracking", "wolfe")
STATUSES = ("converged", "stalled", "diverged", "max_iters")

DIVERGENCE_FACTOR = 1e6
TRACE_DENSE_LIMIT = 10_000
TRACE_STRIDE = 10


@dataclass
class LearnConfig:
    method: str = "GD"
    constrained: bool = False
    alpha: float = 0.1
    beta: float = 0.1
    lambda0: float = 0.0
    tol: float = 1e-15
    stall_tol: float = 1e-18
    max_iters: int = 100_000
    linesearch: str = "none"
    c1: float = 1e-4
    c2: float = 0.9
    shrink: float = 0.5
    initial_guess: object = "identity"
    shuffle: bool = False
    seed: Optional[int] = None

    def __post_init__(self):
        method = str(self.method).upper()
        if method.endswith("*"):
            method, self.constrained = method[:-1], True
        self.method = method
        self.validate()

    @property
    def label(self) -> str:
        return self.method + ("*" if self.constrained else "")

    def validate(self) -> None:
        if self.method not in METHODS:
            raise InvalidRequestError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.method == "NM" and self.constrained:
            raise InvalidRequestError("Newton's method has no constrained variant")
        if not self.alpha > 0:
            raise InvalidRequestError("alpha must be positive")
        if self.beta < 0:
            raise InvalidRequestError("beta must be non-negative")
        if not self.tol > self.stall_tol > 0:
            raise InvalidRequestError("need tol > stall_tol > 0")
        if self.max_iters < 0:
            raise InvalidRequestError("max_iters must be non-negative")
        if self.linesearch not in LINESEARCHES:
            raise InvalidRequestError(f"unknown linesearch {self.linesearch!r}")
        if self.linesearch != "none":
            if self.method not in ("GD", "GDP"):
                raise InvalidRequestError("linesearch is only supported for GD and GDP")
            if not 0 < self.c1 < 1 or not 0 < self.shrink < 1:
                raise InvalidRequestError("need 0 < c1 < 1 and 0 < shrink < 1")
            if self.linesearch == "wolfe" and not self.c1 < self.c2 < 1:
                raise InvalidRequestError("Wolfe linesearch needs 0 < c1 < c2 < 1")

    @classmethod
    def from_dict(cls, data: dict) -> "LearnConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise InvalidRequestError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        if isinstance(data.get("initial_guess"), list):
            data["initial_guess"] = _matrix_from_json(data["initial_guess"])
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "LearnConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        out = asdict(self)
        if isinstance(self.initial_guess, np.ndarray):
            out["initial_guess"] = [[[z.real, z.imag] for z in row] for row in self.initial_guess]
        return out


def _matrix_from_json(rows) -> np.ndarray:
    a = np.asarray(rows, dtype=float)
    if a.ndim == 3 and a.shape[-1] == 2:
        return a[..., 0] + 1j * a[..., 1]
    return a.astype(complex)


@dataclass
class LearnResult:
    U: np.ndarray
    status: str
    iterations: int
    objective_trace: list = field(default_factory=list)
    lambda_final: float = 0.0
    f: float = float("nan")
    g: float = float("nan")
    row_iterations: Optional[np.ndarray] = None
    row_status: Optional[list] = None

    @property
    def converged(self) -> bool:
        return self.status == "converged"


# ---------------------------------------------------------------------------
# single-step rules


def _gram_defect(U):
    """``U^H U - I`` for square stacks, ``U U^H - I`` for wide ones (single rows)."""
    r, n = U.shape[-2:]
    Uh = np.swapaxes(U.conj(), -1, -2)
    if r == n:
        return Uh @ U - np.eye(n)
    return U @ Uh - np.eye(r)


def _penalty_grad(U, defect=None):
    if defect is None:
        defect = _gram_defect(U)
    r, n = U.shape[-2:]
    return U @ defect if r == n else defect @ U


def _sqnorm(a):
    """Squared Frobenius norm over the last two axes."""
    return np.sum(a.real**2 + a.imag**2, axis=(-2, -1))


def _check(U, X, Y):
    U, X, Y = np.asarray(U), np.asarray(X), np.asarray(Y)
    if U.shape[-1] != X.shape[-2] or Y.shape[-2:] != (U.shape[-2], X.shape[-1]):
        raise DimensionError(f"incompatible shapes U{U.shape}, X{X.shape}, Y{Y.shape}")
    return U, X, Y


def _residual_grad(U, X, Y):
    return (U @ X - Y) @ np.swapaxes(X.conj(), -1, -2)


def gd_step(U, X, Y, alpha):
    """``U - alpha (UX - Y) X^H``."""
    U, X, Y = _check(U, X, Y)
    return U - alpha * _residual_grad(U, X, Y)


def gdp_step(U, X, Y, alpha, beta):
    """Gradient step plus the penalty pull ``- beta U (U^H U - I)``."""
    U, X, Y = _check(U, X, Y)
    out = U - alpha * _residual_grad(U, X, Y)
    if beta:
        out = out - beta * _penalty_grad(U)
    return out


def gdlm_step(U, lam, X, Y, alpha, beta):
    """Lagrange-multiplier step; both updates read the incoming ``U``."""
    U, X, Y = _check(U, X, Y)
    defect = _gram_defect(U)
    out = U - alpha * _residual_grad(U, X, Y)
    if np.any(lam):
        out = out - np.asarray(lam)[..., None, None] * _penalty_grad(U, defect)
    return out, lam + 0.25 * beta * _sqnorm(defect)


def dlr_step(U, x, y, alpha, beta=0.0):
    """Delta-rule update from one example ``(x, y)`` (columns)."""
    x, y = np.asarray(x), np.asarray(y)
    if x.ndim == 1:
        x = x[:, None]
    if y.ndim == 1:
        y = y[:, None]
    U, x, y = _check(U, x, y)
    out = U - alpha * (U @ x - y) @ np.swapaxes(x.conj(), -1, -2)
    if beta:
        out = out - beta * _penalty_grad(U)
    return out


def newton_solver(X):
    """LU factors of the flattened Hessian; raises on a singular system."""
    X = np.asarray(X)
    n = X.shape[0]
    if np.linalg.matrix_rank(X) < n:
        raise SingularSystemError(
            f"Hessian is singular: X has rank {np.linalg.matrix_rank(X)} < {n}"
        )
    return lu_factor(flat_procrustes_hessian(X), check_finite=True)


def newton_step(U, X, Y, alpha, solver=None):
    """``v(U) - alpha m(H)^{-1} v((UX - Y) X^H)`` with row-major ``v``."""
    U, X, Y = _check(U, X, Y)
    if U.shape[0] != U.shape[1]:
        raise DimensionError("Newton's method needs a square U")
    if solver is None:
        solver = newton_solver(X)
    n = U.shape[0]
    step = lu_solve(solver, _residual_grad(U, X, Y).reshape(n * n))
    return U - alpha * step.reshape(n, n)


# ---------------------------------------------------------------------------
# linesearch


def _inner(a, b) -> float:
    return float(np.vdot(a, b).real)


def backtracking_linesearch(f_eval, U, direction, alpha0, c1=1e-4, shrink=0.5,
                            grad=None, max_trials=60):
    """Largest ``alpha0 * shrink**i`` meeting the sufficient-descent condition."""
    if not (0 < c1 < 1 and 0 < shrink < 1):
        raise InvalidRequestError("need 0 < c1 < 1 and 0 < shrink < 1")
    f0 = f_eval(U)
    slope = _inner(direction, grad) if grad is not None else None
    if slope is None:
        raise InvalidRequestError("backtracking needs the gradient at U")
    alpha = alpha0
    for _ in range(max_trials):
        if f_eval(U + alpha * direction) <= f0 + c1 * alpha * slope:
            return alpha
        alpha *= shrink
    raise LinesearchError(f"no sufficient descent after {max_trials} trials")


def wolfe_linesearch(f_eval, grad_eval, U, direction, c1=1e-4, c2=0.9,
                     alpha0=1.0, max_trials=100):
    """Step satisfying the weak Wolfe conditions, by bracketing and bisection."""
    if not 0 < c1 < c2 < 1:
        raise InvalidRequestError("need 0 < c1 < c2 < 1")
    f0 = f_eval(U)
    slope0 = _inner(direction, grad_eval(U))
    if slope0 == 0:
        return alpha0
    if slope0 > 0:
        raise LinesearchError("direction is not a descent direction")
    lo, hi, alpha = 0.0, np.inf, alpha0
    for _ in range(max_trials):
        trial = U + alpha * direction
        if f_eval(trial) > f0 + c1 * alpha * slope0:
            hi = alpha
        elif _inner(direction, grad_eval(trial)) < c2 * slope0:
            lo = alpha
        else:
            return alpha
        alpha = 0.5 * (lo + hi) if np.isfinite(hi) else 2.0 * lo
    raise LinesearchError(f"no Wolfe step after {max_trials} trials")


# ---------------------------------------------------------------------------
# driver


@dataclass
class BatchOutcome:
    """Per-problem results of :func:`iterate` (leading axis = problem)."""

    U: np.ndarray
    status: np.ndarray
    iterations: np.ndarray
    f: np.ndarray
    g: np.ndarray
    lam: np.ndarray
    trace: list


def _objectives(U, X, Y, need_g):
    f = 0.5 * _sqnorm(U @ X - Y)
    g = 0.25 * _sqnorm(_gram_defect(U)) if need_g else np.zeros_like(f)
    return f, g


def _make_step(config: LearnConfig, X_all, rng) -> Callable:
    """Returns ``step(U, lam, X, Y, aux) -> (U, lam)`` for the configured method."""
    alpha, beta = config.alpha, config.beta
    penalty = beta if config.constrained else 0.0
    method = config.method

    if method in ("GD", "GDP") and config.linesearch != "none":
        return _make_linesearch_step(config)
    if method == "GD" or (method == "GDP" and not config.constrained):
        return lambda U, lam, X, Y, aux: (U - alpha * _residual_grad(U, X, Y), lam)
    if method == "GDP":
        return lambda U, lam, X, Y, aux: (gdp_step(U, X, Y, alpha, beta), lam)
    if method == "GDLM":
        if not config.constrained:
            return lambda U, lam, X, Y, aux: (U - alpha * _residual_grad(U, X, Y), lam)
        return lambda U, lam, X, Y, aux: gdlm_step(U, lam, X, Y, alpha, beta)
    if method == "DLR":
        m = X_all.shape[-1]
        if not penalty and not config.shuffle:
            # the unshuffled epoch is the fixed affine map U -> U P + Q
            def dlr_composed(U, lam, X, Y, aux):
                P, Q = aux
                return U @ P + Q, lam
            return dlr_composed

        def dlr_epoch(U, lam, X, Y, aux):
            order = rng.permutation(m) if config.shuffle else range(m)
            for i in order:
                x, y = X[..., i:i + 1], Y[..., i:i + 1]
                new = U - alpha * (U @ x - y) @ np.swapaxes(x.conj(), -1, -2)
                if penalty:
                    new = new - penalty * _penalty_grad(U)
                U = new
            return U, lam
        return dlr_epoch

    def newton(U, lam, X, Y, aux):
        lus, pivs = aux
        n = U.shape[-1]
        G = _residual_grad(U, X, Y).reshape(len(U), n * n)
        out = np.empty_like(U)
        for b in range(len(U)):
            out[b] = U[b] - alpha * lu_solve((lus[b], pivs[b]), G[b]).reshape(n, n)
        return out, lam
    return newton


def _make_linesearch_step(config):
    beta = config.beta if config.constrained else 0.0

    def fun(U, X, Y):
        val = frobenius_objective(U, X, Y)
        if beta:
            val += beta * 0.25 * float(_sqnorm(_gram_defect(U)))
        return val

    def grad(U, X, Y):
        G = _residual_grad(U, X, Y)
        return G + beta * _penalty_grad(U) if beta else G

    def step(U, lam, X, Y, aux):
        out = np.empty_like(U)
        for b in range(len(U)):
            Xb = X[b] if X.ndim == 3 else X
            f_eval = lambda V: fun(V, Xb, Y[b])
            g_eval = lambda V: grad(V, Xb, Y[b])
            g0 = g_eval(U[b])
            d = -g0
            if not np.any(g0):
                out[b] = U[b]
                continue
            if config.linesearch == "backtracking":
                a = backtracking_linesearch(f_eval, U[b], d, config.alpha, config.c1,
                                            config.shrink, grad=g0)
            else:
                a = wolfe_linesearch(f_eval, g_eval, U[b], d, config.c1, config.c2,
                                     alpha0=config.alpha)
            out[b] = U[b] + a * d
        return out, lam
    return step


def dlr_epoch_map(X, Y, alpha):
    """``(P, Q)`` with one unshuffled delta-rule epoch equal to ``U -> U P + Q``."""
    B = Y.shape[0]
    n, m = X.shape[-2:]
    Xs = np.broadcast_to(X, (B, n, m))
    P = np.broadcast_to(np.eye(n, dtype=complex), (B, n, n)).copy()
    Q = np.zeros(Y.shape[:-1] + (n,), dtype=complex)
    for i in range(m):
        x, y = Xs[..., i:i + 1], Y[..., i:i + 1]
        xh = np.swapaxes(x.conj(), -1, -2)
        P = P - alpha * (P @ x) @ xh
        Q = Q - alpha * (Q @ x - y) @ xh
    return P, Q


def iterate(config: LearnConfig, U0, X, Y, record_trace=False) -> BatchOutcome:
    """Advance a stack of problems until each one terminates.

    ``U0`` is ``(B, r, n)``, ``Y`` is ``(B, r, m)`` and ``X`` is either
    ``(B, n, m)`` or a single ``(n, m)`` shared by all problems.  The trace
    (only with ``record_trace``) follows problem 0.
    """
    U = np.array(U0, dtype=complex)
    X = np.asarray(X, dtype=complex)
    Y = np.asarray(Y, dtype=complex)
    shared_x = X.ndim == 2
    if U.ndim != 3 or Y.ndim != 3 or X.ndim not in (2, 3):
        raise DimensionError("iterate expects stacked U and Y")
    _check(U, X, Y)
    B = U.shape[0]
    rng = np.random.default_rng(config.seed)
    step = _make_step(config, X, rng)
    need_g = config.constrained or record_trace

    aux = ()
    if config.method == "NM":
        facs = [newton_solver(X if shared_x else X[b]) for b in range(B if not shared_x else 1)]
        lus = np.stack([fac[0] for fac in facs])
        pivs = np.stack([fac[1] for fac in facs])
        if shared_x:
            lus, pivs = np.repeat(lus, B, axis=0), np.repeat(pivs, B, axis=0)
        aux = (lus, pivs)
    elif config.method == "DLR" and not config.constrained and not config.shuffle:
        aux = dlr_epoch_map(X, Y, config.alpha)

    lam = np.full(B, float(config.lambda0))
    f, g = _objectives(U, X, Y, need_g)
    metric = f + g if config.constrained else f.copy()
    limit = DIVERGENCE_FACTOR * metric

    out_U = U.copy()
    out_status = np.full(B, "max_iters", dtype=object)
    out_iters = np.zeros(B, dtype=np.int64)
    out_f, out_g, out_lam = f.copy(), g.copy(), lam.copy()
    trace = [(0, float(f[0]), float(g[0]))] if record_trace else []

    alive = np.flatnonzero(~(metric < config.tol))
    out_status[metric < config.tol] = "converged"
    Xw = X if shared_x else X[alive]
    Yw, Uw, lamw = Y[alive], U[alive], lam[alive]
    prev, limw = metric[alive], limit[alive]
    auxw = tuple(a[alive] for a in aux)

    it = 0
    while alive.size and it < config.max_iters:
        it += 1
        Uw, lamw = step(Uw, lamw, Xw, Yw, auxw)
        fw, gw = _objectives(Uw, Xw, Yw, need_g)
        cur = fw + gw if config.constrained else fw
        if record_trace and alive[0] == 0 and (it <= TRACE_DENSE_LIMIT or it % TRACE_STRIDE == 0):
            trace.append((it, float(fw[0]), float(gw[0])))

        done = np.full(alive.size, False)
        status = np.full(alive.size, "", dtype=object)
        conv = cur < config.tol
        bad = ~conv & (~np.isfinite(cur) | (cur > limw))
        stall = ~conv & ~bad & (np.abs(prev - cur) < config.stall_tol)
        status[stall], status[bad], status[conv] = "stalled", "diverged", "converged"
        done = conv | bad | stall
        if it == config.max_iters:
            status[~done] = "max_iters"
            done[:] = True
        prev = cur

        if done.any():
            ids = alive[done]
            out_U[ids], out_status[ids], out_iters[ids] = Uw[done], status[done], it
            out_f[ids], out_g[ids], out_lam[ids] = fw[done], gw[done], lamw[done]
            if record_trace and ids[0] == 0 and trace[-1][0] != it:
                trace.append((it, float(fw[0]), float(gw[0])))
            keep = ~done
            alive, Uw, Yw, lamw = alive[keep], Uw[keep], Yw[keep], lamw[keep]
            prev, limw = prev[keep], limw[keep]
            auxw = tuple(a[keep] for a in auxw)
            if not shared_x:
                Xw = Xw[keep]

    return BatchOutcome(out_U, out_status, out_iters, out_f, out_g, out_lam, trace)


def initial_guess(config: LearnConfig, n: int, r: Optional[int] = None) -> np.ndarray:
    guess = config.initial_guess
    r = n if r is None else r
    if isinstance(guess, np.ndarray) or isinstance(guess, list):
        U0 = np.asarray(guess, dtype=complex)
        if U0.shape != (r, n):
            raise DimensionError(f"explicit initial guess has shape {U0.shape}, expected {(r, n)}")
        return U0
    if guess == "identity":
        return np.eye(r, n, dtype=complex)
    if guess == "zeros":
        return np.zeros((r, n), dtype=complex)
    if guess == "haar_random":
        return haar_random_unitary(n, config.seed)[:r]
    raise InvalidRequestError(f"unknown initial guess {guess!r}")


def run(config: LearnConfig, X, Y, U0=None) -> LearnResult:
    """Learn ``U`` with ``UX ~ Y`` for one problem."""
    X, Y = np.asarray(X, dtype=complex), np.asarray(Y, dtype=complex)
    if X.ndim != 2 or X.shape != Y.shape:
        raise DimensionError(f"X and Y must share a 2-d shape, got {X.shape} and {Y.shape}")
    n = X.shape[0]
    if U0 is None:
        U0 = initial_guess(config, n)
    out = iterate(config, np.asarray(U0)[None], X, Y[None], record_trace=True)
    if out.status[0] == "stalled":
        log.warning("%s stalled after %d iterations (f=%.3e)", config.label,
                    out.iterations[0], out.f[0])
    return LearnResult(
        U=out.U[0], status=str(out.status[0]), iterations=int(out.iterations[0]),
        objective_trace=out.trace, lambda_final=float(out.lam[0]),
        f=float(out.f[0]), g=float(out.g[0]),
    )


SEQUENTIAL_METHODS = ("GD", "GDP", "DLR")


def _aggregate_status(row_status):
    if all(s == "converged" for s in row_status):
        return "converged"
    return next(s for s in ("diverged", "stalled", "max_iters") if s in row_status)


@dataclass
class SequentialOutcome:
    """Row-wise results for a stack of ``T`` problems with ``n`` rows each."""

    U: np.ndarray
    row_iterations: np.ndarray
    row_status: np.ndarray
    iterations: np.ndarray
    status: np.ndarray
    f: np.ndarray
    g: np.ndarray


def sequential_iterate(config: LearnConfig, U0, X, Y, workers: int = 1) -> SequentialOutcome:
    """Solve every row of every problem independently.

    ``U0`` and ``Y`` are ``(T, n, .)``; ``X`` is ``(T, n, m)`` or one shared
    ``(n, m)``.  Rows are dealt to ``workers`` threads in contiguous chunks;
    no row's arithmetic depends on the chunking.
    """
    if config.method not in SEQUENTIAL_METHODS:
        raise InvalidRequestError(f"sequential learning supports {SEQUENTIAL_METHODS}, not {config.method}")
    if config.linesearch != "none":
        raise InvalidRequestError("sequential learning uses constant learning rates")
    U0 = np.asarray(U0, dtype=complex)
    X = np.asarray(X, dtype=complex)
    Y = np.asarray(Y, dtype=complex)
    T, n = U0.shape[:2]
    m = Y.shape[-1]
    rows_U = U0.reshape(T * n, 1, U0.shape[-1])
    rows_Y = Y.reshape(T * n, 1, m)
    rows_X = X if X.ndim == 2 else np.repeat(X, n, axis=0)

    workers = max(1, min(int(workers), T * n))
    chunks = np.array_split(np.arange(T * n), workers)

    def solve(idx):
        x = rows_X if rows_X.ndim == 2 else rows_X[idx]
        return iterate(config, rows_U[idx], x, rows_Y[idx])

    if workers == 1:
        parts = [solve(chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(solve, chunks))

    U = np.concatenate([p.U for p in parts]).reshape(U0.shape)
    row_iters = np.concatenate([p.iterations for p in parts]).reshape(T, n)
    row_status = np.concatenate([p.status for p in parts]).reshape(T, n)
    f = np.concatenate([p.f for p in parts]).reshape(T, n).sum(axis=1)
    g = np.concatenate([p.g for p in parts]).reshape(T, n).sum(axis=1)
    status = np.array([_aggregate_status(list(r)) for r in row_status], dtype=object)
    return SequentialOutcome(U, row_iters, row_status, row_iters.max(axis=1), status, f, g)


def sequential_learn(config: LearnConfig, X, Y, parallelism: int = 1, U0=None) -> LearnResult:
    """Learn ``U`` one row at a time; rows are split across ``parallelism`` threads.

    For constrained methods each row carries its own normalization penalty
    ``0.25 (||u||^2 - 1)^2``, the row-local part of the unitarity defect.
    ``iterations`` is the largest per-row count; the per-row counts and
    statuses are kept on the result.
    """
    X, Y = np.asarray(X, dtype=complex), np.asarray(Y, dtype=complex)
    if X.ndim != 2 or X.shape != Y.shape:
        raise DimensionError(f"X and Y must share a 2-d shape, got {X.shape} and {Y.shape}")
    n = X.shape[0]
    if U0 is None:
        U0 = initial_guess(config, n)
    out = sequential_iterate(config, np.asarray(U0)[None], X, Y[None], workers=parallelism)
    status = [str(s) for s in out.row_status[0]]
    if out.status[0] == "stalled":
        log.warning("%s stalled on rows %s", config.label,
                    [j for j, s in enumerate(status) if s == "stalled"])
    return LearnResult(
        U=out.U[0], status=str(out.status[0]), iterations=int(out.iterations[0]),
        objective_trace=[], f=float(out.f[0]), g=float(out.g[0]),
        row_iterations=out.row_iterations[0], row_status=status,
    )


def with_overrides(config: LearnConfig, **changes) -> LearnConfig:
    changes = {k: v for k, v in changes.items() if v is not None}
    return replace(config, **changes)
