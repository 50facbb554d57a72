"""Examples in, circuit out: learn, project onto the unitary group, factor, serialize."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .circuit import Circuit
from .circuit_io import load_matrix, render_ascii, write_qasm
from .errors import QsynthError
from .factorizer import factor
from .objectives import frobenius_objective
from .optimizers import LearnConfig, run, sequential_learn
from .oracle import nearest_unitary

log = logging.getLogger(__name__)


class PipelineError(QsynthError):
    """A pipeline stage failed; ``stage`` names which one."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


@dataclass
class PipelineOutput:
    circuit: Circuit
    qasm: str
    diagram: str
    report: dict


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except (QsynthError, ValueError, OSError, ArithmeticError) as exc:
        raise PipelineError(name, exc) from exc


def _num_qubits(n: int) -> int:
    k = n.bit_length() - 1
    if n < 2 or 2**k != n:
        raise ValueError(f"state dimension {n} is not a power of two >= 2")
    return k


def run_pipeline(X, Y, config: LearnConfig, sequential: bool = False, workers: int = 1,
                 out_dir=None) -> PipelineOutput:
    """Learn ``U`` from ``(X, Y)`` and synthesize a circuit for it.

    A learner that stalls or runs out of iterations does not abort the run:
    its last iterate is projected and factored, and a warning is logged.
    """
    X = np.asarray(X, dtype=complex)
    Y = np.asarray(Y, dtype=complex)
    k = _stage("validate", _num_qubits, X.shape[0])
    if sequential:
        learned = _stage("learn", sequential_learn, config, X, Y, parallelism=workers)
    else:
        learned = _stage("learn", run, config, X, Y)
    if not learned.converged:
        log.warning("learner finished with status %s after %d iterations; using its last iterate",
                    learned.status, learned.iterations)
    U = _stage("project", nearest_unitary, learned.U)
    distance = float(np.linalg.norm(U - learned.U))
    circuit, freport = _stage("factor", factor, U, k)
    qasm = write_qasm(circuit)
    diagram = render_ascii(circuit)
    report = {
        "num_qubits": k,
        "learn": {
            "method": config.label, "status": learned.status, "iterations": learned.iterations,
            "f": learned.f, "g": learned.g, "sequential": sequential,
            "f_projected": frobenius_objective(U, X, Y),
        },
        "projection_distance": distance,
        "fidelity_error": freport.error,
        "cnot_count": freport.cnot_count,
        "total_gates": freport.total_gates,
        "factor_wall_time": freport.wall_time,
    }
    out = PipelineOutput(circuit, qasm, diagram, report)
    if out_dir is not None:
        _stage("write", write_outputs, out, out_dir)
    return out


def write_outputs(out: PipelineOutput, out_dir) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"qasm": out_dir / "circuit.qasm", "diagram": out_dir / "circuit.txt",
             "report": out_dir / "report.json"}
    paths["qasm"].write_text(out.qasm)
    paths["diagram"].write_text(out.diagram)
    paths["report"].write_text(json.dumps(out.report, indent=2, sort_keys=True) + "\n")
    return paths


def pipeline_from_files(x_path, y_path, config: LearnConfig, out_dir: Optional[str] = None,
                        sequential: bool = False, workers: int = 1) -> PipelineOutput:
    X = _stage("read", load_matrix, x_path)
    Y = _stage("read", load_matrix, y_path)
    if X.shape != Y.shape:
        raise PipelineError("read", ValueError(f"X has shape {X.shape} but Y has {Y.shape}"))
    return run_pipeline(X, Y, config, sequential=sequential, workers=workers, out_dir=out_dir)
