"""Learn a unitary from input/output state examples and compile it to gates."""

from .circuit import Circuit, Gate, GateKind, circuit_matrix, gate_counts
from .circuit_io import (load_matrix, read_matrix, read_qasm, render_ascii, save_matrix,
                         write_matrix, write_qasm)
from .datagen import (StateBatch, haar_random_unitary, named_operator, random_gate_sequence,
                      random_state_batch, target_by_label)
from .errors import (DimensionError, GenerationError, InvalidRequestError, LinesearchError,
                     NotUnitaryError, ParseError, QsynthError, SingularSystemError)
from .factorizer import FactorReport, factor
from .objectives import (fidelity_error, frobenius_gradient, frobenius_objective,
                         procrustes_hessian, process_fidelity, unitarization_gradient,
                         unitarization_objective)
from .optimizers import LearnConfig, LearnResult, run, sequential_learn
from .oracle import nearest_unitary, procrustes_solve

__version__ = "0.1.0"

__all__ = [
    "Circuit", "Gate", "GateKind", "circuit_matrix", "gate_counts",
    "load_matrix", "read_matrix", "read_qasm", "render_ascii", "save_matrix",
    "write_matrix", "write_qasm",
    "StateBatch", "haar_random_unitary", "named_operator", "random_gate_sequence",
    "random_state_batch", "target_by_label",
    "DimensionError", "GenerationError", "InvalidRequestError", "LinesearchError",
    "NotUnitaryError", "ParseError", "QsynthError", "SingularSystemError",
    "FactorReport", "factor",
    "fidelity_error", "frobenius_gradient", "frobenius_objective", "procrustes_hessian",
    "process_fidelity", "unitarization_gradient", "unitarization_objective",
    "LearnConfig", "LearnResult", "run", "sequential_learn",
    "nearest_unitary", "procrustes_solve",
]
