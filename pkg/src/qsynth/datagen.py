"""Problem-instance generators: Haar unitaries, state batches, gate products."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, Gate, circuit_matrix
from .errors import DimensionError, GenerationError, InvalidRequestError

MAX_RESAMPLES = 10_000


def make_rng(seed) -> np.random.Generator:
    """Accepts an int seed, a SeedSequence, or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def normalized_cols(a: np.ndarray) -> np.ndarray:
    return a / np.linalg.norm(a, axis=0, keepdims=True)


def haar_random_unitary(n: int, seed=None) -> np.ndarray:
    """Sample an ``n x n`` unitary from the Haar measure.

    Ginibre sample with normalized columns, QR, then the phases of
    ``diag(R)`` moved onto ``Q`` so the distribution is exactly uniform.
    """
    if n < 1:
        raise DimensionError(f"dimension must be positive, got {n}")
    rng = make_rng(seed)
    q, r = np.linalg.qr(normalized_cols(_ginibre(rng, n, n)))
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def condition_number(x: np.ndarray) -> float:
    """Ratio of extreme singular values over the ``min(n, m)`` values of ``x``."""
    s = np.linalg.svd(x, compute_uv=False)
    if s[-1] == 0.0:
        return np.inf
    return float(s[0] / s[-1])


@dataclass
class StateBatch:
    """Columns of ``states`` are unit vectors; ``resamples`` counts rejections."""

    states: np.ndarray
    cond: float
    resamples: int = 0

    @property
    def shape(self):
        return self.states.shape


def random_state_batch(n: int, m: int, cond_cap=100.0, seed=None) -> StateBatch:
    """Random unit-norm columns, redrawn while the condition number exceeds ``cond_cap``.

    ``cond_cap=None`` disables the rejection test.
    """
    if n < 1 or m < 1:
        raise DimensionError(f"batch shape must be positive, got {n}x{m}")
    if cond_cap is not None and not cond_cap > 1.0:
        raise InvalidRequestError(f"cond_cap must exceed 1, got {cond_cap}")
    rng = make_rng(seed)
    for attempt in range(MAX_RESAMPLES):
        x = normalized_cols(_ginibre(rng, n, m))
        cond = condition_number(x)
        if cond_cap is None or cond <= cond_cap:
            return StateBatch(x, cond, attempt)
    raise GenerationError(
        f"no {n}x{m} batch with cond <= {cond_cap} after {MAX_RESAMPLES} draws"
    )


# The universal set: the Hadamard as printed in the literature examples
# (which is exactly Ry(-pi/2)), the pi/4 phase gate, and CNOT.
_UNIVERSAL = ("H", "T", "CNOT")


def _universal_gate(name: str, qubits) -> list:
    if name == "H":
        return [Gate.ry(qubits[0], -np.pi / 2)]
    if name == "T":
        # diag(1, e^{i pi/4}) = e^{i pi/8} Rz(pi/4)
        return [Gate.rz(qubits[0], np.pi / 4), Gate.phase(np.pi / 8)]
    return [Gate.cnot(qubits[0], qubits[1])]


def random_gate_sequence(k: int, length: int, seed=None):
    """Random product of ``length`` gates from {H, R(pi/4), CNOT}.

    Returns ``(circuit, operator)`` where ``circuit.metadata["draws"]`` lists
    the drawn gate names and qubits.  CNOT is only drawn when ``k >= 2``.
    """
    if k < 1:
        raise DimensionError(f"qubit count must be positive, got {k}")
    if length < 1:
        raise DimensionError(f"sequence length must be positive, got {length}")
    rng = make_rng(seed)
    names = _UNIVERSAL if k >= 2 else _UNIVERSAL[:2]
    circuit = Circuit(k)
    draws = []
    for _ in range(length):
        name = names[rng.integers(len(names))]
        if name == "CNOT":
            qubits = tuple(int(q) for q in rng.choice(k, size=2, replace=False))
        else:
            qubits = (int(rng.integers(k)),)
        draws.append((name, qubits))
        circuit.extend(_universal_gate(name, qubits))
    circuit.metadata["draws"] = draws
    return circuit, circuit_matrix(circuit)


def named_operator(name: str, N: int) -> np.ndarray:
    """Hadamard (N=2), quantum Fourier transform, or Grover iterate of size N."""
    name = name.lower()
    if N < 1:
        raise InvalidRequestError(f"operator size must be positive, got {N}")
    if name == "hadamard":
        if N != 2:
            raise InvalidRequestError("hadamard is defined for N=2 only")
        return np.array([[1, 1], [-1, 1]], dtype=complex) / np.sqrt(2)
    if name == "qft":
        jk = np.outer(np.arange(N), np.arange(N))
        # reduce the exponent mod N before exponentiating to keep full precision
        return np.exp(2j * np.pi * (jk % N) / N) / np.sqrt(N)
    if name == "grover":
        return np.full((N, N), 2.0 / N, dtype=complex) - np.eye(N)
    raise InvalidRequestError(f"unknown operator {name!r}")


NAMED_TARGETS = {
    "H1": ("hadamard", 2),
    "F4": ("qft", 4),
    "F8": ("qft", 8),
    "G8": ("grover", 8),
    "G16": ("grover", 16),
}


def target_by_label(label: str) -> np.ndarray:
    """Resolve labels such as ``H1``, ``F8`` or ``G16``."""
    label = label.upper()
    if label in NAMED_TARGETS:
        return named_operator(*NAMED_TARGETS[label])
    kinds = {"H": "hadamard", "F": "qft", "G": "grover"}
    try:
        kind, size = kinds[label[0]], int(label[1:])
    except (KeyError, ValueError, IndexError):
        raise InvalidRequestError(f"unrecognised operator label {label!r}") from None
    if kind == "hadamard":
        size = 2
    return named_operator(kind, size)
