"""Gate and circuit records plus the dense simulator used to verify them.

Bit order: qubit 0 is the most significant bit of a basis-state index, so
for ``k`` qubits the basis state ``|b_0 b_1 ... b_{k-1}>`` has index
``sum(b_q << (k - 1 - q))``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .errors import DimensionError


class GateKind(str, enum.Enum):
    RZ = "RZ"
    RY = "RY"
    CNOT = "CNOT"
    GLOBAL_PHASE = "GLOBAL_PHASE"


@dataclass(frozen=True)
class Gate:
    """One elementary operation.

    ``target`` is unused for GLOBAL_PHASE, ``control`` only for CNOT and
    ``angle`` only for rotations and the phase.
    """

    kind: GateKind
    target: Optional[int] = None
    control: Optional[int] = None
    angle: float = 0.0

    @classmethod
    def rz(cls, qubit: int, angle: float) -> "Gate":
        return cls(GateKind.RZ, target=qubit, angle=float(angle))

    @classmethod
    def ry(cls, qubit: int, angle: float) -> "Gate":
        return cls(GateKind.RY, target=qubit, angle=float(angle))

    @classmethod
    def cnot(cls, control: int, target: int) -> "Gate":
        return cls(GateKind.CNOT, target=target, control=control)

    @classmethod
    def phase(cls, angle: float) -> "Gate":
        return cls(GateKind.GLOBAL_PHASE, angle=float(angle))

    def qubits(self) -> tuple:
        if self.kind is GateKind.GLOBAL_PHASE:
            return ()
        if self.kind is GateKind.CNOT:
            return (self.control, self.target)
        return (self.target,)

    def validate(self, num_qubits: int) -> None:
        if self.kind is GateKind.GLOBAL_PHASE:
            return
        for q in self.qubits():
            if q is None or not 0 <= q < num_qubits:
                raise DimensionError(
                    f"{self.kind.value} gate qubit index {q} outside [0, {num_qubits})"
                )
        if self.kind is GateKind.CNOT and self.control == self.target:
            raise DimensionError("CNOT control and target coincide")


@dataclass
class Circuit:
    """Ordered gate list; ``gates[0]`` is applied first."""

    num_qubits: int
    gates: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.num_qubits < 1:
            raise DimensionError("a circuit needs at least one qubit")
        self.gates = list(self.gates)

    def validate(self) -> None:
        for gate in self.gates:
            gate.validate(self.num_qubits)

    def append(self, gate: Gate) -> None:
        self.gates.append(gate)

    def extend(self, gates: Iterable[Gate]) -> None:
        self.gates.extend(gates)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.num_qubits != self.num_qubits:
            raise DimensionError("cannot concatenate circuits on different qubit counts")
        return Circuit(self.num_qubits, self.gates + other.gates)

    def __len__(self) -> int:
        return len(self.gates)

    @property
    def dim(self) -> int:
        return 2**self.num_qubits


def rz_matrix(angle: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])


def ry_matrix(angle: float) -> np.ndarray:
    c, s = np.cos(0.5 * angle), np.sin(0.5 * angle)
    return np.array([[c, -s], [s, c]], dtype=complex)


def apply_single(state: np.ndarray, mat: np.ndarray, qubit: int, num_qubits: int) -> np.ndarray:
    """Left-multiply the rows of ``state`` by ``mat`` acting on ``qubit``."""
    dim, cols = state.shape
    t = state.reshape((2**qubit, 2, dim >> (qubit + 1), cols))
    return np.einsum("ab,ibjc->iajc", mat, t).reshape(dim, cols)


def cnot_permutation(control: int, target: int, num_qubits: int) -> np.ndarray:
    """Row permutation realised by CNOT: ``out[i] = in[perm[i]]``."""
    idx = np.arange(2**num_qubits)
    cbit = 1 << (num_qubits - 1 - control)
    tbit = 1 << (num_qubits - 1 - target)
    return np.where(idx & cbit, idx ^ tbit, idx)


def gate_matrix(gate: Gate, num_qubits: int) -> np.ndarray:
    """Full ``2^k x 2^k`` matrix of a single gate."""
    return circuit_matrix(Circuit(num_qubits, [gate]))


def circuit_matrix(circuit: Circuit) -> np.ndarray:
    """Product of the embedded gate matrices, last gate leftmost."""
    circuit.validate()
    k = circuit.num_qubits
    mat = np.eye(2**k, dtype=complex)
    for gate in circuit.gates:
        if gate.kind is GateKind.GLOBAL_PHASE:
            mat = mat * np.exp(1j * gate.angle)
        elif gate.kind is GateKind.CNOT:
            mat = mat[cnot_permutation(gate.control, gate.target, k)]
        elif gate.kind is GateKind.RZ:
            mat = apply_single(mat, rz_matrix(gate.angle), gate.target, k)
        else:
            mat = apply_single(mat, ry_matrix(gate.angle), gate.target, k)
    return mat


def gate_counts(circuit: Circuit) -> tuple:
    """``(cnot_count, total_gates)``; global-phase records count toward neither."""
    cnots = sum(1 for g in circuit.gates if g.kind is GateKind.CNOT)
    total = sum(1 for g in circuit.gates if g.kind is not GateKind.GLOBAL_PHASE)
    return cnots, total


def global_phase(circuit: Circuit) -> float:
    """Sum of the GLOBAL_PHASE angles (not reduced)."""
    return float(sum(g.angle for g in circuit.gates if g.kind is GateKind.GLOBAL_PHASE))
