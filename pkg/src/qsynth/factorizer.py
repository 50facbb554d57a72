"""Exact synthesis of a unitary over the {Rz, Ry, CNOT} basis.

The unitary is split into two-level factors by Givens elimination, each
factor is routed onto a pair of adjacent basis states with a Gray-code
sequence of multi-controlled NOTs, and every multi-controlled operation is
expanded recursively into CNOTs and single-qubit rotations.  Scalar phases
are kept as GLOBAL_PHASE records so circuits reproduce the input exactly.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np
from scipy.linalg import schur

from .circuit import Circuit, Gate, circuit_matrix, gate_counts
from .errors import DimensionError, NotUnitaryError
from .objectives import fidelity_error, unitarity_defect
from .oracle import nearest_unitary

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
ELIMINATION_EPS = 1e-14
UNITARY_TOL = 1e-8


def wrap_angle(theta: float) -> float:
    """Reduce to (-pi, pi]."""
    theta = float(np.fmod(theta, 2 * np.pi))
    if theta > np.pi:
        theta -= 2 * np.pi
    elif theta <= -np.pi:
        theta += 2 * np.pi
    return theta


def _rotation(kind: str, qubit: int, theta: float) -> list:
    """Gates for Rz/Ry(theta) with a canonical angle.

    Rotations have period 4*pi, so each 2*pi shift is paid back with a
    phase of pi.
    """
    wrapped = wrap_angle(theta)
    turns = int(round((theta - wrapped) / (2 * np.pi)))
    if wrapped == 0.0 and turns % 2 == 0:
        return []
    gates = []
    if wrapped != 0.0:
        gates.append(Gate.rz(qubit, wrapped) if kind == "z" else Gate.ry(qubit, wrapped))
    if turns % 2:
        gates.append(Gate.phase(np.pi))
    return gates


def _phase(theta: float) -> list:
    theta = wrap_angle(theta)
    return [Gate.phase(theta)] if theta != 0.0 else []


def zyz_decompose(V):
    """Angles with ``V = e^{i phase} Rz(alpha) Ry(beta) Rz(gamma)``.

    ``beta`` lies in [0, pi] and the other angles in (-pi, pi].  When
    ``beta`` is 0 the whole z rotation is put on ``alpha``; when it is pi
    ``gamma`` is 0.
    """
    V = np.asarray(V, dtype=complex)
    if V.shape != (2, 2):
        raise DimensionError(f"expected a 2x2 matrix, got {V.shape}")
    defect = unitarity_defect(V)
    if defect > 1e-10:
        raise NotUnitaryError(f"||V^H V - I||_F = {defect:.3e} exceeds 1e-10")
    phase = 0.5 * np.angle(np.linalg.det(V))
    W = V * np.exp(-1j * phase)
    a, b = W[0, 0], W[1, 0]
    beta = 2.0 * np.arctan2(abs(b), abs(a))
    if abs(b) < 1e-15:
        alpha, gamma = -2.0 * np.angle(a), 0.0
    elif abs(a) < 1e-15:
        alpha, gamma = 2.0 * np.angle(b), 0.0
    else:
        alpha = np.angle(b) - np.angle(a)
        gamma = -np.angle(a) - np.angle(b)
    out = []
    for ang in (alpha, gamma):
        wrapped = wrap_angle(ang)
        if round((ang - wrapped) / (2 * np.pi)) % 2:
            phase += np.pi
        out.append(wrapped)
    alpha, gamma = out
    if abs(alpha) < 1e-15:
        alpha = 0.0
    if abs(gamma) < 1e-15:
        gamma = 0.0
    return wrap_angle(phase), alpha, float(beta), gamma


def single_qubit_gates(V, qubit: int) -> list:
    phase, alpha, beta, gamma = zyz_decompose(V)
    return (_rotation("z", qubit, gamma) + _rotation("y", qubit, beta)
            + _rotation("z", qubit, alpha) + _phase(phase))


def _sqrt_unitary(W):
    t, z = schur(W, output="complex")
    return z @ np.diag(np.sqrt(np.diag(t))) @ z.conj().T


def _controlled_once(W, control: int, target: int) -> list:
    """Singly-controlled W with two CNOTs."""
    if np.allclose(W, PAULI_X, atol=1e-15, rtol=0):
        return [Gate.cnot(control, target)]
    phase, alpha, beta, gamma = zyz_decompose(W)
    gates = _rotation("z", target, 0.5 * (gamma - alpha))
    gates.append(Gate.cnot(control, target))
    gates += _rotation("z", target, -0.5 * (gamma + alpha))
    gates += _rotation("y", target, -0.5 * beta)
    gates.append(Gate.cnot(control, target))
    gates += _rotation("y", target, 0.5 * beta)
    gates += _rotation("z", target, alpha)
    # diag(1, e^{i phase}) on the control = e^{i phase/2} Rz(phase)
    gates += _rotation("z", control, phase) + _phase(0.5 * phase)
    return gates


def _controlled_all_ones(W, controls: list, target: int) -> list:
    """W on ``target`` when every control qubit is |1>; recursive V/V^dagger split."""
    if not controls:
        return single_qubit_gates(W, target)
    if len(controls) == 1:
        return _controlled_once(W, controls[0], target)
    *rest, last = controls
    V = _sqrt_unitary(W)
    Vh = V.conj().T
    flip = _controlled_all_ones(PAULI_X, rest, last)
    return (_controlled_once(V, last, target) + flip
            + _controlled_once(Vh, last, target) + flip
            + _controlled_all_ones(V, rest, target))


def controlled_unitary(W, target: int, controls: dict) -> list:
    """W on ``target`` conditioned on ``controls`` (qubit -> required bit value).

    Controls that must read 0 are conjugated by Ry(pi), which maps |0><0| to
    |1><1| exactly.
    """
    zeros = sorted(q for q, v in controls.items() if v == 0)
    wrap_in = [g for q in zeros for g in _rotation("y", q, np.pi)]
    wrap_out = [g for q in zeros for g in _rotation("y", q, -np.pi)]
    body = _controlled_all_ones(np.asarray(W, dtype=complex), sorted(controls), target)
    return wrap_in + body + wrap_out


@dataclass(frozen=True)
class TwoLevel:
    """Unitary acting as ``block`` on basis states ``(s, t)``, ``s < t``."""

    s: int
    t: int
    block: np.ndarray

    def matrix(self, dim: int) -> np.ndarray:
        out = np.eye(dim, dtype=complex)
        idx = [self.s, self.t]
        out[np.ix_(idx, idx)] = self.block
        return out

    def dagger(self) -> "TwoLevel":
        return TwoLevel(self.s, self.t, self.block.conj().T)


def _two_level(i: int, j: int, block) -> TwoLevel:
    if i < j:
        return TwoLevel(i, j, block)
    return TwoLevel(j, i, block[::-1, ::-1])


def _power_of_two(d: int) -> int:
    k = d.bit_length() - 1
    if d < 2 or 2**k != d:
        raise DimensionError(f"dimension {d} is not a power of two >= 2")
    return k


def two_level_decompose(U) -> list:
    """Two-level factors ``[F_1, ..., F_N]`` with ``U = F_1 @ F_2 @ ... @ F_N``.

    Column-by-column Givens elimination below the diagonal; leftover diagonal
    phases are cleared one basis state at a time.  At most d(d-1)/2 + 1
    factors for a generic d x d unitary.
    """
    U = np.array(U, dtype=complex)
    d = U.shape[0]
    _power_of_two(d)
    defect = unitarity_defect(U)
    if defect > 1e-10:
        raise NotUnitaryError(f"||U^H U - I||_F = {defect:.3e} exceeds 1e-10")
    A = U.copy()
    eliminations = []
    for c in range(d):
        for r in range(d - 1, c, -1):
            b = A[r, c]
            if abs(b) <= ELIMINATION_EPS:
                continue
            a = A[c, c]
            nrm = np.hypot(abs(a), abs(b))
            G = np.array([[a.conjugate(), b.conjugate()], [-b, a]]) / nrm
            A[[c, r]] = G @ A[[c, r]]
            A[r, c] = 0.0
            eliminations.append(_two_level(c, r, G))
        p = A[c, c]
        if abs(p - 1.0) > ELIMINATION_EPS:
            p = p / abs(p)
            partner = c ^ 1
            G = np.diag([p.conjugate(), 1.0])
            A[c] *= p.conjugate()
            eliminations.append(_two_level(c, partner, G))
    # G_N ... G_1 U = I  =>  U = G_1^H ... G_N^H
    return [g.dagger() for g in eliminations]


def _gray_path(s: int, t: int, k: int) -> list:
    path = [s]
    cur = s
    for q in range(k):
        bit = 1 << (k - 1 - q)
        if (s ^ t) & bit:
            cur ^= bit
            path.append(cur)
    return path


def _bits(index: int, k: int) -> list:
    return [(index >> (k - 1 - q)) & 1 for q in range(k)]


def _differing_qubit(a: int, b: int, k: int) -> int:
    return k - 1 - (a ^ b).bit_length() + 1


def two_level_to_gates(factor: TwoLevel, k: int) -> list:
    """Gate list realising a two-level unitary exactly (phases included)."""
    s, t = factor.s, factor.t
    d = 2**k
    if not (0 <= s < d and 0 <= t < d) or s == t:
        raise DimensionError(f"invalid basis pair ({s}, {t}) for {k} qubits")
    path = _gray_path(s, t, k)
    swaps = []
    for a, b in zip(path[:-2], path[1:-1]):
        q = _differing_qubit(a, b, k)
        bits = _bits(a, k)
        swaps += controlled_unitary(PAULI_X, q, {c: bits[c] for c in range(k) if c != q})
    g = path[-2]
    q = _differing_qubit(g, t, k)
    bits = _bits(t, k)
    block = np.asarray(factor.block, dtype=complex)
    if bits[q] == 0:
        block = PAULI_X @ block @ PAULI_X
    core = controlled_unitary(block, q, {c: bits[c] for c in range(k) if c != q})
    unswaps = []
    for a, b in reversed(list(zip(path[:-2], path[1:-1]))):
        q2 = _differing_qubit(a, b, k)
        bits2 = _bits(a, k)
        unswaps += controlled_unitary(PAULI_X, q2, {c: bits2[c] for c in range(k) if c != q2})
    return swaps + core + unswaps


@dataclass
class FactorReport:
    cnot_count: int
    total_gates: int
    error: float
    wall_time: float
    projection_distance: float = 0.0
    factor_count: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def factor(U, k: int):
    """Synthesize ``U`` on ``k`` qubits; returns ``(circuit, report)``."""
    start = time.perf_counter()
    U = np.asarray(U, dtype=complex)
    if U.shape != (2**k, 2**k):
        raise DimensionError(f"operator shape {U.shape} does not match {k} qubits")
    defect = unitarity_defect(U)
    if defect > UNITARY_TOL:
        raise NotUnitaryError(
            f"operator is not unitary: ||U^H U - I||_F = {defect:.3e} > {UNITARY_TOL:g}"
        )
    projected = nearest_unitary(U)
    distance = float(np.linalg.norm(projected - U))
    if k == 1:
        factors = []
        gates = single_qubit_gates(projected, 0)
    else:
        factors = two_level_decompose(projected)
        gates = []
        for f in reversed(factors):
            gates += two_level_to_gates(f, k)
    circuit = Circuit(k, gates, metadata={
        "source_hash": hashlib.sha256(np.ascontiguousarray(U).tobytes()).hexdigest()[:16],
        "synthesized_at": datetime.now(timezone.utc).isoformat(),
    })
    cnots, total = gate_counts(circuit)
    error = fidelity_error(U, circuit_matrix(circuit))
    report = FactorReport(cnots, total, error, time.perf_counter() - start,
                          projection_distance=distance, factor_count=len(factors))
    return circuit, report
