"""Text formats: OpenQASM 2.0 circuits, ASCII diagrams, and complex matrices."""

from __future__ import annotations

import re

import numpy as np

from .circuit import Circuit, Gate, GateKind
from .errors import DimensionError, ParseError

QASM_HEADER = 'OPENQASM 2.0;\ninclude "qelib1.inc";\n'
# OpenQASM 2.0 has no global-phase statement; the phase rides in a comment
# so that the file stays valid for other tools and still round-trips here.
PHASE_PRAGMA = "// gphase"


def _num(x: float) -> str:
    return format(float(x), ".17g")


def write_qasm(circuit: Circuit) -> str:
    circuit.validate()
    lines = [QASM_HEADER + f"qreg q[{circuit.num_qubits}];"]
    for g in circuit.gates:
        if g.kind is GateKind.RZ:
            lines.append(f"rz({_num(g.angle)}) q[{g.target}];")
        elif g.kind is GateKind.RY:
            lines.append(f"ry({_num(g.angle)}) q[{g.target}];")
        elif g.kind is GateKind.CNOT:
            lines.append(f"cx q[{g.control}],q[{g.target}];")
        else:
            lines.append(f"{PHASE_PRAGMA}({_num(g.angle)})")
    return "\n".join(lines) + "\n"


_FLOAT = r"[+-]?(?:\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|inf|nan)"
_ROT_RE = re.compile(rf"^(rz|ry)\s*\(\s*({_FLOAT})\s*\)\s+(\w+)\s*\[\s*(\d+)\s*\]$")
_CX_RE = re.compile(r"^cx\s+(\w+)\s*\[\s*(\d+)\s*\]\s*,\s*(\w+)\s*\[\s*(\d+)\s*\]$")
_QREG_RE = re.compile(r"^qreg\s+(\w+)\s*\[\s*(\d+)\s*\]$")
_PHASE_RE = re.compile(rf"^{PHASE_PRAGMA}\s*\(\s*({_FLOAT})\s*\)\s*$")


def read_qasm(text: str) -> Circuit:
    """Parse the OpenQASM 2.0 subset emitted by :func:`write_qasm`."""
    reg = None
    num_qubits = None
    gates = []
    seen_header = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        col = len(raw) - len(raw.lstrip()) + 1
        m = _PHASE_RE.match(stripped)
        if m:
            gates.append(Gate.phase(float(m.group(1))))
            continue
        code = raw.split("//", 1)[0]
        if not code.strip():
            continue
        offset = 0
        for stmt in code.split(";")[:-1]:
            scol = offset + len(stmt) - len(stmt.lstrip()) + 1
            offset += len(stmt) + 1
            stmt = stmt.strip()
            if not seen_header:
                if not re.fullmatch(r"OPENQASM\s+2\.0", stmt):
                    raise ParseError(f"expected 'OPENQASM 2.0;' header, found {stmt!r}", lineno, scol)
                seen_header = True
                continue
            if stmt.startswith("include"):
                if stmt != 'include "qelib1.inc"':
                    raise ParseError(f"unsupported include {stmt!r}", lineno, scol)
                continue
            m = _QREG_RE.match(stmt)
            if m:
                if reg is not None:
                    raise ParseError("only one qreg is supported", lineno, scol)
                reg, num_qubits = m.group(1), int(m.group(2))
                if num_qubits < 1:
                    raise ParseError("qreg size must be positive", lineno, scol)
                continue
            if reg is None:
                raise ParseError(f"gate before qreg declaration: {stmt!r}", lineno, scol)
            m = _ROT_RE.match(stmt)
            if m:
                kind, angle, name, q = m.groups()
                _check_ref(name, int(q), reg, num_qubits, lineno, scol)
                angle = float(angle)
                gates.append(Gate.rz(int(q), angle) if kind == "rz" else Gate.ry(int(q), angle))
                continue
            m = _CX_RE.match(stmt)
            if m:
                n1, c, n2, t = m.groups()
                _check_ref(n1, int(c), reg, num_qubits, lineno, scol)
                _check_ref(n2, int(t), reg, num_qubits, lineno, scol)
                if int(c) == int(t):
                    raise ParseError("cx control equals target", lineno, scol)
                gates.append(Gate.cnot(int(c), int(t)))
                continue
            token = stmt.split("(")[0].split()[0] if stmt else stmt
            raise ParseError(f"unknown gate token {token!r}", lineno, scol)
        if code.strip() and not code.rstrip().endswith(";"):
            raise ParseError("statement not terminated by ';'", lineno, col)
    if not seen_header:
        raise ParseError("missing 'OPENQASM 2.0;' header", 1, 1)
    if reg is None:
        raise ParseError("missing qreg declaration", None, None)
    return Circuit(num_qubits, gates)


def _check_ref(name, index, reg, size, lineno, col):
    if name != reg:
        raise ParseError(f"unknown register {name!r}", lineno, col)
    if index >= size:
        raise ParseError(f"qubit index {index} out of range for {reg}[{size}]", lineno, col)


def _label(g: Gate) -> str:
    return f"{g.kind.value[1]}({g.angle:.4g})" if g.kind in (GateKind.RZ, GateKind.RY) else ""


def render_ascii(circuit: Circuit) -> str:
    """One row per qubit, time running left to right.

    Rotations are boxed as ``[Z(0.7854)]`` / ``[Y(...)]``; a CNOT puts ``*``
    on the control, ``(+)`` on the target and ``|`` on wires in between.
    The accumulated global phase, if any, is printed on a trailing line.
    """
    circuit.validate()
    k = circuit.num_qubits
    columns = []
    frontier = [0] * k
    for g in circuit.gates:
        if g.kind is GateKind.GLOBAL_PHASE:
            continue
        if g.kind is GateKind.CNOT:
            lo, hi = sorted((g.control, g.target))
            span = range(lo, hi + 1)
        else:
            span = range(g.target, g.target + 1)
        col = max(frontier[q] for q in span)
        if col == len(columns):
            columns.append({})
        cells = columns[col]
        if g.kind is GateKind.CNOT:
            for q in span:
                cells[q] = "*" if q == g.control else "(+)" if q == g.target else "|"
        else:
            cells[g.target] = f"[{_label(g)}]"
        for q in span:
            frontier[q] = col + 1

    name_width = len(f"q{k - 1}")
    rows = [f"q{q}".ljust(name_width) + ": -" for q in range(k)]
    for cells in columns:
        width = max(len(c) for c in cells.values())
        for q in range(k):
            cell = cells.get(q)
            if cell is None:
                rows[q] += "-" * width
            else:
                rows[q] += cell.center(width, "-")
            rows[q] += "-"
    phase = sum(g.angle for g in circuit.gates if g.kind is GateKind.GLOBAL_PHASE)
    if any(g.kind is GateKind.GLOBAL_PHASE for g in circuit.gates):
        rows.append(f"global phase: {phase:.17g}")
    return "\n".join(rows) + "\n"


def format_complex(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}i"


_COMPLEX_RE = re.compile(rf"^({_FLOAT})([+-](?:\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|inf|nan))i$")


def parse_complex(token: str, line=None, column=None) -> complex:
    m = _COMPLEX_RE.match(token)
    if not m:
        raise ParseError(f"malformed complex literal {token!r}", line, column)
    return complex(float(m.group(1)), float(m.group(2)))


def write_matrix(a) -> str:
    """``n m`` header, then one whitespace-separated row per line."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise DimensionError("write_matrix expects a 2-d array")
    lines = [f"{a.shape[0]} {a.shape[1]}"]
    lines += [" ".join(format_complex(z) for z in row) for row in a]
    return "\n".join(lines) + "\n"


def read_matrix(text: str) -> np.ndarray:
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise ParseError("empty matrix text", 1, 1)
    head = lines[0].split()
    if len(head) != 2 or not all(h.isdigit() for h in head):
        raise ParseError(f"expected 'n m' header, found {lines[0]!r}", 1, 1)
    n, m = int(head[0]), int(head[1])
    if len(lines) - 1 != n:
        raise ParseError(f"header declares {n} rows, found {len(lines) - 1}", len(lines), 1)
    out = np.empty((n, m), dtype=complex)
    for i, line in enumerate(lines[1:]):
        tokens = [(mt.group(), mt.start() + 1) for mt in re.finditer(r"\S+", line)]
        if len(tokens) != m:
            raise ParseError(f"row has {len(tokens)} entries, expected {m}", i + 2, 1)
        for j, (tok, col) in enumerate(tokens):
            out[i, j] = parse_complex(tok, i + 2, col)
    return out


def load_matrix(path) -> np.ndarray:
    with open(path) as fh:
        return read_matrix(fh.read())


def save_matrix(path, a) -> None:
    with open(path, "w") as fh:
        fh.write(write_matrix(a))
