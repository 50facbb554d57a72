import struct
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qsynth.circuit import Circuit, Gate, circuit_matrix
from qsynth.circuit_io import (format_complex, load_matrix, parse_complex, read_matrix,
                               read_qasm, render_ascii, save_matrix, write_matrix, write_qasm)
from qsynth.errors import ParseError
from qsynth.factorizer import factor

from test_circuit import circuits

GOLDEN = Path(__file__).parent / "golden"
H1 = np.array([[1, 1], [-1, 1]], dtype=complex) / np.sqrt(2)


class TestQasm:
    def test_empty_circuit(self):
        text = write_qasm(Circuit(1))
        assert text == 'OPENQASM 2.0;\ninclude "qelib1.inc";\nqreg q[1];\n'
        assert read_qasm(text) == Circuit(1)

    def test_single_cx(self):
        c = read_qasm('OPENQASM 2.0;\ninclude "qelib1.inc";\nqreg q[2];\ncx q[0],q[1];\n')
        assert c == Circuit(2, [Gate.cnot(0, 1)])

    def test_angles_have_seventeen_digits(self):
        text = write_qasm(Circuit(1, [Gate.rz(0, 0.1)]))
        assert "rz(0.10000000000000001) q[0];" in text

    @given(circuits())
    def test_round_trip(self, circuit):
        assert read_qasm(write_qasm(circuit)) == circuit

    def test_factored_hadamard(self):
        circuit, _ = factor(H1, 1)
        back = read_qasm(write_qasm(circuit))
        assert np.allclose(circuit_matrix(back), H1, atol=1e-12)

    def test_statements_on_one_line_and_comments(self):
        text = 'OPENQASM 2.0; include "qelib1.inc";\nqreg q[2]; // register\nry(1.5) q[1]; cx q[1],q[0];\n'
        assert read_qasm(text) == Circuit(2, [Gate.ry(1, 1.5), Gate.cnot(1, 0)])

    @pytest.mark.parametrize("text,line,col,fragment", [
        ("OPENQASM 3.0;\n", 1, 1, "header"),
        ('OPENQASM 2.0;\nqreg q[2];\n  h q[0];\n', 3, 3, "unknown gate token 'h'"),
        ('OPENQASM 2.0;\nqreg q[2];\nrz(0.5) q[2];\n', 3, 1, "out of range"),
        ('OPENQASM 2.0;\nqreg q[2];\ncx q[0],r[1];\n', 3, 1, "unknown register"),
        ('OPENQASM 2.0;\nrz(0.5) q[0];\n', 2, 1, "before qreg"),
        ('OPENQASM 2.0;\nqreg q[2];\nqreg r[2];\n', 3, 1, "one qreg"),
        ('OPENQASM 2.0;\nqreg q[2];\nrz(0.5) q[0]\n', 3, 1, "terminated"),
        ('OPENQASM 2.0;\nqreg q[2];\ncx q[1],q[1];\n', 3, 1, "control equals target"),
        ('OPENQASM 2.0;\ninclude "other.inc";\n', 2, 1, "include"),
    ])
    def test_parse_errors(self, text, line, col, fragment):
        with pytest.raises(ParseError) as info:
            read_qasm(text)
        assert (info.value.line, info.value.column) == (line, col)
        assert fragment in str(info.value)
        assert str(info.value).startswith(f"line {line}, column {col}: ")

    def test_missing_qreg(self):
        with pytest.raises(ParseError):
            read_qasm("OPENQASM 2.0;\n")

    def test_deterministic(self):
        c = Circuit(2, [Gate.ry(0, np.pi / 3), Gate.cnot(1, 0), Gate.phase(-0.25)])
        assert write_qasm(c) == write_qasm(Circuit(2, list(c.gates)))


class TestAscii:
    def test_empty(self):
        assert render_ascii(Circuit(2)) == "q0: -\nq1: -\n"

    def test_single_rotation(self):
        rows = render_ascii(Circuit(2, [Gate.ry(0, 0.5)])).splitlines()
        assert rows == ["q0: -[Y(0.5)]-", "q1: ----------"]

    def test_cnot_spans_wires(self):
        rows = render_ascii(Circuit(3, [Gate.cnot(0, 2)])).splitlines()
        assert rows == ["q0: --*--", "q1: --|--", "q2: -(+)-"]

    def test_packs_parallel_gates(self):
        rows = render_ascii(Circuit(2, [Gate.rz(0, 1.0), Gate.rz(1, 1.0)])).splitlines()
        assert rows == ["q0: -[Z(1)]-", "q1: -[Z(1)]-"]

    def test_golden_hadamard(self):
        circuit, _ = factor(H1, 1)
        assert render_ascii(circuit) == (GOLDEN / "factor_h1.txt").read_text()

    @given(circuits())
    def test_rows_equal_width(self, circuit):
        rows = render_ascii(circuit).splitlines()[:circuit.num_qubits]
        assert len({len(r) for r in rows}) == 1


class TestMatrixText:
    def test_hadamard_fixture(self):
        U = read_matrix((GOLDEN / "h1_matrix.txt").read_text())
        assert np.array_equal(U, H1)

    def test_canonical_text_round_trip(self):
        text = (GOLDEN / "h1_matrix.txt").read_text()
        assert write_matrix(read_matrix(text)) == text

    @given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(1, 5))
    def test_array_round_trip(self, seed, n, m):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((n, m)) * 10.0 ** rng.integers(-300, 300, (n, m)) + 1j * rng.standard_normal((n, m))
        assert np.array_equal(read_matrix(write_matrix(a)), a)

    def test_seventeen_digits_preserve_bits(self):
        rng = np.random.default_rng(99)
        bits = rng.integers(0, 2**63, size=1_000_000, dtype=np.uint64) | (
            rng.integers(0, 2, size=1_000_000, dtype=np.uint64) << np.uint64(63))
        values = bits.view(np.float64)
        values = values[np.isfinite(values)]
        back = np.array([float(format(v, ".17g")) for v in values])
        assert np.array_equal(back.view(np.uint64), values.view(np.uint64))

    def test_complex_literal(self):
        assert format_complex(1 - 2j) == "1-2i"
        assert parse_complex("-0.5+1e-300i") == complex(-0.5, 1e-300)
        assert parse_complex("inf-nani").real == np.inf

    @pytest.mark.parametrize("text,line,col", [
        ("", 1, 1),
        ("2 x\n", 1, 1),
        ("1 2\n1+0i\n", 2, 1),
        ("2 1\n1+0i\n", 2, 1),
        ("1 2\n1+0i 2+0j\n", 2, 6),
        ("1 1\n1 + 0i\n", 2, 1),
    ])
    def test_parse_errors(self, text, line, col):
        with pytest.raises(ParseError) as info:
            read_matrix(text)
        assert (info.value.line, info.value.column) == (line, col)

    def test_file_helpers(self, tmp_path):
        path = tmp_path / "m.txt"
        save_matrix(path, H1)
        assert np.array_equal(load_matrix(path), H1)
