import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import minimize

from qsynth.circuit import Circuit, GateKind, circuit_matrix, gate_counts, ry_matrix, rz_matrix
from qsynth.datagen import haar_random_unitary
from qsynth.errors import DimensionError, NotUnitaryError
from qsynth.factorizer import (TwoLevel, controlled_unitary, factor, two_level_decompose,
                               two_level_to_gates, wrap_angle, zyz_decompose)
from qsynth.objectives import fidelity_error

H1 = np.array([[1, 1], [-1, 1]], dtype=complex) / np.sqrt(2)
GATE_BUDGET = 32  # total gates <= GATE_BUDGET * 4**k for k <= 3


def zyz_product(phase, alpha, beta, gamma):
    return np.exp(1j * phase) * rz_matrix(alpha) @ ry_matrix(beta) @ rz_matrix(gamma)


def product(factors, dim):
    out = np.eye(dim, dtype=complex)
    for f in factors:
        out = out @ f.matrix(dim)
    return out


class TestZYZ:
    def test_identity(self):
        assert zyz_decompose(np.eye(2)) == (0.0, 0.0, 0.0, 0.0)

    def test_rz(self):
        phase, alpha, beta, gamma = zyz_decompose(rz_matrix(0.7))
        assert (phase, beta, gamma) == (0.0, 0.0, 0.0)
        assert alpha == pytest.approx(0.7)

    def test_hadamard(self):
        angles = zyz_decompose(H1)
        assert angles[2] == pytest.approx(np.pi / 2)
        assert np.allclose(zyz_product(*angles), H1, atol=1e-12)

    def test_hadamard_against_brute_force(self):
        # grid over (alpha, beta, gamma) then local refinement; the phase is fit in closed form
        def loss(p):
            M = rz_matrix(p[0]) @ ry_matrix(p[1]) @ rz_matrix(p[2])
            return 1 - abs(np.trace(M.conj().T @ H1)) / 2

        grid = np.linspace(-np.pi, np.pi, 9)
        best = min((minimize(loss, x0, method="Nelder-Mead",
                             options={"xatol": 1e-12, "fatol": 1e-15}) for x0 in itertools.product(grid, repeat=3)),
                   key=lambda r: r.fun)
        beta = abs(wrap_angle(best.x[1]))
        assert best.fun < 1e-12
        assert beta == pytest.approx(zyz_decompose(H1)[2], abs=1e-5)

    def test_canonical_ranges_and_round_trip(self):
        rng = np.random.default_rng(3)
        for _ in range(1000):
            V = haar_random_unitary(2, rng)
            phase, alpha, beta, gamma = zyz_decompose(V)
            assert 0 <= beta <= np.pi
            assert all(-np.pi < a <= np.pi for a in (phase, alpha, gamma))
            assert np.linalg.norm(zyz_product(phase, alpha, beta, gamma) - V) <= 1e-12

    @pytest.mark.parametrize("V", [np.diag([1j, -1j]), np.array([[0, 1], [1, 0]]), np.array([[0, 1j], [1j, 0]]),
                                   -np.eye(2), np.diag([1, -1])])
    def test_degenerate_cases(self, V):
        assert np.allclose(zyz_product(*zyz_decompose(V)), V, atol=1e-12)

    def test_not_unitary(self):
        with pytest.raises(NotUnitaryError):
            zyz_decompose(np.diag([1.0, 1.1]))
        with pytest.raises(DimensionError):
            zyz_decompose(np.eye(3))


class TestTwoLevel:
    def test_identity(self):
        assert two_level_decompose(np.eye(4)) == []

    def test_already_two_level(self, rng):
        T = TwoLevel(1, 3, haar_random_unitary(2, rng)).matrix(4)
        factors = two_level_decompose(T)
        assert len(factors) <= 2
        assert np.linalg.norm(product(factors, 4) - T) <= 1e-10

    def test_haar_four(self, rng):
        for _ in range(20):
            U = haar_random_unitary(4, rng)
            factors = two_level_decompose(U)
            assert len(factors) <= 7
            assert np.linalg.norm(product(factors, 4) - U) <= 1e-9

    @pytest.mark.parametrize("d", [2, 8, 16])
    def test_count_bound(self, d, rng):
        U = haar_random_unitary(d, rng)
        factors = two_level_decompose(U)
        assert len(factors) <= d * (d - 1) // 2 + 1
        assert np.linalg.norm(product(factors, d) - U) <= 1e-9

    def test_phase_only(self):
        U = np.diag(np.exp(1j * np.array([0.1, 0.2, 0.3, 0.4])))
        assert np.linalg.norm(product(two_level_decompose(U), 4) - U) <= 1e-12

    def test_rejects(self):
        with pytest.raises(DimensionError):
            two_level_decompose(np.eye(3))
        with pytest.raises(NotUnitaryError):
            two_level_decompose(2 * np.eye(2))


class TestTwoLevelGates:
    def test_single_qubit_has_no_cnot(self, rng):
        T = TwoLevel(0, 1, haar_random_unitary(2, rng))
        gates = two_level_to_gates(T, 1)
        assert not any(g.kind is GateKind.CNOT for g in gates)
        assert np.allclose(circuit_matrix(Circuit(1, gates)), T.matrix(2), atol=1e-12)

    @pytest.mark.parametrize("s,t", [(2, 3), (0, 3), (0, 1), (1, 2)])
    def test_two_qubits(self, s, t, rng):
        T = TwoLevel(s, t, haar_random_unitary(2, rng))
        assert np.allclose(circuit_matrix(Circuit(2, two_level_to_gates(T, 2))), T.matrix(4), atol=1e-9)

    @given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.data())
    def test_any_pair(self, seed, k, data):
        d = 2**k
        s, t = sorted(data.draw(st.lists(st.integers(0, d - 1), min_size=2, max_size=2, unique=True)))
        T = TwoLevel(s, t, haar_random_unitary(2, seed))
        assert np.allclose(circuit_matrix(Circuit(k, two_level_to_gates(T, k))), T.matrix(d), atol=1e-9)

    def test_invalid_pair(self):
        with pytest.raises(DimensionError):
            two_level_to_gates(TwoLevel(1, 1, np.eye(2)), 2)
        with pytest.raises(DimensionError):
            two_level_to_gates(TwoLevel(0, 4, np.eye(2)), 2)

    def test_controlled_with_zero_controls(self, rng):
        W = haar_random_unitary(2, rng)
        gates = controlled_unitary(W, 2, {0: 0, 1: 1})
        M = circuit_matrix(Circuit(3, gates))
        expected = np.eye(8, dtype=complex)
        expected[np.ix_([2, 3], [2, 3])] = W  # |01x>
        assert np.allclose(M, expected, atol=1e-10)


class TestFactor:
    def test_identity(self):
        for k in (2, 3):
            circuit, report = factor(np.eye(2**k), k)
            assert gate_counts(circuit) == (0, 0)
            assert report.cnot_count == 0 and report.total_gates <= 1 and report.error <= 1e-12

    def test_single_qubit(self, rng):
        for _ in range(50):
            U = haar_random_unitary(2, rng)
            circuit, report = factor(U, 1)
            assert report.cnot_count == 0 and report.total_gates <= 4
            assert report.error <= 1e-12

    def test_two_qubits(self, rng):
        for _ in range(20):
            U = haar_random_unitary(4, rng)
            circuit, report = factor(U, 2)
            assert report.error <= 1e-9
            assert report.cnot_count <= 24

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_round_trip_and_budget(self, k, rng):
        for _ in range(10):
            U = haar_random_unitary(2**k, rng)
            circuit, report = factor(U, k)
            assert fidelity_error(U, circuit_matrix(circuit)) <= 1e-9
            assert np.allclose(circuit_matrix(circuit), U, atol=1e-9)  # phases tracked exactly
            assert report.cnot_count <= report.total_gates <= GATE_BUDGET * 4**k

    def test_projection_recorded(self, rng):
        U = haar_random_unitary(4, rng)
        noisy = U + 1e-10 * rng.standard_normal((4, 4))
        _, report = factor(noisy, 2)
        assert 0 < report.projection_distance <= 1e-9

    def test_rejects_non_unitary(self):
        with pytest.raises(NotUnitaryError, match=r"\|\|U\^H U - I\|\|_F"):
            factor(np.diag([1.0, 1.0, 1.0, 1.5]), 2)

    def test_rejects_shape(self):
        with pytest.raises(DimensionError):
            factor(np.eye(4), 3)

    def test_metadata(self):
        circuit, report = factor(H1, 1)
        assert len(circuit.metadata["source_hash"]) == 16
        assert report.to_dict()["cnot_count"] == 0
