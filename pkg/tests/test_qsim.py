import numpy as np
import pytest

from quirk.qsim import (
    DEFAULT_MAX_QUBITS,
    HARD_MAX_QUBITS,
    CapacityError,
    apply_cnot,
    apply_gate,
    expectation_z,
    norm,
    rx,
    ry,
    rz,
    zero_state,
)

import oracles


class TestGateMatrices:
    def test_zero_angle_is_identity(self):
        for g in (rx, ry, rz):
            np.testing.assert_allclose(g(0.0), np.eye(2), atol=1e-15)

    def test_pi_rotations_hit_paulis(self):
        # R_P(pi) = -i P
        np.testing.assert_allclose(rx(np.pi), -1j * np.array([[0, 1], [1, 0]]), atol=1e-15)
        np.testing.assert_allclose(ry(np.pi), -1j * np.array([[0, -1j], [1j, 0]]), atol=1e-15)
        np.testing.assert_allclose(rz(np.pi), -1j * np.diag([1, -1]), atol=1e-15)

    @pytest.mark.parametrize("gate", [rx, ry, rz])
    def test_unitarity(self, gate):
        rng = np.random.default_rng(3)
        for a in rng.uniform(-10, 10, 25):
            u = gate(a)
            np.testing.assert_allclose(u.conj().T @ u, np.eye(2), atol=1e-14)

    @pytest.mark.parametrize("gate,oracle", [(rx, oracles.mat_rx), (ry, oracles.mat_ry), (rz, oracles.mat_rz)])
    def test_matches_textbook_matrices(self, gate, oracle):
        for a in np.linspace(-2 * np.pi, 2 * np.pi, 17):
            np.testing.assert_allclose(gate(a), oracle(a), atol=1e-15)

    def test_composition(self):
        # successive rotations about one axis add their angles
        np.testing.assert_allclose(rx(0.3) @ rx(0.4), rx(0.7), atol=1e-15)


class TestStates:
    def test_zero_state(self):
        s = zero_state(3)
        assert s.shape == (8,)
        assert s[0] == 1.0
        assert norm(s) == pytest.approx(1.0)

    def test_capacity_default(self):
        with pytest.raises(CapacityError):
            zero_state(DEFAULT_MAX_QUBITS + 1)

    def test_capacity_can_be_raised_but_not_past_hard_cap(self):
        s = zero_state(7, max_qubits=8)
        assert s.shape == (128,)
        with pytest.raises(CapacityError):
            zero_state(HARD_MAX_QUBITS + 1, max_qubits=HARD_MAX_QUBITS + 1)

    def test_zero_qubits_rejected(self):
        with pytest.raises(ValueError):
            zero_state(0)


class TestApplyGate:
    def test_against_kron_oracle(self):
        rng = np.random.default_rng(11)
        for n in range(1, 5):
            state = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
            state /= np.linalg.norm(state)
            for q in range(n):
                a = rng.uniform(-np.pi, np.pi)
                for gate, mk in ((rx, oracles.mat_rx), (ry, oracles.mat_ry), (rz, oracles.mat_rz)):
                    got = apply_gate(state, gate(a), q)
                    want = oracles.embed_1q(mk(a), q, n) @ state
                    np.testing.assert_allclose(got, want, atol=1e-13)

    def test_batched_matches_loop(self):
        rng = np.random.default_rng(5)
        batch = rng.normal(size=(6, 8)) + 1j * rng.normal(size=(6, 8))
        g = ry(0.37)
        got = apply_gate(batch, g, 1)
        for i in range(6):
            np.testing.assert_allclose(got[i], apply_gate(batch[i], g, 1), atol=1e-14)

    def test_norm_preserved_through_random_circuit(self):
        rng = np.random.default_rng(6)
        state = zero_state(4)
        for _ in range(30):
            gate = (rx, ry, rz)[rng.integers(3)](rng.uniform(-6, 6))
            state = apply_gate(state, gate, int(rng.integers(4)))
        assert norm(state) == pytest.approx(1.0, abs=1e-12)

    def test_qubit_out_of_range(self):
        with pytest.raises(IndexError):
            apply_gate(zero_state(2), rx(0.1), 2)

    def test_bad_gate_shape(self):
        with pytest.raises(ValueError):
            apply_gate(zero_state(2), np.eye(3, dtype=complex), 0)


class TestCnot:
    def test_against_permutation_oracle(self):
        rng = np.random.default_rng(12)
        for n in range(2, 5):
            state = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
            state /= np.linalg.norm(state)
            for c in range(n):
                for t in range(n):
                    if c == t:
                        continue
                    got = apply_cnot(state, c, t)
                    want = oracles.cnot_matrix(c, t, n) @ state
                    np.testing.assert_allclose(got, want, atol=1e-14)

    def test_bell_state(self):
        # H via ry(pi/2) then phase-free CNOT: |00> -> (|00> + |11>)/sqrt(2)
        s = zero_state(2)
        s = apply_gate(s, ry(np.pi / 2), 0)
        s = apply_cnot(s, 0, 1)
        np.testing.assert_allclose(s, np.array([1, 0, 0, 1]) / np.sqrt(2), atol=1e-14)

    def test_control_equals_target_rejected(self):
        with pytest.raises(ValueError):
            apply_cnot(zero_state(2), 1, 1)


class TestExpectationZ:
    def test_ry_rotation_gives_cos(self):
        for x in np.linspace(0, 2 * np.pi, 40):
            s = apply_gate(zero_state(1), ry(x), 0)
            assert expectation_z(s, 0) == pytest.approx(np.cos(x), abs=1e-14)

    def test_qubit_selection_on_product_state(self):
        # rotate qubit 1 of two; qubit 0 keeps <Z> = 1
        s = zero_state(2)
        s = apply_gate(s, ry(1.1), 1)
        assert expectation_z(s, 0) == pytest.approx(1.0, abs=1e-14)
        assert expectation_z(s, 1) == pytest.approx(np.cos(1.1), abs=1e-14)

    def test_msb_convention(self):
        # amplitude index 2 = |10>: qubit 0 is 1, qubit 1 is 0
        s = np.zeros(4, dtype=complex)
        s[2] = 1.0
        assert expectation_z(s, 0) == pytest.approx(-1.0)
        assert expectation_z(s, 1) == pytest.approx(1.0)

    def test_batched(self):
        xs = np.linspace(0, np.pi, 9)
        states = np.stack([apply_gate(zero_state(1), ry(x), 0) for x in xs])
        np.testing.assert_allclose(expectation_z(states, 0), np.cos(xs), atol=1e-14)

    def test_out_of_range_qubit(self):
        with pytest.raises(IndexError):
            expectation_z(zero_state(2), 2)
