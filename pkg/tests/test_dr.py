import numpy as np
import pytest

import quirk.dr as drmod
from quirk.dr import (
    DEFAULT_TEMPLATE,
    SU2_TEMPLATE,
    DRParams,
    GateTemplate,
    clamp_event_count,
    dr_forward,
    dr_forward_batch,
    dr_forward_multiqubit,
    dr_gradient,
    init_dr_params,
    reset_clamp_event_count,
)
from quirk.qsim import CapacityError

import oracles


def random_params(seed, L=3, num_qubits=1, entangle=False, template=DEFAULT_TEMPLATE):
    return init_dr_params(L, np.random.default_rng(seed), num_qubits=num_qubits,
                          entangle=entangle, template=template)


class TestForward:
    def test_identity_trainables_give_cos(self):
        # RZ(0) and RX(0) drop out, leaving <Z| RY(x) |0> = cos(x)
        p = DRParams(np.zeros((1, 2)))
        for x in np.linspace(0, np.pi, 21):
            assert dr_forward(x, p) == pytest.approx(np.cos(x), abs=1e-14)

    def test_x_zero_rz_only_layer(self):
        # at x = 0 the encode is identity; RZ(a) on |0> is a pure phase
        for a in (-2.0, 0.3, 1.7):
            p = DRParams(np.array([[a, 0.0]]))
            assert dr_forward(0.0, p) == pytest.approx(1.0, abs=1e-14)

    def test_matches_naive_oracle_seed42(self):
        p = random_params(42, L=3)
        got = dr_forward(1.0, p)
        want = oracles.naive_dr_forward(1.0, p.thetas)
        assert got == pytest.approx(want, abs=1e-12)

    @pytest.mark.parametrize("L", [1, 2, 4, 6])
    def test_matches_naive_oracle_many(self, L):
        rng = np.random.default_rng(100 + L)
        for _ in range(10):
            p = init_dr_params(L, rng)
            x = rng.uniform(0, np.pi)
            assert dr_forward(x, p) == pytest.approx(
                oracles.naive_dr_forward(x, p.thetas), abs=1e-12)

    def test_su2_template_against_oracle(self):
        tpl = [("ry", "input"), ("rz", 0), ("ry", 1), ("rz", 2)]
        rng = np.random.default_rng(9)
        p = init_dr_params(2, rng, template=SU2_TEMPLATE)
        x = 0.8
        assert dr_forward(x, p) == pytest.approx(
            oracles.naive_dr_forward(x, p.thetas, template=tpl), abs=1e-12)

    def test_range_invariant(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            p = init_dr_params(int(rng.integers(1, 7)), rng)
            v = dr_forward(rng.uniform(0, np.pi), p)
            assert -1.0 <= v <= 1.0

    def test_periodicity_4pi(self):
        rng = np.random.default_rng(23)
        for _ in range(30):
            p = init_dr_params(int(rng.integers(1, 5)), rng)
            x = rng.uniform(0, np.pi)
            a = dr_forward(x, p, clamp=False)
            b = dr_forward(x + 4 * np.pi, p, clamp=False)
            assert a == pytest.approx(b, abs=1e-12)

    def test_determinism(self):
        a = random_params(7, L=4)
        b = random_params(7, L=4)
        assert np.array_equal(a.thetas, b.thetas)
        assert dr_forward(0.5, a) == dr_forward(0.5, b)


class TestForwardBatch:
    def test_empty(self):
        p = random_params(1)
        out = dr_forward_batch(np.array([]), p)
        assert out.shape == (0,)

    def test_trivial_pair(self):
        p = DRParams(np.zeros((1, 2)))
        np.testing.assert_allclose(dr_forward_batch([0.0, np.pi], p), [1.0, -1.0], atol=1e-14)

    def test_matches_scalar_loop(self):
        p = random_params(33, L=5)
        xs = np.random.default_rng(2).uniform(0, np.pi, 1000)
        batch = dr_forward_batch(xs, p)
        scalar = np.array([dr_forward(float(x), p) for x in xs])
        np.testing.assert_allclose(batch, scalar, atol=1e-12)

    def test_preserves_shape(self):
        p = random_params(4)
        xs = np.random.default_rng(0).uniform(0, np.pi, (3, 5))
        assert dr_forward_batch(xs, p).shape == (3, 5)


class TestGradient:
    def test_identity_layer_dx_is_minus_sin(self):
        p = DRParams(np.zeros((1, 2)))
        for x in np.linspace(0.1, 3.0, 15):
            _, dx = dr_gradient(x, p)
            assert dx == pytest.approx(-np.sin(x), abs=1e-12)

    def test_rz_angle_has_zero_gradient_at_theta_zero(self):
        p = DRParams(np.zeros((1, 2)))
        dth, _ = dr_gradient(np.pi / 2, p)
        assert dth[0, 0] == pytest.approx(0.0, abs=1e-12)
        # confirmed independently by the shift rule
        shift = oracles.shift_rule_dtheta(np.pi / 2, p.thetas)
        assert shift[0, 0] == pytest.approx(0.0, abs=1e-12)

    def test_matches_shift_rule_and_fd_seed7(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            L = int(rng.integers(1, 7))
            p = init_dr_params(L, rng)
            x = rng.uniform(0, np.pi)
            dth, dx = dr_gradient(x, p)
            np.testing.assert_allclose(dth, oracles.shift_rule_dtheta(x, p.thetas), atol=1e-10)
            assert dx == pytest.approx(oracles.shift_rule_dx(x, p.thetas), abs=1e-10)
            np.testing.assert_allclose(dth, oracles.fd_dtheta(x, p.thetas), atol=1e-6)
            fd_dx = oracles.central_diff(lambda t: dr_forward(t, p, clamp=False), x)
            assert dx == pytest.approx(fd_dx, abs=1e-6)

    def test_su2_template_gradients(self):
        tpl = [("ry", "input"), ("rz", 0), ("ry", 1), ("rz", 2)]
        p = random_params(11, L=3, template=SU2_TEMPLATE)
        dth, dx = dr_gradient(0.6, p)
        np.testing.assert_allclose(
            dth, oracles.shift_rule_dtheta(0.6, p.thetas, template=tpl), atol=1e-10)
        assert dx == pytest.approx(
            oracles.shift_rule_dx(0.6, p.thetas, template=tpl), abs=1e-10)

    def test_nan_input_rejected(self):
        with pytest.raises(ValueError):
            dr_gradient(float("nan"), random_params(1))


class TestMultiQubit:
    def test_unentangled_equals_single_qubit(self):
        rng = np.random.default_rng(55)
        for _ in range(20):
            L = int(rng.integers(1, 4))
            p = init_dr_params(L, rng, num_qubits=2, entangle=False)
            single = DRParams(p.thetas[:, 0, :])
            x = rng.uniform(0, np.pi)
            assert dr_forward_multiqubit(x, p) == pytest.approx(
                dr_forward(x, single), abs=1e-12)

    def test_entangled_all_zero_thetas_vs_oracle(self):
        p = DRParams(np.zeros((1, 2, 2)), num_qubits=2, entangle=True)
        for x in np.linspace(0, np.pi, 9):
            want = oracles.naive_dr_forward(x, p.thetas, num_qubits=2, entangle=True)
            assert dr_forward_multiqubit(x, p) == pytest.approx(want, abs=1e-12)

    def test_entangled_random_vs_oracle(self):
        rng = np.random.default_rng(77)
        for n in (2, 3, 4):
            p = init_dr_params(2, rng, num_qubits=n, entangle=True)
            x = rng.uniform(0, np.pi)
            want = oracles.naive_dr_forward(x, p.thetas, num_qubits=n, entangle=True)
            assert dr_forward_multiqubit(x, p) == pytest.approx(want, abs=1e-12)

    def test_entangled_gradients_vs_shift_rule(self):
        rng = np.random.default_rng(88)
        p = init_dr_params(2, rng, num_qubits=3, entangle=True)
        x = 0.9
        dth, dx = dr_gradient(x, p)
        np.testing.assert_allclose(
            dth, oracles.shift_rule_dtheta(x, p.thetas, num_qubits=3, entangle=True),
            atol=1e-10)
        assert dx == pytest.approx(
            oracles.shift_rule_dx(x, p.thetas, num_qubits=3, entangle=True), abs=1e-10)

    def test_capacity_error(self):
        p = init_dr_params(1, np.random.default_rng(0), num_qubits=6)
        with pytest.raises(CapacityError):
            dr_forward_multiqubit(0.5, p, max_qubits=5)

    def test_requires_two_qubits(self):
        with pytest.raises(ValueError):
            dr_forward_multiqubit(0.5, random_params(0))

    def test_batch_dispatches_multiqubit(self):
        p = random_params(5, L=2, num_qubits=2, entangle=True)
        xs = np.linspace(0, np.pi, 5)
        batch = dr_forward_batch(xs, p)
        scalar = [dr_forward_multiqubit(float(x), p) for x in xs]
        np.testing.assert_allclose(batch, scalar, atol=1e-12)


class TestClamping:
    def setup_method(self):
        reset_clamp_event_count()

    def test_out_of_domain_warns_and_clamps(self):
        p = random_params(3)
        with pytest.warns(RuntimeWarning):
            v = dr_forward(4.0, p)
        assert v == pytest.approx(dr_forward(np.pi, p), abs=1e-15)
        assert clamp_event_count() == 1

    def test_negative_input_clamps_to_zero(self):
        p = random_params(3)
        with pytest.warns(RuntimeWarning):
            v = dr_forward(-1.0, p)
        assert v == pytest.approx(dr_forward(0.0, p), abs=1e-15)

    def test_clamp_off_uses_raw_circuit(self):
        p = random_params(3)
        raw = dr_forward(4.0, p, clamp=False)
        assert raw != pytest.approx(dr_forward(np.pi, p), abs=1e-9)
        assert clamp_event_count() == 0

    def test_in_domain_never_warns(self):
        p = random_params(3)
        dr_forward_batch(np.linspace(0, np.pi, 50), p)
        assert clamp_event_count() == 0


class TestValidation:
    def test_nan_theta_rejected(self):
        with pytest.raises(ValueError):
            DRParams(np.array([[np.nan, 0.0]]))

    def test_infinite_x_rejected(self):
        with pytest.raises(ValueError):
            dr_forward(np.inf, random_params(1))

    def test_wrong_theta_rank(self):
        with pytest.raises(ValueError):
            DRParams(np.zeros((2, 2)), num_qubits=2)

    def test_wrong_param_count_for_template(self):
        with pytest.raises(ValueError):
            DRParams(np.zeros((1, 3)))  # default template has P = 2

    def test_template_must_start_with_encoding(self):
        with pytest.raises(ValueError):
            GateTemplate((("rz", 0), ("ry", "input")))

    def test_template_param_indices_contiguous(self):
        with pytest.raises(ValueError):
            GateTemplate((("ry", "input"), ("rz", 0), ("rx", 2)))

    def test_zero_layers_rejected(self):
        with pytest.raises(ValueError):
            DRParams(np.zeros((0, 2)))


def test_init_determinism_bitwise():
    a = init_dr_params(4, np.random.default_rng(123))
    b = init_dr_params(4, np.random.default_rng(123))
    assert a.thetas.tobytes() == b.thetas.tobytes()
