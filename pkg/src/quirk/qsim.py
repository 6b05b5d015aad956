"""Minimal statevector simulator for small qubit registers.

Conventions
-----------
* Basis ordering is big-endian: qubit 0 is the most significant bit of the
  basis-state index, so for two qubits the amplitude vector is ordered
  ``|00>, |01>, |10>, |11>`` with qubit 0 owning the left bit.
* Gates are plain ``(2, 2)`` complex128 ndarrays; nothing is symbolic.
* States are flat complex128 vectors of length ``2**n``.

The simulator is deliberately small: single- and two-qubit gates only, no
measurement sampling, no noise.  Registers are capped (default 5 qubits,
hard limit 12) because everything downstream works on one- or few-qubit
circuits and an accidental ``n=30`` should fail loudly, not swap.
"""

from __future__ import annotations

import numpy as np

DEFAULT_MAX_QUBITS = 5
HARD_MAX_QUBITS = 12

_I2 = np.eye(2, dtype=np.complex128)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


class CapacityError(ValueError):
    """Raised when a register would exceed the allowed qubit count."""


def rx(angle: float) -> np.ndarray:
    """Rotation about X: exp(-i * angle/2 * X)."""
    c = np.cos(angle / 2.0)
    s = np.sin(angle / 2.0)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)


def ry(angle: float) -> np.ndarray:
    """Rotation about Y: exp(-i * angle/2 * Y)."""
    c = np.cos(angle / 2.0)
    s = np.sin(angle / 2.0)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def rz(angle: float) -> np.ndarray:
    """Rotation about Z: exp(-i * angle/2 * Z) = diag(e^{-ia/2}, e^{+ia/2})."""
    p = np.exp(-0.5j * angle)
    return np.array([[p, 0], [0, np.conj(p)]], dtype=np.complex128)


def zero_state(num_qubits: int, max_qubits: int = DEFAULT_MAX_QUBITS) -> np.ndarray:
    """|0...0> on ``num_qubits`` qubits.

    ``max_qubits`` may be raised per call but never beyond ``HARD_MAX_QUBITS``.
    """
    if num_qubits < 1:
        raise ValueError(f"need at least one qubit, got {num_qubits}")
    cap = min(int(max_qubits), HARD_MAX_QUBITS)
    if num_qubits > cap:
        raise CapacityError(
            f"{num_qubits} qubits exceeds the cap of {cap} "
            f"(hard limit {HARD_MAX_QUBITS})"
        )
    state = np.zeros(2**num_qubits, dtype=np.complex128)
    state[0] = 1.0
    return state


def num_qubits_of(state: np.ndarray) -> int:
    n = int(np.log2(state.shape[-1]))
    if 2**n != state.shape[-1]:
        raise ValueError(f"state length {state.shape[-1]} is not a power of two")
    return n


def apply_gate(state: np.ndarray, gate: np.ndarray, qubit: int) -> np.ndarray:
    """Apply a single-qubit gate to ``qubit`` of ``state``.

    ``state`` may carry leading batch dimensions; the last axis is the
    statevector.  Returns a new array, input is untouched.
    """
    n = num_qubits_of(state)
    if not 0 <= qubit < n:
        raise IndexError(f"qubit {qubit} out of range for {n}-qubit state")
    if gate.shape != (2, 2):
        raise ValueError(f"expected a (2, 2) gate, got {gate.shape}")
    if n == 1:
        # fast path: plain 2x2 matvec (batched via einsum on the last axis)
        return np.einsum("ij,...j->...i", gate, state)
    # reshape so the target qubit gets its own axis; qubit 0 is the MSB,
    # which after reshape to (2,)*n is axis 0 (plus any batch dims).
    batch = state.shape[:-1]
    t = state.reshape(batch + (2,) * n)
    axis = len(batch) + qubit
    t = np.moveaxis(t, axis, -1)
    t = t @ gate.T
    t = np.moveaxis(t, -1, axis)
    return t.reshape(batch + (2**n,))


def apply_cnot(state: np.ndarray, control: int, target: int) -> np.ndarray:
    """Apply CNOT with the given control/target wires."""
    n = num_qubits_of(state)
    for q, name in ((control, "control"), (target, "target")):
        if not 0 <= q < n:
            raise IndexError(f"{name} qubit {q} out of range for {n}-qubit state")
    if control == target:
        raise ValueError("control and target must differ")
    batch = state.shape[:-1]
    t = state.reshape(batch + (2,) * n).copy()
    c_ax = len(batch) + control
    t_ax = len(batch) + target
    # swap the target axis within the control=1 subspace
    ctrl_one = [slice(None)] * t.ndim
    ctrl_one[c_ax] = 1
    sub = t[tuple(ctrl_one)]
    # after indexing, axes past c_ax shift left by one
    flip_ax = t_ax - 1 if t_ax > c_ax else t_ax
    t[tuple(ctrl_one)] = np.flip(sub, axis=flip_ax)
    return t.reshape(batch + (2**n,))


def expectation_z(state: np.ndarray, qubit: int = 0) -> np.ndarray | float:
    """<state| Z_qubit |state>, real by construction.

    Accepts batched states; returns a float for a single state, else an
    array over the batch dims.
    """
    n = num_qubits_of(state)
    if not 0 <= qubit < n:
        raise IndexError(f"qubit {qubit} out of range for {n}-qubit state")
    probs = np.abs(state) ** 2
    idx = np.arange(2**n)
    bit = (idx >> (n - 1 - qubit)) & 1  # qubit 0 = MSB
    signs = 1.0 - 2.0 * bit
    val = probs @ signs
    if val.ndim == 0:
        return float(val)
    return val


def norm(state: np.ndarray) -> np.ndarray | float:
    v = np.sqrt(np.sum(np.abs(state) ** 2, axis=-1))
    if v.ndim == 0:
        return float(v)
    return v
