"""Data re-uploading (DR) activations: one qubit, L layers, exact gradients.

A DR circuit alternates an encoding rotation fed by the input with
trainable rotations fed by angles::

    |0> -- RY(x) RZ(t[0,0]) RX(t[0,1]) -- RY(x) RZ(t[1,0]) RX(t[1,1]) -- ... --< Z >

The readout is <Z> of the final state, a smooth function of x in [-1, 1].
Gradients with respect to every angle (and x itself) are computed in one
reverse sweep over the cached per-gate states, so the cost is O(L) per
sample; the parameter-shift rule exists in the test suite as an
independent oracle, not here.

Internally everything is vectorized: the kernels accept an input array of
any shape together with a stacked theta array ``(L, ..., P)`` whose middle
axes broadcast against the input, which is how a whole network layer
(batch x edges) is evaluated in one pass.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .qsim import DEFAULT_MAX_QUBITS, zero_state

_GATE_KINDS = ("rx", "ry", "rz")


@dataclass(frozen=True)
class GateTemplate:
    """Ordered per-layer gate list: (kind, source) with source = "input" or a
    parameter index.  The first entry must be the encoding gate."""

    gates: tuple = (("ry", "input"), ("rz", 0), ("rx", 1))

    def __post_init__(self):
        if not self.gates:
            raise ValueError("template needs at least one gate")
        norm = []
        for kind, source in self.gates:
            kind = kind.lower()
            if kind not in _GATE_KINDS:
                raise ValueError(f"unknown gate kind {kind!r}; expected one of {_GATE_KINDS}")
            if source != "input" and not isinstance(source, int):
                raise ValueError(f"gate source must be 'input' or a parameter index, got {source!r}")
            norm.append((kind, source))
        if norm[0][1] != "input":
            raise ValueError("first template entry must be the encoding gate (source='input')")
        idx = sorted(s for _, s in norm if s != "input")
        if idx != list(range(len(idx))):
            raise ValueError(f"parameter indices must be exactly 0..P-1 once each, got {idx}")
        object.__setattr__(self, "gates", tuple(norm))

    @property
    def params_per_layer(self) -> int:
        return sum(1 for _, s in self.gates if s != "input")


DEFAULT_TEMPLATE = GateTemplate()
# full single-qubit SU(2) trainable block (3 params/layer); available, not default
SU2_TEMPLATE = GateTemplate((("ry", "input"), ("rz", 0), ("ry", 1), ("rz", 2)))


@dataclass
class DRParams:
    """Angles and wiring of one DR activation.

    ``thetas`` has shape (L, P) for a single qubit or (L, n, P) when
    ``num_qubits`` = n >= 2 (distinct parameters per qubit).
    """

    thetas: np.ndarray
    num_qubits: int = 1
    entangle: bool = False
    template: GateTemplate = field(default_factory=GateTemplate)

    def __post_init__(self):
        self.thetas = np.asarray(self.thetas, dtype=np.float64)
        if self.num_qubits < 1:
            raise ValueError(f"num_qubits must be >= 1, got {self.num_qubits}")
        want = 2 if self.num_qubits == 1 else 3
        if self.thetas.ndim != want:
            raise ValueError(
                f"thetas must have {want} dims for num_qubits={self.num_qubits}, "
                f"got shape {self.thetas.shape}"
            )
        if self.num_qubits > 1 and self.thetas.shape[1] != self.num_qubits:
            raise ValueError(
                f"thetas.shape[1]={self.thetas.shape[1]} must equal num_qubits={self.num_qubits}"
            )
        if self.thetas.shape[0] < 1:
            raise ValueError("need at least one layer")
        P = self.template.params_per_layer
        if self.thetas.shape[-1] != P:
            raise ValueError(
                f"thetas last dim {self.thetas.shape[-1]} does not match "
                f"template params_per_layer={P}"
            )
        if not np.all(np.isfinite(self.thetas)):
            raise ValueError("all angles must be finite")

    @property
    def num_layers(self) -> int:
        return self.thetas.shape[0]

    @property
    def param_count(self) -> int:
        return self.thetas.size


def init_dr_params(
    num_layers: int,
    rng: np.random.Generator,
    num_qubits: int = 1,
    entangle: bool = False,
    template: GateTemplate = DEFAULT_TEMPLATE,
) -> DRParams:
    """Fresh angles drawn uniformly from [-pi, pi)."""
    P = template.params_per_layer
    shape = (num_layers, P) if num_qubits == 1 else (num_layers, num_qubits, P)
    thetas = rng.uniform(-np.pi, np.pi, size=shape)
    return DRParams(thetas, num_qubits=num_qubits, entangle=entangle, template=template)


# --- clamp bookkeeping ------------------------------------------------------

_clamp_events = 0


def clamp_event_count() -> int:
    """Total number of calls that clamped at least one out-of-domain input."""
    return _clamp_events


def reset_clamp_event_count() -> None:
    global _clamp_events
    _clamp_events = 0


def _clamp_domain(xs: np.ndarray, clamp: bool) -> np.ndarray:
    global _clamp_events
    if not np.all(np.isfinite(xs)):
        raise ValueError("inputs must be finite")
    if not clamp:
        return xs
    out_of_domain = (xs < 0.0) | (xs > np.pi)
    if np.any(out_of_domain):
        _clamp_events += 1
        warnings.warn(
            f"{int(np.count_nonzero(out_of_domain))} input(s) outside [0, pi] were clamped",
            RuntimeWarning,
            stacklevel=3,
        )
        xs = np.clip(xs, 0.0, np.pi)
    return xs


# --- single-qubit kernel ----------------------------------------------------
# States are kept as two separate complex arrays (amp0, amp1) so every gate is
# a handful of broadcast multiplies.


def _gate_apply(kind: str, a, s0, s1):
    if kind == "rx":
        c = np.cos(a / 2.0)
        s = np.sin(a / 2.0)
        return c * s0 - 1j * s * s1, -1j * s * s0 + c * s1
    if kind == "ry":
        c = np.cos(a / 2.0)
        s = np.sin(a / 2.0)
        return c * s0 - s * s1, s * s0 + c * s1
    # rz
    p = np.exp(-0.5j * np.asarray(a))
    return p * s0, np.conj(p) * s1


def _pauli_apply(kind: str, s0, s1):
    # generator of each rotation kind
    if kind == "rx":
        return s1, s0
    if kind == "ry":
        return -1j * s1, 1j * s0
    return s0, -s1  # rz


def _angles(xs, thetas, l: int, source):
    return xs if source == "input" else thetas[l, ..., source]


def _forward_1q(xs: np.ndarray, thetas: np.ndarray, template: GateTemplate) -> np.ndarray:
    """<Z> for inputs ``xs`` (any shape) against stacked ``thetas`` (L, ..., P)."""
    batch = np.broadcast_shapes(xs.shape, thetas.shape[1:-1])
    s0 = np.ones(batch, dtype=np.complex128)
    s1 = np.zeros(batch, dtype=np.complex128)
    for l in range(thetas.shape[0]):
        for kind, source in template.gates:
            s0, s1 = _gate_apply(kind, _angles(xs, thetas, l, source), s0, s1)
    return (s0.real**2 + s0.imag**2) - (s1.real**2 + s1.imag**2)


def _grad_1q(xs: np.ndarray, thetas: np.ndarray, template: GateTemplate):
    """Forward value plus exact per-sample gradients.

    Returns (f, dx, dtheta) with f, dx shaped like the broadcast batch and
    dtheta shaped (L,) + batch + (P,).  dx sums the contributions of every
    encoding gate; dtheta entries sit at their (layer, param-index) slot.
    """
    L = thetas.shape[0]
    P = thetas.shape[-1]
    batch = np.broadcast_shapes(xs.shape, thetas.shape[1:-1])
    s0 = np.ones(batch, dtype=np.complex128)
    s1 = np.zeros(batch, dtype=np.complex128)
    trace = []  # (kind, source, layer, angle, state after the gate)
    for l in range(L):
        for kind, source in template.gates:
            a = _angles(xs, thetas, l, source)
            s0, s1 = _gate_apply(kind, a, s0, s1)
            trace.append((kind, source, l, a, s0, s1))
    f = (s0.real**2 + s0.imag**2) - (s1.real**2 + s1.imag**2)

    # reverse sweep: lam holds Z psi_N, then G_k^dagger pulls it back; the
    # derivative through gate k is Im <lam | P_k | psi_{k+1}>
    lam0, lam1 = s0, -s1
    dx = np.zeros(batch)
    dtheta = np.zeros((L,) + batch + (P,))
    for kind, source, l, a, t0, t1 in reversed(trace):
        p0, p1 = _pauli_apply(kind, t0, t1)
        g = (np.conj(lam0) * p0 + np.conj(lam1) * p1).imag
        if source == "input":
            dx += g
        else:
            dtheta[l, ..., source] += g
        lam0, lam1 = _gate_apply(kind, np.negative(a), lam0, lam1)
    return f, dx, dtheta


# --- multi-qubit kernel -----------------------------------------------------
# States are (batch,) + (2,)*n tensors; qubit q lives on axis 1+q (qubit 0 is
# the most significant bit, matching qsim).


def _apply_1q_tensor(kind: str, a, st: np.ndarray, q: int):
    t = np.moveaxis(st, 1 + q, -1)
    aa = np.asarray(a)
    if aa.ndim:
        aa = aa.reshape((-1,) + (1,) * (t.ndim - 2))
    n0, n1 = _gate_apply(kind, aa, t[..., 0], t[..., 1])
    return np.moveaxis(np.stack([n0, n1], axis=-1), -1, 1 + q)


def _pauli_1q_tensor(kind: str, st: np.ndarray, q: int):
    t = np.moveaxis(st, 1 + q, -1)
    p0, p1 = _pauli_apply(kind, t[..., 0], t[..., 1])
    return np.moveaxis(np.stack([p0, p1], axis=-1), -1, 1 + q)


def _apply_cnot_tensor(st: np.ndarray, control: int, target: int):
    out = st.copy()
    sel = [slice(None)] * st.ndim
    sel[1 + control] = 1
    ax = 1 + target - (1 if target > control else 0)
    out[tuple(sel)] = np.flip(out[tuple(sel)], axis=ax)
    return out


def _ring(n: int):
    # (0->1, 1->2, ..., n-1->0)
    return [(q, (q + 1) % n) for q in range(n)]


def _multiqubit_ops(params: DRParams):
    """Flattened gate list: ('gate', kind, qubit, source, layer) / ('cnot', c, t)."""
    ops = []
    n = params.num_qubits
    for l in range(params.num_layers):
        for kind, source in params.template.gates:
            for q in range(n):
                ops.append(("gate", kind, q, source, l))
        if params.entangle:
            for c, t in _ring(n):
                ops.append(("cnot", c, t))
    return ops


def _forward_multi(xs: np.ndarray, params: DRParams, max_qubits: int, keep_trace: bool):
    n = params.num_qubits
    zero_state(n, max_qubits=max_qubits)  # capacity check
    B = xs.shape[0]
    st = np.zeros((B,) + (2,) * n, dtype=np.complex128)
    st[(slice(None),) + (0,) * n] = 1.0
    trace = []
    for op in _multiqubit_ops(params):
        if op[0] == "cnot":
            st = _apply_cnot_tensor(st, op[1], op[2])
        else:
            _, kind, q, source, l = op
            a = xs if source == "input" else params.thetas[l, q, source]
            st = _apply_1q_tensor(kind, a, st, q)
        if keep_trace:
            trace.append(st)
    probs = st.real**2 + st.imag**2
    axes = tuple(range(2, probs.ndim))
    marg = probs.sum(axis=axes) if axes else probs  # (B, 2) over qubit 0
    f = marg[:, 0] - marg[:, 1]
    return f, st, trace


def _grad_multi(xs: np.ndarray, params: DRParams, max_qubits: int):
    ops = _multiqubit_ops(params)
    f, st, trace = _forward_multi(xs, params, max_qubits, keep_trace=True)
    B = xs.shape[0]
    L, n, P = params.thetas.shape

    lam = st.copy()
    sel = [slice(None)] * lam.ndim
    sel[1] = 1
    lam[tuple(sel)] *= -1.0  # Z on qubit 0

    dx = np.zeros(B)
    dtheta = np.zeros((L, B, n, P))
    axes = tuple(range(1, lam.ndim))
    for k in range(len(ops) - 1, -1, -1):
        op = ops[k]
        psi = trace[k]
        if op[0] == "cnot":
            lam = _apply_cnot_tensor(lam, op[1], op[2])
            continue
        _, kind, q, source, l = op
        p = _pauli_1q_tensor(kind, psi, q)
        g = np.sum(np.conj(lam) * p, axis=axes).imag
        if source == "input":
            dx += g
        else:
            dtheta[l, :, q, source] += g
        a = xs if source == "input" else params.thetas[l, q, source]
        lam = _apply_1q_tensor(kind, np.negative(a), lam, q)
    return f, dx, dtheta


# --- public ops -------------------------------------------------------------


def dr_forward(x: float, params: DRParams, clamp: bool = True,
               max_qubits: int = DEFAULT_MAX_QUBITS) -> float:
    """<Z> readout of the DR circuit at input ``x`` (radians in [0, pi]).

    Out-of-domain inputs are clamped (with a warning) unless ``clamp`` is
    False, in which case the raw 4pi-periodic circuit value is returned.
    """
    return float(dr_forward_batch(np.array([x], dtype=np.float64), params,
                                  clamp=clamp, max_qubits=max_qubits)[0])


def dr_forward_batch(xs, params: DRParams, clamp: bool = True,
                     max_qubits: int = DEFAULT_MAX_QUBITS) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.float64)
    if xs.size == 0:
        return np.zeros(xs.shape)
    xs = _clamp_domain(xs, clamp)
    if params.num_qubits == 1:
        return _forward_1q(xs, params.thetas, params.template)
    flat = xs.reshape(-1)
    f, _, _ = _forward_multi(flat, params, max_qubits, keep_trace=False)
    return f.reshape(xs.shape)


def dr_forward_multiqubit(x: float, params: DRParams,
                          max_qubits: int = DEFAULT_MAX_QUBITS,
                          clamp: bool = True) -> float:
    """Multi-qubit DR readout (<Z> on qubit 0); requires num_qubits >= 2."""
    if params.num_qubits < 2:
        raise ValueError("dr_forward_multiqubit needs num_qubits >= 2; use dr_forward")
    return dr_forward(x, params, clamp=clamp, max_qubits=max_qubits)


def dr_gradient(x: float, params: DRParams, clamp: bool = True,
                max_qubits: int = DEFAULT_MAX_QUBITS):
    """Exact (dtheta, dx) of dr_forward at ``x``.

    dtheta matches params.thetas in shape; dx folds in all L encoding gates.
    """
    xs = np.array([x], dtype=np.float64)
    xs = _clamp_domain(xs, clamp)
    if params.num_qubits == 1:
        _, dx, dtheta = _grad_1q(xs, params.thetas[:, None, :], params.template)
        return dtheta[:, 0, :], float(dx[0])
    _, dx, dtheta = _grad_multi(xs, params, max_qubits)
    return dtheta[:, 0, :, :], float(dx[0])
